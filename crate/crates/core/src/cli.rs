//! The `fraisse` command line.
//!
//! Every command produces a report whose body depends only on the argument
//! list and the bytes of the input files. Timing goes to standard error.
//!
//! Exit codes: 0 pass, 1 definite negative, 2 undecided within the
//! saturation or budget, 64 bad usage or input.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use itertools::Itertools;
use sha2::{Digest, Sha256};

use crate::amalgam::{check_all_within, DEFAULT_CHECK_BUDGET};
use crate::error::{Error, Result};
use crate::finstruct::{Class, FinStructure, PartialIso};
use crate::format::{emit_structure, parse_partial_map, parse_point_set, parse_structure, profile_from_flags};
use crate::generic::{saturate, DEFAULT_LEVEL, DEFAULT_POINT_BUDGET};
use crate::independence::{
    check_sir_axioms_with, check_stabilizer_generation, factorize, Equivalence, SirOptions, Verdict,
    DEFAULT_MAX_SET_SIZE,
};
use crate::perm::Perm;
use crate::permgroup::{AclMode, Ambient};
use crate::recon::{eppa_search, predicate_bnk, recover_profile};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_UNDECIDED: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

/// Deficit or counterexample lines printed per check.
const SHOWN: usize = 3;

#[derive(Parser, Debug)]
#[command(name = "fraisse", version, about = "Finite workbench for free amalgamation classes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the class axioms exhaustively up to a size.
    CheckClass {
        #[arg(long)]
        eta: String,
        #[arg(long)]
        zeta: Option<String>,
        #[arg(long, default_value_t = 5)]
        max_size: usize,
        #[arg(long, default_value_t = DEFAULT_CHECK_BUDGET)]
        budget: usize,
    },
    /// Build a structure satisfying the extension axioms up to level k.
    BuildGeneric {
        #[arg(long)]
        eta: String,
        #[arg(long)]
        zeta: Option<String>,
        #[arg(short, default_value_t = DEFAULT_LEVEL)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_POINT_BUDGET)]
        budget: usize,
        #[arg(short)]
        o: Option<PathBuf>,
    },
    /// Print the automorphism group of a structure.
    Aut { file: PathBuf },
    /// Check the independence axioms on a structure.
    IndepCheck {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_SET_SIZE)]
        max_size: usize,
        #[arg(long, value_enum, default_value_t = EquivArg::Local)]
        equiv: EquivArg,
        #[arg(long)]
        cross_validate: bool,
    },
    /// Factor g through the stabilizers of A and B.
    Factorize {
        file: PathBuf,
        #[arg(long = "A", allow_hyphen_values = true)]
        a: String,
        #[arg(long = "B", allow_hyphen_values = true)]
        b: String,
        #[arg(long = "g")]
        g: String,
    },
    /// Compare the stabilizer of A∩B with the join of the stabilizers.
    StabGen {
        file: PathBuf,
        #[arg(long = "A", allow_hyphen_values = true)]
        a: String,
        #[arg(long = "B", allow_hyphen_values = true)]
        b: String,
    },
    /// Estimate the profile from the automorphism group.
    Recover {
        file: PathBuf,
        #[arg(long, default_value_t = 3)]
        max_arity: usize,
        #[arg(long, default_value_t = 3)]
        max_k: usize,
    },
    /// Search for an extension where each partial map is an automorphism.
    Eppa {
        file: PathBuf,
        #[arg(long)]
        partial: Vec<String>,
        #[arg(long, default_value_t = 6)]
        budget: usize,
        #[arg(short)]
        o: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EquivArg {
    Local,
    Orbit,
}

/// Exit code and the two output streams of one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Report body being assembled; `code` is the exit code so far.
struct Report {
    body: String,
    code: i32,
    /// The body is a structure file, so report lines become comments.
    document: bool,
}

impl Report {
    fn line(&mut self, s: impl AsRef<str>) {
        self.body.push_str(s.as_ref());
        self.body.push('\n');
    }

    fn worsen(&mut self, code: i32) {
        // a definite negative outranks an undecided check
        self.code = match (self.code, code) {
            (EXIT_NEGATIVE, _) | (_, EXIT_NEGATIVE) => EXIT_NEGATIVE,
            (a, b) => a.max(b),
        };
    }
}

fn exit_code(e: &Error) -> i32 {
    if e.is_insufficiency() {
        EXIT_UNDECIDED
    } else {
        match e {
            Error::NotAboveStabilizer | Error::LatticeViolation(..) => EXIT_NEGATIVE,
            _ => EXIT_USAGE,
        }
    }
}

fn result_word(code: i32) -> &'static str {
    match code {
        EXIT_PASS => "pass",
        EXIT_NEGATIVE => "fail",
        _ => "undecided",
    }
}

fn digest(args: &[String], files: &[Vec<u8>]) -> String {
    let mut h = Sha256::new();
    for a in args {
        h.update(a.as_bytes());
        h.update([0u8]);
    }
    for f in files {
        h.update((f.len() as u64).to_le_bytes());
        h.update(f);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::Usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Usage(format!("cannot write {}: {e}", path.display())))
}

fn load(bytes: &[u8]) -> Result<FinStructure> {
    let text = std::str::from_utf8(bytes).map_err(|_| Error::Usage("input is not UTF-8".into()))?;
    parse_structure(text)
}

fn ambient(s: FinStructure) -> Result<Ambient> {
    let budget = s.len();
    Ambient::with_budget(s, budget)
}

fn set_string(s: &BTreeSet<usize>) -> String {
    format!("{{{}}}", s.iter().join(","))
}

fn indented(text: &str) -> String {
    text.lines().map(|l| format!("  {l}\n")).collect()
}

/// Runs one command line. `args` excludes the program name.
pub fn run(args: &[String]) -> Outcome {
    let started = Instant::now();
    let argv = std::iter::once("fraisse".to_string()).chain(args.iter().cloned());
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => Outcome {
                    code: EXIT_PASS,
                    stdout: text,
                    stderr: String::new(),
                },
                _ => Outcome {
                    code: EXIT_USAGE,
                    stdout: String::new(),
                    stderr: text,
                },
            };
        }
    };
    let mut files = Vec::new();
    let mut report = Report {
        body: String::new(),
        code: EXIT_PASS,
        document: false,
    };
    let name = command_name(&cli.command);
    let result = dispatch(&cli.command, &mut files, &mut report);
    let lead = if report.document { "# " } else { "" };
    let mut stdout = format!("{lead}command: {name}\n{lead}inputs: sha256:{}\n", digest(args, &files));
    let mut stderr = String::new();
    match result {
        Ok(()) => {
            stdout.push_str(&report.body);
            let _ = writeln!(stdout, "{lead}result: {}", result_word(report.code));
        }
        Err(e) => {
            stdout.push_str(&report.body);
            report.worsen(exit_code(&e));
            if report.code == EXIT_USAGE {
                let _ = writeln!(stderr, "error: {e}");
                stdout.clear();
            } else {
                let _ = writeln!(stdout, "undecided: {e}");
                let _ = writeln!(stdout, "result: {}", result_word(report.code));
            }
        }
    }
    let _ = writeln!(stderr, "time: {:.3}s", started.elapsed().as_secs_f64());
    Outcome {
        code: report.code,
        stdout,
        stderr,
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::CheckClass { .. } => "check-class",
        Command::BuildGeneric { .. } => "build-generic",
        Command::Aut { .. } => "aut",
        Command::IndepCheck { .. } => "indep-check",
        Command::Factorize { .. } => "factorize",
        Command::StabGen { .. } => "stab-gen",
        Command::Recover { .. } => "recover",
        Command::Eppa { .. } => "eppa",
    }
}

fn dispatch(c: &Command, files: &mut Vec<Vec<u8>>, r: &mut Report) -> Result<()> {
    let mut input = |path: &Path| -> Result<FinStructure> {
        let bytes = read(path)?;
        let s = load(&bytes);
        files.push(bytes);
        s
    };
    match c {
        Command::CheckClass {
            eta,
            zeta,
            max_size,
            budget,
        } => {
            let profile = profile_from_flags(eta, zeta.as_deref())?;
            r.line(format!("profile: {profile}"));
            r.line(format!("max-size: {max_size}"));
            let report = check_all_within(&Class::new(profile), *max_size, *budget)?;
            for o in &report.outcomes {
                match &o.counterexample {
                    None => r.line(format!("{}: pass ({} instances)", o.axiom, o.instances)),
                    Some(cx) => {
                        r.worsen(EXIT_NEGATIVE);
                        r.line(format!("{}: fail: {}", o.axiom, cx.description));
                        for s in &cx.structures {
                            r.body.push_str(&indented(&emit_structure(s)));
                        }
                    }
                }
            }
        }
        Command::BuildGeneric {
            eta,
            zeta,
            k,
            budget,
            o,
        } => {
            let profile = profile_from_flags(eta, zeta.as_deref())?;
            let g = saturate(&profile, *k, None, *budget)?;
            let text = format!("{}# saturation: k={k}\n", emit_structure(&g.structure));
            match o {
                Some(path) => {
                    write(path, &text)?;
                    r.line(format!("profile: {profile}"));
                    r.line(format!("points: {}", g.structure.len()));
                    r.line(format!("edges: {}", g.structure.edge_count()));
                    r.line(format!("saturation: k={k}"));
                    r.line(format!("wrote: {}", path.display()));
                }
                None => {
                    r.document = true;
                    r.body.push_str(&text);
                }
            }
        }
        Command::Aut { file } => {
            let m = ambient(input(file)?)?;
            r.line(format!("points: {}", m.structure.len()));
            r.line(format!("order: {}", m.group.order()));
            for g in m.group.generators() {
                r.line(format!("generator: {g}"));
            }
        }
        Command::IndepCheck {
            file,
            max_size,
            equiv,
            cross_validate,
        } => {
            let m = ambient(input(file)?)?;
            let options = SirOptions {
                equivalence: match equiv {
                    EquivArg::Local => Equivalence::Local,
                    EquivArg::Orbit => Equivalence::Orbit,
                },
                cross_validate: *cross_validate,
            };
            r.line(format!("max-size: {max_size}"));
            r.line(format!("equivalence: {}", options.equivalence));
            for rep in check_sir_axioms_with(&m, *max_size, options)? {
                match &rep.verdict {
                    Verdict::Pass => r.line(format!("{}: pass ({} instances)", rep.axiom, rep.instances)),
                    Verdict::Deficit(list) => {
                        r.worsen(EXIT_UNDECIDED);
                        r.line(format!(
                            "{}: deficit ({} of {} instances need a larger structure)",
                            rep.axiom,
                            list.len(),
                            rep.instances
                        ));
                        for i in list.iter().take(SHOWN) {
                            r.line(format!("  {i}"));
                        }
                    }
                    Verdict::Refuted(i) => {
                        r.worsen(EXIT_NEGATIVE);
                        r.line(format!("{}: refuted ({} instances)", rep.axiom, rep.instances));
                        r.line(format!("  {i}"));
                    }
                }
            }
        }
        Command::Factorize { file, a, b, g } => {
            let m = ambient(input(file)?)?;
            let a = parse_point_set(a)?;
            let b = parse_point_set(b)?;
            let g = parse_perm(&m, g)?;
            r.line(format!("A: {}", set_string(&a)));
            r.line(format!("B: {}", set_string(&b)));
            let w = factorize(&m, &a, &b, &g, AclMode::ClassSemantics)?;
            if !w.verify(&m.group) {
                return Err(Error::InvariantViolation("witness does not verify".into()));
            }
            r.body.push_str(&w.to_string());
            if !r.body.ends_with('\n') {
                r.body.push('\n');
            }
        }
        Command::StabGen { file, a, b } => {
            let m = ambient(input(file)?)?;
            let a = parse_point_set(a)?;
            let b = parse_point_set(b)?;
            let s = check_stabilizer_generation(&m, &a, &b, AclMode::ClassSemantics)?;
            r.line(format!("A: {}", set_string(&s.a)));
            r.line(format!("B: {}", set_string(&s.b)));
            r.line(format!("stabilizer of A∩B: order {}", s.lhs.order()));
            r.line(format!("join of stabilizers: order {}", s.rhs.order()));
            if s.equal {
                r.line("equal: yes");
                let verified = s.witnesses.iter().filter(|(_, w)| w.is_ok()).count();
                r.line(format!("factorized cosets: {verified} of {}", s.witnesses.len()));
            } else {
                r.worsen(EXIT_NEGATIVE);
                r.line("equal: no");
                if let Some(g) = &s.missing {
                    r.line(format!("missing: {g}"));
                }
            }
        }
        Command::Recover {
            file,
            max_arity,
            max_k,
        } => {
            let m = ambient(input(file)?)?;
            let e = recover_profile(&m.group, *max_arity, *max_k)?;
            for (n, present) in &e.arity_tests {
                r.line(format!("arity {n}: {}", if *present { "present" } else { "absent" }));
            }
            for &(n, k, holds) in &e.gluing_tests {
                if holds {
                    r.line(format!("gluing n={n} k={k}: holds"));
                } else {
                    let out = predicate_bnk(&m.group, n, k)?;
                    let family = out.counterexample.map(|f| f.to_string()).unwrap_or_default();
                    r.line(format!("gluing n={n} k={k}: fails at {family}"));
                }
            }
            r.line(e.to_string());
        }
        Command::Eppa {
            file,
            partial,
            budget,
            o,
        } => {
            let a = input(file)?;
            let partials = partial
                .iter()
                .map(|p| PartialIso::new(&a, &a, parse_partial_map(p)?))
                .collect::<Result<Vec<_>>>()?;
            let w = eppa_search(&a, &partials, *budget)?;
            let mut text = emit_structure(&w.structure);
            for (p, g) in partials.iter().zip(&w.extensions) {
                let _ = writeln!(text, "# extension {p}: {g}");
            }
            match o {
                Some(path) => {
                    write(path, &text)?;
                    r.line(format!("points: {}", w.structure.len()));
                    for (p, g) in partials.iter().zip(&w.extensions) {
                        r.line(format!("extension {p}: {g}"));
                    }
                    r.line(format!("wrote: {}", path.display()));
                }
                None => {
                    r.document = true;
                    r.body.push_str(&text);
                }
            }
        }
    }
    Ok(())
}

fn parse_perm(m: &Ambient, text: &str) -> Result<Perm> {
    let degree = m.structure.fresh_point();
    Perm::parse(degree, text)
}
