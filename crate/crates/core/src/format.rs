//! The line-oriented structure file format.
//!
//! ```text
//! eta: 2 3
//! zeta: 3=4
//! points: 4
//! rel 2: 0 1 ; 1 2
//! rel 3: 0 1 2
//! ```

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::finstruct::FinStructure;
use crate::signature::{make_profile, parse_eta_list, parse_zeta_list, EtaZetaProfile};
use crate::Point;

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

// byte offset of `part` inside `whole`, as a 1-based column
fn column_of(whole: &str, part: &str) -> usize {
    part.as_ptr() as usize - whole.as_ptr() as usize + 1
}

/// Parses a structure file. Points are `0..count`.
pub fn parse_structure(text: &str) -> Result<FinStructure> {
    let mut eta = None;
    let mut zeta = None;
    let mut structure: Option<FinStructure> = None;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let col = column_of(raw, trimmed);
        let (head, body) = trimmed
            .split_once(':')
            .ok_or_else(|| parse_err(lineno, col, "expected `<keyword>:`"))?;
        let body_col = column_of(raw, body);
        match head.trim() {
            "eta" => {
                if eta.is_some() || structure.is_some() {
                    return Err(parse_err(lineno, col, "unexpected `eta:` line"));
                }
                eta = Some(parse_eta_list(body).map_err(|m| parse_err(lineno, body_col, m))?);
            }
            "zeta" => {
                if eta.is_none() || zeta.is_some() || structure.is_some() {
                    return Err(parse_err(
                        lineno,
                        col,
                        "`zeta:` must follow `eta:` and come once",
                    ));
                }
                zeta = Some(parse_zeta_list(body).map_err(|m| parse_err(lineno, body_col, m))?);
            }
            "points" => {
                let Some(eta) = eta.as_ref() else {
                    return Err(parse_err(lineno, col, "`points:` before `eta:`"));
                };
                if structure.is_some() {
                    return Err(parse_err(lineno, col, "`points:` given twice"));
                }
                let count: usize = body.trim().parse().map_err(|_| {
                    parse_err(lineno, body_col, format!("bad point count `{}`", body.trim()))
                })?;
                let profile = make_profile(eta, &zeta.clone().unwrap_or_default())?;
                structure = Some(FinStructure::edgeless(profile, count));
            }
            rel if rel.starts_with("rel") => {
                let Some(s) = structure.as_mut() else {
                    return Err(parse_err(lineno, col, "`rel` line before `points:`"));
                };
                let arity_text = rel["rel".len()..].trim();
                let n: usize = arity_text
                    .parse()
                    .map_err(|_| parse_err(lineno, col, format!("bad arity `{arity_text}`")))?;
                if !s.profile().has_arity(n) {
                    return Err(Error::InvariantViolation(format!(
                        "line {lineno}: arity {n} is not in the eta support"
                    )));
                }
                parse_rel_body(s, n, raw, body, lineno)?;
            }
            other => {
                return Err(parse_err(lineno, col, format!("unknown keyword `{other}`")));
            }
        }
    }
    structure.ok_or_else(|| parse_err(text.lines().count().max(1), 1, "missing `points:` line"))
}

fn parse_rel_body(
    s: &mut FinStructure,
    n: usize,
    raw: &str,
    body: &str,
    lineno: usize,
) -> Result<()> {
    for chunk in body.split(';') {
        if chunk.trim().is_empty() {
            continue;
        }
        let mut tuple = Vec::with_capacity(n);
        for tok in chunk.split_whitespace() {
            let p: usize = tok.parse().map_err(|_| {
                parse_err(lineno, column_of(raw, tok), format!("expected a point, found `{tok}`"))
            })?;
            if p >= s.len() {
                return Err(Error::InvariantViolation(format!(
                    "line {lineno}: point {p} is out of range"
                )));
            }
            tuple.push(p);
        }
        if tuple.len() != n {
            return Err(Error::InvariantViolation(format!(
                "line {lineno}: tuple of length {} in a rel {n} line",
                tuple.len()
            )));
        }
        s.add_edge(&tuple)
            .map_err(|e| Error::InvariantViolation(format!("line {lineno}: {e}")))?;
    }
    Ok(())
}

/// Canonical text of `s`, relabelled onto `0..len` in point order.
pub fn emit_structure(s: &FinStructure) -> String {
    let s = s.compact();
    let mut out = String::new();
    out.push_str(&s.profile().eta_line());
    out.push('\n');
    if let Some(z) = s.profile().zeta_line() {
        out.push_str(&z);
        out.push('\n');
    }
    out.push_str(&format!("points: {}\n", s.len()));
    for (n, tuples) in s.edge_map() {
        if tuples.is_empty() {
            continue;
        }
        let body: Vec<String> = tuples
            .iter()
            .map(|t| t.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "))
            .collect();
        out.push_str(&format!("rel {n}: {}\n", body.join(" ; ")));
    }
    out
}

/// Parses a point list such as `0,1,2` or `0 1 2`; empty text is the empty set.
pub fn parse_point_set(text: &str) -> Result<BTreeSet<Point>> {
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<Point>()
                .map_err(|_| Error::Usage(format!("bad point `{t}` in `{text}`")))
        })
        .collect()
}

/// Parses a partial map such as `0>1,1>2`. Duplicate sources or targets are
/// rejected.
pub fn parse_partial_map(text: &str) -> Result<Vec<(Point, Point)>> {
    let mut pairs = Vec::new();
    let mut seen_src = BTreeSet::new();
    let mut seen_dst = BTreeSet::new();
    for part in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let (a, b) = part
            .split_once('>')
            .ok_or_else(|| Error::Usage(format!("expected `a>b`, found `{part}`")))?;
        let point = |t: &str| {
            t.trim()
                .parse::<Point>()
                .map_err(|_| Error::Usage(format!("bad point `{}` in `{part}`", t.trim())))
        };
        let (a, b) = (point(a)?, point(b)?);
        if !seen_src.insert(a) || !seen_dst.insert(b) {
            return Err(Error::Usage(format!("`{text}` is not injective")));
        }
        pairs.push((a, b));
    }
    Ok(pairs)
}

/// Parses `2 3` and `2=3 3=4` style flag values into a profile.
pub fn profile_from_flags(eta: &str, zeta: Option<&str>) -> Result<EtaZetaProfile> {
    let eta = parse_eta_list(&eta.replace(',', " ")).map_err(Error::Usage)?;
    let zeta = match zeta {
        Some(z) => parse_zeta_list(&z.replace(',', " ")).map_err(Error::Usage)?,
        None => BTreeMap::new(),
    };
    make_profile(&eta, &zeta)
}
