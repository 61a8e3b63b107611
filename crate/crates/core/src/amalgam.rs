//! The free amalgam and exhaustive checks of the amalgamation-class axioms.
//!
//! Configurations `(B1, A, B2)` are enumerated up to isomorphism with the
//! amalgam itself bounded by `max_size`, in increasing amalgam size, so the
//! first failure found is a smallest one. Configurations with `A = B1` or
//! `A = B2` are skipped: their amalgam is the other side.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::ControlFlow;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::finstruct::{embeddings, induced, Class, FinStructure, PartialIso};
use crate::permgroup::{automorphisms, PermGroup};
use crate::Point;

/// Two structures amalgamated over their common points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmalgamResult {
    pub amalgam: FinStructure,
    pub left_embed: PartialIso,
    pub right_embed: PartialIso,
}

impl AmalgamResult {
    /// The embeddings agree on `base` and their images meet exactly in its
    /// image.
    pub fn is_disjoint_over(&self, base: &BTreeSet<Point>) -> bool {
        let agree = base
            .iter()
            .all(|&a| self.left_embed.get(a).is_some() && self.left_embed.get(a) == self.right_embed.get(a));
        let meet: BTreeSet<Point> = self
            .left_embed
            .image()
            .intersection(&self.right_embed.image())
            .copied()
            .collect();
        let base_image: BTreeSet<Point> = base.iter().filter_map(|&a| self.left_embed.get(a)).collect();
        agree && meet == base_image
    }
}

/// An amalgamation operator on structures that already overlap in the base.
pub trait Amalgamation {
    fn amalgamate(
        &self,
        b1: &FinStructure,
        b2: &FinStructure,
        base: &BTreeSet<Point>,
    ) -> Result<AmalgamResult>;
}

/// The free amalgam: union of points and of relations.
#[derive(Debug, Clone, Copy, Default)]
pub struct Free;

impl Amalgamation for Free {
    fn amalgamate(
        &self,
        b1: &FinStructure,
        b2: &FinStructure,
        base: &BTreeSet<Point>,
    ) -> Result<AmalgamResult> {
        free_amalgam(b1, b2, base)
    }
}

/// B1 ⊕_A B2. Requires `B1 ∩ B2 = A` and equal induced structures on A.
pub fn free_amalgam(
    b1: &FinStructure,
    b2: &FinStructure,
    a: &BTreeSet<Point>,
) -> Result<AmalgamResult> {
    if b1.profile() != b2.profile() {
        return Err(Error::ProfileMismatch);
    }
    let meet: BTreeSet<Point> = b1.points().intersection(b2.points()).copied().collect();
    if &meet != a {
        return Err(Error::InvariantViolation(format!(
            "the structures meet in {meet:?}, not in the base {a:?}"
        )));
    }
    if induced(b1, a)? != induced(b2, a)? {
        return Err(Error::BaseMismatch(a.clone()));
    }
    let mut amalgam = b1.clone();
    for &p in b2.points() {
        amalgam.add_point(p);
    }
    for t in b2.all_edges() {
        amalgam.add_edge(t).expect("edge of b2");
    }
    Ok(AmalgamResult {
        amalgam,
        left_embed: PartialIso::identity(b1.points().iter().copied()),
        right_embed: PartialIso::identity(b2.points().iter().copied()),
    })
}

/// Renames `b2` so that `f(x) -> x` for the embedding `f` of the base and
/// every other point moves to a fresh identifier above `avoid`.
pub fn rename_onto_base(b2: &FinStructure, f: &PartialIso, avoid: Point) -> FinStructure {
    let back = f.inverse();
    let mut next = avoid;
    let mut table = BTreeMap::new();
    for &p in b2.points() {
        let q = back.get(p).unwrap_or_else(|| {
            next += 1;
            next - 1
        });
        table.insert(p, q);
    }
    b2.relabel(|p| table[&p])
}

/// The axioms checked by [`check_class_axioms`] and its siblings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Axiom {
    Hereditary,
    JointEmbedding,
    Amalgamation,
    Disjointness,
    FreeClosure,
    Functoriality,
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Axiom::Hereditary => "hereditary",
            Axiom::JointEmbedding => "joint-embedding",
            Axiom::Amalgamation => "amalgamation",
            Axiom::Disjointness => "disjointness",
            Axiom::FreeClosure => "free-closure",
            Axiom::Functoriality => "functoriality",
        };
        f.write_str(s)
    }
}

/// Structures that together violate one axiom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub description: String,
    pub structures: Vec<FinStructure>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomOutcome {
    pub axiom: Axiom,
    pub instances: usize,
    pub counterexample: Option<Counterexample>,
}

impl AxiomOutcome {
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassReport {
    pub max_size: usize,
    pub outcomes: Vec<AxiomOutcome>,
}

impl ClassReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(AxiomOutcome::passed)
    }

    pub fn outcome(&self, axiom: Axiom) -> Option<&AxiomOutcome> {
        self.outcomes.iter().find(|o| o.axiom == axiom)
    }
}

/// Budget for every exhaustive check in this module.
pub const DEFAULT_CHECK_BUDGET: usize = 6;

/// Representatives of the class at each size `0..=max_size`, with their
/// automorphism groups.
pub struct Catalogue {
    pub levels: Vec<Vec<(FinStructure, PermGroup)>>,
}

impl Catalogue {
    pub fn build(class: &Class, max_size: usize, budget: usize) -> Result<Self> {
        if max_size > budget {
            return Err(Error::BudgetExceeded(format!(
                "class checks at size {max_size} exceed the budget {budget}"
            )));
        }
        let mut levels = Vec::new();
        for m in 0..=max_size {
            let reps = class.enumerate(m, budget)?;
            let level = reps
                .into_iter()
                .map(|s| {
                    let g = automorphisms(&s)?;
                    Ok((s, g))
                })
                .collect::<Result<Vec<_>>>()?;
            levels.push(level);
        }
        Ok(Catalogue { levels })
    }
}

fn all_subsets(points: &BTreeSet<Point>) -> impl Iterator<Item = BTreeSet<Point>> + '_ {
    points.iter().copied().powerset().map(|v| v.into_iter().collect())
}

// subsets of `points`, one per orbit of `g` on subsets
fn subset_orbit_reps(points: &BTreeSet<Point>, g: &PermGroup) -> Vec<BTreeSet<Point>> {
    all_subsets(points)
        .filter(|x| {
            let key: Vec<Point> = x.iter().copied().collect();
            g.elements().iter().all(|h| {
                let mut img: Vec<Point> = x.iter().map(|&p| h.apply(p)).collect();
                img.sort_unstable();
                key <= img
            })
        })
        .collect()
}

/// One `(B1, A, B2)` configuration, with `B2` renamed to meet `B1` in `A`.
pub struct Config<'a> {
    pub b1: &'a FinStructure,
    pub aut1: &'a PermGroup,
    pub base: BTreeSet<Point>,
    pub b2: FinStructure,
    pub aut2: PermGroup,
}

/// Visits proper AP configurations with `|B1| + |B2| - |A| <= max_size`,
/// smallest amalgams first. Embeddings of the base into `B2` are taken up to Aut(B2)
/// and bases up to Aut(B1).
pub fn for_each_config<'a>(
    cat: &'a Catalogue,
    max_size: usize,
    mut visit: impl FnMut(Config<'a>) -> ControlFlow<()>,
) {
    struct Side<'a> {
        b1: &'a FinStructure,
        aut1: &'a PermGroup,
        bases: Vec<(BTreeSet<Point>, FinStructure)>,
    }
    let sides: Vec<Vec<Side<'a>>> = cat
        .levels
        .iter()
        .map(|level| {
            level
                .iter()
                .map(|(b1, aut1)| Side {
                    b1,
                    aut1,
                    bases: subset_orbit_reps(b1.points(), aut1)
                        .into_iter()
                        .map(|x| {
                            let a = induced(b1, &x).expect("subset");
                            (x, a)
                        })
                        .collect(),
                })
                .collect()
        })
        .collect();
    for total in 0..=max_size {
        for m1 in 0..=total.min(sides.len() - 1) {
            for side in &sides[m1] {
                for (x, a) in &side.bases {
                    let m2 = total - m1 + x.len();
                    if m2 >= cat.levels.len() || x.len() == m1 || x.len() == m2 {
                        continue;
                    }
                    for (b2, aut2) in &cat.levels[m2] {
                        for f in embeddings(a, b2) {
                            if !least_in_orbit(&f, x, aut2) {
                                continue;
                            }
                            let renamed = rename_onto_base(b2, &f, side.b1.fresh_point());
                            let back = f.inverse();
                            let fresh: Vec<Point> = renamed
                                .points()
                                .iter()
                                .copied()
                                .filter(|p| !x.contains(p))
                                .collect();
                            let aut2r = transport(aut2, b2, &renamed, &back, &fresh);
                            let cfg = Config {
                                b1: side.b1,
                                aut1: side.aut1,
                                base: x.clone(),
                                b2: renamed,
                                aut2: aut2r,
                            };
                            if visit(cfg).is_break() {
                                return;
                            }
                        }
                    }
                }
            }
        }
    }
}

// true iff f's image tuple is least among its Aut(B2)-translates
fn least_in_orbit(f: &PartialIso, x: &BTreeSet<Point>, aut: &PermGroup) -> bool {
    let img: Vec<Point> = x.iter().map(|&p| f.get(p).expect("base point")).collect();
    aut.elements().iter().all(|h| {
        let moved: Vec<Point> = img.iter().map(|&p| h.apply(p)).collect();
        img <= moved
    })
}

// Aut(b2) conjugated onto the renamed copy
fn transport(
    aut: &PermGroup,
    b2: &FinStructure,
    renamed: &FinStructure,
    back: &PartialIso,
    fresh: &[Point],
) -> PermGroup {
    let mut table = BTreeMap::new();
    let mut k = 0;
    for &p in b2.points() {
        let q = back.get(p).unwrap_or_else(|| {
            k += 1;
            fresh[k - 1]
        });
        table.insert(p, q);
    }
    let inv: BTreeMap<Point, Point> = table.iter().map(|(&a, &b)| (b, a)).collect();
    let degree = renamed.fresh_point();
    let gens: Vec<crate::perm::Perm> = aut
        .generators()
        .iter()
        .map(|g| {
            let map: BTreeMap<Point, Point> = renamed
                .points()
                .iter()
                .map(|&q| (q, table[&g.apply(inv[&q])]))
                .collect();
            crate::perm::Perm::from_map(degree, &map).expect("conjugate is a bijection")
        })
        .collect();
    PermGroup::from_generators(renamed.points().clone(), &gens).expect("same order as aut")
}

fn describe(cfg: &Config<'_>) -> String {
    format!(
        "B1 = {}, A = {{{}}}, B2 = {}",
        cfg.b1,
        cfg.base.iter().join(","),
        cfg.b2
    )
}

/// HP, JEP, AP and disjointness over the class, exhaustively up to
/// `max_size` points.
pub fn check_class_axioms(class: &Class, max_size: usize) -> Result<ClassReport> {
    let cat = Catalogue::build(class, max_size, DEFAULT_CHECK_BUDGET)?;
    Ok(ClassReport {
        max_size,
        outcomes: vec![
            hereditary(class, &cat),
            joint_embedding(class, &cat, max_size),
            amalgamation(class, &cat, max_size, Axiom::Amalgamation),
            disjointness(&cat, max_size),
        ],
    })
}

/// All six checks, sharing one catalogue.
pub fn check_all(class: &Class, max_size: usize) -> Result<ClassReport> {
    check_all_within(class, max_size, DEFAULT_CHECK_BUDGET)
}

/// [`check_all`] with an explicit size budget.
pub fn check_all_within(class: &Class, max_size: usize, budget: usize) -> Result<ClassReport> {
    let cat = Catalogue::build(class, max_size, budget)?;
    Ok(ClassReport {
        max_size,
        outcomes: vec![
            hereditary(class, &cat),
            joint_embedding(class, &cat, max_size),
            amalgamation(class, &cat, max_size, Axiom::Amalgamation),
            disjointness(&cat, max_size),
            amalgamation(class, &cat, max_size, Axiom::FreeClosure),
            functoriality(&cat, max_size),
        ],
    })
}

/// Every free amalgam of class members lies in the class.
pub fn check_free_closure(class: &Class, max_size: usize) -> Result<AxiomOutcome> {
    let cat = Catalogue::build(class, max_size, DEFAULT_CHECK_BUDGET)?;
    Ok(amalgamation(class, &cat, max_size, Axiom::FreeClosure))
}

/// Isomorphic configurations have isomorphic free amalgams, by the map that
/// extends both sides.
pub fn check_canonical_functoriality(class: &Class, max_size: usize) -> Result<AxiomOutcome> {
    let cat = Catalogue::build(class, max_size, DEFAULT_CHECK_BUDGET)?;
    Ok(functoriality(&cat, max_size))
}

fn hereditary(class: &Class, cat: &Catalogue) -> AxiomOutcome {
    let mut instances = 0;
    for (s, _) in cat.levels.iter().flatten() {
        for x in all_subsets(s.points()) {
            instances += 1;
            let sub = induced(s, &x).expect("subset");
            if !class.contains(&sub) {
                return AxiomOutcome {
                    axiom: Axiom::Hereditary,
                    instances,
                    counterexample: Some(Counterexample {
                        description: format!("{s} has the non-member substructure {sub}"),
                        structures: vec![s.clone(), sub],
                    }),
                };
            }
        }
    }
    AxiomOutcome {
        axiom: Axiom::Hereditary,
        instances,
        counterexample: None,
    }
}

fn joint_embedding(class: &Class, cat: &Catalogue, max_size: usize) -> AxiomOutcome {
    let mut instances = 0;
    for total in 0..=max_size {
        for m1 in 0..=total.min(cat.levels.len() - 1) {
            let m2 = total - m1;
            if m2 >= cat.levels.len() {
                continue;
            }
            for (b1, _) in &cat.levels[m1] {
                for (b2, _) in &cat.levels[m2] {
                    instances += 1;
                    let shifted = b2.relabel(|p| p + b1.fresh_point());
                    let joint = free_amalgam(b1, &shifted, &BTreeSet::new())
                        .expect("disjoint union is defined");
                    if !class.contains(&joint.amalgam) {
                        return AxiomOutcome {
                            axiom: Axiom::JointEmbedding,
                            instances,
                            counterexample: Some(Counterexample {
                                description: format!(
                                    "disjoint union of {b1} and {b2} leaves the class"
                                ),
                                structures: vec![b1.clone(), b2.clone(), joint.amalgam],
                            }),
                        };
                    }
                }
            }
        }
    }
    AxiomOutcome {
        axiom: Axiom::JointEmbedding,
        instances,
        counterexample: None,
    }
}

fn amalgamation(class: &Class, cat: &Catalogue, max_size: usize, axiom: Axiom) -> AxiomOutcome {
    let mut instances = 0;
    let mut found = None;
    for_each_config(cat, max_size, |cfg| {
        instances += 1;
        let r = match free_amalgam(cfg.b1, &cfg.b2, &cfg.base) {
            Ok(r) => r,
            Err(e) => {
                found = Some(Counterexample {
                    description: format!("{}: {e}", describe(&cfg)),
                    structures: vec![cfg.b1.clone(), cfg.b2.clone()],
                });
                return ControlFlow::Break(());
            }
        };
        let member = class.contains(&r.amalgam);
        let embeds = axiom == Axiom::FreeClosure
            || (induced(&r.amalgam, cfg.b1.points()).ok().as_ref() == Some(cfg.b1)
                && induced(&r.amalgam, cfg.b2.points()).ok().as_ref() == Some(&cfg.b2));
        if member && embeds {
            return ControlFlow::Continue(());
        }
        found = Some(Counterexample {
            description: format!(
                "{}: free amalgam {} {}",
                describe(&cfg),
                r.amalgam,
                if member { "does not embed both sides" } else { "leaves the class" }
            ),
            structures: vec![cfg.b1.clone(), cfg.b2.clone(), r.amalgam],
        });
        ControlFlow::Break(())
    });
    AxiomOutcome {
        axiom,
        instances,
        counterexample: found,
    }
}

fn disjointness(cat: &Catalogue, max_size: usize) -> AxiomOutcome {
    let mut instances = 0;
    let mut found = None;
    for_each_config(cat, max_size, |cfg| {
        instances += 1;
        let ok = free_amalgam(cfg.b1, &cfg.b2, &cfg.base)
            .map(|r| r.is_disjoint_over(&cfg.base))
            .unwrap_or(false);
        if ok {
            ControlFlow::Continue(())
        } else {
            found = Some(Counterexample {
                description: format!("{}: images overlap outside the base", describe(&cfg)),
                structures: vec![cfg.b1.clone(), cfg.b2.clone()],
            });
            ControlFlow::Break(())
        }
    });
    AxiomOutcome {
        axiom: Axiom::Disjointness,
        instances,
        counterexample: found,
    }
}

// σ: reverse the point order and shift, so the second configuration shares
// no labels with the first
fn reverse_shift(top: Point) -> impl Fn(Point) -> Point {
    move |p| 2 * top + 1 - p
}

fn functoriality(cat: &Catalogue, max_size: usize) -> AxiomOutcome {
    let mut instances = 0;
    let mut found = None;
    for_each_config(cat, max_size, |cfg| {
        let d = free_amalgam(cfg.b1, &cfg.b2, &cfg.base).expect("configuration is valid");
        let top = d.amalgam.fresh_point();
        let sigma = reverse_shift(top);
        let b1s = cfg.b1.relabel(&sigma);
        let b2s = cfg.b2.relabel(&sigma);
        let bases: BTreeSet<Point> = cfg.base.iter().map(|&p| sigma(p)).collect();
        let d2 = free_amalgam(&b1s, &b2s, &bases).expect("relabelled configuration is valid");
        for a1 in cfg.aut1.elements() {
            for a2 in cfg.aut2.elements() {
                if cfg.base.iter().any(|&p| a1.apply(p) != a2.apply(p)) {
                    continue;
                }
                instances += 1;
                // φ = σ ∘ (α1 ∪ α2)
                let phi: BTreeMap<Point, Point> = d
                    .amalgam
                    .points()
                    .iter()
                    .map(|&p| {
                        let q = if cfg.b1.points().contains(&p) {
                            a1.apply(p)
                        } else {
                            a2.apply(p)
                        };
                        (p, sigma(q))
                    })
                    .collect();
                let phi = PartialIso::from_map_unchecked(phi);
                let extends_left = cfg
                    .b1
                    .points()
                    .iter()
                    .all(|&p| phi.get(p) == Some(sigma(a1.apply(p))));
                let extends_right = cfg
                    .b2
                    .points()
                    .iter()
                    .all(|&p| phi.get(p) == Some(sigma(a2.apply(p))));
                if !(extends_left
                    && extends_right
                    && phi.len() == d2.amalgam.len()
                    && phi.is_isomorphism_between(&d.amalgam, &d2.amalgam))
                {
                    found = Some(Counterexample {
                        description: format!(
                            "{}: induced map {phi} is not an isomorphism of the amalgams",
                            describe(&cfg)
                        ),
                        structures: vec![d.amalgam.clone(), d2.amalgam.clone()],
                    });
                    return ControlFlow::Break(());
                }
            }
        }
        ControlFlow::Continue(())
    });
    AxiomOutcome {
        axiom: Axiom::Functoriality,
        instances,
        counterexample: found,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finstruct::isomorphisms_fixing;
    use crate::signature::EtaZetaProfile;

    fn set(v: &[Point]) -> BTreeSet<Point> {
        v.iter().copied().collect()
    }

    fn g(n: usize, e: &[(Point, Point)]) -> FinStructure {
        FinStructure::graph(n, e).unwrap()
    }

    #[test]
    fn path_from_two_edges() {
        let b1 = FinStructure::with_edges(EtaZetaProfile::random_graph(), [0, 1], [[0, 1]]).unwrap();
        let b2 = FinStructure::with_edges(EtaZetaProfile::random_graph(), [1, 2], [[1, 2]]).unwrap();
        let r = free_amalgam(&b1, &b2, &set(&[1])).unwrap();
        assert_eq!(r.amalgam, g(3, &[(0, 1), (1, 2)]));
        assert!(!r.amalgam.has_edge(&[0, 2]));
        assert!(r.is_disjoint_over(&set(&[1])));
    }

    #[test]
    fn identity_and_disjoint_union() {
        let s = g(3, &[(0, 1)]);
        assert_eq!(free_amalgam(&s, &s, s.points()).unwrap().amalgam, s);
        let b2 = FinStructure::with_edges(EtaZetaProfile::random_graph(), [2, 3], [[2, 3]]).unwrap();
        let r = free_amalgam(&g(2, &[(0, 1)]), &b2, &set(&[])).unwrap();
        assert_eq!(r.amalgam, g(4, &[(0, 1), (2, 3)]));
    }

    #[test]
    fn base_mismatch() {
        let b1 = g(2, &[(0, 1)]);
        let b2 = g(2, &[]);
        assert_eq!(
            free_amalgam(&b1, &b2, &set(&[0, 1])),
            Err(Error::BaseMismatch(set(&[0, 1])))
        );
    }

    #[test]
    fn free_amalgam_is_symmetric() {
        let b1 = FinStructure::with_edges(EtaZetaProfile::random_graph(), [0, 1, 2], [[0, 1], [1, 2]]).unwrap();
        let b2 = FinStructure::with_edges(EtaZetaProfile::random_graph(), [1, 2, 3], [[1, 2], [1, 3]]).unwrap();
        let base = set(&[1, 2]);
        let l = free_amalgam(&b1, &b2, &base).unwrap().amalgam;
        let r = free_amalgam(&b2, &b1, &base).unwrap().amalgam;
        assert!(!isomorphisms_fixing(&l, &r, &[1, 2], &[1, 2], 1).is_empty());
    }

    #[test]
    fn random_graph_class_passes() {
        let report = check_all(&Class::new(EtaZetaProfile::random_graph()), 4).unwrap();
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn triangle_free_class_passes() {
        let class = Class::new(EtaZetaProfile::henson(3).unwrap());
        assert!(check_all(&class, 4).unwrap().passed());
    }

    #[test]
    fn forbidden_edge_degenerates() {
        let class = Class::with_forbidden(EtaZetaProfile::random_graph(), vec![g(2, &[(0, 1)])]);
        let report = check_class_axioms(&class, 3).unwrap();
        assert!(report.outcome(Axiom::Hereditary).unwrap().passed());
        assert!(report.outcome(Axiom::JointEmbedding).unwrap().passed());
        assert_eq!(class.enumerate(3, 6).unwrap().len(), 1);
    }

    #[test]
    fn forbidding_induced_paths_breaks_free_amalgamation() {
        let class = Class::with_forbidden(
            EtaZetaProfile::random_graph(),
            vec![g(3, &[(0, 1), (1, 2)])],
        );
        let report = check_class_axioms(&class, 4).unwrap();
        let ap = report.outcome(Axiom::Amalgamation).unwrap();
        let cx = ap.counterexample.as_ref().expect("free AP fails");
        // smallest failure: two edges over a common point
        assert_eq!(cx.structures[2].len(), 3);
        assert!(!class.contains(&cx.structures[2]));
    }

    #[test]
    fn bad_base_is_rejected() {
        let b1 = g(2, &[]);
        assert!(matches!(
            free_amalgam(&b1, &b1, &set(&[0])),
            Err(Error::InvariantViolation(_))
        ));
    }
}
