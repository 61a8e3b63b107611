//! Reading η and ζ back off a permutation group, and brute-force EPPA
//! witness search.
//!
//! Both predicates depend on tuples only through their H-orbits, so every
//! search runs over orbit labels rather than over tuples.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::finstruct::{isomorphisms_fixing, Class, FinStructure, PartialIso};
use crate::perm::Perm;
use crate::permgroup::{automorphisms_within, PermGroup};
use crate::signature::EtaZetaProfile;
use crate::Point;

/// Largest arity the predicates accept.
pub const MAX_RECON_ARITY: usize = 3;
/// Largest k accepted by the gluing predicate.
pub const MAX_RECON_K: usize = 4;
/// Largest ground set the predicates accept.
pub const DEFAULT_GROUND_BUDGET: usize = 16;
/// Families examined by one gluing check before it gives up.
pub const FAMILY_WORK: usize = 20_000_000;
/// Candidate structures examined by [`eppa_search`] before it gives up.
pub const EPPA_WORK: usize = 1 << 22;

/// Orbit labels of the repetition-free j-tuples over the ground set,
/// numbered by first appearance in lexicographic order.
struct TupleOrbits {
    tuples: Vec<Vec<Point>>,
    index: HashMap<Vec<Point>, usize>,
    label: Vec<usize>,
    reps: Vec<usize>,
}

impl TupleOrbits {
    fn new(h: &PermGroup, j: usize) -> Self {
        let pts: Vec<Point> = h.ground().iter().copied().collect();
        let tuples: Vec<Vec<Point>> = pts.iter().copied().permutations(j).collect();
        let index: HashMap<Vec<Point>, usize> =
            tuples.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        let mut label = vec![usize::MAX; tuples.len()];
        let mut reps = Vec::new();
        for start in 0..tuples.len() {
            if label[start] != usize::MAX {
                continue;
            }
            let id = reps.len();
            reps.push(start);
            label[start] = id;
            let mut stack = vec![start];
            while let Some(t) = stack.pop() {
                for g in h.generators() {
                    let img: Vec<Point> = tuples[t].iter().map(|&p| g.apply(p)).collect();
                    let u = index[&img];
                    if label[u] == usize::MAX {
                        label[u] = id;
                        stack.push(u);
                    }
                }
            }
        }
        TupleOrbits {
            tuples,
            index,
            label,
            reps,
        }
    }

    fn of(&self, t: &[Point]) -> usize {
        self.label[self.index[t]]
    }

    fn rep(&self, orbit: usize) -> &[Point] {
        &self.tuples[self.reps[orbit]]
    }
}

fn check_ground(h: &PermGroup) -> Result<()> {
    if h.ground().len() > DEFAULT_GROUND_BUDGET {
        return Err(Error::BudgetExceeded(format!(
            "ground set of {} points exceeds {DEFAULT_GROUND_BUDGET}",
            h.ground().len()
        )));
    }
    Ok(())
}

fn check_arity(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::ArityTooSmall(n));
    }
    if n > MAX_RECON_ARITY {
        return Err(Error::BudgetExceeded(format!(
            "arity {n} exceeds {MAX_RECON_ARITY}"
        )));
    }
    Ok(())
}

fn delete(t: &[Point], i: usize) -> Vec<Point> {
    t.iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &p)| p)
        .collect()
}

/// Tuples `ā ≠ b̄` in different H-orbits that agree, up to H, after deleting
/// any one coordinate. `ā` is the least tuple of its orbit.
pub fn predicate_bn(h: &PermGroup, n: usize) -> Result<Option<(Vec<Point>, Vec<Point>)>> {
    check_arity(n)?;
    check_ground(h)?;
    if n > h.ground().len() {
        return Ok(None);
    }
    let full = TupleOrbits::new(h, n);
    let part = TupleOrbits::new(h, n - 1);
    for o in 0..full.reps.len() {
        let a = full.rep(o);
        let a_del: Vec<usize> = (0..n).map(|i| part.of(&delete(a, i))).collect();
        for (bi, b) in full.tuples.iter().enumerate() {
            if full.label[bi] != o && (0..n).all(|i| part.of(&delete(b, i)) == a_del[i]) {
                return Ok(Some((a.to_vec(), b.clone())));
            }
        }
    }
    Ok(None)
}

/// One n-tuple for every n-subset of `{1, ..., k}`; the tuple for `x` lists
/// points indexed by the elements of `x` in increasing order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReconFamily {
    pub k: usize,
    pub n: usize,
    pub tuples: BTreeMap<Vec<usize>, Vec<Point>>,
}

impl fmt::Display for ReconFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .tuples
            .iter()
            .map(|(x, t)| format!("{{{}}}->({})", x.iter().join(","), t.iter().join(",")))
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Result of the gluing predicate for one `(n, k)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GluingOutcome {
    pub holds: bool,
    /// A compatible family that no repetition-free k-tuple glues.
    pub counterexample: Option<ReconFamily>,
    /// Compatible families examined, up to orbits; the full count when the
    /// predicate holds.
    pub families: usize,
}

/// Every family whose overlapping tuples agree up to H is realized, up to H,
/// by the restrictions of a single repetition-free k-tuple.
pub fn predicate_bnk(h: &PermGroup, n: usize, k: usize) -> Result<GluingOutcome> {
    check_arity(n)?;
    check_ground(h)?;
    if k < n {
        return Err(Error::InvariantViolation(format!("k = {k} is below n = {n}")));
    }
    if k > MAX_RECON_K {
        return Err(Error::BudgetExceeded(format!("k = {k} exceeds {MAX_RECON_K}")));
    }
    let xs: Vec<Vec<usize>> = (1..=k).combinations(n).collect();
    if k > h.ground().len() {
        // no tuple glues, and some family exists unless n-tuples do not
        if n > h.ground().len() {
            return Ok(GluingOutcome {
                holds: true,
                counterexample: None,
                families: 0,
            });
        }
    }
    let full = TupleOrbits::new(h, n);
    let subs: Vec<TupleOrbits> = (0..n).map(|j| TupleOrbits::new(h, j)).collect();

    // orbit of the restriction of orbit o to the given positions
    let restrict = |o: usize, pos: &[usize]| -> usize {
        let t: Vec<Point> = pos.iter().map(|&i| full.rep(o)[i]).collect();
        subs[pos.len()].of(&t)
    };

    // overlaps: for x < y, positions of the shared elements in each
    let mut overlaps: Vec<Vec<(usize, Vec<usize>, Vec<usize>)>> = vec![Vec::new(); xs.len()];
    for (yi, y) in xs.iter().enumerate() {
        for (xi, x) in xs.iter().enumerate().take(yi) {
            let shared: Vec<usize> = x.iter().copied().filter(|p| y.contains(p)).collect();
            if shared.is_empty() {
                continue;
            }
            let px = shared.iter().map(|p| x.iter().position(|q| q == p).expect("shared")).collect();
            let py = shared.iter().map(|p| y.iter().position(|q| q == p).expect("shared")).collect();
            overlaps[yi].push((xi, px, py));
        }
    }

    // profiles of every repetition-free k-tuple, up to H
    let glued: HashSet<Vec<usize>> = h
        .ground()
        .iter()
        .copied()
        .permutations(k)
        .map(|star| {
            xs.iter()
                .map(|x| {
                    let t: Vec<Point> = x.iter().map(|&p| star[p - 1]).collect();
                    full.of(&t)
                })
                .collect()
        })
        .collect();

    let orbit_count = full.reps.len();
    let mut assign = vec![0usize; xs.len()];
    let mut families = 0usize;
    let mut found: Option<Vec<usize>> = None;
    let mut depth = 0usize;
    let mut next = vec![0usize; xs.len()];
    // iterative backtracking over orbit assignments in lexicographic order
    'search: loop {
        if depth == xs.len() {
            families += 1;
            if families > FAMILY_WORK {
                return Err(Error::BudgetExceeded(format!(
                    "more than {FAMILY_WORK} compatible families"
                )));
            }
            if !glued.contains(&assign) {
                found = Some(assign.clone());
                break 'search;
            }
            depth -= 1;
            continue;
        }
        let mut placed = false;
        while next[depth] < orbit_count {
            let o = next[depth];
            next[depth] += 1;
            let ok = overlaps[depth]
                .iter()
                .all(|(xi, px, py)| restrict(assign[*xi], px) == restrict(o, py));
            if ok {
                assign[depth] = o;
                placed = true;
                break;
            }
        }
        if placed {
            depth += 1;
            if depth < xs.len() {
                next[depth] = 0;
            }
        } else {
            if depth == 0 {
                break 'search;
            }
            depth -= 1;
        }
    }
    let counterexample = found.map(|assign| ReconFamily {
        k,
        n,
        tuples: xs
            .iter()
            .zip(&assign)
            .map(|(x, &o)| (x.clone(), full.rep(o).to_vec()))
            .collect(),
    });
    Ok(GluingOutcome {
        holds: counterexample.is_none(),
        counterexample,
        families,
    })
}

/// A profile read off a group, within the stated bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfileEstimate {
    pub profile: EtaZetaProfile,
    pub max_arity: usize,
    pub max_k: usize,
    /// `(n, predicate_bn)` for each tested arity.
    pub arity_tests: Vec<(usize, bool)>,
    /// `(n, k, predicate_bnk)` for each recovered arity.
    pub gluing_tests: Vec<(usize, usize, bool)>,
}

impl fmt::Display for ProfileEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "estimate (arity <= {}, k <= {}): {}",
            self.max_arity, self.max_k, self.profile
        )
    }
}

/// η from the orbit-separation predicate; ζ(n) as one more than the largest
/// k whose gluing predicate holds, unconstrained when all tested k hold.
pub fn recover_profile(h: &PermGroup, max_arity: usize, max_k: usize) -> Result<ProfileEstimate> {
    let mut arity_tests = Vec::new();
    let mut gluing_tests = Vec::new();
    let mut eta = Vec::new();
    let mut zeta = Vec::new();
    for n in 2..=max_arity {
        let present = predicate_bn(h, n)?.is_some();
        arity_tests.push((n, present));
        if !present {
            continue;
        }
        eta.push(n);
        let mut best = None;
        let mut all = true;
        for k in n..=max_k {
            let holds = predicate_bnk(h, n, k)?.holds;
            gluing_tests.push((n, k, holds));
            if holds {
                best = Some(k);
            } else {
                all = false;
            }
        }
        if !all {
            zeta.push((n, best.map_or(n, |k| k + 1)));
        }
    }
    Ok(ProfileEstimate {
        profile: EtaZetaProfile::from_parts(&eta, &zeta)?,
        max_arity,
        max_k,
        arity_tests,
        gluing_tests,
    })
}

/// A class member containing `A` in which every partial map extends.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EppaWitness {
    pub structure: FinStructure,
    /// An automorphism extending each partial map, in input order.
    pub extensions: Vec<Perm>,
}

/// Searches extensions of `a` in its class by size, then by edge set in
/// lexicographic order, for one where each partial map extends to an
/// automorphism.
pub fn eppa_search(a: &FinStructure, partials: &[PartialIso], size_budget: usize) -> Result<EppaWitness> {
    let class = Class::new(a.profile().clone());
    if !class.contains(a) {
        return Err(Error::InvariantViolation("A is not in its class".into()));
    }
    for p in partials {
        if !p.domain().is_subset(a.points()) || !p.image().is_subset(a.points()) {
            return Err(Error::InvariantViolation(format!(
                "partial map {p} leaves A"
            )));
        }
        if !p.is_isomorphism_between(a, a) {
            return Err(Error::InvariantViolation(format!(
                "partial map {p} is not an isomorphism of induced substructures"
            )));
        }
    }
    let mut work = 0usize;
    for size in a.len()..=size_budget {
        let mut base = a.clone();
        let mut fresh = Vec::new();
        while base.len() < size {
            let p = base.fresh_point();
            base.add_point(p);
            fresh.push(p);
        }
        let pts: Vec<Point> = base.points().iter().copied().collect();
        let tuples: Vec<Vec<Point>> = a
            .profile()
            .arities()
            .flat_map(|n| pts.iter().copied().combinations(n).collect::<Vec<_>>())
            .filter(|t| t.iter().any(|p| fresh.contains(p)))
            .collect();
        if tuples.len() >= 64 || work + (1usize << tuples.len()) > EPPA_WORK {
            return Err(Error::BudgetExceeded(format!(
                "{} candidate tuples at size {size}",
                tuples.len()
            )));
        }
        for mask in 0u64..1 << tuples.len() {
            work += 1;
            let mut b = base.clone();
            for (i, t) in tuples.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    b.add_edge(t).expect("valid tuple");
                }
            }
            if !class.contains(&b) {
                continue;
            }
            let mut extensions = Vec::new();
            for p in partials {
                let (dom, img): (Vec<Point>, Vec<Point>) = p.map().iter().map(|(&x, &y)| (x, y)).unzip();
                let Some(f) = isomorphisms_fixing(&b, &b, &dom, &img, 1).into_iter().next() else {
                    break;
                };
                extensions.push(Perm::from_map(b.fresh_point(), f.map()).expect("bijection"));
            }
            if extensions.len() == partials.len() {
                let group = automorphisms_within(&b, b.len())?;
                debug_assert!(extensions.iter().all(|g| group.contains(g)));
                if extensions.iter().all(|g| group.contains(g)) {
                    return Ok(EppaWitness {
                        structure: b,
                        extensions,
                    });
                }
            }
        }
    }
    Err(Error::NotFoundWithinBudget(size_budget))
}

/// Checks a witness against a fresh computation of `Aut(B)`.
pub fn verify_eppa(a: &FinStructure, partials: &[PartialIso], w: &EppaWitness) -> bool {
    let b = &w.structure;
    let Ok(group) = automorphisms_within(b, b.len()) else {
        return false;
    };
    let pts: BTreeSet<Point> = a.points().clone();
    Class::new(a.profile().clone()).contains(b)
        && crate::finstruct::induced(b, &pts).is_ok_and(|s| &s == a)
        && w.extensions.len() == partials.len()
        && partials.iter().zip(&w.extensions).all(|(p, g)| {
            group.contains(g) && p.map().iter().all(|(&x, &y)| g.apply(x) == y)
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::permgroup::automorphisms;

    fn sym(n: usize) -> PermGroup {
        PermGroup::symmetric((0..n).collect()).unwrap()
    }

    fn c5_group() -> PermGroup {
        automorphisms(&FinStructure::graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap()).unwrap()
    }

    #[test]
    fn pure_set_has_no_arity() {
        for n in 2..=3 {
            assert_eq!(predicate_bn(&sym(5), n).unwrap(), None);
        }
    }

    #[test]
    fn c5_separates_edges_from_non_edges() {
        let (a, b) = predicate_bn(&c5_group(), 2).unwrap().unwrap();
        let s = FinStructure::graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap();
        assert_ne!(s.has_edge(&[a[0].min(a[1]), a[0].max(a[1])]), s.has_edge(&[b[0].min(b[1]), b[0].max(b[1])]));
    }

    #[test]
    fn arity_beyond_the_ground_set_is_false() {
        assert_eq!(predicate_bn(&sym(2), 3).unwrap(), None);
    }

    #[test]
    fn trivial_group_glues_k_equal_n() {
        let h = PermGroup::trivial((0..3).collect());
        let out = predicate_bnk(&h, 2, 2).unwrap();
        assert!(out.holds);
        assert_eq!(out.families, 6);
    }

    #[test]
    fn c5_has_no_triangle_to_glue() {
        let out = predicate_bnk(&c5_group(), 2, 3).unwrap();
        assert!(!out.holds);
        assert_eq!(out.counterexample.unwrap().tuples.len(), 3);
    }

    #[test]
    fn budgets_are_enforced() {
        assert!(matches!(predicate_bnk(&sym(4), 2, 5), Err(Error::BudgetExceeded(_))));
        assert!(matches!(predicate_bn(&sym(4), 4), Err(Error::BudgetExceeded(_))));
        assert!(matches!(predicate_bn(&PermGroup::trivial((0..17).collect()), 2), Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn pure_set_recovers_the_empty_profile() {
        let e = recover_profile(&sym(5), 3, 4).unwrap();
        assert_eq!(e.profile, EtaZetaProfile::empty());
    }

    #[test]
    fn edge_swap_is_already_an_automorphism() {
        let a = FinStructure::graph(2, &[(0, 1)]).unwrap();
        let p = PartialIso::new(&a, &a, [(0, 1), (1, 0)]).unwrap();
        let w = eppa_search(&a, std::slice::from_ref(&p), 2).unwrap();
        assert_eq!(w.structure, a);
        assert!(verify_eppa(&a, &[p], &w));
    }

    #[test]
    fn path_shift_extends_on_the_four_cycle() {
        let a = FinStructure::graph(3, &[(0, 1), (1, 2)]).unwrap();
        let p = PartialIso::new(&a, &a, [(0, 1), (1, 2)]).unwrap();
        let w = eppa_search(&a, std::slice::from_ref(&p), 4).unwrap();
        let c4 = FinStructure::graph(4, &[(0, 1), (1, 2), (0, 3), (2, 3)]).unwrap();
        assert_eq!(w.structure, c4);
        assert!(verify_eppa(&a, &[p], &w));
    }

    #[test]
    fn small_budget_is_not_a_refutation() {
        let a = FinStructure::graph(3, &[(0, 1), (1, 2)]).unwrap();
        let p = PartialIso::new(&a, &a, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(eppa_search(&a, &[p], 3), Err(Error::NotFoundWithinBudget(3)));
    }
}
