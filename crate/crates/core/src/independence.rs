//! The free independence relation on a finite structure and the stabilizer
//! algebra built on it.
//!
//! `A ⫝_C B` holds iff `A ∩ B ⊆ C` and no relation tuple inside `A ∪ B ∪ C`
//! meets both `A ∖ C` and `B ∖ C`.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use itertools::Itertools;

use crate::amalgam::free_amalgam;
use crate::error::{Error, Result};
use crate::finstruct::{induced, isomorphic, Class, FinStructure, PartialIso};
use crate::generic::{saturate, DEFAULT_POINT_BUDGET};
use crate::perm::Perm;
use crate::permgroup::{acl_in, automorphisms_within, AclMode, Ambient, PermGroup};
use crate::Point;

/// Default bound on the sets quantified over by the axiom checks.
pub const DEFAULT_MAX_SET_SIZE: usize = 3;
/// Elementary evaluations one axiom check may spend.
pub const SIR_WORK: u64 = 4_000_000_000;
/// Structures above this size are refused by the axiom checks.
pub const SIR_MAX_POINTS: usize = 128;

/// How `A ≡_B A'` is read on a finite structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Equivalence {
    /// The map fixing B and sending A to A' is a partial isomorphism.
    /// In a homogeneous limit this is the same as `Orbit`.
    #[default]
    Local,
    /// Some automorphism fixing B pointwise sends A to A'.
    Orbit,
}

impl fmt::Display for Equivalence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Equivalence::Local => "local",
            Equivalence::Orbit => "orbit",
        })
    }
}

/// What witnesses `A ≡_B A'`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EquivWitness {
    Automorphism(Perm),
    Local(PartialIso),
}

impl fmt::Display for EquivWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EquivWitness::Automorphism(p) => write!(f, "automorphism {p}"),
            EquivWitness::Local(p) => write!(f, "partial isomorphism {p}"),
        }
    }
}

fn union(a: &BTreeSet<Point>, b: &BTreeSet<Point>) -> BTreeSet<Point> {
    a.union(b).copied().collect()
}

fn image(h: &Perm, s: &BTreeSet<Point>) -> BTreeSet<Point> {
    s.iter().map(|&p| h.apply(p)).collect()
}

/// `A ⫝_C B` by the cross-edge characterization.
pub fn indep(m: &FinStructure, a: &BTreeSet<Point>, b: &BTreeSet<Point>, c: &BTreeSet<Point>) -> bool {
    if a.intersection(b).any(|p| !c.contains(p)) {
        return false;
    }
    let inside = |p: &Point| a.contains(p) || b.contains(p) || c.contains(p);
    !m.all_edges().any(|e| {
        e.iter().all(inside)
            && e.iter().any(|p| a.contains(p) && !c.contains(p))
            && e.iter().any(|p| b.contains(p) && !c.contains(p))
    })
}

/// `A ⫝_C B` read literally: `⟨A, B, C⟩ ≅ ⟨A, C⟩ ⊕_C ⟨B, C⟩`.
pub fn indep_by_definition(
    m: &FinStructure,
    a: &BTreeSet<Point>,
    b: &BTreeSet<Point>,
    c: &BTreeSet<Point>,
) -> bool {
    let ac = union(a, c);
    let bc = union(b, c);
    let (Ok(whole), Ok(left), Ok(right)) = (induced(m, &union(&ac, b)), induced(m, &ac), induced(m, &bc))
    else {
        return false;
    };
    // a disjoint copy of the B side, glued along C
    let top = m.points().last().map_or(0, |&p| p + 1);
    let right = right.relabel(|p| if c.contains(&p) { p } else { p + top });
    match free_amalgam(&left, &right, c) {
        Ok(r) => isomorphic(&whole, &r.amalgam).is_some(),
        Err(_) => false,
    }
}

/// A witness of `A ≡_B A'` in `m`, if there is one.
pub fn equivalent(
    m: &Ambient,
    a: &[Point],
    a2: &[Point],
    base: &BTreeSet<Point>,
    mode: Equivalence,
) -> Option<EquivWitness> {
    if a.len() != a2.len() {
        return None;
    }
    match mode {
        Equivalence::Orbit => {
            let g = m
                .group
                .elements()
                .iter()
                .find(|g| base.iter().all(|&p| g.fixes(p)) && a.iter().zip(a2).all(|(&x, &y)| g.apply(x) == y))?;
            Some(EquivWitness::Automorphism(g.clone()))
        }
        Equivalence::Local => {
            let mut map: BTreeMap<Point, Point> = base.iter().map(|&p| (p, p)).collect();
            for (&x, &y) in a.iter().zip(a2) {
                if *map.entry(x).or_insert(y) != y {
                    return None;
                }
            }
            let p = PartialIso::new(&m.structure, &m.structure, map).ok()?;
            Some(EquivWitness::Local(p))
        }
    }
}

/// A' realizing Existence for `(A, B, C)`, with its witness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExistenceWitness {
    pub image: Vec<Point>,
    pub witness: EquivWitness,
    /// The enlarged structure, when the witness had to be grown.
    pub grown: Option<FinStructure>,
}

/// `m` plus a copy of `A` over `B` with no relations to anything else, and
/// the copy's points in the order of `a`.
pub fn free_copy(m: &FinStructure, a: &[Point], b: &BTreeSet<Point>) -> (FinStructure, Vec<Point>) {
    let mut out = m.clone();
    let mut next = m.fresh_point();
    let mut rename: HashMap<Point, Point> = HashMap::new();
    let copy: Vec<Point> = a
        .iter()
        .map(|&p| {
            if b.contains(&p) {
                return p;
            }
            *rename.entry(p).or_insert_with(|| {
                next += 1;
                next - 1
            })
        })
        .collect();
    for &q in rename.values() {
        out.add_point(q);
    }
    let dom: BTreeSet<Point> = a.iter().copied().chain(b.iter().copied()).collect();
    for e in m.all_edges() {
        if e.iter().all(|p| dom.contains(p)) && e.iter().any(|p| rename.contains_key(p)) {
            let t: Vec<Point> = e.iter().map(|p| rename.get(p).copied().unwrap_or(*p)).collect();
            out.add_edge(&t).expect("copy of an edge");
        }
    }
    (out, copy)
}

fn search_existence(
    m: &Ambient,
    a: &[Point],
    b: &BTreeSet<Point>,
    c: &BTreeSet<Point>,
    mode: Equivalence,
) -> Option<(Vec<Point>, EquivWitness)> {
    let s = &m.structure;
    match mode {
        Equivalence::Orbit => m.group.elements().iter().find_map(|g| {
            if !b.iter().all(|&p| g.fixes(p)) {
                return None;
            }
            let img: Vec<Point> = a.iter().map(|&p| g.apply(p)).collect();
            let set: BTreeSet<Point> = img.iter().copied().collect();
            indep(s, &set, c, b).then(|| (img, EquivWitness::Automorphism(g.clone())))
        }),
        Equivalence::Local => {
            let free: Vec<usize> = (0..a.len()).filter(|&i| !b.contains(&a[i])).collect();
            let pool: Vec<Point> = s
                .points()
                .iter()
                .copied()
                .filter(|p| !b.contains(p) && !c.contains(p))
                .collect();
            for choice in pool.iter().copied().permutations(free.len()) {
                let mut img = a.to_vec();
                for (&i, &p) in free.iter().zip(&choice) {
                    img[i] = p;
                }
                let set: BTreeSet<Point> = img.iter().copied().collect();
                if !indep(s, &set, c, b) {
                    continue;
                }
                if let Some(w) = equivalent(m, a, &img, b, Equivalence::Local) {
                    return Some((img, w));
                }
            }
            None
        }
    }
}

/// Some `A' ≡_B A` with `A' ⫝_B C`.
///
/// With `grow = Some(k)`, a failure inside `m` is answered by adding a free
/// copy of `A` over `B` and saturating the result to level `k` (no
/// saturation when `k = 0`); the witness is then sought in that structure.
pub fn existence_witness(
    m: &Ambient,
    a: &[Point],
    b: &BTreeSet<Point>,
    c: &BTreeSet<Point>,
    mode: Equivalence,
    grow: Option<usize>,
) -> Result<ExistenceWitness> {
    if let Some((image, witness)) = search_existence(m, a, b, c, mode) {
        return Ok(ExistenceWitness {
            image,
            witness,
            grown: None,
        });
    }
    let insufficient = || {
        Error::SaturationInsufficient(format!(
            "no copy of ({}) over {} independent from {}; needs one-point extensions over {}",
            a.iter().join(","),
            set_string(b),
            set_string(c),
            set_string(&union(b, c)),
        ))
    };
    let Some(k) = grow else {
        return Err(insufficient());
    };
    let (grown, copy) = free_copy(&m.structure, a, b);
    let structure = if k == 0 {
        grown
    } else {
        saturate(grown.profile(), k, Some(&grown), DEFAULT_POINT_BUDGET)?.structure
    };
    let budget = structure.len();
    let group = match mode {
        Equivalence::Orbit => automorphisms_within(&structure, budget)?,
        Equivalence::Local => PermGroup::trivial(structure.points().clone()),
    };
    let bigger = Ambient { structure, group };
    let witness = equivalent(&bigger, a, &copy, b, mode).ok_or_else(insufficient)?;
    Ok(ExistenceWitness {
        image: copy,
        witness,
        grown: Some(bigger.structure),
    })
}

/// The axioms of a free stationary independence relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SirAxiom {
    Invariance,
    Symmetry,
    Monotonicity,
    Existence,
    Stationarity,
    Freeness,
}

impl SirAxiom {
    pub const ALL: [SirAxiom; 6] = [
        SirAxiom::Invariance,
        SirAxiom::Symmetry,
        SirAxiom::Monotonicity,
        SirAxiom::Existence,
        SirAxiom::Stationarity,
        SirAxiom::Freeness,
    ];
}

impl fmt::Display for SirAxiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SirAxiom::Invariance => "invariance",
            SirAxiom::Symmetry => "symmetry",
            SirAxiom::Monotonicity => "monotonicity",
            SirAxiom::Existence => "existence",
            SirAxiom::Stationarity => "stationarity",
            SirAxiom::Freeness => "freeness",
        })
    }
}

/// One quantifier instance of an axiom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instance {
    Invariance {
        a: BTreeSet<Point>,
        b: BTreeSet<Point>,
        c: BTreeSet<Point>,
        f: Perm,
    },
    Symmetry {
        a: BTreeSet<Point>,
        b: BTreeSet<Point>,
        c: BTreeSet<Point>,
    },
    Monotonicity {
        a: BTreeSet<Point>,
        b: BTreeSet<Point>,
        c: BTreeSet<Point>,
        d: BTreeSet<Point>,
    },
    Existence {
        a: Vec<Point>,
        b: BTreeSet<Point>,
        c: BTreeSet<Point>,
    },
    Stationarity {
        a: Vec<Point>,
        a2: Vec<Point>,
        b: BTreeSet<Point>,
        c: BTreeSet<Point>,
    },
    Freeness {
        a: BTreeSet<Point>,
        b: BTreeSet<Point>,
        c: BTreeSet<Point>,
        d: BTreeSet<Point>,
    },
}

fn set_string(s: &BTreeSet<Point>) -> String {
    format!("{{{}}}", s.iter().join(","))
}

fn tuple_string(t: &[Point]) -> String {
    format!("({})", t.iter().join(","))
}

impl Instance {
    pub fn axiom(&self) -> SirAxiom {
        match self {
            Instance::Invariance { .. } => SirAxiom::Invariance,
            Instance::Symmetry { .. } => SirAxiom::Symmetry,
            Instance::Monotonicity { .. } => SirAxiom::Monotonicity,
            Instance::Existence { .. } => SirAxiom::Existence,
            Instance::Stationarity { .. } => SirAxiom::Stationarity,
            Instance::Freeness { .. } => SirAxiom::Freeness,
        }
    }

    /// Re-evaluates the instance in `m` from the definitions.
    pub fn holds(&self, m: &Ambient, mode: Equivalence) -> bool {
        let s = &m.structure;
        match self {
            Instance::Invariance { a, b, c, f } => {
                !m.group.contains(f) || !indep(s, a, b, c) || indep(s, &image(f, a), &image(f, b), &image(f, c))
            }
            Instance::Symmetry { a, b, c } => !indep(s, a, b, c) || indep(s, b, a, c),
            Instance::Monotonicity { a, b, c, d } => {
                !(indep(s, a, &union(b, d), c) && indep(s, a, b, c)) || indep(s, a, d, &union(b, c))
            }
            Instance::Existence { a, b, c } => search_existence(m, a, b, c, mode).is_some(),
            Instance::Stationarity { a, a2, b, c } => {
                let sa: BTreeSet<Point> = a.iter().copied().collect();
                let sa2: BTreeSet<Point> = a2.iter().copied().collect();
                let premise = equivalent(m, a, a2, c, mode).is_some() && indep(s, &sa, b, c) && indep(s, &sa2, b, c);
                !premise || equivalent(m, a, a2, &union(b, c), mode).is_some()
            }
            Instance::Freeness { a, b, c, d } => {
                let meet: BTreeSet<Point> = c.intersection(&union(a, b)).copied().collect();
                !(indep(s, a, b, c) && meet.is_subset(d) && d.is_subset(c)) || indep(s, a, b, d)
            }
        }
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instance::Invariance { a, b, c, f: g } => write!(
                f,
                "A={} B={} C={} f={g}",
                set_string(a),
                set_string(b),
                set_string(c)
            ),
            Instance::Symmetry { a, b, c } => {
                write!(f, "A={} B={} C={}", set_string(a), set_string(b), set_string(c))
            }
            Instance::Monotonicity { a, b, c, d } | Instance::Freeness { a, b, c, d } => write!(
                f,
                "A={} B={} C={} D={}",
                set_string(a),
                set_string(b),
                set_string(c),
                set_string(d)
            ),
            Instance::Existence { a, b, c } => write!(
                f,
                "A={} B={} C={}",
                tuple_string(a),
                set_string(b),
                set_string(c)
            ),
            Instance::Stationarity { a, a2, b, c } => write!(
                f,
                "A={} A'={} B={} C={}",
                tuple_string(a),
                tuple_string(a2),
                set_string(b),
                set_string(c)
            ),
        }
    }
}

/// Outcome of one axiom check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    /// Instances that fail inside the structure but hold in a larger one.
    Deficit(Vec<Instance>),
    /// A violation that no enlargement repairs.
    Refuted(Instance),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndependenceReport {
    pub axiom: SirAxiom,
    pub instances: usize,
    pub verdict: Verdict,
}

impl IndependenceReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn refuted(&self) -> bool {
        matches!(self.verdict, Verdict::Refuted(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SirOptions {
    pub equivalence: Equivalence,
    /// Compare the cross-edge test with the literal definition on every
    /// triple; a disagreement is an `InvariantViolation`.
    pub cross_validate: bool,
}

/// Bitset view of a structure of at most [`SIR_MAX_POINTS`] points.
struct Kernel {
    pts: Vec<Point>,
    edges: Vec<u128>,
    edge_set: HashSet<u128>,
    /// Group elements as maps on indices.
    group: Vec<Vec<u8>>,
    stabs: HashMap<u128, Vec<usize>>,
}

const NONE: u8 = u8::MAX;

fn bits(mut m: u128) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            return None;
        }
        let i = m.trailing_zeros() as usize;
        m &= m - 1;
        Some(i)
    })
}

impl Kernel {
    fn new(m: &Ambient, with_group: bool) -> Result<Self> {
        let s = &m.structure;
        if s.len() > SIR_MAX_POINTS {
            return Err(Error::BudgetExceeded(format!(
                "{} points exceed the independence checker's {SIR_MAX_POINTS}",
                s.len()
            )));
        }
        let pts: Vec<Point> = s.points().iter().copied().collect();
        let index: HashMap<Point, usize> = pts.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let edges: Vec<u128> = s
            .all_edges()
            .map(|e| e.iter().fold(0u128, |acc, p| acc | 1 << index[p]))
            .collect();
        let edge_set = edges.iter().copied().collect();
        let group = if with_group {
            m.group
                .elements()
                .iter()
                .map(|g| pts.iter().map(|&p| index[&g.apply(p)] as u8).collect())
                .collect()
        } else {
            Vec::new()
        };
        Ok(Kernel {
            pts,
            edges,
            edge_set,
            group,
            stabs: HashMap::new(),
        })
    }

    fn mask(&self, s: &[usize]) -> u128 {
        s.iter().fold(0, |acc, &i| acc | 1 << i)
    }

    fn set(&self, m: u128) -> BTreeSet<Point> {
        bits(m).map(|i| self.pts[i]).collect()
    }

    fn tuple(&self, t: &[usize]) -> Vec<Point> {
        t.iter().map(|&i| self.pts[i]).collect()
    }

    fn indep(&self, a: u128, b: u128, c: u128) -> bool {
        if a & b & !c != 0 {
            return false;
        }
        let (an, bn) = (a & !c, b & !c);
        if an == 0 || bn == 0 {
            return true;
        }
        let all = a | b | c;
        self.edges.iter().all(|&e| e & !all != 0 || e & an == 0 || e & bn == 0)
    }

    fn map_mask(&self, img: &[u8], m: u128) -> u128 {
        bits(m).fold(0, |acc, i| acc | 1 << img[i])
    }

    /// The map fixing `base` with `from[i] -> to[i]` is a partial isomorphism.
    fn local_equiv(&self, from: &[usize], to: &[usize], base: u128) -> bool {
        let mut img = [NONE; SIR_MAX_POINTS];
        let mut used = 0u128;
        for i in bits(base) {
            img[i] = i as u8;
            used |= 1 << i;
        }
        for (&x, &y) in from.iter().zip(to) {
            if img[x] != NONE {
                if img[x] as usize != y {
                    return false;
                }
                continue;
            }
            if used >> y & 1 == 1 {
                return false;
            }
            img[x] = y as u8;
            used |= 1 << y;
        }
        let dom = base | self.mask(from);
        let mut inside = 0usize;
        for &e in &self.edges {
            if e & !dom == 0 {
                inside += 1;
                if !self.edge_set.contains(&self.map_mask(&img, e)) {
                    return false;
                }
            }
        }
        inside == self.edges.iter().filter(|&&e| e & !used == 0).count()
    }

    fn stab(&mut self, base: u128) -> &[usize] {
        let group = &self.group;
        self.stabs.entry(base).or_insert_with(|| {
            (0..group.len())
                .filter(|&g| bits(base).all(|i| group[g][i] as usize == i))
                .collect()
        })
    }

    fn orbit_equiv(&mut self, from: &[usize], to: &[usize], base: u128) -> bool {
        let ids = self.stab(base).to_vec();
        ids.iter()
            .any(|&g| from.iter().zip(to).all(|(&x, &y)| self.group[g][x] as usize == y))
    }

    fn equiv(&mut self, from: &[usize], to: &[usize], base: u128, mode: Equivalence) -> bool {
        match mode {
            Equivalence::Local => self.local_equiv(from, to, base),
            Equivalence::Orbit => self.orbit_equiv(from, to, base),
        }
    }

    fn exists(&mut self, a: &[usize], b: u128, c: u128, mode: Equivalence) -> bool {
        match mode {
            Equivalence::Orbit => {
                let ids = self.stab(b).to_vec();
                ids.iter().any(|&g| {
                    let img = self.map_mask(&self.group[g], self.mask(a));
                    self.indep(img, c, b)
                })
            }
            Equivalence::Local => {
                let free: Vec<usize> = (0..a.len()).filter(|&i| b >> a[i] & 1 == 0).collect();
                let mut img = a.to_vec();
                self.place(a, &free, 0, &mut img, b, c)
            }
        }
    }

    fn place(&self, a: &[usize], free: &[usize], i: usize, img: &mut Vec<usize>, b: u128, c: u128) -> bool {
        if i == free.len() {
            return self.indep(self.mask(img), c, b) && self.local_equiv(a, img, b);
        }
        let taken = free[..i].iter().fold(0u128, |acc, &j| acc | 1 << img[j]);
        for x in 0..self.pts.len() {
            let bit = 1u128 << x;
            if (b | c | taken) & bit != 0 {
                continue;
            }
            img[free[i]] = x;
            if self.place(a, free, i + 1, img, b, c) {
                return true;
            }
        }
        img[free[i]] = a[free[i]];
        false
    }
}

// all subsets of size at most `max` of `0..n`, by size then lexicographically
fn small_subsets(n: usize, max: usize) -> Vec<Vec<usize>> {
    (0..=max.min(n))
        .flat_map(|j| (0..n).combinations(j).collect::<Vec<_>>())
        .collect()
}

fn guard(axiom: SirAxiom, work: u64) -> Result<()> {
    if work > SIR_WORK {
        return Err(Error::BudgetExceeded(format!(
            "{axiom} needs about {work} evaluations, over {SIR_WORK}"
        )));
    }
    Ok(())
}

/// Checks the six axioms over all sets of size at most `max_set_size`, with
/// local equivalence.
pub fn check_sir_axioms(m: &Ambient, max_set_size: usize) -> Result<Vec<IndependenceReport>> {
    check_sir_axioms_with(m, max_set_size, SirOptions::default())
}

pub fn check_sir_axioms_with(
    m: &Ambient,
    max_set_size: usize,
    options: SirOptions,
) -> Result<Vec<IndependenceReport>> {
    let mode = options.equivalence;
    let mut k = Kernel::new(m, true)?;
    let n = k.pts.len();
    let subs = small_subsets(n, max_set_size);
    let masks: Vec<u128> = subs.iter().map(|s| k.mask(s)).collect();
    let s = masks.len() as u64;
    let mut out = Vec::new();

    if options.cross_validate {
        for (&a, &b, &c) in itertools::iproduct!(&masks, &masks, &masks) {
            let (sa, sb, sc) = (k.set(a), k.set(b), k.set(c));
            if k.indep(a, b, c) != indep_by_definition(&m.structure, &sa, &sb, &sc) {
                return Err(Error::InvariantViolation(format!(
                    "cross-edge and literal independence disagree on A={} B={} C={}",
                    set_string(&sa),
                    set_string(&sb),
                    set_string(&sc)
                )));
            }
        }
    }

    // Invariance
    guard(SirAxiom::Invariance, k.group.len() as u64 * s * s * s)?;
    let mut verdict = Verdict::Pass;
    let mut count = 0usize;
    'inv: for (gi, g) in k.group.iter().enumerate() {
        let moved: Vec<u128> = masks.iter().map(|&x| k.map_mask(g, x)).collect();
        for (ai, bi, ci) in itertools::iproduct!(0..masks.len(), 0..masks.len(), 0..masks.len()) {
            count += 1;
            if k.indep(masks[ai], masks[bi], masks[ci]) && !k.indep(moved[ai], moved[bi], moved[ci]) {
                verdict = Verdict::Refuted(Instance::Invariance {
                    a: k.set(masks[ai]),
                    b: k.set(masks[bi]),
                    c: k.set(masks[ci]),
                    f: m.group.elements()[gi].clone(),
                });
                break 'inv;
            }
        }
    }
    out.push(IndependenceReport {
        axiom: SirAxiom::Invariance,
        instances: count,
        verdict,
    });

    // Symmetry
    let mut verdict = Verdict::Pass;
    let mut count = 0usize;
    for (&a, &b, &c) in itertools::iproduct!(&masks, &masks, &masks) {
        count += 1;
        if k.indep(a, b, c) && !k.indep(b, a, c) {
            verdict = Verdict::Refuted(Instance::Symmetry {
                a: k.set(a),
                b: k.set(b),
                c: k.set(c),
            });
            break;
        }
    }
    out.push(IndependenceReport {
        axiom: SirAxiom::Symmetry,
        instances: count,
        verdict,
    });

    // Monotonicity
    guard(SirAxiom::Monotonicity, s * s * s * s)?;
    let mut verdict = Verdict::Pass;
    let mut count = 0usize;
    'mono: for (&a, &b, &c, &d) in itertools::iproduct!(&masks, &masks, &masks, &masks) {
        count += 1;
        if k.indep(a, b | d, c) && k.indep(a, b, c) && !k.indep(a, d, b | c) {
            verdict = Verdict::Refuted(Instance::Monotonicity {
                a: k.set(a),
                b: k.set(b),
                c: k.set(c),
                d: k.set(d),
            });
            break 'mono;
        }
    }
    out.push(IndependenceReport {
        axiom: SirAxiom::Monotonicity,
        instances: count,
        verdict,
    });

    // Existence
    let per = match mode {
        Equivalence::Local => (n as u64).pow(max_set_size as u32),
        Equivalence::Orbit => k.group.len() as u64,
    };
    guard(SirAxiom::Existence, s * s * s * per)?;
    let mut deficits = Vec::new();
    let mut refuted = None;
    let mut count = 0usize;
    let class = Class::new(m.structure.profile().clone());
    'exist: for (ai, &b, &c) in itertools::iproduct!(0..subs.len(), &masks, &masks) {
        count += 1;
        if k.exists(&subs[ai], b, c, mode) {
            continue;
        }
        let inst = Instance::Existence {
            a: k.tuple(&subs[ai]),
            b: k.set(b),
            c: k.set(c),
        };
        if repaired_by_free_copy(&class, &m.structure, &inst) {
            deficits.push(inst);
        } else {
            refuted = Some(inst);
            break 'exist;
        }
    }
    out.push(IndependenceReport {
        axiom: SirAxiom::Existence,
        instances: count,
        verdict: settle(deficits, refuted),
    });

    // Stationarity
    let tuples: Vec<Vec<Vec<usize>>> = (0..=max_set_size.min(n))
        .map(|j| (0..n).permutations(j).collect())
        .collect();
    let pairs: u64 = subs.iter().map(|a| tuples[a.len()].len() as u64).sum();
    guard(SirAxiom::Stationarity, pairs * s * s)?;
    let mut deficits = Vec::new();
    let mut refuted = None;
    let mut count = 0usize;
    'stat: for a in &subs {
        let am = k.mask(a);
        for a2 in &tuples[a.len()] {
            let a2m = k.mask(a2);
            for &c in &masks {
                if !k.equiv(a, a2, c, mode) {
                    count += masks.len();
                    continue;
                }
                for &b in &masks {
                    count += 1;
                    if !(k.indep(am, b, c) && k.indep(a2m, b, c)) || k.equiv(a, a2, b | c, mode) {
                        continue;
                    }
                    let inst = Instance::Stationarity {
                        a: k.tuple(a),
                        a2: k.tuple(a2),
                        b: k.set(b),
                        c: k.set(c),
                    };
                    // a failure of the group alone is repaired by homogeneity
                    if mode == Equivalence::Orbit && k.local_equiv(a, a2, b | c) {
                        deficits.push(inst);
                    } else {
                        refuted = Some(inst);
                        break 'stat;
                    }
                }
            }
        }
    }
    out.push(IndependenceReport {
        axiom: SirAxiom::Stationarity,
        instances: count,
        verdict: settle(deficits, refuted),
    });

    // Freeness
    guard(SirAxiom::Freeness, s * s * s << max_set_size)?;
    let mut verdict = Verdict::Pass;
    let mut count = 0usize;
    'free: for (&a, &b, &c) in itertools::iproduct!(&masks, &masks, &masks) {
        if !k.indep(a, b, c) {
            count += 1;
            continue;
        }
        let low = c & (a | b);
        let extra = c & !low;
        // every D with low ⊆ D ⊆ c
        let mut sub = extra;
        loop {
            count += 1;
            let d = low | sub;
            if !k.indep(a, b, d) {
                verdict = Verdict::Refuted(Instance::Freeness {
                    a: k.set(a),
                    b: k.set(b),
                    c: k.set(c),
                    d: k.set(d),
                });
                break 'free;
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & extra;
        }
    }
    out.push(IndependenceReport {
        axiom: SirAxiom::Freeness,
        instances: count,
        verdict,
    });
    Ok(out)
}

fn settle(deficits: Vec<Instance>, refuted: Option<Instance>) -> Verdict {
    match refuted {
        Some(i) => Verdict::Refuted(i),
        None if deficits.is_empty() => Verdict::Pass,
        None => Verdict::Deficit(deficits),
    }
}

// the free copy of A over B is in the class and independent from C
fn repaired_by_free_copy(class: &Class, s: &FinStructure, inst: &Instance) -> bool {
    let Instance::Existence { a, b, c } = inst else {
        return false;
    };
    let (grown, copy) = free_copy(s, a, b);
    let set: BTreeSet<Point> = copy.iter().copied().collect();
    let mut map: BTreeMap<Point, Point> = b.iter().map(|&p| (p, p)).collect();
    map.extend(a.iter().copied().zip(copy.iter().copied()));
    class.contains(&grown) && indep(&grown, &set, c, b) && PartialIso::new(&grown, &grown, map).is_ok()
}

/// The five components of `g = h1⁻¹ h2⁻¹ h4⁻¹ h3 h*`, products read as
/// composition of maps (rightmost first).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorizationWitness {
    pub a: BTreeSet<Point>,
    pub b: BTreeSet<Point>,
    pub g: Perm,
    pub h1: Perm,
    pub h2: Perm,
    pub h3: Perm,
    pub h4: Perm,
    pub hstar: Perm,
}

impl FactorizationWitness {
    /// `h1⁻¹ h2⁻¹ h4⁻¹ h3 h*` as a single permutation.
    pub fn product(&self) -> Perm {
        self.hstar
            .then(&self.h3)
            .then(&self.h4.inverse())
            .then(&self.h2.inverse())
            .then(&self.h1.inverse())
    }

    /// Memberships in `group` and its stabilizers, and the product.
    pub fn verify(&self, group: &PermGroup) -> bool {
        let fixes = |h: &Perm, s: &BTreeSet<Point>| group.contains(h) && s.iter().all(|&p| h.fixes(p));
        fixes(&self.h1, &self.a)
            && fixes(&self.h4, &self.a)
            && fixes(&self.hstar, &self.a)
            && fixes(&self.h2, &self.b)
            && fixes(&self.h3, &self.b)
            && self.product() == self.g
    }
}

impl fmt::Display for FactorizationWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "g = {}", self.g)?;
        writeln!(f, "h1 = {}", self.h1)?;
        writeln!(f, "h2 = {}", self.h2)?;
        writeln!(f, "h3 = {}", self.h3)?;
        writeln!(f, "h4 = {}", self.h4)?;
        writeln!(f, "h* = {}", self.hstar)?;
        write!(f, "g = h1^-1 h2^-1 h4^-1 h3 h*")
    }
}

fn step_failed(step: usize, what: &str, over: &str) -> Error {
    Error::StepFailed {
        step,
        reason: format!("saturation insufficient: {what}; needs one-point extensions over {over}"),
    }
}

/// Writes `g ∈ G_(A∩B)` as a product of elements of `G_(A)` and `G_(B)`,
/// choosing the least element at each step.
pub fn factorize(
    m: &Ambient,
    a: &BTreeSet<Point>,
    b: &BTreeSet<Point>,
    g: &Perm,
    acl: AclMode,
) -> Result<FactorizationWitness> {
    let a = acl_in(&m.group, a, acl);
    let b = acl_in(&m.group, b, acl);
    let s = &m.structure;
    if !m.group.contains(g) {
        return Err(Error::InvariantViolation(format!("{g} is not an automorphism")));
    }
    if let Some(p) = a.intersection(&b).find(|&&p| !g.fixes(p)) {
        return Err(Error::InvariantViolation(format!("{g} moves {p} of A ∩ B")));
    }
    let ga = m.group.pointwise_stab(&a);
    let gb = m.group.pointwise_stab(&b);
    let ab = set_string(&union(&a, &b));

    let h1 = ga
        .elements()
        .iter()
        .find(|h| indep(s, &image(&g.then(h), &a), &b, &a))
        .cloned()
        .ok_or_else(|| step_failed(1, "no h1 in G_(A) with h1g(A) independent from B over A", &ab))?;
    let to2 = g.then(&h1);
    let h2 = gb
        .elements()
        .iter()
        .find(|h| indep(s, &image(&to2.then(h), &a), &a, &b))
        .cloned()
        .ok_or_else(|| step_failed(2, "no h2 in G_(B) with h2h1g(A) independent from A over B", &ab))?;
    let h3 = gb
        .elements()
        .iter()
        .find(|h| indep(s, &image(h, &a), &a, &b))
        .cloned()
        .ok_or_else(|| step_failed(3, "no h3 in G_(B) with h3(A) independent from A over B", &ab))?;
    let to4 = to2.then(&h2);
    let h4 = ga
        .elements()
        .iter()
        .find(|h| a.iter().all(|&p| h.apply(to4.apply(p)) == h3.apply(p)))
        .cloned()
        .ok_or_else(|| step_failed(4, "no h4 in G_(A) with h4h2h1g = h3 on A", &ab))?;
    let hstar = to4.then(&h4).then(&h3.inverse());
    if !a.iter().all(|&p| hstar.fixes(p)) {
        return Err(Error::StepFailed {
            step: 5,
            reason: format!("h* = {hstar} does not fix A"),
        });
    }
    Ok(FactorizationWitness {
        a,
        b,
        g: g.clone(),
        h1,
        h2,
        h3,
        h4,
        hstar,
    })
}

/// Both sides of `G_(A∩B) = ⟨G_(A) ∪ G_(B)⟩` on a finite structure.
#[derive(Debug, Clone)]
pub struct StabilizerGeneration {
    pub a: BTreeSet<Point>,
    pub b: BTreeSet<Point>,
    pub lhs: PermGroup,
    pub rhs: PermGroup,
    pub equal: bool,
    /// The least element of the left side outside the right, on failure.
    pub missing: Option<Perm>,
    /// On success, one factorization attempt per coset of `G_(A)`.
    pub witnesses: Vec<(Perm, std::result::Result<FactorizationWitness, Error>)>,
}

pub fn check_stabilizer_generation(
    m: &Ambient,
    a: &BTreeSet<Point>,
    b: &BTreeSet<Point>,
    acl: AclMode,
) -> Result<StabilizerGeneration> {
    let a = acl_in(&m.group, a, acl);
    let b = acl_in(&m.group, b, acl);
    let meet: BTreeSet<Point> = a.intersection(&b).copied().collect();
    let lhs = m.group.pointwise_stab(&meet);
    let ga = m.group.pointwise_stab(&a);
    let rhs = m.group.join(&ga, &m.group.pointwise_stab(&b))?;
    let missing = lhs.elements().iter().find(|g| !rhs.contains(g)).cloned();
    let equal = missing.is_none() && lhs.order() == rhs.order();
    let mut witnesses = Vec::new();
    if equal {
        let mut covered: HashSet<Perm> = HashSet::new();
        for g in lhs.elements() {
            if covered.contains(g) {
                continue;
            }
            covered.extend(ga.elements().iter().map(|h| h.then(g)));
            witnesses.push((g.clone(), factorize(m, &a, &b, g, AclMode::ClassSemantics)));
        }
    }
    Ok(StabilizerGeneration {
        a,
        b,
        lhs,
        rhs,
        equal,
        missing,
        witnesses,
    })
}

/// The least support of `H` below `A`, and whether `H` stabilizes it setwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Support {
    pub base: BTreeSet<Point>,
    pub below_setwise: bool,
}

/// The unique minimal closed `B ⊆ A` with `G_(B) ≤ H`.
pub fn smallest_support(g: &PermGroup, h: &PermGroup, a: &BTreeSet<Point>, acl: AclMode) -> Result<Support> {
    if !h.is_subgroup_of(g) {
        return Err(Error::InvariantViolation("H is not a subgroup of G".into()));
    }
    if !g.pointwise_stab(a).is_subgroup_of(h) {
        return Err(Error::NotAboveStabilizer);
    }
    let pts: Vec<Point> = a.iter().copied().collect();
    let closed: Vec<BTreeSet<Point>> = (0..=pts.len())
        .flat_map(|j| pts.iter().copied().combinations(j))
        .map(|c| c.into_iter().collect::<BTreeSet<Point>>())
        .filter(|c| &acl_in(g, c, acl) == c)
        .collect();
    for (x, y) in closed.iter().tuple_combinations() {
        let meet: BTreeSet<Point> = x.intersection(y).copied().collect();
        let join = g.join(&g.pointwise_stab(x), &g.pointwise_stab(y))?;
        if join != g.pointwise_stab(&meet) {
            return Err(Error::LatticeViolation(x.clone(), y.clone()));
        }
    }
    let good: Vec<&BTreeSet<Point>> = closed
        .iter()
        .filter(|c| g.pointwise_stab(c).is_subgroup_of(h))
        .collect();
    let minimal: Vec<&BTreeSet<Point>> = good
        .iter()
        .copied()
        .filter(|c| !good.iter().any(|d| d != c && d.is_subset(c)))
        .collect();
    match minimal.as_slice() {
        [] => Err(Error::NotAboveStabilizer),
        [b] => Ok(Support {
            base: (*b).clone(),
            below_setwise: h.is_subgroup_of(&g.setwise_stab(b)),
        }),
        [x, y, ..] => Err(Error::LatticeViolation((*x).clone(), (*y).clone())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signature::EtaZetaProfile;

    fn set(v: &[Point]) -> BTreeSet<Point> {
        v.iter().copied().collect()
    }

    fn edgeless(n: usize) -> Ambient {
        Ambient::new(FinStructure::edgeless(EtaZetaProfile::random_graph(), n)).unwrap()
    }

    fn c5() -> Ambient {
        Ambient::new(FinStructure::graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap()).unwrap()
    }

    #[test]
    fn path_and_triangle() {
        let p = FinStructure::graph(3, &[(0, 1), (1, 2)]).unwrap();
        let t = FinStructure::graph(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert!(indep(&p, &set(&[0]), &set(&[2]), &set(&[1])));
        assert!(!indep(&t, &set(&[0]), &set(&[2]), &set(&[1])));
        assert!(indep_by_definition(&p, &set(&[0]), &set(&[2]), &set(&[1])));
        assert!(!indep_by_definition(&t, &set(&[0]), &set(&[2]), &set(&[1])));
    }

    #[test]
    fn overlap_outside_the_base_is_dependent() {
        let e = FinStructure::edgeless(EtaZetaProfile::random_graph(), 3);
        assert!(!indep(&e, &set(&[0, 1]), &set(&[1, 2]), &set(&[])));
        assert!(indep(&e, &set(&[0, 1]), &set(&[1, 2]), &set(&[1])));
        assert!(!indep_by_definition(&e, &set(&[0, 1]), &set(&[1, 2]), &set(&[])));
    }

    #[test]
    fn c5_axioms_with_cross_validation() {
        let options = SirOptions {
            equivalence: Equivalence::Local,
            cross_validate: true,
        };
        let reports = check_sir_axioms_with(&c5(), 2, options).unwrap();
        assert_eq!(reports.len(), 6);
        for r in &reports {
            assert!(!r.refuted(), "{}", r.axiom);
        }
    }

    #[test]
    fn single_edge_existence_is_a_deficit() {
        let m = Ambient::new(FinStructure::graph(2, &[(0, 1)]).unwrap()).unwrap();
        let reports = check_sir_axioms(&m, 1).unwrap();
        let ex = reports.iter().find(|r| r.axiom == SirAxiom::Existence).unwrap();
        let Verdict::Deficit(list) = &ex.verdict else {
            panic!("expected a deficit, got {:?}", ex.verdict);
        };
        for inst in list {
            assert!(!inst.holds(&m, Equivalence::Local));
        }
        // A = {0} over B = {} needs a point independent from C = {1}
        assert!(list.contains(&Instance::Existence {
            a: vec![0],
            b: set(&[]),
            c: set(&[1]),
        }));
    }

    #[test]
    fn existence_with_a_inside_b_is_trivial() {
        let m = c5();
        let w = existence_witness(&m, &[1, 2], &set(&[1, 2, 3]), &set(&[0, 4]), Equivalence::Orbit, None).unwrap();
        assert_eq!(w.image, vec![1, 2]);
        assert_eq!(w.witness, EquivWitness::Automorphism(Perm::identity(5)));
    }

    #[test]
    fn existence_grows_a_free_copy() {
        let m = Ambient::new(FinStructure::graph(2, &[(0, 1)]).unwrap()).unwrap();
        assert!(existence_witness(&m, &[0], &set(&[]), &set(&[1]), Equivalence::Local, None).is_err());
        let w = existence_witness(&m, &[0], &set(&[]), &set(&[1]), Equivalence::Local, Some(0)).unwrap();
        let grown = w.grown.unwrap();
        assert_eq!(grown.len(), 3);
        assert!(indep(&grown, &set(&w.image), &set(&[1]), &set(&[])));
    }

    #[test]
    fn factorization_of_a_transposition() {
        let m = edgeless(4);
        let g = Perm::parse(4, "(2 3)").unwrap();
        let w = factorize(&m, &set(&[0, 1]), &set(&[1, 2]), &g, AclMode::ClassSemantics).unwrap();
        assert!(w.verify(&m.group));
        assert_eq!(w.product(), g);
    }

    #[test]
    fn nested_sets_factor_trivially() {
        let m = c5();
        let id = Perm::identity(5);
        let w = factorize(&m, &set(&[0]), &set(&[0, 1]), &id, AclMode::ClassSemantics).unwrap();
        for h in [&w.h1, &w.h2, &w.h3, &w.h4, &w.hstar] {
            assert!(h.is_identity());
        }
    }

    #[test]
    fn unsaturated_structure_fails_a_step() {
        let m = Ambient::new(FinStructure::graph(2, &[(0, 1)]).unwrap()).unwrap();
        let id = Perm::identity(2);
        let err = factorize(&m, &set(&[0]), &set(&[1]), &id, AclMode::ClassSemantics).unwrap_err();
        assert!(matches!(err, Error::StepFailed { step: 2, .. }));
        assert!(err.is_insufficiency());
    }

    #[test]
    fn factorization_rejects_elements_moving_the_meet() {
        let m = edgeless(4);
        let g = Perm::parse(4, "(1 2)").unwrap();
        assert!(factorize(&m, &set(&[0, 1]), &set(&[1, 2]), &g, AclMode::ClassSemantics).is_err());
    }

    #[test]
    fn generation_on_sym4() {
        let m = edgeless(4);
        let r = check_stabilizer_generation(&m, &set(&[0, 1]), &set(&[1, 2]), AclMode::ClassSemantics).unwrap();
        assert!(r.equal);
        assert_eq!(r.lhs.order(), 6);
        assert!(r.witnesses.iter().all(|(g, w)| w.as_ref().is_ok_and(|w| &w.g == g && w.verify(&m.group))));
    }

    #[test]
    fn generation_fails_when_a_stabilizer_is_trivial() {
        // G_({0,1}) is trivial in Sym(3), so the right side is G_({2})
        let m = edgeless(3);
        let r = check_stabilizer_generation(&m, &set(&[0, 1]), &set(&[2]), AclMode::ClassSemantics).unwrap();
        assert!(!r.equal);
        assert_eq!(r.rhs.order(), 2);
        assert!(r.missing.is_some());
    }

    #[test]
    fn supports_in_sym4() {
        let g = edgeless(4).group;
        assert_eq!(
            smallest_support(&g, &g, &set(&[0, 1]), AclMode::ClassSemantics).unwrap().base,
            set(&[])
        );
        let h = g.pointwise_stab(&set(&[0]));
        let s = smallest_support(&g, &h, &set(&[0, 1]), AclMode::ClassSemantics).unwrap();
        assert_eq!(s.base, set(&[0]));
        assert!(s.below_setwise);
        let h = g.setwise_stab(&set(&[0, 1]));
        let s = smallest_support(&g, &h, &set(&[0, 1]), AclMode::ClassSemantics).unwrap();
        assert_eq!(s.base, set(&[0, 1]));
        assert!(s.below_setwise);
    }

    #[test]
    fn support_needs_a_stabilizer_below() {
        let g = edgeless(4).group;
        let h = g.pointwise_stab(&set(&[2, 3]));
        assert_eq!(
            smallest_support(&g, &h, &set(&[0, 1]), AclMode::ClassSemantics),
            Err(Error::NotAboveStabilizer)
        );
    }
}
