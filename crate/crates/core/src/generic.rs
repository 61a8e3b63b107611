//! Finite approximations of Fraïssé limits by one-point extension axioms.
//!
//! An extension type over a base `A = a_0 < ... < a_{j-1}` records, for each
//! arity n of the profile in ascending order and each (n-1)-subset of `A` in
//! lexicographic order of indices, whether that subset plus the new point is
//! an edge. Bit i of the mask is the i-th such subset.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::finstruct::{canonical_key, first_embedding, induced, Class, FinStructure, PartialIso};
use crate::permgroup::automorphisms;
use crate::Point;

pub const DEFAULT_LEVEL: usize = 3;
pub const DEFAULT_POINT_BUDGET: usize = 512;
/// Largest size tried by the exact minimal search.
pub const EXACT_SEARCH_LIMIT: usize = 12;
/// Children examined by the exact search before it gives up.
pub const EXACT_SEARCH_WORK: usize = 4_000_000;
/// Largest order tried by the circulant search.
pub const CIRCULANT_LIMIT: usize = 40;
/// Orbit unions examined by the circulant search before it gives up.
pub const CIRCULANT_WORK: usize = 400_000;

/// An axiom instance `(A, t)`: some point outside `A` must have type `t`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExtensionFailure {
    pub base: Vec<Point>,
    pub ext_type: u64,
    pub width: usize,
}

impl fmt::Display for ExtensionFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "no point realizes type {} over {{{}}}",
            type_string(self.ext_type, self.width),
            self.base.iter().join(",")
        )
    }
}

fn type_string(t: u64, width: usize) -> String {
    if width == 0 {
        return "-".into();
    }
    (0..width)
        .map(|i| if t >> i & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// A structure satisfying every one-point extension axiom up to `level`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenericApproximation {
    pub structure: FinStructure,
    pub level: usize,
    /// `(base, type, witness)` for every axiom instance.
    pub certificate: Vec<(Vec<Point>, u64, Point)>,
}

/// Number of type bits over a base of `j` points.
pub fn type_width(class: &Class, j: usize) -> usize {
    class
        .profile
        .arities()
        .map(|n| (0..j).combinations(n - 1).count())
        .sum()
}

/// The type of `x` over the sorted `base`.
pub fn ext_type(s: &FinStructure, base: &[Point], x: Point) -> u64 {
    let mut bits = 0u64;
    let mut i = 0;
    let mut buf = Vec::new();
    for n in s.profile().arities() {
        for sub in base.iter().copied().combinations(n - 1) {
            buf.clear();
            buf.extend_from_slice(&sub);
            buf.push(x);
            if s.has_edge(&buf) {
                bits |= 1 << i;
            }
            i += 1;
        }
    }
    bits
}

/// Adds `x` to `s` with type `t` over the sorted `base`.
fn apply_type(s: &mut FinStructure, base: &[Point], x: Point, t: u64) {
    s.add_point(x);
    let mut i = 0;
    let arities: Vec<usize> = s.profile().arities().collect();
    for n in arities {
        for mut sub in base.iter().copied().combinations(n - 1) {
            if t >> i & 1 == 1 {
                sub.push(x);
                s.add_edge(&sub).expect("tuple over known points");
            }
            i += 1;
        }
    }
}

/// Consistent types over bases, cached by the base's internal pattern.
#[derive(Default)]
struct TypeCache {
    table: HashMap<(usize, u64), Vec<u64>>,
}

// bit i: the i-th subset of the base, by arity then lexicographic order
fn base_pattern(s: &FinStructure, base: &[Point]) -> u64 {
    let mut bits = 0u64;
    let mut i = 0;
    for n in s.profile().arities() {
        for sub in base.iter().copied().combinations(n) {
            if s.has_edge(&sub) {
                bits |= 1 << i;
            }
            i += 1;
        }
    }
    bits
}

impl TypeCache {
    fn consistent(&mut self, class: &Class, s: &FinStructure, base: &[Point]) -> &[u64] {
        let key = (base.len(), base_pattern(s, base));
        self.table.entry(key).or_insert_with(|| {
            let set: BTreeSet<Point> = base.iter().copied().collect();
            let compact = induced(s, &set).expect("base inside s").compact();
            let j = compact.len();
            let width = type_width(class, j);
            let idx: Vec<Point> = (0..j).collect();
            (0..1u64 << width)
                .filter(|&t| {
                    let mut b = compact.clone();
                    apply_type(&mut b, &idx, j, t);
                    class.contains(&b)
                })
                .collect()
        })
    }
}

fn bases(s: &FinStructure, k: usize) -> Vec<Vec<Point>> {
    let pts: Vec<Point> = s.points().iter().copied().collect();
    (0..k.min(pts.len() + 1))
        .flat_map(|j| pts.iter().copied().combinations(j).collect::<Vec<_>>())
        .collect()
}

/// Unsatisfied one-point axioms of `s` at level `k`, for its profile's class.
pub fn check_extension_axioms(s: &FinStructure, k: usize) -> Vec<ExtensionFailure> {
    check_extension_axioms_in(&Class::new(s.profile().clone()), s, k)
}

/// Unsatisfied axioms `(A, t)` with `|A| + 1 <= k`, ordered by
/// `(|A|, A, t)`.
pub fn check_extension_axioms_in(class: &Class, s: &FinStructure, k: usize) -> Vec<ExtensionFailure> {
    let mut cache = TypeCache::default();
    let mut out = Vec::new();
    for base in bases(s, k) {
        out.extend(failures_over(class, s, &base, &mut cache));
    }
    out
}

fn failures_over(
    class: &Class,
    s: &FinStructure,
    base: &[Point],
    cache: &mut TypeCache,
) -> Vec<ExtensionFailure> {
    let realized: HashSet<u64> = s
        .points()
        .iter()
        .filter(|p| !base.contains(p))
        .map(|&x| ext_type(s, base, x))
        .collect();
    let width = type_width(class, base.len());
    cache
        .consistent(class, s, base)
        .iter()
        .filter(|t| !realized.contains(t))
        .map(|&t| ExtensionFailure {
            base: base.to_vec(),
            ext_type: t,
            width,
        })
        .collect()
}

fn certificate(s: &FinStructure, k: usize, class: &Class) -> Vec<(Vec<Point>, u64, Point)> {
    let mut cache = TypeCache::default();
    let mut out = Vec::new();
    for base in bases(s, k) {
        for &t in cache.consistent(class, s, &base) {
            let w = s
                .points()
                .iter()
                .copied()
                .find(|&x| !base.contains(&x) && ext_type(s, &base, x) == t)
                .expect("saturated structure realizes every type");
            out.push((base.clone(), t, w));
        }
    }
    out
}

/// Saturates `seed` to level `k` in the class of `profile`.
pub fn saturate(
    profile: &crate::signature::EtaZetaProfile,
    k: usize,
    seed: Option<&FinStructure>,
    point_budget: usize,
) -> Result<GenericApproximation> {
    saturate_in(&Class::new(profile.clone()), k, seed, point_budget)
}

/// Saturation in an arbitrary hereditary class.
///
/// Strategies, in order: an exact search for a smallest extension of the
/// seed (preferring the largest automorphism group, then generation order);
/// the first Z_n-invariant structure at the level that the seed embeds into;
/// and greedy addition of points one failed axiom at a time.
pub fn saturate_in(
    class: &Class,
    k: usize,
    seed: Option<&FinStructure>,
    point_budget: usize,
) -> Result<GenericApproximation> {
    let seed = seed
        .cloned()
        .unwrap_or_else(|| FinStructure::edgeless(class.profile.clone(), 0));
    if seed.profile() != &class.profile {
        return Err(Error::ProfileMismatch);
    }
    if !class.contains(&seed) {
        return Err(Error::InvariantViolation("seed is not in the class".into()));
    }
    let structure = match minimal_search(class, k, &seed, point_budget.min(EXACT_SEARCH_LIMIT)) {
        Some(s) => s,
        None => match circulant_search(class, k, &seed, point_budget.min(CIRCULANT_LIMIT)) {
            Some(s) => s,
            None => greedy(class, k, seed, point_budget)?,
        },
    };
    debug_assert!(check_extension_axioms_in(class, &structure, k).is_empty());
    Ok(GenericApproximation {
        certificate: certificate(&structure, k, class),
        structure,
        level: k,
    })
}

fn smallest_unused(s: &FinStructure) -> Point {
    (0..).find(|p| !s.points().contains(p)).expect("unbounded")
}

// every base needs its unrealized types covered by the remaining points
fn within_bound(class: &Class, s: &FinStructure, k: usize, remaining: usize, cache: &mut TypeCache) -> bool {
    bases(s, k)
        .iter()
        .all(|b| failures_over(class, s, b, cache).len() <= remaining)
}

fn minimal_search(class: &Class, k: usize, seed: &FinStructure, limit: usize) -> Option<FinStructure> {
    let mut cache = TypeCache::default();
    let seed_pts: Vec<Point> = seed.points().iter().copied().collect();
    let mut work = 0usize;
    for target in seed.len().max(1)..=limit {
        if !within_bound(class, seed, k, target - seed.len(), &mut cache) {
            continue;
        }
        let mut level = vec![seed.clone()];
        for m in seed.len()..target {
            let remaining = target - m - 1;
            let mut seen = HashSet::new();
            let mut next = Vec::new();
            for s in &level {
                let x = smallest_unused(s);
                let old: Vec<Point> = s.points().iter().copied().collect();
                let candidates: Vec<Vec<Point>> = class
                    .profile
                    .arities()
                    .flat_map(|n| old.iter().copied().combinations(n - 1).collect::<Vec<_>>())
                    .collect();
                if candidates.len() > 20 {
                    return None;
                }
                for mask in 0u64..1 << candidates.len() {
                    work += 1;
                    if work > EXACT_SEARCH_WORK {
                        return None;
                    }
                    let mut child = s.clone();
                    child.add_point(x);
                    for (i, c) in candidates.iter().enumerate() {
                        if mask >> i & 1 == 1 {
                            let mut t = c.clone();
                            t.push(x);
                            child.add_edge(&t).expect("valid tuple");
                        }
                    }
                    if !class.contains(&child) || !within_bound(class, &child, k, remaining, &mut cache) {
                        continue;
                    }
                    if seen.insert(canonical_key(&child, &seed_pts)) {
                        next.push(child);
                    }
                }
            }
            level = next;
            if level.is_empty() {
                break;
            }
        }
        if level.is_empty() || level[0].len() != target {
            continue;
        }
        // largest automorphism group, then generation order
        let mut best: Option<(usize, FinStructure)> = None;
        for s in level {
            let order = automorphisms(&s).map(|g| g.order()).unwrap_or(0);
            if best.as_ref().is_none_or(|(o, _)| order > *o) {
                best = Some((order, s));
            }
        }
        return best.map(|(_, s)| s);
    }
    None
}

// least rotation of each r-subset of Z_n, in ascending order
fn rotation_orbits(n: usize, r: usize) -> Vec<Vec<Point>> {
    let mut reps = BTreeSet::new();
    for sub in (0..n).combinations(r) {
        let least = (0..n)
            .map(|d| {
                let mut t: Vec<Point> = sub.iter().map(|&p| (p + d) % n).collect();
                t.sort_unstable();
                t
            })
            .min()
            .expect("n > 0");
        reps.insert(least);
    }
    reps.into_iter().collect()
}

// translation invariance reduces the bases to those containing 0
fn transitive_level_holds(class: &Class, s: &FinStructure, k: usize, cache: &mut TypeCache) -> bool {
    let others: Vec<Point> = s.points().iter().copied().filter(|&p| p != 0).collect();
    (0..k.min(s.len() + 1)).all(|j| {
        let bases: Vec<Vec<Point>> = if j == 0 {
            vec![Vec::new()]
        } else {
            others
                .iter()
                .copied()
                .combinations(j - 1)
                .map(|mut b| {
                    b.insert(0, 0);
                    b
                })
                .collect()
        };
        bases.iter().all(|b| failures_over(class, s, b, cache).is_empty())
    })
}

fn circulant_search(class: &Class, k: usize, seed: &FinStructure, limit: usize) -> Option<FinStructure> {
    let mut cache = TypeCache::default();
    let mut work = 0usize;
    for n in seed.len().max(1)..=limit {
        let orbits: Vec<Vec<Point>> = class
            .profile
            .arities()
            .flat_map(|r| rotation_orbits(n, r))
            .collect();
        if work + (1usize << orbits.len().min(40)) > CIRCULANT_WORK {
            return None;
        }
        for mask in 0u64..1 << orbits.len() {
            work += 1;
            let mut s = FinStructure::edgeless(class.profile.clone(), n);
            for (i, o) in orbits.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    for d in 0..n {
                        let t: Vec<Point> = o.iter().map(|&p| (p + d) % n).collect();
                        s.add_edge(&t).expect("valid tuple");
                    }
                }
            }
            if !class.contains(&s) || !transitive_level_holds(class, &s, k, &mut cache) {
                continue;
            }
            let Some(e) = first_embedding(seed, &s) else {
                continue;
            };
            // seed points keep their labels, the rest follow in order
            let inv: HashMap<Point, Point> = e.map().iter().map(|(&a, &b)| (b, a)).collect();
            let mut next = seed.points().iter().next_back().map_or(0, |&m| m + 1);
            let mut label = vec![0; n];
            for (p, l) in label.iter_mut().enumerate() {
                *l = match inv.get(&p) {
                    Some(&q) => q,
                    None => {
                        next += 1;
                        next - 1
                    }
                };
            }
            return Some(s.relabel(|p| label[p]));
        }
    }
    None
}

/// Per (n-1)-subset `S`, the points `y` with `S ∪ {y}` an edge.
#[derive(Default)]
struct Links {
    map: HashMap<Vec<Point>, Vec<u64>>,
}

impl Links {
    fn new(s: &FinStructure) -> Self {
        let mut l = Links::default();
        for t in s.all_edges() {
            l.add_edge(t);
        }
        l
    }

    fn add_edge(&mut self, t: &[Point]) {
        for (i, &y) in t.iter().enumerate() {
            let mut sub = t.to_vec();
            sub.remove(i);
            sub.sort_unstable();
            let bits = self.map.entry(sub).or_default();
            if bits.len() <= y / 64 {
                bits.resize(y / 64 + 1, 0);
            }
            bits[y / 64] |= 1 << (y % 64);
        }
    }

    fn get(&self, sub: &[Point]) -> Option<&[u64]> {
        self.map.get(sub).map(Vec::as_slice)
    }

    fn has(&self, sub: &[Point], y: Point) -> bool {
        self.get(sub).is_some_and(|b| bit(b, y))
    }
}

fn bit(b: &[u64], y: Point) -> bool {
    b.get(y / 64).is_some_and(|w| w >> (y % 64) & 1 == 1)
}

fn subs_of(class: &Class, base: &[Point]) -> Vec<Vec<Point>> {
    class
        .profile
        .arities()
        .flat_map(|n| base.iter().copied().combinations(n - 1).collect::<Vec<_>>())
        .collect()
}

fn failures_fast(
    class: &Class,
    s: &FinStructure,
    links: &Links,
    base: &[Point],
    cache: &mut TypeCache,
) -> Vec<ExtensionFailure> {
    let subs = subs_of(class, base);
    let sets: Vec<Option<&[u64]>> = subs.iter().map(|sub| links.get(sub)).collect();
    let mut realized = HashSet::new();
    for &y in s.points() {
        if base.contains(&y) {
            continue;
        }
        let mut t = 0u64;
        for (i, set) in sets.iter().enumerate() {
            if set.is_some_and(|b| bit(b, y)) {
                t |= 1 << i;
            }
        }
        realized.insert(t);
    }
    let width = subs.len();
    cache
        .consistent(class, s, base)
        .iter()
        .filter(|t| !realized.contains(t))
        .map(|&t| ExtensionFailure {
            base: base.to_vec(),
            ext_type: t,
            width,
        })
        .collect()
}

// adding `t` would complete a forbidden configuration or pattern
fn would_violate(class: &Class, s: &FinStructure, links: &Links, t: &[Point]) -> bool {
    if !class.forbidden.is_empty() {
        let mut with = s.clone();
        with.add_edge(t).expect("valid tuple");
        return !class.contains(&with);
    }
    let n = t.len();
    let Some(z) = class.profile.forbidden_clique(n) else {
        return false;
    };
    let mut key = t.to_vec();
    key.sort_unstable();
    // c joins the clique iff every (n-1)-subset of the current set plus c
    // is an edge; subsets inside `key` count `key` itself as an edge
    let is_edge = |sub: &[Point], c: Point| {
        let mut e = sub.to_vec();
        e.push(c);
        e.sort_unstable();
        e == key || links.has(sub, c)
    };
    let candidates: Vec<Point> = s
        .points()
        .iter()
        .copied()
        .filter(|c| !key.contains(c))
        .filter(|&c| key.iter().copied().combinations(n - 1).all(|sub| is_edge(&sub, c)))
        .collect();
    fn grow(
        chosen: &mut Vec<Point>,
        need: usize,
        cands: &[Point],
        from: usize,
        n: usize,
        is_edge: &dyn Fn(&[Point], Point) -> bool,
    ) -> bool {
        if need == 0 {
            return true;
        }
        for i in from..cands.len() {
            let c = cands[i];
            if chosen.iter().copied().combinations(n - 1).all(|sub| is_edge(&sub, c)) {
                chosen.push(c);
                if grow(chosen, need - 1, cands, i + 1, n, is_edge) {
                    return true;
                }
                chosen.pop();
            }
        }
        false
    }
    let mut chosen = key.clone();
    grow(&mut chosen, z - n, &candidates, 0, n, &is_edge)
}

// fixed 64-bit mix; used only to break exact ties
fn tie_bit(x: Point, sub: &[Point]) -> bool {
    let mut h: u64 = 0x9e37_79b9_7f4a_7c15 ^ x as u64;
    for &p in sub {
        h = (h ^ p as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h ^= h >> 31;
    }
    h = h.wrapping_mul(0x94d0_49bb_1331_11eb);
    (h ^ (h >> 29)) & 1 == 1
}

fn greedy(class: &Class, k: usize, mut s: FinStructure, point_budget: usize) -> Result<FinStructure> {
    let mut cache = TypeCache::default();
    let mut links = Links::new(&s);
    let mut failures: BTreeSet<ExtensionFailure> = BTreeSet::new();
    for b in bases(&s, k) {
        failures.extend(failures_fast(class, &s, &links, &b, &mut cache));
    }
    while let Some(first) = failures.iter().next().cloned() {
        if s.len() >= point_budget {
            return Err(Error::BudgetExceeded(format!(
                "{} points reached with {} axiom instances open, first: {first}",
                s.len(),
                failures.len()
            )));
        }
        let x = smallest_unused(&s);
        add_greedy_point(class, &mut s, &mut links, x, &first, &failures);
        failures.retain(|f| {
            let t: u64 = subs_of(class, &f.base)
                .iter()
                .enumerate()
                .filter(|(_, sub)| links.has(sub, x))
                .map(|(i, _)| 1u64 << i)
                .sum();
            t != f.ext_type
        });
        let pts: Vec<Point> = s.points().iter().copied().filter(|&p| p != x).collect();
        for j in 0..k.saturating_sub(1) {
            for mut rest in pts.iter().copied().combinations(j) {
                rest.push(x);
                rest.sort_unstable();
                failures.extend(failures_fast(class, &s, &links, &rest, &mut cache));
            }
        }
    }
    Ok(s)
}

// The new point realizes `first`. Every other incident tuple is decided by
// conditional expectation of the number of open instances realized, ties by
// a fixed hash, and never against the class.
fn add_greedy_point(
    class: &Class,
    s: &mut FinStructure,
    links: &mut Links,
    x: Point,
    first: &ExtensionFailure,
    open: &BTreeSet<ExtensionFailure>,
) {
    s.add_point(x);
    for (i, mut sub) in subs_of(class, &first.base).into_iter().enumerate() {
        if first.ext_type >> i & 1 == 1 {
            sub.push(x);
            s.add_edge(&sub).expect("tuple over known points");
            links.add_edge(&sub);
        }
    }
    let fixed: HashSet<Vec<Point>> = subs_of(class, &first.base).into_iter().collect();
    let old: Vec<Point> = s.points().iter().copied().filter(|&p| p != x).collect();
    let free: Vec<Vec<Point>> = class
        .profile
        .arities()
        .flat_map(|n| old.iter().copied().combinations(n - 1).collect::<Vec<_>>())
        .filter(|sub| !fixed.contains(sub))
        .collect();
    // per open instance: still realizable, and number of undecided bits
    let open: Vec<&ExtensionFailure> = open.iter().collect();
    let mut alive = vec![true; open.len()];
    let mut undecided = vec![0i32; open.len()];
    let mut index: HashMap<Vec<Point>, Vec<(usize, bool)>> = HashMap::new();
    for (fi, f) in open.iter().enumerate() {
        for (i, sub) in subs_of(class, &f.base).into_iter().enumerate() {
            let want = f.ext_type >> i & 1 == 1;
            if fixed.contains(&sub) {
                if links.has(&sub, x) != want {
                    alive[fi] = false;
                }
            } else {
                undecided[fi] += 1;
                index.entry(sub).or_default().push((fi, want));
            }
        }
    }
    // strongest preferences first, so they are not blocked by weaker ones
    let weight = |sub: &Vec<Point>| -> (f64, f64) {
        let mut on = 0.0f64;
        let mut off = 0.0f64;
        for &(fi, want) in index.get(sub).map(Vec::as_slice).unwrap_or(&[]) {
            let w = 0.5f64.powi(undecided[fi]);
            if want {
                on += w;
            } else {
                off += w;
            }
        }
        (on, off)
    };
    let mut order: Vec<(f64, usize)> = free
        .iter()
        .enumerate()
        .map(|(i, sub)| {
            let (on, off) = weight(sub);
            (-(on - off).abs(), i)
        })
        .collect();
    order.sort_by(|a, b| a.partial_cmp(b).expect("finite weights"));
    for (_, i) in order {
        let sub = &free[i];
        let mut on = 0.0f64;
        let mut off = 0.0f64;
        let touching = index.remove(sub).unwrap_or_default();
        for &(fi, want) in &touching {
            if alive[fi] {
                let w = 0.5f64.powi(undecided[fi]);
                if want {
                    on += w;
                } else {
                    off += w;
                }
            }
        }
        let mut t = sub.clone();
        t.push(x);
        let prefer = if on == off { tie_bit(x, sub) } else { on > off };
        let take = prefer && !would_violate(class, s, links, &t);
        if take {
            s.add_edge(&t).expect("valid tuple");
            links.add_edge(&t);
        }
        for &(fi, want) in &touching {
            undecided[fi] -= 1;
            if want != take {
                alive[fi] = false;
            }
        }
    }
}

/// Extends `p` forth so that its domain covers `targets`, inside `m`.
///
/// Targets are added in ascending order; images are tried in ascending
/// order with backtracking.
pub fn extend_partial_iso(
    m: &GenericApproximation,
    p: &PartialIso,
    targets: &BTreeSet<Point>,
) -> Result<PartialIso> {
    let s = &m.structure;
    if !p.is_isomorphism_between(s, s) {
        return Err(Error::InvariantViolation(
            "map is not a partial isomorphism of the structure".into(),
        ));
    }
    let todo: Vec<Point> = targets
        .iter()
        .copied()
        .filter(|t| p.get(*t).is_none())
        .collect();
    if let Some(&t) = todo.iter().find(|t| !s.points().contains(t)) {
        return Err(Error::UnknownPoint(t));
    }
    let mut deepest: Option<(usize, String)> = None;
    let mut current = p.clone();
    if forth(s, &mut current, &todo, 0, &mut deepest) {
        return Ok(current);
    }
    let (_, msg) = deepest.expect("a failing step was recorded");
    Err(Error::SaturationInsufficient(msg))
}

fn forth(
    s: &FinStructure,
    current: &mut PartialIso,
    todo: &[Point],
    i: usize,
    deepest: &mut Option<(usize, String)>,
) -> bool {
    if i == todo.len() {
        return true;
    }
    let t = todo[i];
    let dom: Vec<Point> = current.domain().into_iter().collect();
    let img: Vec<Point> = dom.iter().map(|&d| current.get(d).expect("in domain")).collect();
    let used = current.image();
    let mut any = false;
    for &y in s.points() {
        if used.contains(&y) {
            continue;
        }
        current.insert(t, y);
        if current.is_isomorphism_between(s, s) {
            any = true;
            if forth(s, current, todo, i + 1, deepest) {
                return true;
            }
        }
        current.remove(t);
    }
    if !any && deepest.as_ref().is_none_or(|(d, _)| i >= *d) {
        let mut sorted_img = img.clone();
        sorted_img.sort_unstable();
        let base_ty = ext_type_over_list(s, &dom, t);
        *deepest = Some((
            i,
            format!(
                "no point outside {{{}}} has the type of {t} over {{{}}} carried to {{{}}} (one-point extension axiom over {} points, type {base_ty})",
                img.iter().join(","),
                dom.iter().join(","),
                img.iter().join(","),
                dom.len()
            ),
        ));
    }
    false
}

fn ext_type_over_list(s: &FinStructure, base: &[Point], x: Point) -> String {
    let mut sorted = base.to_vec();
    sorted.sort_unstable();
    let width: usize = s
        .profile()
        .arities()
        .map(|n| (0..sorted.len()).combinations(n - 1).count())
        .sum();
    type_string(ext_type(s, &sorted, x), width)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signature::EtaZetaProfile;

    fn c5() -> FinStructure {
        FinStructure::graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap()
    }

    fn approx(s: FinStructure) -> GenericApproximation {
        GenericApproximation {
            structure: s,
            level: 0,
            certificate: Vec::new(),
        }
    }

    #[test]
    fn single_edge_lacks_non_neighbours() {
        let e = FinStructure::graph(2, &[(0, 1)]).unwrap();
        assert!(!check_extension_axioms(&e, 2).is_empty());
    }

    #[test]
    fn c5_satisfies_level_two() {
        assert!(check_extension_axioms(&c5(), 2).is_empty());
        assert!(!check_extension_axioms(&c5(), 3).is_empty());
    }

    #[test]
    fn level_one_is_nonempty() {
        for p in [EtaZetaProfile::random_graph(), EtaZetaProfile::henson(3).unwrap()] {
            let m = saturate(&p, 1, None, 64).unwrap();
            assert_eq!(m.structure.len(), 1);
        }
    }

    #[test]
    fn random_graph_level_two() {
        let m = saturate(&EtaZetaProfile::random_graph(), 2, None, 64).unwrap();
        assert!(check_extension_axioms(&m.structure, 2).is_empty());
        assert_eq!(m.structure.len(), 4);
    }

    #[test]
    fn triangle_free_level_two() {
        let p = EtaZetaProfile::henson(3).unwrap();
        let m = saturate(&p, 2, None, 256).unwrap();
        assert!(crate::finstruct::is_in_class(&m.structure));
        assert!(check_extension_axioms(&m.structure, 2).is_empty());
    }

    #[test]
    fn greedy_phase_saturates() {
        let class = Class::new(EtaZetaProfile::random_graph());
        let s = greedy(&class, 3, FinStructure::edgeless(class.profile.clone(), 0), 512).unwrap();
        assert!(check_extension_axioms(&s, 3).is_empty());
        let t = greedy(&class, 4, s, 512).unwrap();
        assert!(check_extension_axioms(&t, 4).is_empty());
    }

    #[test]
    fn greedy_respects_the_class() {
        let class = Class::new(EtaZetaProfile::henson(3).unwrap());
        let s = greedy(&class, 2, FinStructure::edgeless(class.profile.clone(), 0), 64).unwrap();
        assert!(class.contains(&s));
        assert!(check_extension_axioms_in(&class, &s, 2).is_empty());
        assert!(s.edge_count() > 0);
    }

    #[test]
    fn budget_is_enforced() {
        let class = Class::new(EtaZetaProfile::random_graph());
        let seed = FinStructure::edgeless(class.profile.clone(), 0);
        assert!(matches!(
            greedy(&class, 4, seed, 6),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn c5_edge_extends_to_automorphism() {
        let m = approx(c5());
        let p = PartialIso::new(&m.structure, &m.structure, [(0, 1), (1, 2)]).unwrap();
        let full = extend_partial_iso(&m, &p, m.structure.points()).unwrap();
        assert!(full.extends(&p));
        assert_eq!(full.len(), 5);
        assert!(full.is_isomorphism_between(&m.structure, &m.structure));
    }

    #[test]
    fn p3_endpoint_to_midpoint_fails() {
        let m = approx(FinStructure::graph(3, &[(0, 1), (1, 2)]).unwrap());
        let p = PartialIso::new(&m.structure, &m.structure, [(0, 1)]).unwrap();
        let targets = [2].into_iter().collect();
        assert!(matches!(
            extend_partial_iso(&m, &p, &targets),
            Err(Error::SaturationInsufficient(_))
        ));
    }

    #[test]
    fn empty_map_extends_to_one_point() {
        let m = approx(c5());
        let targets = [3].into_iter().collect();
        let q = extend_partial_iso(&m, &PartialIso::default(), &targets).unwrap();
        assert_eq!(q.get(3), Some(0));
    }
}
