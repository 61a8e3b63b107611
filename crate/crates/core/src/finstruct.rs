//! Finite η-hypergraphs, partial isomorphisms and the class K(η, ζ).

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::refine::{self, Dense};
use crate::signature::EtaZetaProfile;
use crate::Point;

/// Default point budget for [`enumerate_class`].
pub const DEFAULT_ENUMERATION_BUDGET: usize = 6;

/// A finite structure over L(η). Tuples are stored sorted, so symmetry holds
/// by construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FinStructure {
    profile: EtaZetaProfile,
    points: BTreeSet<Point>,
    edges: BTreeMap<usize, BTreeSet<Vec<Point>>>,
}

impl FinStructure {
    /// The edgeless structure on `points`.
    pub fn new(profile: EtaZetaProfile, points: impl IntoIterator<Item = Point>) -> Self {
        let edges = profile.arities().map(|n| (n, BTreeSet::new())).collect();
        FinStructure {
            profile,
            points: points.into_iter().collect(),
            edges,
        }
    }

    /// The edgeless structure on `0..n`.
    pub fn edgeless(profile: EtaZetaProfile, n: usize) -> Self {
        Self::new(profile, 0..n)
    }

    pub fn with_edges<I, T>(
        profile: EtaZetaProfile,
        points: impl IntoIterator<Item = Point>,
        edges: I,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[Point]>,
    {
        let mut s = Self::new(profile, points);
        for e in edges {
            s.add_edge(e.as_ref())?;
        }
        Ok(s)
    }

    /// A graph (η = {2}, unconstrained) on `0..n`.
    pub fn graph(n: usize, edges: &[(Point, Point)]) -> Result<Self> {
        Self::with_edges(
            EtaZetaProfile::random_graph(),
            0..n,
            edges.iter().map(|&(a, b)| [a, b]),
        )
    }

    /// Inserts a tuple as an edge. Returns whether it was new.
    pub fn add_edge(&mut self, tuple: &[Point]) -> Result<bool> {
        let key = self.check_tuple(tuple)?;
        Ok(self
            .edges
            .get_mut(&key.len())
            .expect("arity checked")
            .insert(key))
    }

    pub fn remove_edge(&mut self, tuple: &[Point]) -> bool {
        let mut key = tuple.to_vec();
        key.sort_unstable();
        self.edges
            .get_mut(&key.len())
            .is_some_and(|set| set.remove(&key))
    }

    fn check_tuple(&self, tuple: &[Point]) -> Result<Vec<Point>> {
        let n = tuple.len();
        if !self.profile.has_arity(n) {
            return Err(Error::InvariantViolation(format!(
                "arity {n} is not in the eta support"
            )));
        }
        if let Some(&p) = tuple.iter().find(|p| !self.points.contains(p)) {
            return Err(Error::UnknownPoint(p));
        }
        let mut key = tuple.to_vec();
        key.sort_unstable();
        if key.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvariantViolation(format!(
                "tuple {tuple:?} repeats a point"
            )));
        }
        Ok(key)
    }

    /// Adds a point with no incident edges.
    pub fn add_point(&mut self, p: Point) -> bool {
        self.points.insert(p)
    }

    pub fn profile(&self) -> &EtaZetaProfile {
        &self.profile
    }

    pub fn points(&self) -> &BTreeSet<Point> {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Arity -> sorted tuples, one entry per arity of the profile.
    pub fn edge_map(&self) -> &BTreeMap<usize, BTreeSet<Vec<Point>>> {
        &self.edges
    }

    pub fn edges(&self, n: usize) -> impl Iterator<Item = &Vec<Point>> {
        self.edges.get(&n).into_iter().flatten()
    }

    pub fn all_edges(&self) -> impl Iterator<Item = &Vec<Point>> {
        self.edges.values().flatten()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.values().map(BTreeSet::len).sum()
    }

    /// Membership of the underlying set of `tuple` in R_{|tuple|}.
    pub fn has_edge(&self, tuple: &[Point]) -> bool {
        let mut key = tuple.to_vec();
        key.sort_unstable();
        self.edges.get(&key.len()).is_some_and(|s| s.contains(&key))
    }

    /// Renames points through `f`, which must be injective on the points.
    pub fn relabel(&self, f: impl Fn(Point) -> Point) -> FinStructure {
        let points = self.points.iter().map(|&p| f(p)).collect();
        let edges = self
            .edges
            .iter()
            .map(|(&n, set)| {
                let set = set
                    .iter()
                    .map(|t| {
                        let mut t: Vec<Point> = t.iter().map(|&p| f(p)).collect();
                        t.sort_unstable();
                        t
                    })
                    .collect();
                (n, set)
            })
            .collect();
        FinStructure {
            profile: self.profile.clone(),
            points,
            edges,
        }
    }

    /// Relabels onto `0..len` preserving point order.
    pub fn compact(&self) -> FinStructure {
        let order: Vec<Point> = self.points.iter().copied().collect();
        self.relabel(|p| order.binary_search(&p).expect("own point"))
    }

    /// Smallest identifier above every point.
    pub fn fresh_point(&self) -> Point {
        self.points.last().map_or(0, |&p| p + 1)
    }

    /// Edges meeting `p`.
    pub fn incident(&self, p: Point) -> impl Iterator<Item = &Vec<Point>> {
        self.all_edges().filter(move |t| t.contains(&p))
    }
}

impl fmt::Display for FinStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.points.iter().join(","))?;
        for t in self.all_edges() {
            write!(f, " [{}]", t.iter().join(" "))?;
        }
        Ok(())
    }
}

/// An isomorphism between induced substructures, held as its graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PartialIso {
    map: BTreeMap<Point, Point>,
}

impl PartialIso {
    pub fn identity(points: impl IntoIterator<Item = Point>) -> Self {
        PartialIso {
            map: points.into_iter().map(|p| (p, p)).collect(),
        }
    }

    /// Builds the map without checking it against any structure.
    pub fn from_map_unchecked(map: BTreeMap<Point, Point>) -> Self {
        PartialIso { map }
    }

    /// Builds the map and checks that it is an isomorphism from
    /// `induced(source, dom)` onto `induced(target, image)`.
    pub fn new(
        source: &FinStructure,
        target: &FinStructure,
        pairs: impl IntoIterator<Item = (Point, Point)>,
    ) -> Result<Self> {
        let p = PartialIso {
            map: pairs.into_iter().collect(),
        };
        for (&a, &b) in &p.map {
            if !source.points.contains(&a) {
                return Err(Error::UnknownPoint(a));
            }
            if !target.points.contains(&b) {
                return Err(Error::UnknownPoint(b));
            }
        }
        if !p.is_isomorphism_between(source, target) {
            return Err(Error::InvariantViolation(
                "map is not an isomorphism of induced substructures".into(),
            ));
        }
        Ok(p)
    }

    pub fn map(&self) -> &BTreeMap<Point, Point> {
        &self.map
    }

    pub fn get(&self, p: Point) -> Option<Point> {
        self.map.get(&p).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn domain(&self) -> BTreeSet<Point> {
        self.map.keys().copied().collect()
    }

    pub fn image(&self) -> BTreeSet<Point> {
        self.map.values().copied().collect()
    }

    pub fn is_injective(&self) -> bool {
        self.image().len() == self.map.len()
    }

    pub fn inverse(&self) -> PartialIso {
        PartialIso {
            map: self.map.iter().map(|(&a, &b)| (b, a)).collect(),
        }
    }

    /// `self` then `next`, on the points where both are defined.
    pub fn then(&self, next: &PartialIso) -> PartialIso {
        PartialIso {
            map: self
                .map
                .iter()
                .filter_map(|(&a, &b)| next.get(b).map(|c| (a, c)))
                .collect(),
        }
    }

    /// True iff `self` agrees with `other` on all of `other`'s domain.
    pub fn extends(&self, other: &PartialIso) -> bool {
        other.map.iter().all(|(a, b)| self.map.get(a) == Some(b))
    }

    pub fn insert(&mut self, a: Point, b: Point) {
        self.map.insert(a, b);
    }

    pub fn remove(&mut self, a: Point) -> Option<Point> {
        self.map.remove(&a)
    }

    /// Preserves and reflects every relation on the domain.
    pub fn is_isomorphism_between(&self, source: &FinStructure, target: &FinStructure) -> bool {
        if !self.is_injective() || source.profile != target.profile {
            return false;
        }
        let dom = self.domain();
        let img = self.image();
        let (Ok(a), Ok(b)) = (induced(source, &dom), induced(target, &img)) else {
            return false;
        };
        if a.edge_count() != b.edge_count() {
            return false;
        }
        let preserved = a
            .all_edges()
            .all(|t| b.has_edge(&t.iter().map(|&p| self.map[&p]).collect::<Vec<_>>()));
        preserved
    }
}

impl fmt::Display for PartialIso {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}",
            self.map.iter().map(|(a, b)| format!("{a}>{b}")).join(",")
        )
    }
}

/// A hereditary class: K(η, ζ) cut down by forbidden induced patterns.
///
/// With no patterns this is exactly K(η, ζ).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Class {
    pub profile: EtaZetaProfile,
    pub forbidden: Vec<FinStructure>,
}

impl Class {
    pub fn new(profile: EtaZetaProfile) -> Self {
        Class {
            profile,
            forbidden: Vec::new(),
        }
    }

    pub fn with_forbidden(profile: EtaZetaProfile, forbidden: Vec<FinStructure>) -> Self {
        Class { profile, forbidden }
    }

    pub fn contains(&self, s: &FinStructure) -> bool {
        s.profile == self.profile
            && is_in_class(s)
            && self.forbidden.iter().all(|f| !embeds(f, s))
    }

    /// One representative per isomorphism type of members on `size` points.
    pub fn enumerate(&self, size: usize, budget: usize) -> Result<Vec<FinStructure>> {
        if size > budget {
            return Err(Error::BudgetExceeded(format!(
                "enumeration at size {size} exceeds the budget {budget}"
            )));
        }
        let mut level = vec![FinStructure::edgeless(self.profile.clone(), 0)];
        for m in 1..=size {
            level = self.extend_level(&level, m)?;
        }
        Ok(level)
    }

    fn extend_level(&self, prev: &[FinStructure], m: usize) -> Result<Vec<FinStructure>> {
        const CHILD_CAP: usize = 1 << 22;
        let new = m - 1;
        let old: Vec<Point> = (0..new).collect();
        let candidates: Vec<Vec<Point>> = self
            .profile
            .arities()
            .flat_map(|n| {
                old.iter().copied().combinations(n - 1).map(move |mut c| {
                    c.push(new);
                    c
                })
            })
            .collect();
        if candidates.len() >= 63
            || prev.len().saturating_mul(1usize << candidates.len()) > CHILD_CAP
        {
            return Err(Error::BudgetExceeded(format!(
                "enumeration at size {m} needs too many candidate extensions"
            )));
        }
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for parent in prev {
            for mask in 0u64..(1u64 << candidates.len()) {
                let mut child = parent.clone();
                child.add_point(new);
                for (i, t) in candidates.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        child.add_edge(t).expect("candidate tuples are valid");
                    }
                }
                if !self.contains(&child) {
                    continue;
                }
                if seen.insert(canonical_key(&child, &[])) {
                    out.push(child);
                }
            }
        }
        Ok(out)
    }
}

/// The induced substructure on `x`.
pub fn induced(s: &FinStructure, x: &BTreeSet<Point>) -> Result<FinStructure> {
    if let Some(&p) = x.iter().find(|p| !s.points.contains(p)) {
        return Err(Error::UnknownPoint(p));
    }
    let edges = s
        .edges
        .iter()
        .map(|(&n, set)| {
            let kept = set
                .iter()
                .filter(|t| t.iter().all(|p| x.contains(p)))
                .cloned()
                .collect();
            (n, kept)
        })
        .collect();
    Ok(FinStructure {
        profile: s.profile.clone(),
        points: x.clone(),
        edges,
    })
}

/// Membership in K(η, ζ): no complete arity-n configuration on ζ(n) points
/// for any constrained n.
pub fn is_in_class(s: &FinStructure) -> bool {
    s.profile
        .constraints()
        .all(|(n, size)| find_complete(s, n, size).is_none())
}

/// A `size`-subset all of whose n-subsets are edges, if one exists.
pub fn find_complete(s: &FinStructure, n: usize, size: usize) -> Option<Vec<Point>> {
    let pts: Vec<Point> = s.points.iter().copied().collect();
    let mut chosen = Vec::with_capacity(size);
    grow_complete(s, n, size, &pts, 0, &mut chosen).then_some(chosen)
}

fn grow_complete(
    s: &FinStructure,
    n: usize,
    size: usize,
    pts: &[Point],
    from: usize,
    chosen: &mut Vec<Point>,
) -> bool {
    if chosen.len() == size {
        return true;
    }
    for i in from..pts.len() {
        if pts.len() - i < size - chosen.len() {
            break;
        }
        let p = pts[i];
        let ok = chosen.len() + 1 < n
            || chosen.iter().copied().combinations(n - 1).all(|mut c| {
                c.push(p);
                s.has_edge(&c)
            });
        if ok {
            chosen.push(p);
            if grow_complete(s, n, size, pts, i + 1, chosen) {
                return true;
            }
            chosen.pop();
        }
    }
    false
}

/// The structure on `0..size` whose arity-n edges are all n-subsets.
///
/// Panics if `n` is not in the profile's support.
pub fn complete_config(n: usize, size: usize, profile: &EtaZetaProfile) -> FinStructure {
    let mut s = FinStructure::edgeless(profile.clone(), size);
    for t in (0..size).combinations(n) {
        s.add_edge(&t).expect("arity in profile");
    }
    s
}

/// All embeddings of `a` into `b`, ordered lexicographically by the image of
/// `a`'s points in ascending order.
pub fn embeddings(a: &FinStructure, b: &FinStructure) -> Vec<PartialIso> {
    let mut out = Vec::new();
    embed_search(a, b, usize::MAX, &mut out);
    out
}

/// The lexicographically first embedding of `a` into `b`.
pub fn first_embedding(a: &FinStructure, b: &FinStructure) -> Option<PartialIso> {
    let mut out = Vec::new();
    embed_search(a, b, 1, &mut out);
    out.pop()
}

/// True iff `a` embeds into `b`.
pub fn embeds(a: &FinStructure, b: &FinStructure) -> bool {
    let mut out = Vec::new();
    embed_search(a, b, 1, &mut out);
    !out.is_empty()
}

fn embed_search(a: &FinStructure, b: &FinStructure, limit: usize, out: &mut Vec<PartialIso>) {
    if a.profile != b.profile || a.len() > b.len() {
        return;
    }
    let da = Dense::new(a);
    let db = Dense::new(b);
    let mut img = vec![u32::MAX; da.len()];
    let mut used = vec![false; db.len()];
    embed_step(&da, &db, 0, &mut img, &mut used, limit, out);
}

#[allow(clippy::too_many_arguments)]
fn embed_step(
    da: &Dense,
    db: &Dense,
    i: usize,
    img: &mut [u32],
    used: &mut [bool],
    limit: usize,
    out: &mut Vec<PartialIso>,
) -> bool {
    if i == da.len() {
        out.push(PartialIso {
            map: (0..da.len())
                .map(|x| (da.points[x], db.points[img[x] as usize]))
                .collect(),
        });
        return out.len() >= limit;
    }
    let mut buf = Vec::new();
    for y in 0..db.len() {
        if used[y] {
            continue;
        }
        img[i] = y as u32;
        // edges of a inside the prefix that contain i
        let mut count_a = 0;
        let preserved = da.incident[i].iter().all(|&ei| {
            let e = &da.edges[ei as usize];
            if e.iter().any(|&x| x as usize > i) {
                return true;
            }
            count_a += 1;
            buf.clear();
            buf.extend(e.iter().map(|&x| img[x as usize]));
            buf.sort_unstable();
            db.lookup.contains(&buf)
        });
        if !preserved {
            continue;
        }
        used[y] = true;
        let count_b = db.incident[y]
            .iter()
            .filter(|&&ei| {
                db.edges[ei as usize]
                    .iter()
                    .all(|&z| z as usize == y || used[z as usize])
            })
            .count();
        if count_a == count_b && embed_step(da, db, i + 1, img, used, limit, out) {
            used[y] = false;
            return true;
        }
        used[y] = false;
    }
    img[i] = u32::MAX;
    false
}

/// Some isomorphism `s -> t`, if one exists.
pub fn isomorphic(s: &FinStructure, t: &FinStructure) -> Option<PartialIso> {
    isomorphisms(s, t, 1).into_iter().next()
}

/// Up to `limit` isomorphisms `s -> t`.
pub fn isomorphisms(s: &FinStructure, t: &FinStructure, limit: usize) -> Vec<PartialIso> {
    if s.profile != t.profile || s.len() != t.len() {
        return Vec::new();
    }
    let ds = Dense::new(s);
    let dt = Dense::new(t);
    let zero = vec![0u32; ds.len()];
    let mut raw = Vec::new();
    refine::isomorphisms(&ds, &dt, &zero, &zero, limit, &mut raw);
    raw.into_iter()
        .map(|m| PartialIso {
            map: m
                .iter()
                .enumerate()
                .map(|(x, &y)| (ds.points[x], dt.points[y as usize]))
                .collect(),
        })
        .collect()
}

/// Isomorphisms `s -> t` that send `seed_s[i]` to `seed_t[i]` for every i.
pub fn isomorphisms_fixing(
    s: &FinStructure,
    t: &FinStructure,
    seed_s: &[Point],
    seed_t: &[Point],
    limit: usize,
) -> Vec<PartialIso> {
    if s.profile != t.profile || s.len() != t.len() || seed_s.len() != seed_t.len() {
        return Vec::new();
    }
    let ds = Dense::new(s);
    let dt = Dense::new(t);
    let (Some(cs), Some(ct)) = (seed_colors(&ds, seed_s), seed_colors(&dt, seed_t)) else {
        return Vec::new();
    };
    let mut raw = Vec::new();
    refine::isomorphisms(&ds, &dt, &cs, &ct, limit, &mut raw);
    raw.into_iter()
        .map(|m| PartialIso {
            map: m
                .iter()
                .enumerate()
                .map(|(x, &y)| (ds.points[x], dt.points[y as usize]))
                .collect(),
        })
        .collect()
}

fn seed_colors(d: &Dense, seed: &[Point]) -> Option<Vec<u32>> {
    let mut c = vec![0u32; d.len()];
    for (i, p) in seed.iter().enumerate() {
        let x = d.points.binary_search(p).ok()?;
        if c[x] != 0 {
            return None;
        }
        c[x] = i as u32 + 1;
    }
    Some(c)
}

/// A key equal for two structures iff they are isomorphic by a map sending
/// the i-th seed point to the i-th seed point.
pub fn canonical_key(s: &FinStructure, seed: &[Point]) -> CanonicalKey {
    let d = Dense::new(s);
    let c = seed_colors(&d, seed).expect("seed points are distinct points of s");
    CanonicalKey(refine::canonical_code(&d, &c))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalKey(refine::Code);

/// One representative per isomorphism type of K(η, ζ) on `size` points,
/// within the default budget.
pub fn enumerate_class(profile: &EtaZetaProfile, size: usize) -> Result<Vec<FinStructure>> {
    Class::new(profile.clone()).enumerate(size, DEFAULT_ENUMERATION_BUDGET)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[Point]) -> BTreeSet<Point> {
        v.iter().copied().collect()
    }

    fn triangle() -> FinStructure {
        FinStructure::graph(3, &[(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    fn path3() -> FinStructure {
        FinStructure::graph(3, &[(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn induced_examples() {
        let t = triangle();
        let e = induced(&t, &set(&[0, 1])).unwrap();
        assert_eq!(e, FinStructure::graph(2, &[(0, 1)]).unwrap());
        assert_eq!(induced(&t, t.points()).unwrap(), t);
        let p = induced(&path3(), &set(&[0, 2])).unwrap();
        assert_eq!(p.edge_count(), 0);
        assert_eq!(induced(&t, &set(&[7])), Err(Error::UnknownPoint(7)));
    }

    #[test]
    fn class_membership() {
        let k3 = EtaZetaProfile::henson(3).unwrap();
        let k4 = EtaZetaProfile::henson(4).unwrap();
        assert!(!is_in_class(&complete_config(2, 3, &k3)));
        assert!(is_in_class(&complete_config(2, 3, &k4)));
        let p3 = EtaZetaProfile::from_parts(&[3], &[(3, 4)]).unwrap();
        assert!(!is_in_class(&complete_config(3, 4, &p3)));
        assert!(is_in_class(&complete_config(3, 3, &p3)));
    }

    #[test]
    fn complete_configs() {
        let g = EtaZetaProfile::random_graph();
        assert_eq!(complete_config(2, 3, &g), triangle());
        assert_eq!(complete_config(2, 2, &g).edge_count(), 1);
        let h = EtaZetaProfile::from_parts(&[3], &[]).unwrap();
        assert_eq!(complete_config(3, 4, &h).edge_count(), 4);
    }

    #[test]
    fn embedding_counts() {
        let edge = FinStructure::graph(2, &[(0, 1)]).unwrap();
        assert_eq!(embeddings(&edge, &triangle()).len(), 6);
        let pt = FinStructure::graph(1, &[]).unwrap();
        assert_eq!(embeddings(&pt, &path3()).len(), 3);
        let c4 = FinStructure::graph(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        assert!(embeddings(&triangle(), &c4).is_empty());
        // induced: the path does not embed into the triangle
        assert!(embeddings(&path3(), &triangle()).is_empty());
    }

    #[test]
    fn embeddings_are_lexicographic() {
        let edge = FinStructure::graph(2, &[(0, 1)]).unwrap();
        let images: Vec<Vec<Point>> = embeddings(&edge, &triangle())
            .iter()
            .map(|e| e.map().values().copied().collect())
            .collect();
        let mut sorted = images.clone();
        sorted.sort();
        assert_eq!(images, sorted);
    }

    #[test]
    fn isomorphism_examples() {
        let p = path3();
        let q = FinStructure::with_edges(
            EtaZetaProfile::random_graph(),
            [5, 7, 9],
            [[5, 7], [7, 9]],
        )
        .unwrap();
        let w = isomorphic(&p, &q).unwrap();
        assert!(w.is_isomorphism_between(&p, &q));
        assert!(isomorphic(&p, &triangle()).is_none());
        let two = FinStructure::graph(4, &[(0, 1), (2, 3)]).unwrap();
        let p4 = FinStructure::graph(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        assert!(isomorphic(&two, &p4).is_none());
    }

    #[test]
    fn enumeration_counts() {
        let g = EtaZetaProfile::random_graph();
        assert_eq!(enumerate_class(&g, 2).unwrap().len(), 2);
        assert_eq!(enumerate_class(&g, 3).unwrap().len(), 4);
        assert_eq!(enumerate_class(&g, 4).unwrap().len(), 11);
        let k3 = EtaZetaProfile::henson(3).unwrap();
        assert_eq!(enumerate_class(&k3, 3).unwrap().len(), 3);
        assert!(matches!(
            enumerate_class(&g, 7),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn reflexive_tuples_rejected() {
        let mut s = FinStructure::graph(2, &[]).unwrap();
        assert!(matches!(
            s.add_edge(&[0, 0]),
            Err(Error::InvariantViolation(_))
        ));
        assert!(matches!(
            s.add_edge(&[0, 1, 1]),
            Err(Error::InvariantViolation(_))
        ));
    }

    #[test]
    fn forbidden_patterns_cut_the_class() {
        let g = EtaZetaProfile::random_graph();
        let edge = FinStructure::graph(2, &[(0, 1)]).unwrap();
        let class = Class::with_forbidden(g, vec![edge]);
        let reps = class.enumerate(3, 6).unwrap();
        assert_eq!(reps.len(), 1);
        assert_eq!(reps[0].edge_count(), 0);
    }
}
