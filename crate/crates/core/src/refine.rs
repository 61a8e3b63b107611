//! Colour refinement and individualisation search over dense incidence views.
//!
//! Shared by isomorphism testing, automorphism enumeration and canonical
//! forms. Colours are always renumbered by rank of a sorted signature, so two
//! structures refine to the same colour numbering exactly when their
//! refinement traces agree.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashSet;
use std::hash::{Hash, Hasher};

use crate::finstruct::FinStructure;
use crate::Point;

/// A structure re-indexed onto `0..n`.
#[derive(Debug, Clone)]
pub(crate) struct Dense {
    pub points: Vec<Point>,
    pub edges: Vec<Vec<u32>>,
    pub incident: Vec<Vec<u32>>,
    pub lookup: HashSet<Vec<u32>>,
}

impl Dense {
    pub fn new(s: &FinStructure) -> Self {
        let points: Vec<Point> = s.points().iter().copied().collect();
        let index = |p: Point| points.binary_search(&p).expect("edge point in structure") as u32;
        let mut edges = Vec::new();
        for (_, tuples) in s.edge_map() {
            for t in tuples {
                edges.push(t.iter().map(|&p| index(p)).collect::<Vec<u32>>());
            }
        }
        let mut incident = vec![Vec::new(); points.len()];
        for (i, e) in edges.iter().enumerate() {
            for &x in e {
                incident[x as usize].push(i as u32);
            }
        }
        let lookup = edges.iter().cloned().collect();
        Dense {
            points,
            edges,
            incident,
            lookup,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn arity_profile(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.edges.iter().map(Vec::len).collect();
        v.sort_unstable();
        v
    }

    fn maps_edges(&self, other: &Dense, map: &[u32]) -> bool {
        let mut buf = Vec::new();
        self.edges.iter().all(|e| {
            buf.clear();
            buf.extend(e.iter().map(|&x| map[x as usize]));
            buf.sort_unstable();
            other.lookup.contains(&buf)
        })
    }
}

/// Refines `colors` to the coarsest equitable partition below it.
/// Returns a hash of the refinement trace.
pub(crate) fn refine(d: &Dense, colors: &mut [u32]) -> u64 {
    let n = d.len();
    let mut trace = DefaultHasher::new();
    let mut classes = distinct(colors);
    // initial ranking so that trace hashes compare across structures
    rank_in_place(colors);
    let mut sorted = colors.to_vec();
    sorted.sort_unstable();
    sorted.hash(&mut trace);
    loop {
        let mut sigs: Vec<(u32, Vec<(usize, Vec<u32>)>)> = Vec::with_capacity(n);
        for x in 0..n {
            let mut nb: Vec<(usize, Vec<u32>)> = d.incident[x]
                .iter()
                .map(|&ei| {
                    let e = &d.edges[ei as usize];
                    let mut cs: Vec<u32> = e
                        .iter()
                        .filter(|&&y| y as usize != x)
                        .map(|&y| colors[y as usize])
                        .collect();
                    cs.sort_unstable();
                    (e.len(), cs)
                })
                .collect();
            nb.sort_unstable();
            sigs.push((colors[x], nb));
        }
        let mut uniq: Vec<&(u32, Vec<(usize, Vec<u32>)>)> = sigs.iter().collect();
        uniq.sort();
        uniq.dedup();
        let mut counted: Vec<(&(u32, Vec<(usize, Vec<u32>)>), usize)> =
            uniq.iter().map(|&u| (u, 0)).collect();
        for s in &sigs {
            let pos = uniq.binary_search(&s).expect("present");
            counted[pos].1 += 1;
        }
        counted.hash(&mut trace);
        let new: Vec<u32> = sigs
            .iter()
            .map(|s| uniq.binary_search(&s).expect("present") as u32)
            .collect();
        colors.copy_from_slice(&new);
        let now = uniq.len();
        if now == classes || now == n {
            break;
        }
        classes = now;
    }
    trace.finish()
}

fn distinct(colors: &[u32]) -> usize {
    let mut c = colors.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

fn rank_in_place(colors: &mut [u32]) {
    let mut c = colors.to_vec();
    c.sort_unstable();
    c.dedup();
    for x in colors.iter_mut() {
        *x = c.binary_search(x).expect("present") as u32;
    }
}

fn individualize(colors: &[u32], x: usize) -> Vec<u32> {
    colors
        .iter()
        .enumerate()
        .map(|(y, &c)| 2 * c + u32::from(y != x))
        .collect()
}

fn target_cell(colors: &[u32]) -> Option<u32> {
    let mut counts = std::collections::BTreeMap::new();
    for &c in colors {
        *counts.entry(c).or_insert(0usize) += 1;
    }
    counts
        .into_iter()
        .filter(|&(_, k)| k > 1)
        .min_by_key(|&(c, k)| (k, c))
        .map(|(c, _)| c)
}

/// Outcome of an enumeration that may stop early.
pub(crate) enum Search {
    Complete,
    Truncated,
}

/// Enumerates colour-preserving isomorphisms `left -> right` as dense image
/// arrays, stopping once `limit` have been found.
pub(crate) fn isomorphisms(
    left: &Dense,
    right: &Dense,
    left_colors: &[u32],
    right_colors: &[u32],
    limit: usize,
    out: &mut Vec<Vec<u32>>,
) -> Search {
    if left.len() != right.len() || left.arity_profile() != right.arity_profile() {
        return Search::Complete;
    }
    let mut lc = left_colors.to_vec();
    let mut rc = right_colors.to_vec();
    if refine(left, &mut lc) != refine(right, &mut rc) {
        return Search::Complete;
    }
    if descend(left, right, &lc, &rc, limit, out) {
        Search::Truncated
    } else {
        Search::Complete
    }
}

// returns true when the limit was hit
fn descend(
    left: &Dense,
    right: &Dense,
    lc: &[u32],
    rc: &[u32],
    limit: usize,
    out: &mut Vec<Vec<u32>>,
) -> bool {
    let Some(cell) = target_cell(lc) else {
        let n = left.len();
        let mut by_color = vec![0u32; n];
        for (y, &c) in rc.iter().enumerate() {
            by_color[c as usize] = y as u32;
        }
        let map: Vec<u32> = lc.iter().map(|&c| by_color[c as usize]).collect();
        if left.maps_edges(right, &map) {
            out.push(map);
            if out.len() >= limit {
                return true;
            }
        }
        return false;
    };
    let x = lc.iter().position(|&c| c == cell).expect("cell nonempty");
    let mut lnext = individualize(lc, x);
    let ltrace = refine(left, &mut lnext);
    for y in 0..right.len() {
        if rc[y] != cell {
            continue;
        }
        let mut rnext = individualize(rc, y);
        if refine(right, &mut rnext) != ltrace {
            continue;
        }
        if descend(left, right, &lnext, &rnext, limit, out) {
            return true;
        }
    }
    false
}

/// A labelling-independent code: relabelled edges plus the initial colours
/// in label order. Equal codes mean colour-preserving isomorphism.
pub(crate) type Code = (Vec<u32>, Vec<Vec<u32>>);

pub(crate) fn canonical_code(d: &Dense, colors: &[u32]) -> Code {
    let mut c = colors.to_vec();
    refine(d, &mut c);
    let mut best: Option<Code> = None;
    canon_descend(d, colors, &c, &mut best);
    best.expect("at least one leaf")
}

fn canon_descend(d: &Dense, initial: &[u32], c: &[u32], best: &mut Option<Code>) {
    let Some(cell) = target_cell(c) else {
        let n = d.len();
        let mut init = vec![0u32; n];
        for x in 0..n {
            init[c[x] as usize] = initial[x];
        }
        let mut edges: Vec<Vec<u32>> = d
            .edges
            .iter()
            .map(|e| {
                let mut t: Vec<u32> = e.iter().map(|&x| c[x as usize]).collect();
                t.sort_unstable();
                t
            })
            .collect();
        edges.sort();
        let code = (init, edges);
        if best.as_ref().is_none_or(|b| code < *b) {
            *best = Some(code);
        }
        return;
    };
    for x in 0..d.len() {
        if c[x] != cell {
            continue;
        }
        let mut next = individualize(c, x);
        refine(d, &mut next);
        canon_descend(d, initial, &next, best);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finstruct::FinStructure;

    fn graph(n: usize, edges: &[(usize, usize)]) -> FinStructure {
        FinStructure::graph(n, edges).unwrap()
    }

    #[test]
    fn c5_has_ten_automorphisms() {
        let c5 = Dense::new(&graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]));
        let mut out = Vec::new();
        let zero = vec![0u32; 5];
        isomorphisms(&c5, &c5, &zero, &zero, usize::MAX, &mut out);
        assert_eq!(out.len(), 10);
    }

    #[test]
    fn canonical_code_ignores_labels() {
        let a = Dense::new(&graph(4, &[(0, 1), (1, 2), (2, 3)]));
        let b = Dense::new(&graph(4, &[(3, 1), (1, 0), (0, 2)]));
        let c = Dense::new(&graph(4, &[(0, 1), (1, 2), (2, 0)]));
        let z = vec![0u32; 4];
        assert_eq!(canonical_code(&a, &z), canonical_code(&b, &z));
        assert_ne!(canonical_code(&a, &z), canonical_code(&c, &z));
    }

    #[test]
    fn refinement_separates_degrees() {
        let p = Dense::new(&graph(3, &[(0, 1), (1, 2)]));
        let mut c = vec![0u32; 3];
        refine(&p, &mut c);
        assert_eq!(c[0], c[2]);
        assert_ne!(c[0], c[1]);
    }
}
