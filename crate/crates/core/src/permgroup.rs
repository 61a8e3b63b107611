//! Finite permutation groups held with all elements, and the stabilizer
//! algebra over them.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::sync::OnceLock;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::finstruct::FinStructure;
use crate::perm::Perm;
use crate::refine::{self, Dense, Search};
use crate::Point;

/// Structures above this many points are refused by [`automorphisms`].
pub const DEFAULT_AUT_BUDGET: usize = 12;
/// Largest group order materialized.
pub const MAX_ORDER: usize = 200_000;

/// A permutation group on `ground`, stored as its sorted element list.
/// Points of `0..degree` outside `ground` are fixed by every element.
#[derive(Debug, Clone)]
pub struct PermGroup {
    degree: usize,
    ground: BTreeSet<Point>,
    elements: Vec<Perm>,
    generators: OnceLock<Vec<Perm>>,
}

impl PartialEq for PermGroup {
    fn eq(&self, other: &Self) -> bool {
        self.ground == other.ground && self.elements == other.elements
    }
}

impl Eq for PermGroup {}

fn degree_of(ground: &BTreeSet<Point>) -> usize {
    ground.last().map_or(0, |&p| p + 1)
}

impl PermGroup {
    fn from_sorted(degree: usize, ground: BTreeSet<Point>, mut elements: Vec<Perm>) -> Self {
        elements.sort();
        elements.dedup();
        PermGroup {
            degree,
            ground,
            elements,
            generators: OnceLock::new(),
        }
    }

    pub fn trivial(ground: BTreeSet<Point>) -> Self {
        let degree = degree_of(&ground);
        Self::from_sorted(degree, ground, vec![Perm::identity(degree)])
    }

    /// Sym(ground).
    pub fn symmetric(ground: BTreeSet<Point>) -> Result<Self> {
        let degree = degree_of(&ground);
        let pts: Vec<Point> = ground.iter().copied().collect();
        let order: usize = (1..=pts.len()).product();
        if order > MAX_ORDER {
            return Err(Error::BudgetExceeded(format!(
                "Sym({}) has order {order}",
                pts.len()
            )));
        }
        let elements = pts
            .iter()
            .copied()
            .permutations(pts.len())
            .map(|img| {
                let mut image: Vec<Point> = (0..degree).collect();
                for (&a, &b) in pts.iter().zip(&img) {
                    image[a] = b;
                }
                Perm::from_images(image).expect("bijection")
            })
            .collect();
        Ok(Self::from_sorted(degree, ground, elements))
    }

    /// The group generated by `gens` acting on `ground`.
    pub fn from_generators(ground: BTreeSet<Point>, gens: &[Perm]) -> Result<Self> {
        let degree = degree_of(&ground);
        for g in gens {
            if g.degree() != degree || (0..degree).any(|p| !ground.contains(&p) && !g.fixes(p)) {
                return Err(Error::InvariantViolation(format!(
                    "generator {g} does not act on the ground set"
                )));
            }
        }
        let elements = closure(degree, gens, MAX_ORDER)?;
        Ok(Self::from_sorted(degree, ground, elements))
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn ground(&self) -> &BTreeSet<Point> {
        &self.ground
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    /// All elements in ascending image-array order.
    pub fn elements(&self) -> &[Perm] {
        &self.elements
    }

    pub fn identity(&self) -> Perm {
        Perm::identity(self.degree)
    }

    pub fn contains(&self, g: &Perm) -> bool {
        self.elements.binary_search(g).is_ok()
    }

    pub fn is_subgroup_of(&self, other: &PermGroup) -> bool {
        self.elements.iter().all(|g| other.contains(g))
    }

    /// A small generating set: each element, in order, that is not already
    /// generated by the ones chosen before it.
    pub fn generators(&self) -> &[Perm] {
        self.generators.get_or_init(|| {
            let mut gens: Vec<Perm> = Vec::new();
            let mut span: HashSet<Perm> = [self.identity()].into_iter().collect();
            for g in &self.elements {
                if span.contains(g) {
                    continue;
                }
                gens.push(g.clone());
                span = closure(self.degree, &gens, usize::MAX)
                    .expect("unbounded")
                    .into_iter()
                    .collect();
                if span.len() == self.elements.len() {
                    break;
                }
            }
            gens
        })
    }

    fn filter(&self, keep: impl Fn(&Perm) -> bool) -> PermGroup {
        PermGroup {
            degree: self.degree,
            ground: self.ground.clone(),
            elements: self.elements.iter().filter(|g| keep(g)).cloned().collect(),
            generators: OnceLock::new(),
        }
    }

    /// G_(A).
    pub fn pointwise_stab(&self, a: &BTreeSet<Point>) -> PermGroup {
        self.filter(|g| a.iter().all(|&p| g.fixes(p)))
    }

    /// G_{A}.
    pub fn setwise_stab(&self, a: &BTreeSet<Point>) -> PermGroup {
        self.filter(|g| a.iter().all(|&p| a.contains(&g.apply(p))))
    }

    /// The smallest subgroup of `self` containing `gens`.
    pub fn generated(&self, gens: &[Perm]) -> Result<PermGroup> {
        if let Some(g) = gens.iter().find(|g| !self.contains(g)) {
            return Err(Error::InvariantViolation(format!(
                "{g} is not an element of the group"
            )));
        }
        let elements = closure(self.degree, gens, self.order())?;
        Ok(Self::from_sorted(self.degree, self.ground.clone(), elements))
    }

    /// The subgroup generated by two subgroups.
    pub fn join(&self, a: &PermGroup, b: &PermGroup) -> Result<PermGroup> {
        let gens: Vec<Perm> = a
            .generators()
            .iter()
            .chain(b.generators())
            .cloned()
            .collect();
        self.generated(&gens)
    }

    pub fn orbit(&self, a: Point) -> BTreeSet<Point> {
        // generator BFS; the element list would give the same set
        let mut seen: BTreeSet<Point> = [a].into_iter().collect();
        let mut queue = VecDeque::from([a]);
        while let Some(p) = queue.pop_front() {
            for g in self.generators() {
                let q = g.apply(p);
                if seen.insert(q) {
                    queue.push_back(q);
                }
            }
        }
        seen
    }

    /// Orbits on the ground set, ordered by least element.
    pub fn orbits(&self) -> Vec<BTreeSet<Point>> {
        let mut left = self.ground.clone();
        let mut out = Vec::new();
        while let Some(&p) = left.iter().next() {
            let o = self.orbit(p);
            for q in &o {
                left.remove(q);
            }
            out.push(o);
        }
        out
    }

    /// The least element carrying `from[i]` to `to[i]` for every i.
    pub fn find_mapping(&self, from: &[Point], to: &[Point]) -> Option<Perm> {
        if from.len() != to.len() {
            return None;
        }
        self.elements
            .iter()
            .find(|g| from.iter().zip(to).all(|(&a, &b)| g.apply(a) == b))
            .cloned()
    }
}

fn closure(degree: usize, gens: &[Perm], cap: usize) -> Result<Vec<Perm>> {
    let id = Perm::identity(degree);
    let mut seen: HashSet<Perm> = [id.clone()].into_iter().collect();
    let mut queue = VecDeque::from([id]);
    while let Some(e) = queue.pop_front() {
        for g in gens {
            let h = e.then(g);
            if !seen.contains(&h) {
                if seen.len() >= cap {
                    return Err(Error::BudgetExceeded(format!(
                        "group order exceeds {cap}"
                    )));
                }
                seen.insert(h.clone());
                queue.push_back(h);
            }
        }
    }
    let mut v: Vec<Perm> = seen.into_iter().collect();
    v.sort();
    Ok(v)
}

/// Aut(S) within the default point budget.
pub fn automorphisms(s: &FinStructure) -> Result<PermGroup> {
    automorphisms_within(s, DEFAULT_AUT_BUDGET)
}

pub fn automorphisms_within(s: &FinStructure, budget: usize) -> Result<PermGroup> {
    if s.len() > budget {
        return Err(Error::BudgetExceeded(format!(
            "{} points exceed the automorphism budget {budget}",
            s.len()
        )));
    }
    let d = Dense::new(s);
    let zero = vec![0u32; d.len()];
    let mut raw = Vec::new();
    if let Search::Truncated = refine::isomorphisms(&d, &d, &zero, &zero, MAX_ORDER + 1, &mut raw)
    {
        return Err(Error::BudgetExceeded(format!(
            "automorphism group order exceeds {MAX_ORDER}"
        )));
    }
    let ground = s.points().clone();
    let degree = degree_of(&ground);
    let elements = raw
        .into_iter()
        .map(|m| {
            let mut image: Vec<Point> = (0..degree).collect();
            for (x, &y) in m.iter().enumerate() {
                image[d.points[x]] = d.points[y as usize];
            }
            Perm::from_images(image).expect("automorphism is a bijection")
        })
        .collect();
    Ok(PermGroup::from_sorted(degree, ground, elements))
}

/// A structure together with its automorphism group.
#[derive(Debug, Clone)]
pub struct Ambient {
    pub structure: FinStructure,
    pub group: PermGroup,
}

impl Ambient {
    pub fn new(structure: FinStructure) -> Result<Self> {
        Self::with_budget(structure, DEFAULT_AUT_BUDGET)
    }

    pub fn with_budget(structure: FinStructure, budget: usize) -> Result<Self> {
        let group = automorphisms_within(&structure, budget)?;
        Ok(Ambient { structure, group })
    }
}

/// How algebraic closure is read on a finite structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AclMode {
    /// acl(A) = A, as in free relational classes.
    #[default]
    ClassSemantics,
    /// Points whose G_(A)-orbit has at most `threshold` elements.
    /// Approximate: every orbit of a finite group is finite.
    Orbit { threshold: usize },
}

pub fn acl(m: &Ambient, a: &BTreeSet<Point>, mode: AclMode) -> BTreeSet<Point> {
    acl_in(&m.group, a, mode)
}

/// acl read off the action of `g` alone.
pub fn acl_in(g: &PermGroup, a: &BTreeSet<Point>, mode: AclMode) -> BTreeSet<Point> {
    match mode {
        AclMode::ClassSemantics => a.clone(),
        AclMode::Orbit { threshold } => {
            let stab = g.pointwise_stab(a);
            let mut out = a.clone();
            for o in stab.orbits() {
                if o.len() <= threshold {
                    out.extend(o);
                }
            }
            out
        }
    }
}

/// Witness of `a ≡_B a2`: the least element of G_(B) sending `a` to `a2`.
pub fn equiv_over(m: &Ambient, a: &[Point], a2: &[Point], b: &BTreeSet<Point>) -> Option<Perm> {
    m.group.pointwise_stab(b).find_mapping(a, a2)
}
