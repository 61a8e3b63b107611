//! Permutations of `0..degree`, composed left to right.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::Point;

/// A bijection stored as its image array. `a.then(b)` applies `a` first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Perm {
    image: Vec<Point>,
}

impl Perm {
    pub fn identity(degree: usize) -> Self {
        Perm {
            image: (0..degree).collect(),
        }
    }

    pub fn from_images(image: Vec<Point>) -> Result<Self> {
        let mut seen = vec![false; image.len()];
        for &p in &image {
            if p >= image.len() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvariantViolation(format!(
                    "{image:?} is not a permutation"
                )));
            }
        }
        Ok(Perm { image })
    }

    /// Extends a bijective partial map to `0..degree` by fixing the rest.
    pub fn from_map(degree: usize, map: &BTreeMap<Point, Point>) -> Result<Self> {
        let mut image: Vec<Point> = (0..degree).collect();
        for (&a, &b) in map {
            if a >= degree {
                return Err(Error::UnknownPoint(a));
            }
            image[a] = b;
        }
        Self::from_images(image)
    }

    /// Product of disjoint or overlapping cycles, applied left to right.
    pub fn from_cycles(degree: usize, cycles: &[Vec<Point>]) -> Result<Self> {
        let mut acc = Perm::identity(degree);
        for c in cycles {
            let mut image: Vec<Point> = (0..degree).collect();
            for (i, &a) in c.iter().enumerate() {
                if a >= degree {
                    return Err(Error::UnknownPoint(a));
                }
                image[a] = c[(i + 1) % c.len()];
            }
            acc = acc.then(&Self::from_images(image)?);
        }
        Ok(acc)
    }

    /// Parses cycle notation such as `(0 1 2)(3 4)` or `()`.
    pub fn parse(degree: usize, text: &str) -> Result<Self> {
        let text = text.trim();
        let mut cycles = Vec::new();
        let mut rest = text;
        while !rest.is_empty() {
            let Some(inner) = rest.strip_prefix('(') else {
                return Err(Error::Usage(format!("bad cycle notation `{text}`")));
            };
            let close = inner
                .find(')')
                .ok_or_else(|| Error::Usage(format!("unclosed cycle in `{text}`")))?;
            let cycle = inner[..close]
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<Point>()
                        .map_err(|_| Error::Usage(format!("bad point `{t}` in `{text}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut sorted = cycle.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != cycle.len() {
                return Err(Error::Usage(format!("repeated point in cycle of `{text}`")));
            }
            cycles.push(cycle);
            rest = inner[close + 1..].trim_start();
        }
        Self::from_cycles(degree, &cycles)
    }

    pub fn degree(&self) -> usize {
        self.image.len()
    }

    pub fn apply(&self, p: Point) -> Point {
        self.image.get(p).copied().unwrap_or(p)
    }

    pub fn images(&self) -> &[Point] {
        &self.image
    }

    pub fn then(&self, next: &Perm) -> Perm {
        debug_assert_eq!(self.degree(), next.degree());
        Perm {
            image: self.image.iter().map(|&p| next.apply(p)).collect(),
        }
    }

    pub fn inverse(&self) -> Perm {
        let mut image = vec![0; self.image.len()];
        for (a, &b) in self.image.iter().enumerate() {
            image[b] = a;
        }
        Perm { image }
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(a, &b)| a == b)
    }

    pub fn fixes(&self, p: Point) -> bool {
        self.apply(p) == p
    }

    pub fn order(&self) -> usize {
        let mut k = 1;
        let mut acc = self.clone();
        while !acc.is_identity() {
            acc = acc.then(self);
            k += 1;
        }
        k
    }

    /// Non-trivial cycles, each starting at its least point, ordered by it.
    pub fn cycles(&self) -> Vec<Vec<Point>> {
        let mut seen = vec![false; self.image.len()];
        let mut out = Vec::new();
        for start in 0..self.image.len() {
            if seen[start] || self.image[start] == start {
                continue;
            }
            let mut c = vec![start];
            seen[start] = true;
            let mut p = self.image[start];
            while p != start {
                seen[p] = true;
                c.push(p);
                p = self.image[p];
            }
            out.push(c);
        }
        out
    }
}

impl fmt::Display for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles = self.cycles();
        if cycles.is_empty() {
            return write!(f, "()");
        }
        for c in cycles {
            let body: Vec<String> = c.iter().map(ToString::to_string).collect();
            write!(f, "({})", body.join(" "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn left_to_right_composition() {
        let a = Perm::parse(3, "(0 1)").unwrap();
        let b = Perm::parse(3, "(1 2)").unwrap();
        // 0 -a-> 1 -b-> 2
        assert_eq!(a.then(&b).apply(0), 2);
        assert_eq!(a.then(&b).to_string(), "(0 2 1)");
    }

    #[test]
    fn cycle_text_round_trip() {
        for t in ["()", "(0 1 2)(3 4)", "(1 3)"] {
            assert_eq!(Perm::parse(5, t).unwrap().to_string(), t);
        }
        assert!(Perm::parse(3, "(0 0)").is_err());
        assert!(Perm::parse(3, "(0 5)").is_err());
        assert!(Perm::parse(3, "0 1").is_err());
    }

    #[test]
    fn inverse_and_order() {
        let p = Perm::parse(5, "(0 1 2)(3 4)").unwrap();
        assert!(p.then(&p.inverse()).is_identity());
        assert_eq!(p.order(), 6);
    }
}
