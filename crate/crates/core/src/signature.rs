//! The relational language L(η) and the clique constraint ζ.
//!
//! η and ζ are infinite sequences; only their finite supports are stored.
//! An arity outside `eta_support` carries no relation symbol, and an arity
//! `n` inside it with `ζ(n) = n` carries no clique constraint.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};

/// The pair (η, ζ): arities carrying a relation, and forbidden clique sizes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EtaZetaProfile {
    // arity -> ζ(arity); the key set is the η support
    zeta: BTreeMap<usize, usize>,
}

/// Validates `eta_support` and `zeta` into a profile.
///
/// Missing ζ entries default to the arity itself (no constraint). A ζ entry
/// of 0 for an arity outside the support is accepted, since that is the
/// value ζ takes there anyway.
pub fn make_profile(
    eta_support: &BTreeSet<usize>,
    zeta: &BTreeMap<usize, usize>,
) -> Result<EtaZetaProfile> {
    if let Some(&n) = eta_support.iter().find(|&&n| n < 2) {
        return Err(Error::ArityTooSmall(n));
    }
    for (&n, &bound) in zeta {
        if eta_support.contains(&n) {
            if bound < n {
                return Err(Error::ZetaBelowArity { arity: n, bound });
            }
        } else if bound > 0 {
            return Err(Error::ZetaOnDeadArity { arity: n, bound });
        }
    }
    let zeta = eta_support
        .iter()
        .map(|&n| (n, zeta.get(&n).copied().unwrap_or(n)))
        .collect();
    Ok(EtaZetaProfile { zeta })
}

/// True iff `n` carries a relation and ζ(n) = n.
pub fn is_unconstrained(p: &EtaZetaProfile, n: usize) -> bool {
    p.zeta.get(&n) == Some(&n)
}

impl EtaZetaProfile {
    /// Profile from literal lists, e.g. `from_parts(&[2], &[(2, 3)])`.
    pub fn from_parts(eta: &[usize], zeta: &[(usize, usize)]) -> Result<Self> {
        make_profile(
            &eta.iter().copied().collect(),
            &zeta.iter().copied().collect(),
        )
    }

    /// The language without relations (pure sets).
    pub fn empty() -> Self {
        EtaZetaProfile {
            zeta: BTreeMap::new(),
        }
    }

    /// The random graph: one binary relation, no constraint.
    pub fn random_graph() -> Self {
        Self::from_parts(&[2], &[]).expect("valid profile")
    }

    /// The universal homogeneous K_m-free graph.
    pub fn henson(m: usize) -> Result<Self> {
        Self::from_parts(&[2], &[(2, m)])
    }

    /// Arities with η(n) = 1, ascending.
    pub fn arities(&self) -> impl Iterator<Item = usize> + '_ {
        self.zeta.keys().copied()
    }

    pub fn eta_support(&self) -> BTreeSet<usize> {
        self.zeta.keys().copied().collect()
    }

    pub fn has_arity(&self, n: usize) -> bool {
        self.zeta.contains_key(&n)
    }

    /// ζ(n), with ζ(n) = 0 off the support.
    pub fn zeta(&self, n: usize) -> usize {
        self.zeta.get(&n).copied().unwrap_or(0)
    }

    pub fn zeta_map(&self) -> &BTreeMap<usize, usize> {
        &self.zeta
    }

    /// The forbidden clique size for arity `n`, if that arity is constrained.
    pub fn forbidden_clique(&self, n: usize) -> Option<usize> {
        match self.zeta.get(&n) {
            Some(&bound) if bound > n => Some(bound),
            _ => None,
        }
    }

    /// `(arity, clique size)` for every constrained arity.
    pub fn constraints(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.zeta
            .iter()
            .filter(|(&n, &bound)| bound > n)
            .map(|(&n, &bound)| (n, bound))
    }

    pub fn max_arity(&self) -> Option<usize> {
        self.zeta.keys().next_back().copied()
    }

    /// The `eta:` header line of the structure file format.
    pub fn eta_line(&self) -> String {
        let mut line = String::from("eta:");
        for n in self.arities() {
            line.push(' ');
            line.push_str(&n.to_string());
        }
        line
    }

    /// The `zeta:` header line, or `None` when nothing is constrained.
    pub fn zeta_line(&self) -> Option<String> {
        let entries: Vec<String> = self
            .constraints()
            .map(|(n, bound)| format!("{n}={bound}"))
            .collect();
        if entries.is_empty() {
            None
        } else {
            Some(format!("zeta: {}", entries.join(" ")))
        }
    }
}

impl fmt::Display for EtaZetaProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.eta_line())?;
        if let Some(z) = self.zeta_line() {
            write!(f, "; {z}")?;
        }
        Ok(())
    }
}

/// Parses the body of an `eta:` line (`2 3`).
pub fn parse_eta_list(body: &str) -> std::result::Result<BTreeSet<usize>, String> {
    body.split_whitespace()
        .map(|tok| {
            tok.parse::<usize>()
                .map_err(|_| format!("expected an arity, found `{tok}`"))
        })
        .collect()
}

/// Parses the body of a `zeta:` line (`2=3 3=4`).
pub fn parse_zeta_list(body: &str) -> std::result::Result<BTreeMap<usize, usize>, String> {
    let mut out = BTreeMap::new();
    for tok in body.split_whitespace() {
        let (n, k) = tok
            .split_once('=')
            .ok_or_else(|| format!("expected `<arity>=<bound>`, found `{tok}`"))?;
        let n = n
            .parse::<usize>()
            .map_err(|_| format!("bad arity in `{tok}`"))?;
        let k = k
            .parse::<usize>()
            .map_err(|_| format!("bad bound in `{tok}`"))?;
        if out.insert(n, k).is_some() {
            return Err(format!("arity {n} given twice"));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[usize]) -> BTreeSet<usize> {
        v.iter().copied().collect()
    }

    fn map(v: &[(usize, usize)]) -> BTreeMap<usize, usize> {
        v.iter().copied().collect()
    }

    #[test]
    fn random_graph_profile() {
        let p = make_profile(&set(&[2]), &map(&[])).unwrap();
        assert_eq!(p.eta_support(), set(&[2]));
        assert_eq!(p.zeta(2), 2);
        assert!(is_unconstrained(&p, 2));
        assert!(!is_unconstrained(&p, 3));
        assert_eq!(p, EtaZetaProfile::random_graph());
    }

    #[test]
    fn triangle_free_profile() {
        let p = make_profile(&set(&[2]), &map(&[(2, 3)])).unwrap();
        assert!(!is_unconstrained(&p, 2));
        assert_eq!(p.forbidden_clique(2), Some(3));
        assert_eq!(p.constraints().collect::<Vec<_>>(), vec![(2, 3)]);
    }

    #[test]
    fn validation_errors() {
        assert_eq!(
            make_profile(&set(&[2]), &map(&[(2, 1)])),
            Err(Error::ZetaBelowArity { arity: 2, bound: 1 })
        );
        assert_eq!(
            make_profile(&set(&[1, 2]), &map(&[])),
            Err(Error::ArityTooSmall(1))
        );
        assert_eq!(
            make_profile(&set(&[2]), &map(&[(3, 4)])),
            Err(Error::ZetaOnDeadArity { arity: 3, bound: 4 })
        );
        // ζ(n) = 0 off the support is the implicit value and is accepted.
        assert!(make_profile(&set(&[2]), &map(&[(3, 0)])).is_ok());
    }

    #[test]
    fn explicit_unconstrained_equals_default() {
        let a = make_profile(&set(&[2, 3]), &map(&[(2, 2)])).unwrap();
        let b = make_profile(&set(&[2, 3]), &map(&[])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn make_profile_is_idempotent() {
        let p = make_profile(&set(&[2, 3, 5]), &map(&[(3, 4), (5, 9)])).unwrap();
        let again = make_profile(&p.eta_support(), p.zeta_map()).unwrap();
        assert_eq!(p, again);
    }

    #[test]
    fn header_lines() {
        let p = EtaZetaProfile::from_parts(&[2, 3], &[(3, 4)]).unwrap();
        assert_eq!(p.eta_line(), "eta: 2 3");
        assert_eq!(p.zeta_line().as_deref(), Some("zeta: 3=4"));
        assert_eq!(EtaZetaProfile::empty().eta_line(), "eta:");
        assert_eq!(parse_zeta_list("2=3 3=4").unwrap(), map(&[(2, 3), (3, 4)]));
        assert!(parse_zeta_list("2=3 2=4").is_err());
        assert!(parse_eta_list("2 x").is_err());
    }
}
