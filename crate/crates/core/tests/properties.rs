use std::collections::{BTreeSet, HashSet};

use proptest::prelude::*;

use fraisse::amalgam::free_amalgam;
use fraisse::finstruct::{canonical_key, induced, isomorphic};
use fraisse::format::{emit_structure, parse_structure};
use fraisse::generic::{check_extension_axioms_in, saturate};
use fraisse::independence::{
    check_sir_axioms, check_stabilizer_generation, factorize, indep, indep_by_definition,
};
use fraisse::permgroup::automorphisms;
use fraisse::recon::{eppa_search, predicate_bn, predicate_bnk, verify_eppa};
use fraisse::{AclMode, Ambient, Class, Error, EtaZetaProfile, FinStructure, PartialIso, Perm, PermGroup, Point};

fn pairs(n: usize) -> Vec<(Point, Point)> {
    (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect()
}

fn graph_from_mask(n: usize, mask: u64) -> FinStructure {
    let edges: Vec<(Point, Point)> = pairs(n)
        .into_iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, e)| e)
        .collect();
    FinStructure::graph(n, &edges).unwrap()
}

fn arb_graph(max_n: usize) -> impl Strategy<Value = FinStructure> {
    (1..=max_n, any::<u64>()).prop_map(|(n, mask)| graph_from_mask(n, mask))
}

fn arb_mixed(max_n: usize) -> impl Strategy<Value = FinStructure> {
    (1..=max_n, any::<u64>(), any::<u64>()).prop_map(|(n, m2, m3)| {
        let p = EtaZetaProfile::from_parts(&[2, 3], &[]).unwrap();
        let mut s = FinStructure::edgeless(p, n);
        for (i, (a, b)) in pairs(n).into_iter().enumerate() {
            if m2 >> i & 1 == 1 {
                s.add_edge(&[a, b]).unwrap();
            }
        }
        let mut i = 0;
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    if m3 >> i & 1 == 1 {
                        s.add_edge(&[a, b, c]).unwrap();
                    }
                    i += 1;
                }
            }
        }
        s
    })
}

fn subset(n: usize, mask: u32) -> BTreeSet<Point> {
    (0..n).filter(|i| mask >> i & 1 == 1).collect()
}

fn shuffled(n: usize, seed: u64) -> Vec<Point> {
    let mut v: Vec<Point> = (0..n).collect();
    let mut x = seed | 1;
    for i in (1..n).rev() {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        v.swap(i, (x % (i as u64 + 1)) as usize);
    }
    v
}

fn image(g: &Perm, s: &BTreeSet<Point>) -> BTreeSet<Point> {
    s.iter().map(|&p| g.apply(p)).collect()
}

/// Subgroup generated by `gens`, by closing the set under products.
fn closure(degree: usize, gens: &[Perm]) -> HashSet<Perm> {
    let mut all: HashSet<Perm> = [Perm::identity(degree)].into();
    let mut frontier: Vec<Perm> = all.iter().cloned().collect();
    while let Some(x) = frontier.pop() {
        for g in gens {
            let y = x.then(g);
            if all.insert(y.clone()) {
                frontier.push(y);
            }
        }
    }
    all
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn emission_round_trips(s in arb_mixed(6)) {
        let text = emit_structure(&s);
        let back = parse_structure(&text).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(emit_structure(&back), text);
    }

    #[test]
    fn canonical_key_ignores_labels(s in arb_mixed(6), seed in any::<u64>()) {
        let sigma = shuffled(s.len(), seed);
        let t = s.relabel(|p| sigma[p]);
        prop_assert_eq!(canonical_key(&s, &[]), canonical_key(&t, &[]));
        let f = isomorphic(&s, &t).unwrap();
        prop_assert!(f.is_isomorphism_between(&s, &t));
    }

    #[test]
    fn non_isomorphic_graphs_have_distinct_keys(a in arb_graph(5), b in arb_graph(5)) {
        let same_key = canonical_key(&a, &[]) == canonical_key(&b, &[]);
        prop_assert_eq!(same_key, isomorphic(&a, &b).is_some());
    }

    #[test]
    fn free_amalgams_restrict_to_both_sides(
        n in 2usize..8, mask in any::<u64>(), base in any::<u32>(), side in any::<u32>()
    ) {
        let g = graph_from_mask(n, mask);
        let tri_free = FinStructure::with_edges(
            EtaZetaProfile::henson(3).unwrap(), 0..n, g.all_edges().cloned().collect::<Vec<_>>()
        );
        let base = subset(n, base);
        let left: BTreeSet<Point> = (0..n).filter(|p| base.contains(p) || side >> p & 1 == 1).collect();
        let right: BTreeSet<Point> = (0..n).filter(|p| base.contains(p) || side >> p & 1 == 0).collect();
        let l = induced(&g, &left).unwrap();
        let r = induced(&g, &right).unwrap();
        let am = free_amalgam(&l, &r, &base).unwrap().amalgam;
        prop_assert_eq!(induced(&am, &left).unwrap(), l.clone());
        prop_assert_eq!(induced(&am, &right).unwrap(), r.clone());
        prop_assert!(am.all_edges().all(|e| e.iter().all(|p| left.contains(p)) || e.iter().all(|p| right.contains(p))));
        if let Ok(t) = tri_free {
            let class = Class::new(t.profile().clone());
            let (tl, tr) = (induced(&t, &left).unwrap(), induced(&t, &right).unwrap());
            if class.contains(&tl) && class.contains(&tr) {
                prop_assert!(class.contains(&free_amalgam(&tl, &tr, &base).unwrap().amalgam));
            }
        }
    }

    #[test]
    fn independence_symmetry_and_definition(s in arb_mixed(6), a in any::<u32>(), b in any::<u32>(), c in any::<u32>()) {
        let n = s.len();
        let (a, b, c) = (subset(n, a), subset(n, b), subset(n, c));
        let x = indep(&s, &a, &b, &c);
        prop_assert_eq!(x, indep(&s, &b, &a, &c));
        prop_assert_eq!(x, indep_by_definition(&s, &a, &b, &c));
    }

    #[test]
    fn independence_is_invariant(s in arb_graph(6), a in any::<u32>(), b in any::<u32>(), c in any::<u32>()) {
        let n = s.len();
        let (a, b, c) = (subset(n, a), subset(n, b), subset(n, c));
        let x = indep(&s, &a, &b, &c);
        for g in automorphisms(&s).unwrap().elements() {
            prop_assert_eq!(x, indep(&s, &image(g, &a), &image(g, &b), &image(g, &c)));
        }
    }

    #[test]
    fn independence_is_monotone(
        s in arb_graph(7), a in any::<u32>(), b in any::<u32>(), c in any::<u32>(), d in any::<u32>()
    ) {
        let n = s.len();
        let (a, b, c, d) = (subset(n, a), subset(n, b), subset(n, c), subset(n, d));
        let bd: BTreeSet<Point> = b.union(&d).copied().collect();
        let bc: BTreeSet<Point> = b.union(&c).copied().collect();
        if indep(&s, &a, &bd, &c) {
            prop_assert!(indep(&s, &a, &b, &c));
            prop_assert!(indep(&s, &a, &d, &bc));
        }
    }

    #[test]
    fn small_graphs_never_refute_the_axioms(s in arb_graph(5)) {
        let m = Ambient::new(s).unwrap();
        for r in check_sir_axioms(&m, 2).unwrap() {
            prop_assert!(!r.refuted(), "{} refuted", r.axiom);
        }
    }

    #[test]
    fn factorization_witnesses_verify(n in 2usize..6, mask in any::<u64>(), a in any::<u32>(), b in any::<u32>(), pick in any::<usize>()) {
        let m = Ambient::new(graph_from_mask(n, mask)).unwrap();
        let (a, b) = (subset(n, a), subset(n, b));
        let meet: BTreeSet<Point> = a.intersection(&b).copied().collect();
        let stab = m.group.pointwise_stab(&meet);
        let g = &stab.elements()[pick % stab.order()];
        match factorize(&m, &a, &b, g, AclMode::ClassSemantics) {
            Ok(w) => {
                prop_assert!(w.verify(&m.group));
                prop_assert_eq!(&w.product(), g);
            }
            Err(e) => prop_assert!(matches!(e, Error::StepFailed { .. }), "{e}"),
        }
    }

    #[test]
    fn stabilizer_generation_matches_closure(n in 1usize..6, mask in any::<u64>(), a in any::<u32>(), b in any::<u32>()) {
        let m = Ambient::new(graph_from_mask(n, mask)).unwrap();
        let (a, b) = (subset(n, a), subset(n, b));
        let r = check_stabilizer_generation(&m, &a, &b, AclMode::ClassSemantics).unwrap();
        let meet: BTreeSet<Point> = a.intersection(&b).copied().collect();
        let lhs: HashSet<Perm> = m.group.elements().iter().filter(|g| meet.iter().all(|&p| g.fixes(p))).cloned().collect();
        let fixes = |s: &BTreeSet<Point>| -> Vec<Perm> {
            m.group.elements().iter().filter(|g| s.iter().all(|&p| g.fixes(p))).cloned().collect()
        };
        let gens: Vec<Perm> = fixes(&a).into_iter().chain(fixes(&b)).collect();
        let rhs = closure(n, &gens);
        prop_assert_eq!(r.lhs.elements().iter().cloned().collect::<HashSet<_>>(), lhs.clone());
        prop_assert_eq!(r.rhs.elements().iter().cloned().collect::<HashSet<_>>(), rhs.clone());
        prop_assert_eq!(r.equal, lhs == rhs);
    }

    #[test]
    fn orbit_predicates_are_conjugation_invariant(s in arb_mixed(5), seed in any::<u64>()) {
        let sigma = shuffled(s.len(), seed);
        let h = automorphisms(&s).unwrap();
        let h2 = automorphisms(&s.relabel(|p| sigma[p])).unwrap();
        for n in 2..=3 {
            prop_assert_eq!(predicate_bn(&h, n).unwrap().is_some(), predicate_bn(&h2, n).unwrap().is_some());
            if n <= s.len() {
                let x = predicate_bnk(&h, n, 3).unwrap();
                let y = predicate_bnk(&h2, n, 3).unwrap();
                prop_assert_eq!(x.holds, y.holds);
                if x.holds {
                    prop_assert_eq!(x.families, y.families);
                }
            }
        }
        prop_assert!(predicate_bn(&h, 3).unwrap().is_none() || s.len() >= 3);
    }

    #[test]
    fn eppa_successes_verify(n in 1usize..4, mask in any::<u64>(), pmask in any::<u32>(), seed in any::<u64>()) {
        let a = graph_from_mask(n, mask);
        let dom = subset(n, pmask);
        let sigma = shuffled(n, seed);
        let pairs: Vec<(Point, Point)> = dom.iter().map(|&p| (p, sigma[p])).collect();
        let Ok(p) = PartialIso::new(&a, &a, pairs) else { return Ok(()); };
        match eppa_search(&a, std::slice::from_ref(&p), 5) {
            Ok(w) => prop_assert!(verify_eppa(&a, &[p], &w)),
            Err(e) => prop_assert_eq!(e, Error::NotFoundWithinBudget(5)),
        }
    }

    #[test]
    fn permutation_groups_satisfy_orbit_stabilizer(s in arb_mixed(6)) {
        let g = automorphisms(&s).unwrap();
        for p in s.points() {
            let stab = g.pointwise_stab(&[*p].into());
            prop_assert_eq!(g.order(), g.orbit(*p).len() * stab.order());
        }
        let regen = PermGroup::from_generators(g.ground().clone(), g.generators()).unwrap();
        prop_assert_eq!(regen.order(), g.order());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn saturation_keeps_the_seed_and_the_class(n in 1usize..5, mask in any::<u64>()) {
        let profile = EtaZetaProfile::henson(3).unwrap();
        let class = Class::new(profile.clone());
        let g = graph_from_mask(n, mask);
        let seed = FinStructure::with_edges(profile.clone(), 0..n, g.all_edges().cloned().collect::<Vec<_>>()).unwrap();
        prop_assume!(class.contains(&seed));
        let out = saturate(&profile, 2, Some(&seed), 64).unwrap();
        prop_assert!(class.contains(&out.structure));
        prop_assert!(check_extension_axioms_in(&class, &out.structure, 2).is_empty());
        prop_assert_eq!(induced(&out.structure, seed.points()).unwrap(), seed);
    }
}
