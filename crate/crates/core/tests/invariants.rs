//! Cross-module invariants: recount equivalences, neighborhood-difference
//! algebra, exhaustive small-scale sweeps, and sumset witness properties.

use proptest::prelude::*;
use std::collections::BTreeSet;

use sizespan::bitset::Bitset;
use sizespan::generate::uniform;
use sizespan::graph::{BipartiteGraph, OrderedPair, Side};
use sizespan::metrics::{degree_typical_vertices, density_in_bounds, RamseyParams};
use sizespan::sumset::{find_progression, sumset_oracle};
use sizespan::Error;

fn arb_graph(max_n: usize) -> impl Strategy<Value = BipartiteGraph> {
    (2..=max_n, 2..=max_n, any::<u64>(), 0.1f64..0.9).prop_map(|(n1, n2, seed, p)| {
        
        uniform(n1, n2, p, seed)
    })
}

proptest! {
    #[test]
    fn induced_count_matches_recount(g in arb_graph(12), mask1 in any::<u64>(), mask2 in any::<u64>()) {
        let u1 = Bitset::from_indices(g.n1(), (0..g.n1()).filter(|i| mask1 >> (i % 64) & 1 == 1));
        let u2 = Bitset::from_indices(g.n2(), (0..g.n2()).filter(|j| mask2 >> (j % 64) & 1 == 1));
        let fast = g.induced_edge_count(&u1, &u2).unwrap();
        let slow: u64 = u1.iter().map(|x| {
            u2.iter().filter(|&y| g.has_edge(x, y)).count() as u64
        }).sum();
        prop_assert_eq!(fast, slow);
    }

    #[test]
    fn div_symmetry_and_divb_partition(g in arb_graph(12), a in 0usize..12, b in 0usize..12) {
        let n = g.n1();
        let (a, b) = (a % n, b % n);
        prop_assume!(a != b);
        let div_ab = g.div(Side::V1, a, b).unwrap();
        let div_ba = g.div(Side::V1, b, a).unwrap();
        prop_assert_eq!(&div_ab, &div_ba);
        // divb(p) and the reverse one-sided difference partition div(p).
        let p = OrderedPair::new(&g, Side::V1, a, b).unwrap();
        let divb = g.divb(&p);
        let other = g.row(Side::V1, p.v).difference(g.row(Side::V1, p.u));
        prop_assert!(divb.is_disjoint_from(&other));
        prop_assert_eq!(divb.union(&other), div_ab);
        prop_assert!(2 * divb.count() >= g.div(Side::V1, a, b).unwrap().count());
    }

    #[test]
    fn degree_diff_additive_over_disjoint_sets(g in arb_graph(12), mask in any::<u64>()) {
        prop_assume!(g.n1() >= 2);
        let p = OrderedPair::new(&g, Side::V1, 0, 1).unwrap();
        let s = Bitset::from_indices(g.n2(), (0..g.n2()).filter(|j| mask >> (j % 64) & 1 == 1));
        let t = s.complement();
        let full = Bitset::full(g.n2());
        prop_assert_eq!(
            g.degree_diff(&p, &s) + g.degree_diff(&p, &t),
            g.degree_diff(&p, &full)
        );
        prop_assert!(g.degree_diff(&p, &full) >= 0);
    }

    #[test]
    fn edge_list_round_trip(g in arb_graph(10)) {
        let mut bytes = Vec::new();
        g.write_edge_list(&mut bytes).unwrap();
        let g2 = BipartiteGraph::read_edge_list(bytes.as_slice()).unwrap();
        let mut bytes2 = Vec::new();
        g2.write_edge_list(&mut bytes2).unwrap();
        prop_assert_eq!(bytes, bytes2);
    }

    #[test]
    fn progression_witnesses_stay_inside_the_sumset(
        sets in prop::collection::vec(
            prop::collection::btree_set(-12i64..=12, 1..=6),
            1..=12,
        ),
        wanted in 1usize..=6,
    ) {
        let sets: Vec<Vec<i64>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();
        let witness = match find_progression(&sets, wanted) {
            Ok(w) => w,
            Err(Error::InsufficientSets { best }) => *best,
            Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
        };
        witness.verify(&sets).unwrap();
        let oracle = sumset_oracle(&sets).unwrap();
        for t in witness.terms() {
            prop_assert!(oracle.contains(&t), "term {} escapes the sumset", t);
        }
    }

    #[test]
    fn progression_scaling_equivariance(
        base in prop::collection::vec(
            prop::collection::btree_set(0i64..=8, 2..=4),
            2..=6,
        ),
        scale in 2i64..=4,
    ) {
        let sets: Vec<Vec<i64>> = base.into_iter().map(|s| s.into_iter().collect()).collect();
        let scaled: Vec<Vec<i64>> =
            sets.iter().map(|s| s.iter().map(|x| x * scale).collect()).collect();
        let witness = match find_progression(&scaled, 2) {
            Ok(w) => w,
            Err(Error::InsufficientSets { best }) => *best,
            Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
        };
        witness.verify(&scaled).unwrap();
        // Every term is a scaled element of the unscaled sumset.
        let oracle = sumset_oracle(&sets).unwrap();
        prop_assert_eq!(witness.a % scale, 0);
        prop_assert_eq!(witness.d % scale, 0);
        for t in witness.terms() {
            prop_assert!(oracle.contains(&(t / scale)));
        }
    }
}

#[test]
fn recount_equivalence_exhaustive_on_small_graphs() {
    // All (u1, u2) pairs on sampled graphs with classes of size <= 8.
    for seed in 0..3u64 {
        let g = uniform(8, 8, 0.5, seed);
        for mask1 in 0u32..256 {
            let u1 = Bitset::from_indices(8, (0..8).filter(|&i| mask1 >> i & 1 == 1));
            for mask2 in 0u32..256 {
                let u2 = Bitset::from_indices(8, (0..8).filter(|&j| mask2 >> j & 1 == 1));
                let fast = g.induced_edge_count(&u1, &u2).unwrap();
                let slow: u64 =
                    u1.iter().map(|x| g.row(Side::V1, x).and_count(&u2) as u64).sum();
                assert_eq!(fast, slow);
            }
        }
    }
}

#[test]
fn density_and_typicality_exhaustive_at_3x3() {
    // Every graph on 3x3 vertex classes (all 512 edge subsets).
    let params = RamseyParams::new(2.0).unwrap();
    for mask in 0u32..512 {
        let edges: Vec<(usize, usize)> = (0..9)
            .filter(|&b| mask >> b & 1 == 1)
            .map(|b| (b / 3, b % 3))
            .collect();
        let g = BipartiteGraph::from_edges(3, 3, &edges).unwrap();
        let density = edges.len() as f64 / 9.0;
        assert_eq!(g.density(), density);
        assert_eq!(
            density_in_bounds(&g, &params),
            (1.0 / 32.0..=31.0 / 32.0).contains(&density)
        );
        let typical = degree_typical_vertices(&g, Side::V1, &params);
        for v in 0..3 {
            let d = g.degree(Side::V1, v) as f64;
            let expect = (3.0 / 32.0..=3.0 * 31.0 / 32.0).contains(&d);
            assert_eq!(typical.contains(v), expect, "mask {mask} vertex {v}");
        }
    }
}

#[test]
fn oracle_brute_force_agreement_random_pairs() {
    // div against a set-arithmetic oracle on a random graph.
    let g = uniform(8, 8, 0.5, 5);
    for a in 0..8 {
        for b in 0..8 {
            if a == b {
                continue;
            }
            let fast: BTreeSet<usize> = g.div(Side::V1, a, b).unwrap().iter().collect();
            let na: BTreeSet<usize> = g.row(Side::V1, a).iter().collect();
            let nb: BTreeSet<usize> = g.row(Side::V1, b).iter().collect();
            let slow: BTreeSet<usize> = na.symmetric_difference(&nb).copied().collect();
            assert_eq!(fast, slow);
        }
    }
}
