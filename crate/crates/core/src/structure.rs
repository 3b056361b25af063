//! Pair-stars and pair-matchings: vertex families whose members have
//! nearly equal degrees but pairwise well-separated neighborhoods. These
//! are the edit gadgets the size solver uses; a single swap inside one
//! structure shifts an induced edge count by a controlled amount.
//!
//! Extraction buckets vertices by degree, collects within-bucket ordered
//! pairs, keeps the diverse ones, finds a large star or matching among
//! them, and prunes to pairwise diversity with a fewest-conflicts greedy.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::bitset::Bitset;
use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, OrderedPair, Side};
use crate::rng::{derive_seed, rng_from_seed};

/// Root plus leaves of nearly equal degree, pairwise diverse.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairStar {
    pub side: Side,
    pub root: usize,
    pub leaves: Vec<usize>,
    pub eps: f64,
}

/// Vertex-disjoint ordered pairs of nearly equal degree whose `divb` sets
/// avoid the other pairs' neighborhoods.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairMatching {
    pub side: Side,
    pub pairs: Vec<OrderedPair>,
    pub eps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PairStructure {
    Star(PairStar),
    Matching(PairMatching),
}

impl PairStructure {
    pub fn size(&self) -> usize {
        match self {
            PairStructure::Star(s) => s.leaves.len(),
            PairStructure::Matching(m) => m.pairs.len(),
        }
    }

    pub fn side(&self) -> Side {
        match self {
            PairStructure::Star(s) => s.side,
            PairStructure::Matching(m) => m.side,
        }
    }

    pub fn eps(&self) -> f64 {
        match self {
            PairStructure::Star(s) => s.eps,
            PairStructure::Matching(m) => m.eps,
        }
    }

    /// The head set: the root for a star, the first entry of every pair
    /// for a matching.
    pub fn head(&self) -> Vec<usize> {
        match self {
            PairStructure::Star(s) => vec![s.root],
            PairStructure::Matching(m) => m.pairs.iter().map(|p| p.u).collect(),
        }
    }

    pub fn vertices(&self) -> Vec<usize> {
        match self {
            PairStructure::Star(s) => {
                let mut v = vec![s.root];
                v.extend_from_slice(&s.leaves);
                v
            }
            PairStructure::Matching(m) => m.pairs.iter().flat_map(|p| [p.u, p.v]).collect(),
        }
    }

    /// Recomputes every definitional invariant against `g`; nothing from
    /// the extractor is trusted.
    pub fn verify(&self, g: &BipartiteGraph) -> Result<()> {
        match self {
            PairStructure::Star(s) => verify_star(g, s),
            PairStructure::Matching(m) => verify_matching(g, m),
        }
    }
}

fn invariant(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::MalformedInput(format!(
            "structure invariant violated: {}",
            msg()
        )))
    }
}

fn degree_cap(n_opp: usize) -> usize {
    (n_opp as f64).sqrt().ceil() as usize
}

fn verify_star(g: &BipartiteGraph, s: &PairStar) -> Result<()> {
    let n_side = g.class_size(s.side);
    let n_opp = g.opposite_size(s.side);
    let cap = degree_cap(n_opp);
    let mut all = vec![s.root];
    all.extend_from_slice(&s.leaves);
    invariant(!s.leaves.is_empty(), || "star has no leaves".into())?;
    for &v in &all {
        invariant(v < n_side, || format!("vertex {v} out of range"))?;
    }
    let mut dedup = all.clone();
    dedup.sort_unstable();
    dedup.dedup();
    invariant(dedup.len() == all.len(), || "star vertices repeat".into())?;
    let d0 = g.degree(s.side, s.root);
    for &leaf in &s.leaves {
        let dj = g.degree(s.side, leaf);
        invariant(dj.abs_diff(d0) <= cap, || {
            format!("leaf {leaf}: degree {dj} vs root {d0} beyond {cap}")
        })?;
    }
    let floor = s.eps * n_opp as f64;
    for i in 0..all.len() {
        for j in (i + 1)..all.len() {
            let div = g.div(s.side, all[i], all[j])?.count();
            invariant(div as f64 >= floor, || {
                format!("|div({}, {})| = {div} below {floor}", all[i], all[j])
            })?;
        }
    }
    Ok(())
}

fn verify_matching(g: &BipartiteGraph, m: &PairMatching) -> Result<()> {
    let n_opp = g.opposite_size(m.side);
    let cap = degree_cap(n_opp);
    invariant(!m.pairs.is_empty(), || "matching has no pairs".into())?;
    let full = Bitset::full(n_opp);
    for p in &m.pairs {
        invariant(p.side == m.side, || "pair on the wrong side".into())?;
        let canonical = OrderedPair::new(g, m.side, p.u, p.v)?;
        invariant(canonical == *p, || {
            format!("pair ({}, {}) violates ordering", p.u, p.v)
        })?;
        let dd = g.degree_diff(p, &full);
        invariant(dd >= 0 && dd as usize <= cap, || {
            format!("pair ({}, {}): degree gap {dd} beyond {cap}", p.u, p.v)
        })?;
    }
    for i in 0..m.pairs.len() {
        for j in (i + 1)..m.pairs.len() {
            invariant(m.pairs[i].is_disjoint(&m.pairs[j]), || {
                format!("pairs {i} and {j} share a vertex")
            })?;
        }
    }
    let floor = m.eps * n_opp as f64;
    for i in 0..m.pairs.len() {
        let divb = g.divb(&m.pairs[i]);
        for (j, other) in m.pairs.iter().enumerate() {
            if i == j {
                continue;
            }
            for z in other.vertices() {
                let escaped = divb.diff_count(g.row(m.side, z));
                invariant(escaped as f64 >= floor, || {
                    format!("|divb(p{i}) \\ N({z})| = {escaped} below {floor}")
                })?;
            }
        }
    }
    Ok(())
}

/// Extraction options; `eps0` is the diversity prefilter applied to raw
/// pairs before the star/matching dichotomy and defaults to `eps`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExtractOptions {
    pub eps0: Option<f64>,
}

const EXPLICIT_CONFLICT_LIMIT: usize = 4096;

/// Extracts an eps-pair-star or eps-pair-matching of exactly `target_size`
/// from the `side` class of `g`. All invariants are re-verified before the
/// structure is returned; on a shortfall the error reports the size
/// achieved.
pub fn extract_pair_structure(
    g: &BipartiteGraph,
    side: Side,
    eps: f64,
    target_size: usize,
    seed: u64,
) -> Result<PairStructure> {
    extract_pair_structure_with(g, side, eps, target_size, seed, ExtractOptions::default())
}

pub fn extract_pair_structure_with(
    g: &BipartiteGraph,
    side: Side,
    eps: f64,
    target_size: usize,
    seed: u64,
    opts: ExtractOptions,
) -> Result<PairStructure> {
    if target_size < 1 {
        return Err(Error::MalformedInput("target_size must be at least 1".into()));
    }
    let n_side = g.class_size(side);
    let n_opp = g.opposite_size(side);
    let eps0 = opts.eps0.unwrap_or(eps);

    // (1) Bucket by degree into intervals of width ceil(sqrt(n_opp)).
    let width = degree_cap(n_opp).max(1);
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); n_opp / width + 1];
    for v in 0..n_side {
        buckets[g.degree(side, v) / width].push(v);
    }

    // (2) Within-bucket ordered pairs, filtered to diversity >= eps0.
    let div_floor = eps0 * n_opp as f64;
    let mut s0: Vec<OrderedPair> = Vec::new();
    for bucket in &buckets {
        for (bi, &a) in bucket.iter().enumerate() {
            for &b in &bucket[bi + 1..] {
                let div = g.div(side, a, b)?.count();
                if div as f64 >= div_floor {
                    s0.push(OrderedPair::new(g, side, a, b)?);
                }
            }
        }
    }

    // (3) Star or matching among the edges of the auxiliary graph.
    let mut h_degree = vec![0usize; n_side];
    for p in &s0 {
        h_degree[p.u] += 1;
        h_degree[p.v] += 1;
    }
    let star_root = (0..n_side).max_by_key(|&v| (h_degree[v], std::cmp::Reverse(v)));
    let star_candidates: Vec<OrderedPair> = match star_root {
        Some(root) if h_degree[root] > 0 => s0
            .iter()
            .copied()
            .filter(|p| p.u == root || p.v == root)
            .collect(),
        _ => Vec::new(),
    };

    let mut shuffled = s0.clone();
    let mut rng = rng_from_seed(derive_seed(seed, 1));
    shuffled.shuffle(&mut rng);
    let mut used = Bitset::new(n_side);
    let mut matching: Vec<OrderedPair> = Vec::new();
    for p in &shuffled {
        if !used.contains(p.u) && !used.contains(p.v) {
            used.insert(p.u);
            used.insert(p.v);
            matching.push(*p);
        }
    }

    // (4) Turan-style pruning on whichever branch has more raw material,
    // falling back to the other on a shortfall.
    let star_first = star_candidates.len() >= matching.len();
    let mut achieved = 0usize;
    for attempt in 0..2 {
        let use_star = star_first == (attempt == 0);
        let result = if use_star {
            build_star(g, side, eps, target_size, star_root, &star_candidates)
        } else {
            build_matching(g, side, eps, target_size, &matching)
        };
        match result {
            Ok(structure) => {
                structure.verify(g)?;
                return Ok(structure);
            }
            Err(Error::StructureFailure { achieved: a, .. }) => achieved = achieved.max(a),
            Err(e) => return Err(e),
        }
    }
    Err(Error::StructureFailure { achieved, wanted: target_size })
}

fn build_star(
    g: &BipartiteGraph,
    side: Side,
    eps: f64,
    target_size: usize,
    root: Option<usize>,
    candidates: &[OrderedPair],
) -> Result<PairStructure> {
    let n_opp = g.opposite_size(side);
    let floor = eps * n_opp as f64;
    let root = match root {
        Some(r) if !candidates.is_empty() => r,
        _ => return Err(Error::StructureFailure { achieved: 0, wanted: target_size }),
    };
    // The root survives filtering by construction: drop leaves that
    // conflict with it up front.
    let leaves: Vec<usize> = candidates
        .iter()
        .map(|p| if p.u == root { p.v } else { p.u })
        .filter(|&l| {
            g.div(side, root, l)
                .map(|d| d.count() as f64 >= floor)
                .unwrap_or(false)
        })
        .collect();
    let conflict = |i: usize, j: usize| {
        let div = g
            .div(side, leaves[i], leaves[j])
            .expect("distinct leaves")
            .count();
        (div as f64) < floor
    };
    let kept = turan_greedy(leaves.len(), conflict, target_size);
    if kept.len() < target_size {
        return Err(Error::StructureFailure { achieved: kept.len(), wanted: target_size });
    }
    Ok(PairStructure::Star(PairStar {
        side,
        root,
        leaves: kept.into_iter().map(|i| leaves[i]).collect(),
        eps,
    }))
}

fn build_matching(
    g: &BipartiteGraph,
    side: Side,
    eps: f64,
    target_size: usize,
    pairs: &[OrderedPair],
) -> Result<PairStructure> {
    let n_opp = g.opposite_size(side);
    let floor = eps * n_opp as f64;
    let divbs: Vec<Bitset> = pairs.iter().map(|p| g.divb(p)).collect();
    let conflict = |i: usize, j: usize| {
        let badly_covered = |a: usize, b: usize| {
            pairs[b]
                .vertices()
                .iter()
                .any(|&z| (divbs[a].diff_count(g.row(side, z)) as f64) < floor)
        };
        badly_covered(i, j) || badly_covered(j, i)
    };
    let kept = turan_greedy(pairs.len(), conflict, target_size);
    if kept.len() < target_size {
        return Err(Error::StructureFailure { achieved: kept.len(), wanted: target_size });
    }
    Ok(PairStructure::Matching(PairMatching {
        side,
        pairs: kept.into_iter().map(|i| pairs[i]).collect(),
        eps,
    }))
}

/// Greedy independent set in the conflict graph: repeatedly keep the
/// candidate with fewest conflicts among those still alive (lowest index
/// on ties) and discard its conflictors, until `target` members are kept
/// or the pool runs dry. The conflict relation is materialized as bitset
/// rows when small enough, and recomputed on demand otherwise.
fn turan_greedy<F: Fn(usize, usize) -> bool>(n: usize, conflict: F, target: usize) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    let explicit: Option<Vec<Bitset>> = (n <= EXPLICIT_CONFLICT_LIMIT).then(|| {
        let mut rows = vec![Bitset::new(n); n];
        for i in 0..n {
            for j in (i + 1)..n {
                if conflict(i, j) {
                    rows[i].insert(j);
                    rows[j].insert(i);
                }
            }
        }
        rows
    });
    let conflicts_with = |i: usize, j: usize| match &explicit {
        Some(rows) => rows[i].contains(j),
        None => conflict(i, j),
    };

    let mut alive = Bitset::full(n);
    let mut kept = Vec::new();
    while kept.len() < target && !alive.is_empty() {
        let best = match &explicit {
            Some(rows) => alive
                .iter()
                .min_by_key(|&i| (rows[i].and_count(&alive), i))
                .unwrap(),
            None => alive
                .iter()
                .min_by_key(|&i| {
                    (alive.iter().filter(|&j| j != i && conflict(i, j)).count(), i)
                })
                .unwrap(),
        };
        kept.push(best);
        let clashing: Vec<usize> = alive
            .iter()
            .filter(|&j| j == best || conflicts_with(best, j))
            .collect();
        for j in clashing {
            alive.remove(j);
        }
    }
    kept
}

/// Repeatedly extracts vertex-disjoint structures, each of size
/// `per_structure_size`, never touching `forbidden` (a set over the `side`
/// class). Errors carry every structure obtained before the shortfall.
pub fn extract_disjoint_family(
    g: &BipartiteGraph,
    side: Side,
    eps: f64,
    per_structure_size: usize,
    family_size: usize,
    forbidden: &Bitset,
    seed: u64,
) -> Result<Vec<PairStructure>> {
    if family_size < 1 {
        return Err(Error::MalformedInput("family_size must be at least 1".into()));
    }
    let n_side = g.class_size(side);
    if forbidden.len() != n_side {
        return Err(Error::MalformedInput(
            "forbidden set sized for the wrong class".into(),
        ));
    }
    let mut used = forbidden.clone();
    let mut family = Vec::with_capacity(family_size);
    for t in 0..family_size {
        let allowed = used.complement();
        let (sub, map_side) = match side {
            Side::V1 => {
                let (sub, m1, _) = g.induced_subgraph(&allowed, &Bitset::full(g.n2()));
                (sub, m1)
            }
            Side::V2 => {
                let (sub, _, m2) = g.induced_subgraph(&Bitset::full(g.n1()), &allowed);
                (sub, m2)
            }
        };
        let extracted = extract_pair_structure(
            &sub,
            side,
            eps,
            per_structure_size,
            derive_seed(seed, t as u64),
        );
        match extracted {
            Ok(structure) => {
                let mapped = remap_structure(&structure, &map_side);
                mapped.verify(g)?;
                for v in mapped.vertices() {
                    used.insert(v);
                }
                family.push(mapped);
            }
            Err(Error::StructureFailure { .. }) => {
                return Err(Error::FamilyFailure { achieved: family, wanted: family_size })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(family)
}

/// Translates subgraph-local vertex indices back to the parent graph.
/// Dropping side-class vertices leaves neighborhoods over the opposite
/// class untouched, so ordering conventions and diversity floors carry
/// over unchanged.
pub(crate) fn remap_structure(s: &PairStructure, map: &[usize]) -> PairStructure {
    match s {
        PairStructure::Star(star) => PairStructure::Star(PairStar {
            side: star.side,
            root: map[star.root],
            leaves: star.leaves.iter().map(|&l| map[l]).collect(),
            eps: star.eps,
        }),
        PairStructure::Matching(m) => PairStructure::Matching(PairMatching {
            side: m.side,
            pairs: m
                .pairs
                .iter()
                .map(|p| OrderedPair { side: p.side, u: map[p.u], v: map[p.v] })
                .collect(),
            eps: m.eps,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::uniform;

    #[test]
    fn complete_graph_yields_nothing() {
        let g = BipartiteGraph::complete(8, 8);
        match extract_pair_structure(&g, Side::V1, 0.1, 2, 1) {
            Err(Error::StructureFailure { achieved, .. }) => assert_eq!(achieved, 0),
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn disjoint_halves_make_a_structure() {
        // Four V1-vertices of equal degree, pairwise |div| = n2/2.
        let n2 = 8;
        let rows = vec![
            Bitset::from_indices(n2, [0, 1, 2, 3]),
            Bitset::from_indices(n2, [4, 5, 6, 7]),
            Bitset::from_indices(n2, [0, 1, 4, 5]),
            Bitset::from_indices(n2, [2, 3, 6, 7]),
        ];
        let g = BipartiteGraph::from_rows(rows, n2).unwrap();
        let s = extract_pair_structure(&g, Side::V1, 0.25, 3, 7).unwrap();
        assert!(s.size() >= 3);
        s.verify(&g).unwrap();
    }

    #[test]
    fn random_graph_structure_passes_recount() {
        let g = uniform(64, 64, 0.5, 11);
        let s = extract_pair_structure(&g, Side::V1, 0.05, 4, 3).unwrap();
        assert_eq!(s.size(), 4);
        s.verify(&g).unwrap();
    }

    #[test]
    fn family_members_are_disjoint() {
        let g = uniform(128, 128, 0.5, 5);
        let family =
            extract_disjoint_family(&g, Side::V1, 0.02, 4, 3, &Bitset::new(128), 9).unwrap();
        assert_eq!(family.len(), 3);
        let mut seen = Bitset::new(128);
        for s in &family {
            s.verify(&g).unwrap();
            for v in s.vertices() {
                assert!(!seen.contains(v), "vertex {v} reused");
                seen.insert(v);
            }
        }
    }

    #[test]
    fn family_of_one_is_a_single_extraction() {
        let g = uniform(64, 64, 0.5, 13);
        let family =
            extract_disjoint_family(&g, Side::V1, 0.02, 4, 1, &Bitset::new(64), 3).unwrap();
        assert_eq!(family.len(), 1);
        assert_eq!(family[0].size(), 4);
        family[0].verify(&g).unwrap();
    }

    #[test]
    fn family_respects_forbidden() {
        let g = uniform(64, 64, 0.5, 2);
        let mut forbidden = Bitset::new(64);
        for v in 0..32 {
            forbidden.insert(v);
        }
        let family = extract_disjoint_family(&g, Side::V1, 0.02, 3, 2, &forbidden, 4).unwrap();
        for s in &family {
            for v in s.vertices() {
                assert!(v >= 32, "vertex {v} was forbidden");
            }
        }
    }

    #[test]
    fn family_failure_reports_partial() {
        let g = BipartiteGraph::complete(8, 8);
        match extract_disjoint_family(&g, Side::V1, 0.1, 2, 3, &Bitset::new(8), 0) {
            Err(Error::FamilyFailure { achieved, wanted }) => {
                assert!(achieved.is_empty());
                assert_eq!(wanted, 3);
            }
            other => panic!("expected family failure, got {other:?}"),
        }
    }

    #[test]
    fn star_leaf_degrees_stay_in_band() {
        let g = uniform(128, 128, 0.5, 21);
        for seed in 0..4 {
            if let Ok(PairStructure::Star(star)) =
                extract_pair_structure(&g, Side::V1, 0.05, 5, seed)
            {
                let cap = degree_cap(128);
                let degrees: Vec<usize> = std::iter::once(star.root)
                    .chain(star.leaves.iter().copied())
                    .map(|v| g.degree(Side::V1, v))
                    .collect();
                let lo = degrees.iter().min().unwrap();
                let hi = degrees.iter().max().unwrap();
                assert!(hi - lo <= 2 * cap, "degree span {} beyond {}", hi - lo, 2 * cap);
            }
        }
    }

    /// Exhaustive search for a matching of size `m` on a small edge list
    /// (test oracle; prunes on remaining edges and stops at `m`).
    fn has_matching_of_size(edges: &[(usize, usize)], m: usize) -> bool {
        fn rec(edges: &[(usize, usize)], used: u64, count: usize, from: usize, m: usize) -> bool {
            if count >= m {
                return true;
            }
            if count + (edges.len() - from) < m {
                return false;
            }
            for (idx, &(a, b)) in edges.iter().enumerate().skip(from) {
                let mask = (1u64 << a) | (1u64 << b);
                if used & mask == 0 && rec(edges, used | mask, count + 1, idx + 1, m) {
                    return true;
                }
            }
            false
        }
        rec(edges, 0, 0, 0, m)
    }

    #[test]
    fn dichotomy_star_or_matching() {
        // A graph with at least 2m^2 edges has a vertex of degree m+1 or a
        // matching of size m. Random instances, m <= 20.
        let mut rng = rng_from_seed(99);
        for _ in 0..50 {
            use rand::Rng;
            let n = rng.random_range(6..40usize);
            let mut edges = Vec::new();
            for a in 0..n {
                for b in (a + 1)..n {
                    if rng.random_bool(0.3) {
                        edges.push((a, b));
                    }
                }
            }
            if edges.is_empty() {
                continue;
            }
            let m = ((edges.len() as f64 / 2.0).sqrt().floor() as usize).min(20);
            if m == 0 {
                continue;
            }
            let mut deg = vec![0usize; n];
            for &(a, b) in &edges {
                deg[a] += 1;
                deg[b] += 1;
            }
            let star = deg.iter().max().copied().unwrap_or(0);
            assert!(
                star > m || has_matching_of_size(&edges, m),
                "dichotomy failed: e={} m={m} star={star}",
                edges.len()
            );
        }
    }

    #[test]
    fn structure_json_shape() {
        let g = uniform(32, 32, 0.5, 8);
        let s = extract_pair_structure(&g, Side::V1, 0.05, 3, 12).unwrap();
        let json = serde_json::to_value(&s).unwrap();
        let kind = json.get("kind").and_then(|k| k.as_str()).unwrap();
        assert!(kind == "star" || kind == "matching");
        assert!(json.get("eps").is_some());
        let back: PairStructure = serde_json::from_value(json).unwrap();
        assert_eq!(back, s);
    }
}
