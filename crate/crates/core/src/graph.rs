//! Bipartite graph representation with bitset adjacency rows, induced-edge
//! counting, and the neighborhood-difference primitives (`div`, `divb`,
//! degree differences) used everywhere else.

use std::io::{BufRead, Write};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::bitset::Bitset;
use crate::error::{Error, Result};

/// Which vertex class a vertex (or vertex set) belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    V1,
    V2,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::V1 => Side::V2,
            Side::V2 => Side::V1,
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::V1 => write!(f, "V1"),
            Side::V2 => write!(f, "V2"),
        }
    }
}

/// Optional provenance for generated graphs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphMeta {
    pub model: String,
    pub seed: Option<u64>,
    pub density: Option<f64>,
}

/// A bipartite graph `(V1, V2, E)` with `V1`-side bitset adjacency rows.
///
/// The `V2`-side transpose is built lazily on first access and cached;
/// after construction the graph is immutable and safe to share across
/// threads.
pub struct BipartiteGraph {
    n1: usize,
    n2: usize,
    rows: Vec<Bitset>,
    transpose: OnceLock<Vec<Bitset>>,
    edge_count: OnceLock<u64>,
    pub meta: Option<GraphMeta>,
}

impl Clone for BipartiteGraph {
    fn clone(&self) -> Self {
        BipartiteGraph {
            n1: self.n1,
            n2: self.n2,
            rows: self.rows.clone(),
            transpose: OnceLock::new(),
            edge_count: OnceLock::new(),
            meta: self.meta.clone(),
        }
    }
}

impl std::fmt::Debug for BipartiteGraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BipartiteGraph")
            .field("n1", &self.n1)
            .field("n2", &self.n2)
            .field("edges", &self.edge_count())
            .finish()
    }
}

impl BipartiteGraph {
    /// Builds a graph from adjacency rows. Each row must have exactly `n2`
    /// addressable positions.
    pub fn from_rows(rows: Vec<Bitset>, n2: usize) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n2 {
                return Err(Error::MalformedInput(format!(
                    "row {i} has {} positions, expected {n2}",
                    row.len()
                )));
            }
        }
        Ok(BipartiteGraph {
            n1: rows.len(),
            n2,
            rows,
            transpose: OnceLock::new(),
            edge_count: OnceLock::new(),
            meta: None,
        })
    }

    pub fn from_edges(n1: usize, n2: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut rows = vec![Bitset::new(n2); n1];
        for &(i, j) in edges {
            if i >= n1 || j >= n2 {
                return Err(Error::MalformedInput(format!(
                    "edge ({i},{j}) out of range for {n1}x{n2}"
                )));
            }
            rows[i].insert(j);
        }
        Self::from_rows(rows, n2)
    }

    pub fn complete(n1: usize, n2: usize) -> Self {
        let rows = vec![Bitset::full(n2); n1];
        Self::from_rows(rows, n2).expect("rows sized by construction")
    }

    pub fn edgeless(n1: usize, n2: usize) -> Self {
        Self::from_rows(vec![Bitset::new(n2); n1], n2).expect("rows sized by construction")
    }

    #[inline]
    pub fn n1(&self) -> usize {
        self.n1
    }

    #[inline]
    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn class_size(&self, side: Side) -> usize {
        match side {
            Side::V1 => self.n1,
            Side::V2 => self.n2,
        }
    }

    pub fn opposite_size(&self, side: Side) -> usize {
        self.class_size(side.opposite())
    }

    /// Adjacency row of `v` as seen from `side`: a bitset over the opposite
    /// class. `Side::V2` rows come from the cached transpose.
    pub fn row(&self, side: Side, v: usize) -> &Bitset {
        match side {
            Side::V1 => &self.rows[v],
            Side::V2 => &self.transpose()[v],
        }
    }

    fn transpose(&self) -> &Vec<Bitset> {
        self.transpose.get_or_init(|| {
            let mut cols = vec![Bitset::new(self.n1); self.n2];
            for (i, row) in self.rows.iter().enumerate() {
                for j in row.iter() {
                    cols[j].insert(i);
                }
            }
            cols
        })
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.rows[i].contains(j)
    }

    pub fn degree(&self, side: Side, v: usize) -> usize {
        self.row(side, v).count()
    }

    pub fn edge_count(&self) -> u64 {
        *self
            .edge_count
            .get_or_init(|| self.rows.iter().map(|r| r.count() as u64).sum())
    }

    pub fn density(&self) -> f64 {
        if self.n1 == 0 || self.n2 == 0 {
            return 0.0;
        }
        self.edge_count() as f64 / (self.n1 as f64 * self.n2 as f64)
    }

    /// The bipartite complement: every non-edge becomes an edge.
    pub fn complement(&self) -> BipartiteGraph {
        let rows = self.rows.iter().map(|r| r.complement()).collect();
        Self::from_rows(rows, self.n2).expect("rows sized by construction")
    }

    /// Same graph with the classes swapped.
    pub fn transposed(&self) -> BipartiteGraph {
        Self::from_rows(self.transpose().clone(), self.n1).expect("rows sized by construction")
    }

    /// Number of edges inside `u1 x u2`, by masked popcount over rows.
    pub fn induced_edge_count(&self, u1: &Bitset, u2: &Bitset) -> Result<u64> {
        if u1.len() != self.n1 || u2.len() != self.n2 {
            return Err(Error::MalformedInput(format!(
                "subset sizes ({}, {}) do not match classes ({}, {})",
                u1.len(),
                u2.len(),
                self.n1,
                self.n2
            )));
        }
        Ok(u1.iter().map(|i| self.rows[i].and_count(u2) as u64).sum())
    }

    /// `N(u) Δ N(v)` for two distinct same-side vertices.
    pub fn div(&self, side: Side, u: usize, v: usize) -> Result<Bitset> {
        if u == v {
            return Err(Error::DegeneratePair);
        }
        let n = self.class_size(side);
        if u >= n || v >= n {
            return Err(Error::MalformedInput(format!(
                "vertex {}/{} out of range for side {side} of size {n}",
                u.max(v),
                u.min(v)
            )));
        }
        Ok(self.row(side, u).symmetric_difference(self.row(side, v)))
    }

    /// `N(u) \ N(v)` for an ordered pair; by the ordering convention this is
    /// the larger of the two one-sided differences.
    pub fn divb(&self, pair: &OrderedPair) -> Bitset {
        self.row(pair.side, pair.u)
            .difference(self.row(pair.side, pair.v))
    }

    /// `d^S(u) - d^S(v)` for an ordered pair, with `s` over the opposite
    /// class. With `s` the full class the result is nonnegative by the
    /// ordering convention.
    pub fn degree_diff(&self, pair: &OrderedPair, s: &Bitset) -> i64 {
        let du = self.row(pair.side, pair.u).and_count(s) as i64;
        let dv = self.row(pair.side, pair.v).and_count(s) as i64;
        du - dv
    }

    /// Induced subgraph on `u1 x u2` with dense reindexing. Returns the new
    /// graph together with maps from new indices back to the old ones
    /// (ascending order on both sides).
    pub fn induced_subgraph(&self, u1: &Bitset, u2: &Bitset) -> (BipartiteGraph, Vec<usize>, Vec<usize>) {
        let map1 = u1.indices();
        let map2 = u2.indices();
        let mut rows = Vec::with_capacity(map1.len());
        for &old_i in &map1 {
            let mut row = Bitset::new(map2.len());
            for (new_j, &old_j) in map2.iter().enumerate() {
                if self.rows[old_i].contains(old_j) {
                    row.insert(new_j);
                }
            }
            rows.push(row);
        }
        let g = Self::from_rows(rows, map2.len()).expect("rows sized by construction");
        (g, map1, map2)
    }

    /// Writes the edge-list text format: header `p bip <n1> <n2>`, then one
    /// `e <i> <j>` line per edge in sorted order, so output is byte-stable.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "p bip {} {}", self.n1, self.n2)?;
        for (i, row) in self.rows.iter().enumerate() {
            for j in row.iter() {
                writeln!(w, "e {i} {j}")?;
            }
        }
        Ok(())
    }

    /// Parses the edge-list text format. Blank lines and `c`-prefixed
    /// comment lines are skipped.
    pub fn read_edge_list<R: BufRead>(r: R) -> Result<Self> {
        let mut dims: Option<(usize, usize)> = None;
        let mut edges = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') {
                continue;
            }
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("p") => {
                    let bad = || Error::MalformedInput(format!("line {}: bad header", lineno + 1));
                    if parts.next() != Some("bip") {
                        return Err(bad());
                    }
                    let n1 = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
                    let n2 = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
                    dims = Some((n1, n2));
                }
                Some("e") => {
                    let bad = || Error::MalformedInput(format!("line {}: bad edge", lineno + 1));
                    let i = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
                    let j = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
                    edges.push((i, j));
                }
                _ => {
                    return Err(Error::MalformedInput(format!(
                        "line {}: unrecognized record",
                        lineno + 1
                    )))
                }
            }
        }
        let (n1, n2) =
            dims.ok_or_else(|| Error::MalformedInput("missing 'p bip' header".into()))?;
        Self::from_edges(n1, n2, &edges)
    }
}

/// An ordered pair of same-side vertices, normalized so that
/// `divb(p) = N(u) \ N(v)` is the larger one-sided difference (which
/// implies `d(u) >= d(v)`). Ties break toward the lower index as `u`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OrderedPair {
    pub side: Side,
    pub u: usize,
    pub v: usize,
}

impl OrderedPair {
    /// Normalizes `{a, b}` into an ordered pair against `g`.
    pub fn new(g: &BipartiteGraph, side: Side, a: usize, b: usize) -> Result<OrderedPair> {
        if a == b {
            return Err(Error::DegeneratePair);
        }
        let n = g.class_size(side);
        if a >= n || b >= n {
            return Err(Error::MalformedInput(format!(
                "vertex {} out of range for side {side} of size {n}",
                a.max(b)
            )));
        }
        let a_minus_b = g.row(side, a).diff_count(g.row(side, b));
        let b_minus_a = g.row(side, b).diff_count(g.row(side, a));
        let (u, v) = if a_minus_b > b_minus_a {
            (a, b)
        } else if b_minus_a > a_minus_b {
            (b, a)
        } else if a < b {
            (a, b)
        } else {
            (b, a)
        };
        Ok(OrderedPair { side, u, v })
    }

    pub fn vertices(&self) -> [usize; 2] {
        [self.u, self.v]
    }

    pub fn is_disjoint(&self, other: &OrderedPair) -> bool {
        self.u != other.u && self.u != other.v && self.v != other.u && self.v != other.v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n1: usize, n2: usize, edges: &[(usize, usize)]) -> BipartiteGraph {
        BipartiteGraph::from_edges(n1, n2, edges).unwrap()
    }

    #[test]
    fn induced_edge_count_complete() {
        let g = BipartiteGraph::complete(2, 3);
        let u1 = Bitset::full(2);
        let u2 = Bitset::full(3);
        assert_eq!(g.induced_edge_count(&u1, &u2).unwrap(), 6);
    }

    #[test]
    fn induced_edge_count_empty_subset() {
        let g = graph(3, 3, &[(0, 0), (1, 1), (2, 2)]);
        let u1 = Bitset::new(3);
        let u2 = Bitset::full(3);
        assert_eq!(g.induced_edge_count(&u1, &u2).unwrap(), 0);
    }

    #[test]
    fn induced_edge_count_direct() {
        // edges {a1b1, a1b2, a2b2}, u1={a1}, u2={b1,b2} -> 2
        let g = graph(2, 2, &[(0, 0), (0, 1), (1, 1)]);
        let u1 = Bitset::from_indices(2, [0]);
        let u2 = Bitset::from_indices(2, [0, 1]);
        assert_eq!(g.induced_edge_count(&u1, &u2).unwrap(), 2);
    }

    #[test]
    fn induced_edge_count_rejects_mismatched_subsets() {
        let g = graph(2, 2, &[(0, 0)]);
        assert!(g
            .induced_edge_count(&Bitset::new(3), &Bitset::new(2))
            .is_err());
    }

    #[test]
    fn div_identical_neighborhoods() {
        let g = BipartiteGraph::complete(2, 2);
        assert!(g.div(Side::V1, 0, 1).unwrap().is_empty());
    }

    #[test]
    fn div_direct() {
        let g = graph(2, 2, &[(0, 0)]);
        assert_eq!(g.div(Side::V1, 0, 1).unwrap().indices(), vec![0]);
    }

    #[test]
    fn div_rejects_degenerate_pair() {
        let g = graph(2, 2, &[(0, 0)]);
        assert!(matches!(g.div(Side::V1, 1, 1), Err(Error::DegeneratePair)));
    }

    #[test]
    fn div_is_symmetric() {
        let g = graph(4, 4, &[(0, 0), (0, 1), (1, 1), (1, 2), (2, 3)]);
        for u in 0..4 {
            for v in 0..4 {
                if u != v {
                    assert_eq!(g.div(Side::V1, u, v).unwrap(), g.div(Side::V1, v, u).unwrap());
                }
            }
        }
    }

    #[test]
    fn divb_direct() {
        // edges {a1b1, a1b2}: pair (a1, a2) has divb {b1, b2}
        let g = graph(2, 2, &[(0, 0), (0, 1)]);
        let p = OrderedPair::new(&g, Side::V1, 0, 1).unwrap();
        assert_eq!(p.u, 0);
        assert_eq!(g.divb(&p).indices(), vec![0, 1]);
    }

    #[test]
    fn divb_empty_on_twins() {
        let g = BipartiteGraph::complete(2, 2);
        let p = OrderedPair::new(&g, Side::V1, 0, 1).unwrap();
        assert!(g.divb(&p).is_empty());
        // tie broken toward lower index
        assert_eq!((p.u, p.v), (0, 1));
    }

    #[test]
    fn divb_is_at_least_half_of_div() {
        let g = graph(
            6,
            6,
            &[(0, 0), (0, 1), (0, 2), (1, 2), (1, 3), (2, 4), (3, 5), (4, 0), (5, 1), (5, 2)],
        );
        for a in 0..6 {
            for b in (a + 1)..6 {
                let p = OrderedPair::new(&g, Side::V1, a, b).unwrap();
                let div = g.div(Side::V1, a, b).unwrap().count();
                assert!(g.divb(&p).count() * 2 >= div);
            }
        }
    }

    #[test]
    fn degree_diff_examples() {
        let g = graph(2, 2, &[(0, 0), (0, 1), (1, 0)]);
        let p = OrderedPair::new(&g, Side::V1, 0, 1).unwrap();
        assert_eq!(g.degree_diff(&p, &Bitset::new(2)), 0);
        assert_eq!(g.degree_diff(&p, &Bitset::from_indices(2, [1])), 1);
        assert_eq!(g.degree_diff(&p, &Bitset::full(2)), 1);
    }

    #[test]
    fn transpose_is_consistent() {
        let g = graph(3, 4, &[(0, 1), (1, 1), (2, 3), (0, 0)]);
        for i in 0..3 {
            for j in 0..4 {
                assert_eq!(g.row(Side::V1, i).contains(j), g.row(Side::V2, j).contains(i));
            }
        }
    }

    #[test]
    fn induced_subgraph_maps_back() {
        let g = graph(4, 4, &[(0, 0), (1, 1), (2, 2), (3, 3), (1, 3)]);
        let u1 = Bitset::from_indices(4, [1, 3]);
        let u2 = Bitset::from_indices(4, [1, 3]);
        let (h, m1, m2) = g.induced_subgraph(&u1, &u2);
        assert_eq!((h.n1(), h.n2()), (2, 2));
        assert_eq!(m1, vec![1, 3]);
        assert_eq!(m2, vec![1, 3]);
        assert_eq!(h.edge_count(), 3); // (1,1), (3,3), (1,3)
        for (i, &oi) in m1.iter().enumerate() {
            for (j, &oj) in m2.iter().enumerate() {
                assert_eq!(h.has_edge(i, j), g.has_edge(oi, oj));
            }
        }
    }

    #[test]
    fn edge_list_round_trip_is_byte_stable() {
        let g = graph(3, 3, &[(2, 1), (0, 2), (0, 0), (1, 1)]);
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("p bip 3 3\n"));
        let g2 = BipartiteGraph::read_edge_list(buf.as_slice()).unwrap();
        let mut buf2 = Vec::new();
        g2.write_edge_list(&mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn edge_list_rejects_out_of_range() {
        let text = "p bip 2 2\ne 0 5\n";
        assert!(BipartiteGraph::read_edge_list(text.as_bytes()).is_err());
    }
}
