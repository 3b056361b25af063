//! Solver library for induced-subgraph edge sizes in bipartite graphs.
//!
//! Given a bipartite graph whose homogeneous blocks are all small (the
//! bipartite Ramsey property), the solver constructs, for a target edge
//! count `m`, vertex subsets `(U1, U2)` with `e(G[U1, U2]) = m` exactly.
//! Every returned witness is re-counted against the adjacency structure
//! before it leaves the library, so no construction step is trusted.
//!
//! The crate is organized around that pipeline:
//!
//! - [`graph`]: bitset adjacency, induced-edge counting, neighborhood
//!   differences.
//! - [`metrics`]: checkable predicates (Ramsey property, density bounds,
//!   degree typicality, richness, diversity).
//! - [`structure`]: pair-star / pair-matching extraction.
//! - [`anticonc`]: exact and Monte-Carlo anti-concentration engines,
//!   degree-shift sets, residue coverage.
//! - [`sumset`]: arithmetic progressions inside sumsets, with full witness
//!   decompositions.
//! - [`solver`]: the end-to-end interval construction and per-target
//!   solver, plus the brute-force achievable-size oracle.

pub mod anticonc;
pub mod bitset;
pub mod error;
pub mod generate;
pub mod graph;
pub mod metrics;
pub mod rng;
pub mod solver;
pub mod structure;
pub mod sumset;

pub use bitset::Bitset;
pub use error::{Error, Result};
pub use graph::{BipartiteGraph, OrderedPair, Side};
