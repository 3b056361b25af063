//! Seeded graph generators.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, GraphMeta};
use crate::rng::rng_from_seed;

/// Generator models understood by the harness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum GraphModel {
    /// Each of the `n1 * n2` edges present independently with probability `p`.
    Uniform { p: f64 },
    Complete,
    Edgeless,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub model: GraphModel,
    pub n1: usize,
    pub n2: usize,
    pub seed: u64,
}

/// Deterministic generation: the same spec always yields the same graph.
pub fn generate(spec: &GraphSpec) -> Result<BipartiteGraph> {
    let GraphSpec { model, n1, n2, seed } = spec;
    let (n1, n2) = (*n1, *n2);
    let mut g = match model {
        GraphModel::Uniform { p } => {
            if !(0.0..=1.0).contains(p) {
                return Err(Error::Config(format!("edge probability {p} outside [0,1]")));
            }
            let mut rng = rng_from_seed(*seed);
            let mut rows = Vec::with_capacity(n1);
            for _ in 0..n1 {
                let mut row = crate::bitset::Bitset::new(n2);
                for j in 0..n2 {
                    if rng.random_bool(*p) {
                        row.insert(j);
                    }
                }
                rows.push(row);
            }
            BipartiteGraph::from_rows(rows, n2)?
        }
        GraphModel::Complete => BipartiteGraph::complete(n1, n2),
        GraphModel::Edgeless => BipartiteGraph::edgeless(n1, n2),
    };
    g.meta = Some(GraphMeta {
        model: match model {
            GraphModel::Uniform { .. } => "uniform".into(),
            GraphModel::Complete => "complete".into(),
            GraphModel::Edgeless => "edgeless".into(),
        },
        seed: Some(*seed),
        density: match model {
            GraphModel::Uniform { p } => Some(*p),
            GraphModel::Complete => Some(1.0),
            GraphModel::Edgeless => Some(0.0),
        },
    });
    Ok(g)
}

/// Convenience wrapper for the uniform model used throughout the tests.
pub fn uniform(n1: usize, n2: usize, p: f64, seed: u64) -> BipartiteGraph {
    generate(&GraphSpec {
        model: GraphModel::Uniform { p },
        n1,
        n2,
        seed,
    })
    .expect("valid uniform spec")
}
