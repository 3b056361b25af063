//! Anti-concentration engines: exact point-probability and mod-d
//! distributions for weighted Bernoulli sums, Monte-Carlo collision
//! estimates for degree differences, degree-shift sets realized by pair
//! structures under a random subset, and the search for a "good" subset
//! with rich shift sets, full residue coverage and honest size.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use serde::Serialize;

use crate::bitset::Bitset;
use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, OrderedPair, Side};
use crate::rng::{derive_seed, rng_from_seed};
use crate::structure::PairStructure;

/// Exact distribution of `|X| mod d` for `X` a uniformly random subset of
/// an `n`-element set. Kept as integer numerators over the implicit
/// denominator `2^n`, so bound checks are exact at any `n`.
#[derive(Clone, Debug)]
pub struct ModDistribution {
    pub n: usize,
    pub d: usize,
    numerators: Vec<BigUint>,
}

impl ModDistribution {
    pub fn numerator(&self, k: usize) -> &BigUint {
        &self.numerators[k]
    }

    /// Exact check: numerators sum to `2^n`.
    pub fn sums_to_one(&self) -> bool {
        let total: BigUint = self.numerators.iter().sum();
        total == BigUint::from(1u8) << self.n
    }

    /// Exact check of `1/(d+1) <= P(k) <= 1/(d-1)` for every residue `k`,
    /// by integer cross-multiplication.
    pub fn within_band(&self) -> bool {
        let pow = BigUint::from(1u8) << self.n;
        self.numerators.iter().all(|num| {
            num * BigUint::from(self.d as u64 + 1) >= pow
                && num * BigUint::from(self.d as u64 - 1) <= pow
        })
    }

    /// Floating-point view of the distribution (computed by a parallel f64
    /// recursion; the exact numerators stay authoritative).
    pub fn probabilities(&self) -> Vec<f64> {
        let mut probs = vec![0.0f64; self.d];
        probs[0] = 1.0;
        for _ in 0..self.n {
            let mut next = vec![0.0f64; self.d];
            for k in 0..self.d {
                let prev = (k + self.d - 1) % self.d;
                next[k] = 0.5 * probs[k] + 0.5 * probs[prev];
            }
            probs = next;
        }
        probs
    }
}

/// Exact distribution of `|X| mod d` by the n-step chain on `Z_d` with
/// transitions `p(k -> k) = p(k -> k+1) = 1/2`.
pub fn binomial_mod_distribution(n: usize, d: usize) -> ModDistribution {
    assert!(d >= 2, "modulus must be at least 2");
    let mut numerators = vec![BigUint::from(0u8); d];
    numerators[0] = BigUint::from(1u8);
    for _ in 0..n {
        let mut next = vec![BigUint::from(0u8); d];
        for k in 0..d {
            let prev = (k + d - 1) % d;
            next[k] = &numerators[k] + &numerators[prev];
        }
        numerators = next;
    }
    ModDistribution { n, d, numerators }
}

/// Smallest `n` from which the `[1/(d+1), 1/(d-1)]` band holds through
/// `horizon`, or `None` if it is still violated at the horizon.
pub fn empirical_band_threshold(d: usize, horizon: usize) -> Option<usize> {
    let mut dist = binomial_mod_distribution(0, d);
    let mut last_violation: Option<usize> = Some(0); // n = 0 never satisfies the band
    for n in 1..=horizon {
        let next: Vec<BigUint> = (0..d)
            .map(|k| &dist.numerators[k] + &dist.numerators[(k + d - 1) % d])
            .collect();
        dist = ModDistribution { n, d, numerators: next };
        if !dist.within_band() {
            last_violation = Some(n);
        }
    }
    match last_violation {
        Some(n) if n == horizon => None,
        Some(n) => Some(n + 1),
        None => Some(1),
    }
}

const DEFAULT_SUPPORT_BUDGET: usize = 1 << 24;

/// Exact `max_x P(sum a_i X_i = x)` for independent `X_i ~ Be(p_i)`, by
/// convolution over the integer support.
pub fn max_point_probability(weights: &[i64], probs: &[f64]) -> Result<f64> {
    max_point_probability_with_budget(weights, probs, DEFAULT_SUPPORT_BUDGET)
}

pub fn max_point_probability_with_budget(
    weights: &[i64],
    probs: &[f64],
    budget: usize,
) -> Result<f64> {
    if weights.is_empty() {
        return Err(Error::MalformedInput("no weights".into()));
    }
    if weights.len() != probs.len() {
        return Err(Error::MalformedInput(format!(
            "{} weights vs {} probabilities",
            weights.len(),
            probs.len()
        )));
    }
    if let Some(w) = weights.iter().find(|&&w| w == 0) {
        return Err(Error::MalformedInput(format!("zero weight {w} not allowed")));
    }
    if let Some(p) = probs.iter().find(|&&p| !(0.0..=1.0).contains(&p)) {
        return Err(Error::MalformedInput(format!("probability {p} outside [0,1]")));
    }
    let lo: i64 = weights.iter().map(|&w| w.min(0)).sum();
    let hi: i64 = weights.iter().map(|&w| w.max(0)).sum();
    let range = (hi - lo) as usize + 1;
    if range > budget {
        return Err(Error::BudgetExceeded(format!(
            "support width {range} exceeds budget {budget}"
        )));
    }
    let mut dist = vec![0.0f64; range];
    dist[(-lo) as usize] = 1.0; // value 0
    for (&w, &p) in weights.iter().zip(probs) {
        let mut next = vec![0.0f64; range];
        for (x, &mass) in dist.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            next[x] += mass * (1.0 - p);
            next[(x as i64 + w) as usize] += mass * p;
        }
        dist = next;
    }
    Ok(dist.iter().copied().fold(0.0, f64::max))
}

/// Uniformly random subset of `0..n`, reproducible from the seed.
pub fn sample_w(n: usize, seed: u64) -> Bitset {
    Bitset::random_half(n, &mut rng_from_seed(seed))
}

/// The set of degree shifts a structure realizes against `w`, clipped to
/// `[-3*ceil(sqrt(n')), 3*ceil(sqrt(n'))]` where `n'` is the opposite
/// class size of the graph the structure was built against. Every value
/// keeps a realizer: the leaf (star) or pair (matching) index producing it.
#[derive(Clone, Debug, Serialize)]
pub struct DegreeShiftSet {
    pub clip: i64,
    pub values: Vec<i64>,
    pub realizers: BTreeMap<i64, usize>,
}

impl DegreeShiftSet {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Recounts every realizer against the graph; values must reproduce
    /// exactly and stay inside the clip range.
    pub fn verify(&self, g: &BipartiteGraph, structure: &PairStructure, w: &Bitset) -> Result<()> {
        for (&value, &idx) in &self.realizers {
            if value.abs() > self.clip {
                return Err(Error::MalformedInput(format!(
                    "shift {value} outside clip range {}",
                    self.clip
                )));
            }
            let recount = shift_for(g, structure, w, idx)?;
            if recount != value {
                return Err(Error::MalformedInput(format!(
                    "realizer {idx} recounts to {recount}, recorded {value}"
                )));
            }
        }
        if self.values.iter().any(|v| !self.realizers.contains_key(v)) {
            return Err(Error::MalformedInput("shift value without realizer".into()));
        }
        Ok(())
    }
}

fn shift_for(g: &BipartiteGraph, structure: &PairStructure, w: &Bitset, idx: usize) -> Result<i64> {
    match structure {
        PairStructure::Star(s) => {
            let leaf = *s
                .leaves
                .get(idx)
                .ok_or_else(|| Error::MalformedInput(format!("no leaf {idx}")))?;
            let d_leaf = g.row(s.side, leaf).and_count(w) as i64;
            let d_root = g.row(s.side, s.root).and_count(w) as i64;
            Ok(d_leaf - d_root)
        }
        PairStructure::Matching(m) => {
            let pair = m
                .pairs
                .get(idx)
                .ok_or_else(|| Error::MalformedInput(format!("no pair {idx}")))?;
            Ok(g.degree_diff(pair, w))
        }
    }
}

/// Computes the degree-shift set of `structure` against `w` (a subset of
/// the opposite class of `g`).
pub fn degree_shift_set(
    g: &BipartiteGraph,
    structure: &PairStructure,
    w: &Bitset,
) -> Result<DegreeShiftSet> {
    let n_opp = g.opposite_size(structure.side());
    if w.len() != n_opp {
        return Err(Error::MalformedInput(format!(
            "w has {} positions, opposite class has {n_opp}",
            w.len()
        )));
    }
    let clip = 3 * (n_opp as f64).sqrt().ceil() as i64;
    let mut realizers = BTreeMap::new();
    for idx in 0..structure.size() {
        let shift = shift_for(g, structure, w, idx)?;
        if shift.abs() <= clip {
            realizers.entry(shift).or_insert(idx);
        }
    }
    Ok(DegreeShiftSet {
        clip,
        values: realizers.keys().copied().collect(),
        realizers,
    })
}

/// A collision event for the Monte-Carlo estimator.
#[derive(Clone, Debug)]
pub enum CollisionEvent {
    /// `d^W(x) = d^W(y)` for two same-side vertices.
    Vertices { side: Side, x: usize, y: usize },
    /// `D_{p1}^W = D_{p2}^W` for two ordered pairs on the same side.
    Pairs { p1: OrderedPair, p2: OrderedPair },
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Estimate {
    pub estimate: f64,
    /// 95% binomial confidence radius (normal approximation).
    pub radius: f64,
    pub trials: usize,
}

/// Frequency of the collision event over independent uniformly random
/// subsets `W` of the opposite class.
pub fn collision_probability_estimate(
    g: &BipartiteGraph,
    event: &CollisionEvent,
    trials: usize,
    seed: u64,
) -> Result<Estimate> {
    if trials == 0 {
        return Err(Error::MalformedInput("trials must be positive".into()));
    }
    let side = match event {
        CollisionEvent::Vertices { side, .. } => *side,
        CollisionEvent::Pairs { p1, p2 } => {
            if p1.side != p2.side {
                return Err(Error::MalformedInput("pairs on different sides".into()));
            }
            p1.side
        }
    };
    let n_opp = g.opposite_size(side);
    let mut rng = rng_from_seed(seed);
    let mut hits = 0usize;
    for _ in 0..trials {
        let w = Bitset::random_half(n_opp, &mut rng);
        let collided = match event {
            CollisionEvent::Vertices { side, x, y } => {
                g.row(*side, *x).and_count(&w) == g.row(*side, *y).and_count(&w)
            }
            CollisionEvent::Pairs { p1, p2 } => g.degree_diff(p1, &w) == g.degree_diff(p2, &w),
        };
        if collided {
            hits += 1;
        }
    }
    let p = hits as f64 / trials as f64;
    Ok(Estimate {
        estimate: p,
        radius: 1.96 * (p * (1.0 - p) / trials as f64).sqrt(),
        trials,
    })
}

/// Vertices covering every residue class: `table[(k, m)]` indexes a
/// coverage row whose `W`-degree is `k (mod m)`.
#[derive(Clone, Debug, Serialize)]
pub struct ResidueCoverage {
    pub d_max: u32,
    pub table: BTreeMap<(u32, u32), usize>,
}

impl ResidueCoverage {
    /// Recounts every table entry against the rows and `w`.
    pub fn verify(&self, coverage_rows: &[Bitset], w: &Bitset) -> Result<()> {
        for m in 1..=self.d_max {
            for k in 0..m {
                let &idx = self.table.get(&(k, m)).ok_or_else(|| {
                    Error::MalformedInput(format!("coverage table missing ({k}, {m})"))
                })?;
                let deg = coverage_rows[idx].and_count(w) as u32;
                if deg % m != k {
                    return Err(Error::MalformedInput(format!(
                        "entry ({k}, {m}) -> row {idx} has degree {deg}"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn coverage_for(coverage_rows: &[Bitset], w: &Bitset, d_max: u32) -> Option<ResidueCoverage> {
    let degrees: Vec<u32> = coverage_rows.iter().map(|r| r.and_count(w) as u32).collect();
    let mut table = BTreeMap::new();
    for m in 1..=d_max {
        for k in 0..m {
            let idx = degrees.iter().position(|&deg| deg % m == k)?;
            table.insert((k, m), idx);
        }
    }
    Some(ResidueCoverage { d_max, table })
}

/// Result of a successful good-W search.
#[derive(Clone, Debug)]
pub struct GoodW {
    pub w: Bitset,
    /// Shift set per structure, input order.
    pub shift_sets: Vec<DegreeShiftSet>,
    pub coverage: ResidueCoverage,
    pub attempts: usize,
}

/// Resamples `W` until three events hold simultaneously: at least half the
/// structures have shift sets of size `>= delta * ceil(sqrt(n'))`, the
/// coverage rows realize every residue `k mod m` for `m <= d_max`, and
/// `|W| >= n'/4`. Returns the first satisfying `W` with its certified
/// artifacts; on exhaustion the error carries per-event failure counts.
pub fn good_w_search(
    g: &BipartiteGraph,
    structures: &[PairStructure],
    coverage_rows: &[Bitset],
    d_max: u32,
    delta: f64,
    max_attempts: usize,
    seed: u64,
) -> Result<GoodW> {
    if structures.is_empty() {
        return Err(Error::MalformedInput("no structures to search against".into()));
    }
    let side = structures[0].side();
    if structures.iter().any(|s| s.side() != side) {
        return Err(Error::MalformedInput("structures on mixed sides".into()));
    }
    let n_opp = g.opposite_size(side);
    for row in coverage_rows {
        if row.len() != n_opp {
            return Err(Error::MalformedInput("coverage row over the wrong class".into()));
        }
    }
    let rich_floor = delta * (n_opp as f64).sqrt().ceil();
    let (mut e1_failures, mut e2_failures, mut e3_failures) = (0, 0, 0);
    for attempt in 0..max_attempts {
        let w = sample_w(n_opp, derive_seed(seed, attempt as u64));
        let shift_sets: Vec<DegreeShiftSet> = structures
            .iter()
            .map(|s| degree_shift_set(g, s, &w))
            .collect::<Result<_>>()?;
        let rich = shift_sets
            .iter()
            .filter(|a| a.len() as f64 >= rich_floor)
            .count();
        let e1 = 2 * rich >= structures.len();
        let coverage = coverage_for(coverage_rows, &w, d_max);
        let e3 = w.count() as f64 >= n_opp as f64 / 4.0;
        if !e1 {
            e1_failures += 1;
        }
        if coverage.is_none() {
            e2_failures += 1;
        }
        if !e3 {
            e3_failures += 1;
        }
        if e1 && e3 {
            if let Some(coverage) = coverage {
                return Ok(GoodW {
                    w,
                    shift_sets,
                    coverage,
                    attempts: attempt + 1,
                });
            }
        }
    }
    Err(Error::GoodWFailure {
        attempts: max_attempts,
        e1_failures,
        e2_failures,
        e3_failures,
    })
}
