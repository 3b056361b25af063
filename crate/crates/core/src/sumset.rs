//! Arithmetic progressions inside K-fold sumsets, constructively.
//!
//! `find_progression` locates a progression `{a + i*d}` inside
//! `A_1 + ... + A_K` and certifies every term with an explicit choice of
//! one summand per source set. `sumset_oracle` computes the exact sumset
//! by reachability DP for cross-checking at small scale.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A certified arithmetic progression inside a sumset.
///
/// `decompositions[i]` lists one chosen element per source set (in input
/// order) summing to `a + i*d`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgressionWitness {
    pub a: i64,
    pub d: i64,
    pub length: usize,
    pub decompositions: Vec<Vec<i64>>,
}

impl ProgressionWitness {
    /// Checks every term: the decomposition re-sums to `a + i*d` and every
    /// chosen element belongs to its source set.
    pub fn verify(&self, sets: &[Vec<i64>]) -> Result<()> {
        if self.d < 1 {
            return Err(Error::MalformedInput(format!(
                "progression difference {} is not positive",
                self.d
            )));
        }
        if self.decompositions.len() != self.length {
            return Err(Error::MalformedInput(format!(
                "{} decompositions for {} terms",
                self.decompositions.len(),
                self.length
            )));
        }
        for (i, decomp) in self.decompositions.iter().enumerate() {
            if decomp.len() != sets.len() {
                return Err(Error::MalformedInput(format!(
                    "term {i}: {} summands for {} sets",
                    decomp.len(),
                    sets.len()
                )));
            }
            let expected = self.a + i as i64 * self.d;
            let total: i64 = decomp.iter().sum();
            if total != expected {
                return Err(Error::MalformedInput(format!(
                    "term {i}: sums to {total}, expected {expected}"
                )));
            }
            for (j, x) in decomp.iter().enumerate() {
                if !sets[j].contains(x) {
                    return Err(Error::MalformedInput(format!(
                        "term {i}: element {x} not in set {j}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn terms(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.length as i64).map(move |i| self.a + i * self.d)
    }
}

const DEFAULT_ORACLE_RANGE: usize = 1 << 22;

/// Exact sumset `A_1 + ... + A_K` by boolean reachability DP.
pub fn sumset_oracle(sets: &[Vec<i64>]) -> Result<BTreeSet<i64>> {
    sumset_oracle_with_budget(sets, DEFAULT_ORACLE_RANGE)
}

pub fn sumset_oracle_with_budget(sets: &[Vec<i64>], max_range: usize) -> Result<BTreeSet<i64>> {
    validate_sets(sets)?;
    let lo: i64 = sets.iter().map(|s| s.iter().min().unwrap()).sum();
    let hi: i64 = sets.iter().map(|s| s.iter().max().unwrap()).sum();
    let range = (hi - lo) as usize + 1;
    if range > max_range {
        return Err(Error::BudgetExceeded(format!(
            "sumset range {range} exceeds budget {max_range}"
        )));
    }
    let mut reach = vec![false; 1];
    reach[0] = true;
    for set in sets {
        let min = *set.iter().min().unwrap();
        let max = *set.iter().max().unwrap();
        let mut next = vec![false; reach.len() + (max - min) as usize];
        for (x, &ok) in reach.iter().enumerate() {
            if !ok {
                continue;
            }
            for &b in set {
                next[x + (b - min) as usize] = true;
            }
        }
        reach = next;
    }
    Ok(reach
        .iter()
        .enumerate()
        .filter(|(_, &ok)| ok)
        .map(|(x, _)| lo + x as i64)
        .collect())
}

fn validate_sets(sets: &[Vec<i64>]) -> Result<()> {
    if sets.is_empty() {
        return Err(Error::MalformedInput("no source sets".into()));
    }
    for (i, s) in sets.iter().enumerate() {
        if s.is_empty() {
            return Err(Error::MalformedInput(format!("set {i} is empty")));
        }
    }
    Ok(())
}

/// Finds an arithmetic progression of at least `required_length` terms in
/// the sumset, with a full per-term decomposition.
///
/// The search normalizes each set by its minimum, picks a common span
/// endpoint by double counting over suffix thresholds, saturates residues
/// modulo that endpoint with a deterministic sweep, extracts the
/// progression step from the stabilized residue set, and assembles the
/// progression from the `{0, span}` anchors of the unconsumed sets. Sets
/// that never participate contribute their minimum to every decomposition,
/// so each decomposition spans all K sets. On failure the error carries
/// the longest progression achieved.
pub fn find_progression(sets: &[Vec<i64>], required_length: usize) -> Result<ProgressionWitness> {
    validate_sets(sets)?;
    let mins: Vec<i64> = sets.iter().map(|s| *s.iter().min().unwrap()).collect();
    let translated: Vec<Vec<i64>> = sets
        .iter()
        .zip(&mins)
        .map(|(s, &m)| {
            let mut t: Vec<i64> = s.iter().map(|&x| x - m).collect();
            t.sort_unstable();
            t.dedup();
            t
        })
        .collect();
    let total_min: i64 = mins.iter().sum();

    // Candidate span endpoints: values in the top third of a set, counted
    // over all sets.
    let mut candidate_count: std::collections::HashMap<i64, usize> = Default::default();
    for t in &translated {
        let threshold = (2 * t.len()).div_ceil(3);
        for (rank, &a) in t.iter().enumerate() {
            if a > 0 && rank + 1 >= threshold {
                *candidate_count.entry(a).or_insert(0) += 1;
            }
        }
    }
    let mut candidates: Vec<(i64, usize)> = candidate_count.into_iter().collect();
    candidates.sort_by(|x, y| y.1.cmp(&x.1).then(y.0.cmp(&x.0)));

    let mut best: Option<ProgressionWitness> = None;
    for &(span, _) in &candidates {
        let plan = build_plan(&translated, span);
        if plan.length == 0 {
            continue;
        }
        if plan.length >= required_length || best.as_ref().is_none_or(|b| plan.length > b.length)
        {
            let witness = materialize(&plan, &mins, total_min);
            witness.verify(sets)?;
            if witness.length >= required_length {
                return Ok(witness);
            }
            best = Some(witness);
        }
    }

    // Fallback: every set contributes its minimum.
    let best = best.unwrap_or(ProgressionWitness {
        a: total_min,
        d: 1,
        length: 1,
        decompositions: vec![mins.clone()],
    });
    best.verify(sets)?;
    if best.length >= required_length {
        Ok(best)
    } else {
        Err(Error::InsufficientSets { best: Box::new(best) })
    }
}

/// Everything needed to materialize the progression for one span choice.
struct LadderPlan {
    span: i64,
    /// Per residue mod `span`: exact value and one chosen element per
    /// consumed set.
    residues: Vec<Option<ResidueInfo>>,
    /// Original indices of consumed sets, in consumption order.
    consumed: Vec<usize>,
    /// Original indices of member sets left unconsumed; each contains both
    /// 0 and `span` after translation and restriction.
    unused: Vec<usize>,
    start: i64,
    step: i64,
    length: usize,
}

#[derive(Clone)]
struct ResidueInfo {
    value: i64,
    choices: Vec<i64>,
}

fn build_plan(translated: &[Vec<i64>], span: i64) -> LadderPlan {
    let m = span as usize;
    // Member sets contain the span endpoint; restrict them to [0, span].
    let restricted: Vec<Option<Vec<i64>>> = translated
        .iter()
        .map(|t| {
            if t.binary_search(&span).is_ok() {
                Some(t.iter().copied().filter(|&x| x <= span).collect())
            } else {
                None
            }
        })
        .collect();

    // Residue saturation modulo `span`, sweeping remaining member sets in
    // index order until one full pass adds nothing.
    let mut residues: Vec<Option<ResidueInfo>> = vec![None; m];
    residues[0] = Some(ResidueInfo {
        value: 0,
        choices: Vec::new(),
    });
    let mut occupied = 1usize;
    let mut consumed: Vec<usize> = Vec::new();
    let mut available: Vec<usize> = (0..translated.len())
        .filter(|&i| restricted[i].is_some())
        .collect();
    loop {
        let mut grew = false;
        let mut still_available = Vec::new();
        for &i in &available {
            let set = restricted[i].as_ref().unwrap();
            let adds = (0..m).any(|r| {
                residues[r].is_some()
                    && set
                        .iter()
                        .any(|&b| residues[(r + b as usize) % m].is_none())
            });
            if !adds {
                still_available.push(i);
                continue;
            }
            // Consume set i: existing residues extend by choice 0, new
            // residues record their generating element.
            let snapshot: Vec<(usize, i64, Vec<i64>)> = residues
                .iter()
                .enumerate()
                .filter_map(|(r, info)| info.as_ref().map(|x| (r, x.value, x.choices.clone())))
                .collect();
            for info in residues.iter_mut().flatten() {
                info.choices.push(0);
            }
            for (r, value, choices) in &snapshot {
                for &b in set {
                    let r2 = (r + b as usize) % m;
                    if residues[r2].is_none() {
                        let mut c = choices.clone();
                        c.push(b);
                        residues[r2] = Some(ResidueInfo { value: value + b, choices: c });
                        occupied += 1;
                    }
                }
            }
            consumed.push(i);
            grew = true;
        }
        available = still_available;
        if !grew || occupied == m || available.is_empty() {
            break;
        }
    }

    // Progression step: the residue set is stabilized against every
    // remaining member set, so it contains all multiples of their common
    // gcd with the span.
    let unused = available;
    let mut step = span;
    for &i in &unused {
        for &b in restricted[i].as_ref().unwrap() {
            if b > 0 {
                step = gcd(step, b);
            }
        }
    }
    if !multiples_covered(&residues, step as usize, m) {
        step = (1..=span)
            .filter(|q| span % q == 0)
            .find(|&q| multiples_covered(&residues, q as usize, m))
            .unwrap_or(span);
    }

    // Ladder bounds: each unused set can contribute span instead of 0.
    let lifts = unused.len() as i64;
    let (mut vmin, mut vmax) = (i64::MAX, i64::MIN);
    let mut r = 0usize;
    loop {
        let info = residues[r].as_ref().expect("multiples covered");
        vmin = vmin.min(info.value);
        vmax = vmax.max(info.value);
        r += step as usize;
        if r >= m {
            break;
        }
    }
    let ladder_terms = (lifts * span + vmin - vmax) / step; // may be negative
    let (start, step, length) = if ladder_terms >= 0 {
        (vmax, step, ladder_terms as usize + 1)
    } else {
        // Single-residue ladder: lifts alone, at difference span.
        let info = residues[0].as_ref().expect("residue 0 always present");
        (info.value, span, lifts as usize + 1)
    };

    LadderPlan {
        span,
        residues,
        consumed,
        unused,
        start,
        step,
        length,
    }
}

fn multiples_covered(residues: &[Option<ResidueInfo>], step: usize, m: usize) -> bool {
    if step == 0 {
        return false;
    }
    (0..m).step_by(step).all(|r| residues[r].is_some())
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn materialize(plan: &LadderPlan, mins: &[i64], total_min: i64) -> ProgressionWitness {
    let k = mins.len();
    let m = plan.span as usize;
    let mut decompositions = Vec::with_capacity(plan.length);
    for t in 0..plan.length as i64 {
        let value = plan.start + t * plan.step;
        let r = (value % plan.span) as usize % m;
        let info = plan.residues[r].as_ref().expect("term residue present");
        let lift = (value - info.value) / plan.span;
        debug_assert!(lift >= 0 && lift <= plan.unused.len() as i64);
        let mut decomp = vec![0i64; k];
        for (pos, &set_idx) in plan.consumed.iter().enumerate() {
            decomp[set_idx] = info.choices[pos];
        }
        for (pos, &set_idx) in plan.unused.iter().enumerate() {
            decomp[set_idx] = if (pos as i64) < lift { plan.span } else { 0 };
        }
        // Translate back; non-members already hold 0 = their own minimum.
        for (j, d) in decomp.iter_mut().enumerate() {
            *d += mins[j];
        }
        decompositions.push(decomp);
    }
    ProgressionWitness {
        a: plan.start + total_min,
        d: plan.step,
        length: plan.length,
        decompositions,
    }
}
