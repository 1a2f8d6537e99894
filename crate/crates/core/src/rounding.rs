//! Core rounding layer: a Lipschitz-ized greedy that pre-selects a small set
//! per constraint, followed by one independent-rounding draw from the
//! fractional point. The union satisfies each constraint to a (1−ε) factor
//! with probability ≥ 1 − ε/r, at an additive cost of
//! r·⌈2 ln(r/ε)·ln(1/ε)/ε²⌉·c_max over c·x in expectation.

use crate::error::CoreError;
use crate::extension::{independent_round, mle_estimate, mle_exact, FractionalPoint};
use crate::instance::MscInstance;
use crate::rng::RngStream;
use crate::sets::BitSet;
use crate::submodular::Oracle;
use serde::{Deserialize, Serialize};

/// Step size for the greedy: ℓ = ε² / (2 ln(r/ε)).
pub fn lipschitz_ell(r: usize, eps: f64) -> Result<f64, CoreError> {
    if r < 1 {
        return Err(CoreError::Domain("need r ≥ 1".into()));
    }
    if !eps.is_finite() || eps <= 0.0 || eps >= 1.0 {
        return Err(CoreError::Domain(format!("eps = {} outside (0,1)", eps)));
    }
    let ratio = r as f64 / eps;
    if ratio <= 1.0 {
        return Err(CoreError::Domain(format!("r/eps = {} must exceed 1", ratio)));
    }
    Ok(eps * eps / (2.0 * ratio.ln()))
}

/// Cardinality cap for one greedy run: ⌈(1/ℓ)·ln(1/ε)⌉.
pub fn greedy_size_cap(eps: f64, ell: f64) -> usize {
    ((1.0 / ell) * (1.0 / eps).ln()).ceil() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GreedyStop {
    /// f(S) ≥ (1−ε)·b.
    CoverageMet,
    /// Every remaining marginal is below ℓ·(b − f(S)).
    MarginalsSmall,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LipschitzGreedyResult {
    pub selected: BitSet,
    pub tag: GreedyStop,
    pub iterations: usize,
    /// f(S) after each addition; index t-1 holds the value after step t.
    pub trace: Vec<f64>,
}

/// Lipschitz greedy: add the maximum-marginal element while some element
/// still has marginal ≥ ℓ·(b − f(S)) and coverage is below (1−ε)b. Ties go
/// to the lowest index. The selected set never exceeds ⌈(1/ℓ)ln(1/ε)⌉
/// elements.
pub fn lipschitz_greedy(
    f: &Oracle,
    b: f64,
    eps: f64,
    ell: f64,
) -> Result<LipschitzGreedyResult, CoreError> {
    if !b.is_finite() || b < 0.0 {
        return Err(CoreError::Domain(format!("requirement {} must be ≥ 0", b)));
    }
    if !(0.0 < eps && eps < 1.0) || !(0.0 < ell && ell < 1.0) {
        return Err(CoreError::Domain(format!("eps = {}, ell = {} outside (0,1)", eps, ell)));
    }
    let n = f.n();
    let mut s = BitSet::new(n);
    let mut value = f.eval(&s);
    let mut trace = Vec::new();
    let cap = greedy_size_cap(eps, ell);
    loop {
        if value >= (1.0 - eps) * b {
            return Ok(LipschitzGreedyResult {
                selected: s,
                tag: GreedyStop::CoverageMet,
                iterations: trace.len(),
                trace,
            });
        }
        let shortfall = b - value;
        let mut best: Option<(usize, f64)> = None;
        for e in 0..n {
            if s.contains(e) {
                continue;
            }
            let gain = f.marginal(e, &s);
            if gain >= ell * shortfall && best.map_or(true, |(_, g)| gain > g) {
                best = Some((e, gain));
            }
        }
        match best {
            Some((e, _)) => {
                s.insert(e);
                value = f.eval(&s);
                trace.push(value);
                debug_assert!(trace.len() <= cap, "greedy exceeded its size cap");
            }
            None => {
                return Ok(LipschitzGreedyResult {
                    selected: s,
                    tag: GreedyStop::MarginalsSmall,
                    iterations: trace.len(),
                    trace,
                });
            }
        }
    }
}

/// What `round_fractional` could establish about `F_i(x) ≥ b_i` before
/// drawing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PreconditionCheck {
    /// Exact extension value computed and ≥ b_i.
    Verified { value: f64 },
    /// Support too large for exact evaluation; sampled estimate recorded,
    /// nothing asserted.
    Unverified { estimate: f64 },
    /// Exact extension value computed and < b_i: the caller broke the
    /// contract. Rounding proceeds but guarantees are void.
    Violated { value: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundingOutcome {
    /// Union of the per-constraint greedy sets.
    pub preselected: BitSet,
    /// The independent-rounding draw.
    pub sampled: BitSet,
    /// preselected ∪ sampled.
    pub final_set: BitSet,
    /// f_i(final) per constraint.
    pub achieved: Vec<f64>,
    pub greedy_cost: u64,
    pub sampled_cost: u64,
    pub greedy: Vec<LipschitzGreedyResult>,
    pub preconditions: Vec<PreconditionCheck>,
    pub ell: f64,
}

/// Rounding pipeline: per-constraint Lipschitz greedy, one
/// independent-rounding draw, union. Deterministic piece of the cost bound:
/// c(preselected) ≤ r·⌈(1/ℓ)ln(1/ε)⌉·c_max.
pub fn round_fractional(
    inst: &MscInstance,
    x: &FractionalPoint,
    eps: f64,
    rng: &mut RngStream,
) -> Result<RoundingOutcome, CoreError> {
    if x.len() != inst.n() {
        return Err(CoreError::Domain(format!(
            "point dimension {} vs instance size {}",
            x.len(),
            inst.n()
        )));
    }
    let r = inst.r();
    let ell = lipschitz_ell(r, eps)?;
    let mut preconditions = Vec::with_capacity(r);
    let mut check_rng = rng.split(0x707265);
    for (f, &bi) in inst.fns.iter().zip(&inst.b) {
        let check = match mle_exact(f, x) {
            Ok(v) => {
                if v >= bi - 1e-9 {
                    PreconditionCheck::Verified { value: v }
                } else {
                    PreconditionCheck::Violated { value: v }
                }
            }
            Err(CoreError::Capacity(_)) => {
                let est = mle_estimate(f, x, 0.05 * bi.max(1.0), 0.05, &mut check_rng)?;
                PreconditionCheck::Unverified { estimate: est }
            }
            Err(e) => return Err(e),
        };
        preconditions.push(check);
    }

    let mut greedy = Vec::with_capacity(r);
    let mut preselected = BitSet::new(inst.n());
    for (f, &bi) in inst.fns.iter().zip(&inst.b) {
        let res = lipschitz_greedy(f, bi, eps, ell)?;
        preselected.union_with(&res.selected);
        greedy.push(res);
    }
    let sampled = independent_round(x, rng);
    let final_set = preselected.union(&sampled);
    let achieved = inst.coverage_values(&final_set);
    Ok(RoundingOutcome {
        greedy_cost: inst.costs.cost_of(&preselected),
        sampled_cost: inst.costs.cost_of(&sampled),
        preselected,
        sampled,
        final_set,
        achieved,
        greedy,
        preconditions,
        ell,
    })
}
