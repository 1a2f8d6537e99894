//! Submodular covering solver. One round runs four stages: guess the
//! priciest optimal elements, solve the continuous relaxation on the
//! cost-truncated residual, round, then repair any constraint that fell
//! short with a budgeted submodular-maximization greedy. The iterated
//! variant replays rounds on shrinking residuals to push coverage from
//! 1 − 1/e toward 1 − e^{−α}.

use crate::brute::brute_force_msc;
use crate::error::CoreError;
use crate::ground::GroundSet;
use crate::instance::{residual_msc, MscInstance, ResidualMsc};
use crate::rng::RngStream;
use crate::relax::{solve_msc_relax, RelaxStatus};
use crate::rounding::{lipschitz_ell, round_fractional};
use crate::sets::BitSet;
use crate::submodular::Oracle;
use serde::{Deserialize, Serialize};

fn e_inv() -> f64 {
    std::f64::consts::E.recip()
}

/// Number of elements to guess per round:
/// r·⌈(1/ε'')·(1/ℓ)·ln(1/ε'')⌉ with ℓ the Lipschitz step for (r, ε'').
pub fn theoretical_l(r: usize, eps2: f64) -> Result<usize, CoreError> {
    let ell = lipschitz_ell(r, eps2)?;
    let inner = (1.0 / eps2) * (1.0 / ell) * (1.0 / eps2).ln();
    Ok(r * inner.ceil() as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuessMode {
    /// Try every subset up to the guess size (tiny instances only).
    ExactEnumeration,
    /// Brute-force an optimum first and guess its priciest elements. This
    /// inherits the theoretical guarantee and is the testing default.
    OracleAssisted,
    /// Guess the globally priciest elements; cheap, no guarantee.
    HeuristicTopcost,
}

#[derive(Debug, Clone)]
pub struct GuessConfig {
    pub mode: GuessMode,
    /// Replaces the theoretical guess size when set (the theoretical value
    /// is astronomically conservative at practical ε).
    pub l_override: Option<usize>,
    /// Ceiling on enumerated candidates in `ExactEnumeration` mode.
    pub max_enumeration: u64,
}

impl Default for GuessConfig {
    fn default() -> Self {
        GuessConfig { mode: GuessMode::OracleAssisted, l_override: None, max_enumeration: 200_000 }
    }
}

/// Budgeted monotone-submodular maximization by partial enumeration: every
/// affordable seed of at most three elements is completed greedily by
/// marginal gain per unit cost; the best completion is returned. The value
/// reaches at least (1 − 1/e) of the budget-constrained optimum.
pub fn sviridenko_knapsack_max(f: &Oracle, costs: &crate::ground::CostFunction, budget: u64) -> BitSet {
    let n = f.n();
    let mut best_set = BitSet::new(n);
    let mut best_val = f.eval(&best_set);

    let mut consider = |seed: &[usize]| {
        let seed_cost: u64 = seed.iter().map(|&e| costs.cost(e)).sum();
        if seed_cost > budget {
            return;
        }
        let mut t = BitSet::from_indices(n, seed);
        let mut spent = seed_cost;
        let mut value = f.eval(&t);
        // Lazy greedy: cached gains only shrink under submodularity, so an
        // entry evaluated at the current set size is a true maximum.
        let mut heap: Vec<(f64, f64, usize, usize)> = Vec::new(); // (ratio, gain, elem, round)
        for e in 0..n {
            if t.contains(e) {
                continue;
            }
            let gain = f.marginal(e, &t);
            if gain > 1e-12 {
                let c = costs.cost(e) as f64;
                let ratio = if c == 0.0 { f64::INFINITY } else { gain / c };
                heap.push((ratio, gain, e, t.count()));
            }
        }
        loop {
            // Highest ratio first; ties to the lowest element index.
            heap.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(b.2.cmp(&a.2)));
            let (_, _, e, round) = match heap.pop() {
                Some(top) => top,
                None => break,
            };
            if costs.cost(e) + spent > budget {
                continue; // budget only shrinks; drop for good
            }
            if round == t.count() {
                t.insert(e);
                spent += costs.cost(e);
                value = f.eval(&t);
            } else {
                let gain = f.marginal(e, &t);
                if gain > 1e-12 {
                    let c = costs.cost(e) as f64;
                    let ratio = if c == 0.0 { f64::INFINITY } else { gain / c };
                    heap.push((ratio, gain, e, t.count()));
                }
            }
        }
        if value > best_val + 1e-12 {
            best_val = value;
            best_set = t;
        }
    };

    consider(&[]);
    for a in 0..n {
        consider(&[a]);
        for b in a + 1..n {
            consider(&[a, b]);
            for c in b + 1..n {
                consider(&[a, b, c]);
            }
        }
    }
    best_set
}

/// Repair one unmet constraint of a residual instance: budgeted greedy
/// maximization of `f_i` truncated at `b_i`. Failing the (1 − 1/e)·b_i
/// guarantee means the budget (the current optimum guess) was wrong.
pub fn greedy_fix_msc(inst: &MscInstance, i: usize, budget: u64) -> Result<BitSet, CoreError> {
    let bi = inst.b[i];
    if bi <= 1e-12 {
        return Ok(BitSet::new(inst.n()));
    }
    let g = Oracle::truncated(inst.fns[i].clone(), bi);
    let t = sviridenko_knapsack_max(&g, &inst.costs, budget);
    let got = g.eval(&t);
    if got < (1.0 - e_inv()) * bi - 1e-9 {
        return Err(CoreError::Infeasible(format!(
            "fix for constraint {} reached {:.6} < (1 − 1/e)·{:.6}; optimum guess too small",
            i, got, bi
        )));
    }
    Ok(t)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MscRound {
    /// All sets in the index space of the instance this round ran on.
    pub s_pre: Vec<usize>,
    pub rounded: Vec<usize>,
    pub fixes: Vec<Vec<usize>>,
    pub budget: u64,
    pub cost_pre: u64,
    pub cost_rounded: u64,
    pub cost_fixes: u64,
    pub relax_attempts: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MscSolveReport {
    pub eps: f64,
    pub eps_relax: f64,
    pub eps_round: f64,
    pub alpha: usize,
    pub seed: u64,
    pub guess_mode: GuessMode,
    pub guess_size: usize,
    pub rounds: Vec<MscRound>,
    pub final_set: Vec<usize>,
    pub total_cost: u64,
    pub coverage: Vec<f64>,
    pub requirements: Vec<f64>,
    pub coverage_ratios: Vec<f64>,
    /// Required fraction of b_i: 1 − e^{−α} − ε.
    pub guarantee_factor: f64,
    /// Deterministic postcondition, re-verified by exact evaluation.
    pub hard_coverage_ok: bool,
    pub opt_known: Option<u64>,
}

fn top_cost_elements(inst: &MscInstance, pool: &[usize], l: usize) -> BitSet {
    let mut order: Vec<usize> = pool.to_vec();
    order.sort_by(|&a, &b| inst.costs.cost(b).cmp(&inst.costs.cost(a)).then(a.cmp(&b)));
    order.truncate(l);
    BitSet::from_indices(inst.n(), &order)
}

fn binomial_sum(n: usize, l: usize) -> u64 {
    let mut total: u64 = 0;
    let mut c: u64 = 1; // C(n, 0)
    for k in 0..=l.min(n) {
        if k > 0 {
            c = c.saturating_mul((n - k + 1) as u64) / k as u64;
        }
        total = total.saturating_add(c);
    }
    total
}

struct CandidateOutcome {
    final_set: BitSet,
    round: MscRound,
}

fn run_candidate(
    inst: &MscInstance,
    pre: &BitSet,
    eps1: f64,
    eps2: f64,
    opt_known: Option<u64>,
    rng: &mut RngStream,
) -> Result<CandidateOutcome, CoreError> {
    let res = residual_msc(inst, pre, true);
    if let Some(min_pre) = pre.iter_ones().map(|e| inst.costs.cost(e)).min() {
        debug_assert!(res.kept.iter().all(|&e| inst.costs.cost(e) <= min_pre));
    }
    let total = res.inst.costs.total();
    let base_budget = match opt_known {
        Some(opt) => opt.saturating_sub(inst.costs.cost_of(pre)),
        None => bisect_budget(&res.inst, eps1, rng)?,
    };

    let mut budget = base_budget;
    let mut attempt = 0usize;
    loop {
        attempt += 1;
        let mut stage_rng = rng.split(0x57A6E5 + attempt as u64);
        match run_stages(&res, budget, eps1, eps2, &mut stage_rng) {
            Ok((selected, rounded, fixes)) => {
                let mut final_set = pre.clone();
                for e in selected.iter_ones() {
                    final_set.insert(res.kept[e]);
                }
                let rounded_parent: Vec<usize> = {
                    let mut v: Vec<usize> = rounded.iter_ones().map(|e| res.kept[e]).collect();
                    v.sort_unstable();
                    v
                };
                let fixes_parent: Vec<Vec<usize>> = fixes
                    .iter()
                    .map(|t| {
                        let mut v: Vec<usize> = t.iter_ones().map(|e| res.kept[e]).collect();
                        v.sort_unstable();
                        v
                    })
                    .collect();
                let cost_pre = inst.costs.cost_of(pre);
                let cost_rounded = rounded_parent.iter().map(|&e| inst.costs.cost(e)).sum();
                let cost_fixes = inst.costs.cost_of(&final_set) - cost_pre - cost_rounded;
                return Ok(CandidateOutcome {
                    final_set,
                    round: MscRound {
                        s_pre: pre.to_indices(),
                        rounded: rounded_parent,
                        fixes: fixes_parent,
                        budget,
                        cost_pre,
                        cost_rounded,
                        cost_fixes,
                        relax_attempts: attempt,
                    },
                });
            }
            Err(CoreError::Infeasible(msg)) => {
                if budget >= total || attempt >= 40 {
                    return Err(CoreError::Infeasible(msg));
                }
                let bumped = ((budget as f64) * (1.0 + eps1)).ceil() as u64;
                budget = bumped.max(budget + 1).min(total);
            }
            Err(e) => return Err(e),
        }
    }
}

/// Stages 2–4 on a fixed residual and budget. Returns (everything chosen in
/// residual indices, the rounded part, per-constraint fixes).
#[allow(clippy::type_complexity)]
fn run_stages(
    res: &ResidualMsc,
    budget: u64,
    eps1: f64,
    eps2: f64,
    rng: &mut RngStream,
) -> Result<(BitSet, BitSet, Vec<BitSet>), CoreError> {
    let inst = &res.inst;
    let n = inst.n();
    let r = inst.r();

    let relax = solve_msc_relax(inst, budget as f64, eps1, &mut rng.split(1))?;
    if relax.status == RelaxStatus::ReportedInfeasible {
        return Err(CoreError::Infeasible(format!("relaxation found no point at budget {}", budget)));
    }

    // Rounding runs against the certified targets (1 − 1/e − ε')·b'_i, the
    // values the fractional point provably reaches.
    let factor = 1.0 - e_inv() - eps1;
    let view = MscInstance::new_raw(
        GroundSet::new(n),
        inst.costs.clone(),
        inst.fns.clone(),
        inst.b.iter().map(|&b| factor * b).collect(),
    );
    let rounding = round_fractional(&view, &relax.x, eps2, &mut rng.split(2))?;
    let rounded = rounding.final_set.clone();
    let mut selected = rounded.clone();

    // Repair pass: any constraint below (1 − 1/e − 2ε'')·b'_i gets a
    // budgeted greedy fix on its residual.
    let fix_threshold = 1.0 - e_inv() - 2.0 * eps2;
    let mut fixes = Vec::with_capacity(r);
    for i in 0..r {
        let current = inst.fns[i].eval(&selected);
        if current >= fix_threshold * inst.b[i] - 1e-12 {
            fixes.push(BitSet::new(n));
            continue;
        }
        let fix_view = MscInstance::new_raw(
            GroundSet::new(n),
            inst.costs.clone(),
            inst.fns.iter().map(|f| Oracle::residual(f.clone(), &selected)).collect(),
            inst.b
                .iter()
                .zip(inst.fns.iter())
                .map(|(&b, f)| (b - f.eval(&selected)).max(0.0))
                .collect(),
        );
        let t = greedy_fix_msc(&fix_view, i, budget)?;
        selected.union_with(&t);
        fixes.push(t);
    }
    Ok((selected, rounded, fixes))
}

/// Smallest budget at which the relaxation certifies, by bisection over the
/// integer cost range. Noise in the certification only ever makes the
/// estimate conservative; the escalation loop upstream absorbs that.
fn bisect_budget(inst: &MscInstance, eps1: f64, rng: &mut RngStream) -> Result<u64, CoreError> {
    let total = inst.costs.total();
    let probe = |c: u64, rng: &mut RngStream| -> Result<bool, CoreError> {
        let mut sub = rng.split(0xB15EC7 ^ c);
        Ok(solve_msc_relax(inst, c as f64, eps1, &mut sub)?.status == RelaxStatus::FeasiblePoint)
    };
    if !probe(total, rng)? {
        return Err(CoreError::Infeasible("relaxation infeasible even at the full budget".into()));
    }
    let (mut lo, mut hi) = (0u64, total);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if probe(mid, rng)? {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(hi)
}

fn solve_round(
    inst: &MscInstance,
    eps: f64,
    cfg: &GuessConfig,
    rng: &mut RngStream,
) -> Result<(BitSet, MscRound, usize, Option<u64>), CoreError> {
    if !(0.0 < eps && eps < 1.0) {
        return Err(CoreError::Domain(format!("eps {} outside (0,1)", eps)));
    }
    let n = inst.n();
    let r = inst.r();
    let eps1 = eps / 4.0;
    let eps2 = eps / 4.0;

    // Already satisfied: nothing to guess or round.
    if inst.b.iter().all(|&b| b <= 1e-12) {
        return Ok((
            BitSet::new(n),
            MscRound {
                s_pre: vec![],
                rounded: vec![],
                fixes: vec![vec![]; r],
                budget: 0,
                cost_pre: 0,
                cost_rounded: 0,
                cost_fixes: 0,
                relax_attempts: 0,
            },
            0,
            Some(0),
        ));
    }

    let l = cfg.l_override.unwrap_or(theoretical_l(r, eps2)?).min(n);

    let mut opt_known = None;
    let candidates: Vec<BitSet> = match cfg.mode {
        GuessMode::OracleAssisted => {
            let bf = brute_force_msc(inst)?
                .ok_or_else(|| CoreError::Infeasible("no feasible set exists".into()))?;
            opt_known = Some(bf.cost);
            vec![top_cost_elements(inst, &bf.set, l)]
        }
        GuessMode::HeuristicTopcost => {
            let pool: Vec<usize> = (0..n).collect();
            vec![top_cost_elements(inst, &pool, l)]
        }
        GuessMode::ExactEnumeration => {
            if n > 22 {
                return Err(CoreError::Capacity(format!("enumeration over {} elements", n)));
            }
            if binomial_sum(n, l) > cfg.max_enumeration {
                return Err(CoreError::Capacity(format!(
                    "≈{} guess candidates exceed the ceiling {}",
                    binomial_sum(n, l),
                    cfg.max_enumeration
                )));
            }
            (0u64..(1u64 << n))
                .filter(|code| (code.count_ones() as usize) <= l)
                .map(|code| BitSet::from_code(n, code))
                .collect()
        }
    };

    let mut best: Option<(u64, CandidateOutcome)> = None;
    let mut last_err: Option<CoreError> = None;
    for (ci, pre) in candidates.iter().enumerate() {
        let mut sub = rng.split(0xC0DE + ci as u64);
        match run_candidate(inst, pre, eps1, eps2, opt_known, &mut sub) {
            Ok(outcome) => {
                let cost = inst.costs.cost_of(&outcome.final_set);
                if best.as_ref().map_or(true, |(c, _)| cost < *c) {
                    best = Some((cost, outcome));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    match best {
        Some((_, outcome)) => Ok((outcome.final_set, outcome.round, l, opt_known)),
        None => Err(CoreError::GuessesExhausted(format!(
            "all {} guesses failed; last error: {}",
            candidates.len(),
            last_err.map_or_else(|| "none recorded".into(), |e| e.to_string())
        ))),
    }
}

fn assemble_report(
    inst: &MscInstance,
    final_set: &BitSet,
    rounds: Vec<MscRound>,
    eps: f64,
    alpha: usize,
    guarantee_factor: f64,
    guess: (GuessMode, usize),
    seed: u64,
    opt_known: Option<u64>,
) -> Result<MscSolveReport, CoreError> {
    let coverage = inst.coverage_values(final_set);
    let ratios: Vec<f64> = coverage
        .iter()
        .zip(&inst.b)
        .map(|(&v, &b)| if b <= 1e-12 { 1.0 } else { v / b })
        .collect();
    let hard_ok = coverage
        .iter()
        .zip(&inst.b)
        .all(|(&v, &b)| v >= guarantee_factor * b - 1e-9);
    if !hard_ok {
        return Err(CoreError::SolverFailure(format!(
            "coverage hard assert failed: ratios {:?} below factor {}",
            ratios, guarantee_factor
        )));
    }
    Ok(MscSolveReport {
        eps,
        eps_relax: eps / 4.0,
        eps_round: eps / 4.0,
        alpha,
        seed,
        guess_mode: guess.0,
        guess_size: guess.1,
        rounds,
        final_set: final_set.to_indices(),
        total_cost: inst.costs.cost_of(final_set),
        coverage,
        requirements: inst.b.clone(),
        coverage_ratios: ratios,
        guarantee_factor,
        hard_coverage_ok: true,
        opt_known,
    })
}

/// One-round solver: final coverage f_i ≥ (1 − 1/e − ε)·b_i for every
/// constraint is a deterministic postcondition (verified exactly before
/// returning); expected cost is (1 + ε)·OPT under exact guessing.
pub fn solve_msc_single(
    inst: &MscInstance,
    eps: f64,
    cfg: &GuessConfig,
    rng: &mut RngStream,
) -> Result<MscSolveReport, CoreError> {
    let seed = rng.seed();
    let (final_set, round, l, opt_known) = solve_round(inst, eps, cfg, rng)?;
    assemble_report(
        inst,
        &final_set,
        vec![round],
        eps,
        1,
        1.0 - e_inv() - eps,
        (cfg.mode, l),
        seed,
        opt_known,
    )
}

/// Iterated solver: α rounds over shrinking residuals with per-round
/// tolerance min(1 − 2/e, ε); final coverage ≥ (1 − e^{−α} − ε)·b_i.
pub fn solve_msc_multi(
    inst: &MscInstance,
    alpha: usize,
    eps: f64,
    cfg: &GuessConfig,
    rng: &mut RngStream,
) -> Result<MscSolveReport, CoreError> {
    if alpha < 1 {
        return Err(CoreError::Domain("alpha must be ≥ 1".into()));
    }
    let seed = rng.seed();
    let eps_round = (1.0 - 2.0 * e_inv()).min(eps);
    let n = inst.n();
    let mut accumulated = BitSet::new(n);
    let mut rounds = Vec::with_capacity(alpha);
    let mut l_used = 0;
    let mut opt_first = None;

    for t in 0..alpha {
        // Residual of the original instance after everything chosen so far,
        // requirements re-truncated so each round faces a normalized view.
        let res = residual_msc(inst, &accumulated, false);
        let round_inst = MscInstance::new_raw(
            GroundSet::new(res.inst.n()),
            res.inst.costs.clone(),
            res.inst
                .fns
                .iter()
                .zip(&res.inst.b)
                .map(|(f, &b)| Oracle::truncated(f.clone(), b))
                .collect(),
            res.inst.b.clone(),
        );
        let mut round_rng = rng.split(0xA1FA + t as u64);
        let (local_final, local_round, l, opt_known) =
            solve_round(&round_inst, eps_round, cfg, &mut round_rng)?;
        if t == 0 {
            l_used = l;
            opt_first = opt_known;
        }
        let remap = |v: &[usize]| -> Vec<usize> {
            let mut out: Vec<usize> = v.iter().map(|&e| res.kept[e]).collect();
            out.sort_unstable();
            out
        };
        rounds.push(MscRound {
            s_pre: remap(&local_round.s_pre),
            rounded: remap(&local_round.rounded),
            fixes: local_round.fixes.iter().map(|f| remap(f)).collect(),
            ..local_round
        });
        for e in local_final.iter_ones() {
            accumulated.insert(res.kept[e]);
        }
    }

    let guarantee = 1.0 - (-(alpha as f64)).exp() - eps;
    assemble_report(
        inst,
        &accumulated,
        rounds,
        eps,
        alpha,
        guarantee,
        (cfg.mode, l_used),
        seed,
        opt_first,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground::CostFunction;

    fn coverage_inst(costs: Vec<u64>, covers: Vec<Vec<usize>>, weights: Vec<f64>, b: Vec<f64>) -> MscInstance {
        let n = costs.len();
        let universe = weights.len();
        let mut fns = Vec::new();
        for _ in 0..b.len() {
            fns.push(Oracle::coverage(universe, covers.clone(), weights.clone()).unwrap());
        }
        MscInstance::new_normalized(GroundSet::new(n), CostFunction::new(costs), fns, b).unwrap()
    }

    fn random_coverage_inst(rng: &mut RngStream, n: usize, points: usize, r: usize) -> MscInstance {
        loop {
            let covers: Vec<Vec<usize>> = (0..n)
                .map(|_| (0..points).filter(|_| rng.next_bool(0.45)).collect())
                .collect();
            let costs: Vec<u64> = (0..n).map(|_| 1 + rng.next_below(9)).collect();
            let fns: Vec<Oracle> = (0..r)
                .map(|_| {
                    let weights: Vec<f64> = (0..points).map(|_| (1 + rng.next_below(3)) as f64).collect();
                    Oracle::coverage(points, covers.clone(), weights).unwrap()
                })
                .collect();
            let b: Vec<f64> = fns.iter().map(|f| (f.full_value() * 0.6).floor().max(1.0)).collect();
            if let Ok(inst) =
                MscInstance::new_normalized(GroundSet::new(n), CostFunction::new(costs), fns, b)
            {
                if brute_force_msc(&inst).unwrap().is_some() {
                    return inst;
                }
            }
        }
    }

    #[test]
    fn theoretical_l_matches_formula() {
        assert_eq!(theoretical_l(2, 0.5).unwrap(), 32);
        assert_eq!(theoretical_l(1, 0.5).unwrap(), 8);
        // Shrinking ε'' can only grow the guess size.
        assert!(theoretical_l(2, 0.25).unwrap() >= theoretical_l(2, 0.5).unwrap());
        assert!(theoretical_l(1, 0.25).unwrap() >= theoretical_l(1, 0.5).unwrap());
    }

    #[test]
    fn sviridenko_prefers_the_better_bundle() {
        // a: cost 1 gain 1; b: cost 2 gain 1.5; budget 2 → {b}.
        let f = Oracle::coverage(3, vec![vec![0], vec![1, 2]], vec![1.0, 1.0, 0.5]).unwrap();
        let costs = CostFunction::new(vec![1, 2]);
        let t = sviridenko_knapsack_max(&f, &costs, 2);
        assert_eq!(t.to_indices(), vec![1]);
        assert!((f.eval(&t) - 1.5).abs() < 1e-12);

        assert!(sviridenko_knapsack_max(&f, &costs, 0).is_empty());

        let all = sviridenko_knapsack_max(&f, &costs, 100);
        assert_eq!(all.to_indices(), vec![0, 1]);
        assert!((f.eval(&all) - f.full_value()).abs() < 1e-12);
    }

    #[test]
    fn sviridenko_meets_its_guarantee_against_brute_force() {
        let mut rng = RngStream::new(99);
        let ratio = 1.0 - e_inv();
        for _ in 0..60 {
            let n = 3 + rng.next_below(7) as usize;
            let points = 3 + rng.next_below(8) as usize;
            let covers: Vec<Vec<usize>> = (0..n)
                .map(|_| (0..points).filter(|_| rng.next_bool(0.4)).collect())
                .collect();
            let weights: Vec<f64> = (0..points).map(|_| rng.next_range_f64(0.5, 2.5)).collect();
            let f = Oracle::coverage(points, covers, weights).unwrap();
            let costs = CostFunction::new((0..n).map(|_| 1 + rng.next_below(6)).collect());
            let budget = 1 + rng.next_below(costs.total().max(2));
            let got = f.eval(&sviridenko_knapsack_max(&f, &costs, budget));
            let mut opt = 0.0f64;
            for code in 0u64..(1 << n) {
                let s = BitSet::from_code(n, code);
                if costs.cost_of(&s) <= budget {
                    opt = opt.max(f.eval(&s));
                }
            }
            assert!(got >= ratio * opt - 1e-9, "{} < {} × {}", got, ratio, opt);
        }
    }

    #[test]
    fn greedy_fix_examples() {
        // Zero demand → empty fix.
        let inst = coverage_inst(vec![1, 1], vec![vec![0], vec![1]], vec![1.0, 1.0], vec![0.0]);
        assert!(greedy_fix_msc(&inst, 0, 5).unwrap().is_empty());

        // Modular: three unit-gain elements, demand 3, budget 3.
        let inst = coverage_inst(
            vec![1, 1, 1],
            vec![vec![0], vec![1], vec![2]],
            vec![1.0, 1.0, 1.0],
            vec![3.0],
        );
        let t = greedy_fix_msc(&inst, 0, 3).unwrap();
        assert_eq!(t.count(), 3);

        // Budget far below any fix → wrong-guess signal.
        let err = greedy_fix_msc(&inst, 0, 1);
        assert!(matches!(err, Err(CoreError::Infeasible(_))));
    }

    #[test]
    fn single_trivial_paths() {
        // b = 0 → empty solution at zero cost.
        let inst = coverage_inst(vec![2, 3], vec![vec![0], vec![1]], vec![1.0, 1.0], vec![0.0]);
        let mut rng = RngStream::new(5);
        let rep = solve_msc_single(&inst, 0.25, &GuessConfig::default(), &mut rng).unwrap();
        assert!(rep.final_set.is_empty());
        assert_eq!(rep.total_cost, 0);

        // Optimum smaller than the guess size → cost equals OPT exactly.
        let inst = coverage_inst(
            vec![1, 2, 3],
            vec![vec![0], vec![0, 1], vec![1]],
            vec![1.0, 1.0],
            vec![2.0],
        );
        let mut rng = RngStream::new(5);
        let rep = solve_msc_single(&inst, 0.25, &GuessConfig::default(), &mut rng).unwrap();
        assert_eq!(rep.total_cost, 2);
        assert_eq!(rep.final_set, vec![1]);
        assert_eq!(rep.opt_known, Some(2));
    }

    #[test]
    fn single_guarantees_on_random_instances() {
        let mut rng = RngStream::new(314);
        let eps = 0.25;
        let factor = 1.0 - e_inv() - eps;
        for trial in 0..25 {
            let inst = random_coverage_inst(&mut rng, 6 + (trial % 3), 8, 2);
            let opt = brute_force_msc(&inst).unwrap().unwrap().cost;
            let mut solve_rng = RngStream::new(1000 + trial as u64);
            let rep = solve_msc_single(&inst, eps, &GuessConfig::default(), &mut solve_rng).unwrap();
            for (v, b) in rep.coverage.iter().zip(&rep.requirements) {
                assert!(*v >= factor * b - 1e-9);
            }
            assert!(rep.total_cost >= opt, "cannot beat the optimum");
        }
    }

    #[test]
    fn pipeline_stages_engage_under_small_guess() {
        // Force the full pipeline by overriding the guess size to zero.
        let mut rng = RngStream::new(77);
        let eps = 0.3;
        let factor = 1.0 - e_inv() - eps;
        let cfg = GuessConfig { l_override: Some(0), ..GuessConfig::default() };
        for trial in 0..15 {
            let inst = random_coverage_inst(&mut rng, 7, 9, 2);
            let mut solve_rng = RngStream::new(4000 + trial);
            let rep = solve_msc_single(&inst, eps, &cfg, &mut solve_rng).unwrap();
            assert!(rep.rounds[0].s_pre.is_empty());
            for (v, b) in rep.coverage.iter().zip(&rep.requirements) {
                assert!(*v >= factor * b - 1e-9);
            }
        }
    }

    #[test]
    fn exact_enumeration_and_heuristic_modes_run() {
        let inst = coverage_inst(
            vec![1, 2, 2, 3],
            vec![vec![0], vec![0, 1], vec![1, 2], vec![2]],
            vec![1.0, 1.0, 1.0],
            vec![3.0],
        );
        let opt = brute_force_msc(&inst).unwrap().unwrap().cost;
        for mode in [GuessMode::ExactEnumeration, GuessMode::HeuristicTopcost] {
            let cfg = GuessConfig { mode, l_override: Some(2), ..GuessConfig::default() };
            let mut rng = RngStream::new(9);
            let rep = solve_msc_single(&inst, 0.3, &cfg, &mut rng).unwrap();
            assert!(rep.hard_coverage_ok);
            // Bicriteria output may undershoot full coverage, so its cost can
            // fall below the exact optimum but never above the full total.
            assert!(rep.total_cost <= inst.costs.total());
            let _ = opt;
        }
    }

    #[test]
    fn enumeration_ceiling_is_enforced() {
        let inst = random_coverage_inst(&mut RngStream::new(1), 8, 8, 1);
        let cfg = GuessConfig {
            mode: GuessMode::ExactEnumeration,
            l_override: Some(8),
            max_enumeration: 10,
        };
        let mut rng = RngStream::new(2);
        assert!(matches!(
            solve_msc_single(&inst, 0.3, &cfg, &mut rng),
            Err(CoreError::Capacity(_))
        ));
    }

    #[test]
    fn residual_opt_identities_by_double_brute_force() {
        let mut rng = RngStream::new(500);
        for _ in 0..20 {
            let inst = random_coverage_inst(&mut rng, 6, 7, 2);
            let bf = brute_force_msc(&inst).unwrap().unwrap();
            for l in 0..=bf.set.len() {
                let pre = top_cost_elements(&inst, &bf.set, l);
                // Cost-truncated residual: optimum drops by exactly c(pre).
                let res = residual_msc(&inst, &pre, true);
                let sub = brute_force_msc(&res.inst).unwrap().expect("residual stays feasible");
                assert_eq!(sub.cost, bf.cost - inst.costs.cost_of(&pre));
                // Plain residual: optimum never exceeds the original.
                let plain = residual_msc(&inst, &pre, false);
                let sub = brute_force_msc(&plain.inst).unwrap().unwrap();
                assert!(sub.cost <= bf.cost);
            }
        }
    }

    #[test]
    fn multi_alpha_one_matches_single() {
        let inst = coverage_inst(
            vec![1, 2, 3],
            vec![vec![0], vec![0, 1], vec![1]],
            vec![1.0, 1.0],
            vec![2.0],
        );
        let eps = 0.4;
        let eps_round = (1.0 - 2.0 * e_inv()).min(eps);
        let mut rng_a = RngStream::new(11);
        let multi = solve_msc_multi(&inst, 1, eps, &GuessConfig::default(), &mut rng_a).unwrap();
        let mut rng_b = RngStream::new(11).split(0xA1FA);
        let (single_set, _, _, _) =
            solve_round(&inst, eps_round, &GuessConfig::default(), &mut rng_b).unwrap();
        assert_eq!(multi.final_set, single_set.to_indices());
    }

    #[test]
    fn multi_alpha_two_coverage_bound() {
        let mut rng = RngStream::new(808);
        let eps = 0.25;
        let factor = 1.0 - (-2.0f64).exp() - eps;
        for trial in 0..10 {
            let inst = random_coverage_inst(&mut rng, 6, 8, 2);
            let mut solve_rng = RngStream::new(7000 + trial);
            let rep = solve_msc_multi(&inst, 2, eps, &GuessConfig::default(), &mut solve_rng).unwrap();
            assert_eq!(rep.rounds.len(), 2);
            for (v, b) in rep.coverage.iter().zip(&rep.requirements) {
                assert!(*v >= factor * b - 1e-9, "trial {}: {} < {}·{}", trial, v, factor, b);
            }
        }
    }

    #[test]
    fn multi_later_rounds_idle_once_covered() {
        let inst = coverage_inst(
            vec![1, 2, 3],
            vec![vec![0], vec![0, 1], vec![1]],
            vec![1.0, 1.0],
            vec![2.0],
        );
        let mut rng = RngStream::new(21);
        let rep = solve_msc_multi(&inst, 3,  0.25, &GuessConfig::default(), &mut rng).unwrap();
        // Round 1 covers everything (coverage caps at b); rounds 2-3 add nothing.
        assert_eq!(rep.total_cost, 2);
        for round in &rep.rounds[1..] {
            assert!(round.s_pre.is_empty() && round.rounded.is_empty());
            assert!(round.fixes.iter().all(|f| f.is_empty()));
        }
    }
}
