use crate::error::CoreError;
use crate::ground::{CostFunction, GroundSet};
use crate::sets::BitSet;
use crate::submodular::Oracle;
use serde::{Deserialize, Serialize};

/// Covering instance with `r` monotone submodular constraints: find a
/// minimum-cost `S` with `f_i(S) ≥ b_i` for every `i`.
///
/// Loaded instances have each `f_i` truncated at `b_i`, so `f_i(N) = b_i`
/// exactly; instances built internally by the solvers (residual views,
/// rounding views) skip that normalization on purpose.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MscInstance {
    pub ground: GroundSet,
    pub costs: CostFunction,
    pub fns: Vec<Oracle>,
    pub b: Vec<f64>,
    /// Multiplier applied to original costs at load time (1.0 = untouched).
    pub cost_scale: f64,
}

impl MscInstance {
    /// Construct without normalization; all invariants are the caller's
    /// responsibility. Used by solvers for internal views.
    pub fn new_raw(ground: GroundSet, costs: CostFunction, fns: Vec<Oracle>, b: Vec<f64>) -> Self {
        MscInstance { ground, costs, fns, b, cost_scale: 1.0 }
    }

    /// Construct a user-facing instance: validates shapes, rejects
    /// unreachable requirements, and truncates every `f_i` at `b_i`.
    pub fn new_normalized(
        ground: GroundSet,
        costs: CostFunction,
        fns: Vec<Oracle>,
        b: Vec<f64>,
    ) -> Result<Self, CoreError> {
        let n = ground.len();
        if costs.len() != n {
            return Err(CoreError::Domain(format!("{} costs for {} elements", costs.len(), n)));
        }
        if fns.is_empty() || fns.len() != b.len() {
            return Err(CoreError::Domain("need r ≥ 1 constraints with matching requirements".into()));
        }
        let mut truncated = Vec::with_capacity(fns.len());
        for (i, (f, &bi)) in fns.into_iter().zip(&b).enumerate() {
            if f.n() != n {
                return Err(CoreError::Domain(format!("constraint {} ground size mismatch", i)));
            }
            if !bi.is_finite() || bi < 0.0 {
                return Err(CoreError::Domain(format!("requirement b_{} = {} invalid", i, bi)));
            }
            let reach = f.full_value();
            if reach < bi - 1e-9 {
                return Err(CoreError::Infeasible(format!(
                    "constraint {}: requirement {} exceeds f(N) = {}",
                    i, bi, reach
                )));
            }
            truncated.push(Oracle::truncated(f, bi));
        }
        Ok(MscInstance { ground, costs, fns: truncated, b, cost_scale: 1.0 })
    }

    pub fn n(&self) -> usize {
        self.ground.len()
    }

    pub fn r(&self) -> usize {
        self.fns.len()
    }

    /// True when every constraint meets its requirement on `s` (within a
    /// hair of float tolerance).
    pub fn is_feasible(&self, s: &BitSet) -> bool {
        self.fns.iter().zip(&self.b).all(|(f, &bi)| f.eval(s) >= bi - 1e-9)
    }

    pub fn coverage_values(&self, s: &BitSet) -> Vec<f64> {
        self.fns.iter().map(|f| f.eval(s)).collect()
    }
}

/// Residual MSC instance plus the index bookkeeping to translate solutions
/// back to the parent instance.
#[derive(Debug, Clone)]
pub struct ResidualMsc {
    pub inst: MscInstance,
    /// New index → parent index for the surviving elements.
    pub kept: Vec<usize>,
    /// Anchor set in parent indices.
    pub anchor: BitSet,
}

impl ResidualMsc {
    /// Translate a set over the residual ground back to parent indices.
    pub fn to_parent(&self, s: &BitSet) -> Vec<usize> {
        s.iter_ones().map(|e| self.kept[e]).collect()
    }
}

/// Build the residual instance with respect to `anchor`: ground `N ∖ A`,
/// functions `f_{i|A}`, requirements `max(0, b_i − f_i(A))`. With
/// `truncate_costs` set, also drop every element costing more than the
/// cheapest anchor element, which is the shape stage 1 of the solvers needs:
/// after guessing the priciest optimal elements, everything pricier than the
/// cheapest guess can be discarded.
pub fn residual_msc(inst: &MscInstance, anchor: &BitSet, truncate_costs: bool) -> ResidualMsc {
    let n = inst.n();
    let anchor_min_cost = anchor.iter_ones().map(|e| inst.costs.cost(e)).min();
    let mut kept = Vec::new();
    for e in 0..n {
        if anchor.contains(e) {
            continue;
        }
        if truncate_costs {
            if let Some(mc) = anchor_min_cost {
                if inst.costs.cost(e) > mc {
                    continue;
                }
            }
        }
        kept.push(e);
    }
    let costs = CostFunction::new(kept.iter().map(|&e| inst.costs.cost(e)).collect());
    let mut fns = Vec::with_capacity(inst.r());
    let mut b = Vec::with_capacity(inst.r());
    for (f, &bi) in inst.fns.iter().zip(&inst.b) {
        let fa = f.eval(anchor);
        fns.push(Oracle::residual_mapped(f.clone(), anchor, kept.clone()));
        b.push((bi - fa).max(0.0));
    }
    let ground = GroundSet::new(kept.len());
    ResidualMsc {
        inst: MscInstance { ground, costs, fns, b, cost_scale: inst.cost_scale },
        kept,
        anchor: anchor.clone(),
    }
}

/// Set-cover-with-side-constraints instance: sets over a point universe,
/// plus `r` linear constraints `A z ≥ b` on the covered-point indicator `z`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CcfInstance {
    pub universe: usize,
    /// Point membership mask per set.
    pub sets: Vec<BitSet>,
    pub costs: CostFunction,
    /// r × universe, nonnegative.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub cost_scale: f64,
}

impl CcfInstance {
    pub fn new(
        universe: usize,
        sets: Vec<BitSet>,
        costs: CostFunction,
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
    ) -> Result<Self, CoreError> {
        if costs.len() != sets.len() {
            return Err(CoreError::Domain("one cost per set required".into()));
        }
        if a.is_empty() || a.len() != b.len() {
            return Err(CoreError::Domain("need r ≥ 1 matrix rows with matching requirements".into()));
        }
        for (i, row) in a.iter().enumerate() {
            if row.len() != universe {
                return Err(CoreError::Domain(format!("matrix row {} has wrong width", i)));
            }
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(CoreError::Domain(format!("matrix row {} has invalid entries", i)));
            }
        }
        for (i, &bi) in b.iter().enumerate() {
            if !bi.is_finite() || bi < 0.0 {
                return Err(CoreError::Domain(format!("requirement b_{} = {} invalid", i, bi)));
            }
        }
        for s in &sets {
            if s.len() != universe {
                return Err(CoreError::Domain("set mask over wrong universe".into()));
            }
        }
        let inst = CcfInstance { universe, sets, costs, a, b, cost_scale: 1.0 };
        let all: Vec<usize> = (0..inst.sets.len()).collect();
        let full = inst.constraint_values(&all);
        for (i, (&v, &bi)) in full.iter().zip(&inst.b).enumerate() {
            if v < bi - 1e-9 {
                return Err(CoreError::Infeasible(format!(
                    "constraint {}: even the all-sets solution reaches only {} < {}",
                    i, v, bi
                )));
            }
        }
        Ok(inst)
    }

    pub fn m(&self) -> usize {
        self.sets.len()
    }

    pub fn r(&self) -> usize {
        self.a.len()
    }

    /// Points covered by the union of the given sets.
    pub fn covered_points(&self, picked: &[usize]) -> BitSet {
        let mut acc = BitSet::new(self.universe);
        for &s in picked {
            acc.union_with(&self.sets[s]);
        }
        acc
    }

    /// Value of each constraint row on the covered-point indicator.
    pub fn constraint_values(&self, picked: &[usize]) -> Vec<f64> {
        let cov = self.covered_points(picked);
        self.a.iter().map(|row| cov.iter_ones().map(|j| row[j]).sum()).collect()
    }

    pub fn is_feasible(&self, picked: &[usize]) -> bool {
        self.constraint_values(picked)
            .iter()
            .zip(&self.b)
            .all(|(v, &bi)| *v >= bi - 1e-9)
    }

    /// Constraint row `i` viewed as a weighted coverage function over sets.
    pub fn row_coverage(&self, i: usize) -> Oracle {
        let covers = self.sets.iter().map(|s| s.to_indices()).collect();
        Oracle::coverage(self.universe, covers, self.a[i].clone()).expect("validated at construction")
    }
}

/// Residual CCF instance with parent-index bookkeeping.
#[derive(Debug, Clone)]
pub struct ResidualCcf {
    pub inst: CcfInstance,
    /// New set index → parent set index.
    pub kept: Vec<usize>,
    /// Points covered by the pre-selected sets (parent universe indices).
    pub covered: BitSet,
}

impl ResidualCcf {
    pub fn to_parent(&self, picked: &[usize]) -> Vec<usize> {
        picked.iter().map(|&s| self.kept[s]).collect()
    }
}

/// Residual with respect to an already-chosen collection `pre`: covered
/// points get their matrix columns zeroed, requirements drop by the value
/// already collected, chosen sets leave the ground, and (mirroring the MSC
/// cost truncation) sets pricier than the cheapest chosen set are removed.
pub fn residual_ccf(inst: &CcfInstance, pre: &[usize]) -> ResidualCcf {
    let covered = inst.covered_points(pre);
    let pre_min_cost = pre.iter().map(|&s| inst.costs.cost(s)).min();
    let pre_mask = BitSet::from_indices(inst.m(), pre);
    let mut kept = Vec::new();
    for s in 0..inst.m() {
        if pre_mask.contains(s) {
            continue;
        }
        if let Some(mc) = pre_min_cost {
            if inst.costs.cost(s) > mc {
                continue;
            }
        }
        kept.push(s);
    }
    let sets: Vec<BitSet> = kept
        .iter()
        .map(|&s| {
            let mut m = inst.sets[s].clone();
            m.subtract(&covered);
            m
        })
        .collect();
    let costs = CostFunction::new(kept.iter().map(|&s| inst.costs.cost(s)).collect());
    let mut a = inst.a.clone();
    let mut b = inst.b.clone();
    for (row, bi) in a.iter_mut().zip(b.iter_mut()) {
        let gained: f64 = covered.iter_ones().map(|j| row[j]).sum();
        *bi = (*bi - gained).max(0.0);
        for j in covered.iter_ones() {
            row[j] = 0.0;
        }
    }
    ResidualCcf {
        inst: CcfInstance { universe: inst.universe, sets, costs, a, b, cost_scale: inst.cost_scale },
        kept,
        covered,
    }
}

/// Restrict a CCF instance to a sub-universe: sets are intersected with
/// `keep`, matrix columns outside `keep` are zeroed, requirements unchanged.
/// Point indices keep their positions so fractional vectors stay aligned.
pub fn restrict_universe(inst: &CcfInstance, keep: &BitSet) -> CcfInstance {
    let sets = inst
        .sets
        .iter()
        .map(|s| {
            let mut m = s.clone();
            m.intersect_with(keep);
            m
        })
        .collect();
    let a = inst
        .a
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(j, &v)| if keep.contains(j) { v } else { 0.0 })
                .collect()
        })
        .collect();
    CcfInstance {
        universe: inst.universe,
        sets,
        costs: inst.costs.clone(),
        a,
        b: inst.b.clone(),
        cost_scale: inst.cost_scale,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn msc_xy() -> MscInstance {
        // f1: coverage of points {x:1, y:1}; a covers x, b covers both.
        let f = Oracle::coverage(2, vec![vec![0], vec![0, 1]], vec![1.0, 1.0]).unwrap();
        MscInstance::new_normalized(
            GroundSet::new(2),
            CostFunction::new(vec![1, 2]),
            vec![f],
            vec![2.0],
        )
        .unwrap()
    }

    #[test]
    fn normalization_truncates_and_rejects_unreachable() {
        let inst = msc_xy();
        assert_eq!(inst.fns[0].full_value(), 2.0);

        let f = Oracle::coverage(1, vec![vec![0], vec![0]], vec![1.0]).unwrap();
        let err = MscInstance::new_normalized(
            GroundSet::new(2),
            CostFunction::new(vec![1, 1]),
            vec![f],
            vec![5.0],
        );
        assert!(matches!(err, Err(CoreError::Infeasible(_))));
    }

    #[test]
    fn residual_msc_identity_when_anchor_empty() {
        let inst = msc_xy();
        let res = residual_msc(&inst, &BitSet::new(2), false);
        assert_eq!(res.kept, vec![0, 1]);
        assert_eq!(res.inst.b, vec![2.0]);
        let full = BitSet::full(2);
        assert_eq!(res.inst.fns[0].eval(&full), inst.fns[0].eval(&full));
    }

    #[test]
    fn residual_msc_reduces_requirement() {
        let inst = msc_xy();
        let anchor = BitSet::from_indices(2, &[0]); // covers x only
        let res = residual_msc(&inst, &anchor, false);
        assert_eq!(res.inst.b, vec![1.0]);
        assert_eq!(res.kept, vec![1]);
        assert_eq!(res.inst.fns[0].eval(&BitSet::from_indices(1, &[0])), 1.0);
    }

    #[test]
    fn residual_msc_cost_truncation_drops_pricier_elements() {
        let f = Oracle::coverage(3, vec![vec![0], vec![1], vec![2]], vec![1.0; 3]).unwrap();
        let inst = MscInstance::new_normalized(
            GroundSet::new(3),
            CostFunction::new(vec![5, 7, 3]),
            vec![f],
            vec![3.0],
        )
        .unwrap();
        let anchor = BitSet::from_indices(3, &[0]); // cost 5
        let res = residual_msc(&inst, &anchor, true);
        assert_eq!(res.kept, vec![2]); // cost-7 element removed
        let res_loose = residual_msc(&inst, &anchor, false);
        assert_eq!(res_loose.kept, vec![1, 2]);
    }

    #[test]
    fn residual_msc_full_anchor_clamps_to_zero() {
        let inst = msc_xy();
        let res = residual_msc(&inst, &BitSet::full(2), false);
        assert_eq!(res.inst.n(), 0);
        assert_eq!(res.inst.b, vec![0.0]);
    }

    #[test]
    fn residual_composition_matches_union_anchor() {
        let f = Oracle::coverage(4, vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3]], vec![1.0; 4]).unwrap();
        let inst = MscInstance::new_normalized(
            GroundSet::new(4),
            CostFunction::new(vec![1, 1, 1, 1]),
            vec![f],
            vec![4.0],
        )
        .unwrap();
        let a1 = BitSet::from_indices(4, &[0]);
        let step1 = residual_msc(&inst, &a1, false);
        // anchor {2} in step1 indices = parent element 3.
        let a2_new = BitSet::from_indices(3, &[2]);
        let step2 = residual_msc(&step1.inst, &a2_new, false);
        let direct = residual_msc(&inst, &BitSet::from_indices(4, &[0, 3]), false);
        assert_eq!(step2.inst.b, direct.inst.b);
        for code in 0u64..1 << direct.inst.n() {
            let s = BitSet::from_code(direct.inst.n(), code);
            assert!((step2.inst.fns[0].eval(&s) - direct.inst.fns[0].eval(&s)).abs() < 1e-9);
        }
    }

    fn ccf_e1() -> CcfInstance {
        // universe {u1,u2,u3}; S1={u1,u2} cost 2, S2={u2,u3} cost 2, S3={u3} cost 1;
        // row1 = 1 on {u1,u2}, b1 = 2; row2 = 1 on {u3}, b2 = 1.
        CcfInstance::new(
            3,
            vec![
                BitSet::from_indices(3, &[0, 1]),
                BitSet::from_indices(3, &[1, 2]),
                BitSet::from_indices(3, &[2]),
            ],
            CostFunction::new(vec![2, 2, 1]),
            vec![vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
            vec![2.0, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn ccf_loader_flags_unreachable_requirements() {
        let err = CcfInstance::new(
            2,
            vec![BitSet::from_indices(2, &[0])],
            CostFunction::new(vec![1]),
            vec![vec![1.0, 1.0]],
            vec![2.0],
        );
        assert!(matches!(err, Err(CoreError::Infeasible(_))));
    }

    #[test]
    fn residual_ccf_identity_and_full_cover() {
        let inst = ccf_e1();
        let id = residual_ccf(&inst, &[]);
        assert_eq!(id.inst.b, inst.b);
        assert_eq!(id.kept, vec![0, 1, 2]);

        let full = residual_ccf(&inst, &[0, 1, 2]);
        assert!(full.inst.b.iter().all(|&b| b == 0.0));
        assert!(full.inst.a.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn residual_ccf_updates_matrix_and_demand() {
        // Single set covering point j with A_{1j} = 3, b = 5.
        let inst = CcfInstance::new(
            2,
            vec![BitSet::from_indices(2, &[0]), BitSet::from_indices(2, &[1])],
            CostFunction::new(vec![1, 1]),
            vec![vec![3.0, 2.0]],
            vec![5.0],
        )
        .unwrap();
        let res = residual_ccf(&inst, &[0]);
        assert_eq!(res.inst.b, vec![2.0]);
        assert_eq!(res.inst.a[0][0], 0.0);
        assert_eq!(res.inst.a[0][1], 2.0);
    }

    #[test]
    fn restrict_universe_masks_points() {
        let inst = ccf_e1();
        let keep = BitSet::from_indices(3, &[1]);
        let sub = restrict_universe(&inst, &keep);
        assert_eq!(sub.sets[0].to_indices(), vec![1]);
        assert_eq!(sub.sets[2].to_indices(), Vec::<usize>::new());
        assert_eq!(sub.a[0], vec![0.0, 1.0, 0.0]);
        assert_eq!(sub.b, inst.b);

        let all = restrict_universe(&inst, &BitSet::full(3));
        assert_eq!(all.a, inst.a);
        let none = restrict_universe(&inst, &BitSet::new(3));
        assert!(none.sets.iter().all(|s| s.is_empty()));
        assert!(none.a.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn e1_feasibility_bookkeeping() {
        let inst = ccf_e1();
        assert!(inst.is_feasible(&[0, 2]));
        assert!(!inst.is_feasible(&[0]));
        assert_eq!(inst.constraint_values(&[0, 2]), vec![2.0, 1.0]);
    }
}
