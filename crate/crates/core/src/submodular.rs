use crate::error::CoreError;
use crate::sets::BitSet;
use serde::{Deserialize, Serialize};

/// Weighted coverage function: each element covers a fixed set of universe
/// points, and `f(S)` is the total weight of points covered by the union.
/// Monotone and submodular by construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightedCoverageFunction {
    n_elements: usize,
    universe: usize,
    covers: Vec<BitSet>,
    weights: Vec<f64>,
}

impl WeightedCoverageFunction {
    pub fn new(universe: usize, covers: Vec<Vec<usize>>, weights: Vec<f64>) -> Result<Self, CoreError> {
        if weights.len() != universe {
            return Err(CoreError::Domain(format!(
                "expected {} point weights, got {}",
                universe,
                weights.len()
            )));
        }
        for &w in &weights {
            if !w.is_finite() || w < 0.0 {
                return Err(CoreError::Domain(format!("point weight {} must be finite and nonnegative", w)));
            }
        }
        let mut masks = Vec::with_capacity(covers.len());
        for pts in &covers {
            let mut m = BitSet::new(universe);
            for &p in pts {
                if p >= universe {
                    return Err(CoreError::Domain(format!("point index {} out of universe {}", p, universe)));
                }
                m.insert(p);
            }
            masks.push(m);
        }
        Ok(WeightedCoverageFunction { n_elements: covers.len(), universe, covers: masks, weights })
    }

    /// Unit-weight convenience constructor.
    pub fn unit(universe: usize, covers: Vec<Vec<usize>>) -> Result<Self, CoreError> {
        Self::new(universe, covers, vec![1.0; universe])
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn cover_mask(&self, e: usize) -> &BitSet {
        &self.covers[e]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight_of_mask(&self, mask: &BitSet) -> f64 {
        mask.iter_ones().map(|p| self.weights[p]).sum()
    }

    pub fn union_mask(&self, s: &BitSet) -> BitSet {
        let mut acc = BitSet::new(self.universe);
        for e in s.iter_ones() {
            acc.union_with(&self.covers[e]);
        }
        acc
    }

    /// Exact multilinear extension: a point survives uncovered with
    /// probability `Π_{e covers p} (1 - x_e)`, so
    /// `F(x) = Σ_p w_p (1 - Π_{e covers p} (1 - x_e))`.
    /// Used as a fast cross-check against enumeration in tests.
    pub fn extension_value(&self, x: &[f64]) -> f64 {
        let mut total = 0.0;
        for p in 0..self.universe {
            if self.weights[p] == 0.0 {
                continue;
            }
            let mut miss = 1.0;
            for e in 0..self.n_elements {
                if self.covers[e].contains(p) {
                    miss *= 1.0 - x[e];
                }
            }
            total += self.weights[p] * (1.0 - miss);
        }
        total
    }
}

/// Monotone submodular oracle: weighted coverage plus the closure operations
/// (truncation, residual/marginal restriction) the solvers build on top.
///
/// `Residual` optionally re-indexes to a smaller ground set via `map`
/// (new index → base index), which is how cost-truncated residual instances
/// keep dense vectors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Oracle {
    Coverage(WeightedCoverageFunction),
    Truncated {
        base: Box<Oracle>,
        cap: f64,
    },
    Residual {
        base: Box<Oracle>,
        anchor: BitSet,
        anchor_value: f64,
        map: Option<Vec<usize>>,
    },
}

impl Oracle {
    pub fn coverage(universe: usize, covers: Vec<Vec<usize>>, weights: Vec<f64>) -> Result<Self, CoreError> {
        Ok(Oracle::Coverage(WeightedCoverageFunction::new(universe, covers, weights)?))
    }

    pub fn truncated(base: Oracle, cap: f64) -> Self {
        Oracle::Truncated { base: Box::new(base), cap }
    }

    /// Residual `f(S ∪ A) − f(A)` over the same index space.
    pub fn residual(base: Oracle, anchor: &BitSet) -> Self {
        let anchor_value = base.eval(anchor);
        Oracle::Residual { base: Box::new(base), anchor: anchor.clone(), anchor_value, map: None }
    }

    /// Residual re-indexed onto the surviving elements listed in `map`
    /// (new index → base index).
    pub fn residual_mapped(base: Oracle, anchor: &BitSet, map: Vec<usize>) -> Self {
        let anchor_value = base.eval(anchor);
        Oracle::Residual { base: Box::new(base), anchor: anchor.clone(), anchor_value, map: Some(map) }
    }

    /// Number of elements in this oracle's ground set.
    pub fn n(&self) -> usize {
        match self {
            Oracle::Coverage(c) => c.n_elements,
            Oracle::Truncated { base, .. } => base.n(),
            Oracle::Residual { base, map, .. } => map.as_ref().map_or(base.n(), |m| m.len()),
        }
    }

    pub fn eval(&self, s: &BitSet) -> f64 {
        match self {
            Oracle::Coverage(c) => {
                let mut acc = BitSet::new(c.universe);
                for e in s.iter_ones() {
                    acc.union_with(&c.covers[e]);
                }
                c.weight_of_mask(&acc)
            }
            Oracle::Truncated { base, cap } => base.eval(s).min(*cap),
            Oracle::Residual { base, anchor, anchor_value, map } => {
                let mut union = anchor.clone();
                match map {
                    None => union.union_with(s),
                    Some(m) => {
                        for e in s.iter_ones() {
                            union.insert(m[e]);
                        }
                    }
                }
                base.eval(&union) - anchor_value
            }
        }
    }

    /// Marginal value `f(A ∪ {e}) − f(A)`.
    pub fn marginal(&self, e: usize, a: &BitSet) -> f64 {
        if a.contains(e) {
            return 0.0;
        }
        let mut with_e = a.clone();
        with_e.insert(e);
        self.eval(&with_e) - self.eval(a)
    }

    /// Value of the full ground set.
    pub fn full_value(&self) -> f64 {
        self.eval(&BitSet::full(self.n()))
    }
}

/// Evaluate `f(S)`, checking index bounds first.
pub fn eval(f: &Oracle, s: &BitSet) -> Result<f64, CoreError> {
    if s.len() != f.n() {
        return Err(CoreError::Domain(format!(
            "set over {} indices evaluated on oracle with ground size {}",
            s.len(),
            f.n()
        )));
    }
    Ok(f.eval(s))
}

/// Marginal `f(e | A)` with bounds checking.
pub fn marginal(f: &Oracle, e: usize, a: &BitSet) -> Result<f64, CoreError> {
    if e >= f.n() {
        return Err(CoreError::Domain(format!("element {} out of ground size {}", e, f.n())));
    }
    if a.len() != f.n() {
        return Err(CoreError::Domain("anchor set has wrong index space".into()));
    }
    Ok(f.marginal(e, a))
}

/// Exhaustively verify monotonicity and submodularity of `f` over all subset
/// pairs. Exponential; intended for property tests with n ≤ 10.
pub fn check_monotone_submodular(f: &Oracle, tol: f64) -> Result<(), String> {
    let n = f.n();
    assert!(n <= 12, "exhaustive check limited to small ground sets");
    let vals: Vec<f64> = (0u64..1 << n).map(|code| f.eval(&BitSet::from_code(n, code))).collect();
    for a in 0u64..1 << n {
        for b in 0u64..1 << n {
            if a & b == a && vals[a as usize] > vals[b as usize] + tol {
                return Err(format!("monotonicity violated: f({:b}) > f({:b})", a, b));
            }
            let (u, i) = (a | b, a & b);
            if vals[a as usize] + vals[b as usize] + tol < vals[u as usize] + vals[i as usize] {
                return Err(format!("submodularity violated at ({:b}, {:b})", a, b));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point_coverage() -> Oracle {
        // a -> {x}, b -> {x, y}
        Oracle::coverage(2, vec![vec![0], vec![0, 1]], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn eval_union_of_covers() {
        let f = two_point_coverage();
        let s = BitSet::from_indices(2, &[0, 1]);
        assert_eq!(eval(&f, &s).unwrap(), 2.0);
        assert_eq!(eval(&f, &BitSet::new(2)).unwrap(), 0.0);
    }

    #[test]
    fn eval_rejects_wrong_index_space() {
        let f = two_point_coverage();
        assert!(eval(&f, &BitSet::new(5)).is_err());
    }

    #[test]
    fn truncation_caps_value() {
        let f = Oracle::truncated(two_point_coverage(), 1.0);
        let s = BitSet::from_indices(2, &[1]);
        assert_eq!(f.eval(&s), 1.0);
        assert_eq!(f.eval(&BitSet::from_indices(2, &[0])), 1.0);
    }

    #[test]
    fn marginals() {
        // a -> {x}, b -> {x}: second copy adds nothing.
        let f = Oracle::coverage(1, vec![vec![0], vec![0]], vec![1.0]).unwrap();
        let a = BitSet::from_indices(2, &[0]);
        assert_eq!(marginal(&f, 1, &a).unwrap(), 0.0);

        // a -> {x}, b -> {y}: disjoint.
        let g = Oracle::coverage(2, vec![vec![0], vec![1]], vec![1.0, 1.0]).unwrap();
        assert_eq!(marginal(&g, 1, &a).unwrap(), 1.0);

        // e already in A.
        assert_eq!(marginal(&g, 0, &a).unwrap(), 0.0);
    }

    #[test]
    fn residual_shifts_baseline() {
        let f = two_point_coverage();
        let anchor = BitSet::from_indices(2, &[0]); // covers {x}, value 1
        let r = Oracle::residual(f, &anchor);
        assert_eq!(r.eval(&BitSet::new(2)), 0.0);
        assert_eq!(r.eval(&BitSet::from_indices(2, &[1])), 1.0); // b adds y only
    }

    #[test]
    fn residual_mapped_reindexes() {
        // ground {a, b, c}: a->{x}, b->{y}, c->{z}; anchor {a}; keep {b, c}.
        let f = Oracle::coverage(3, vec![vec![0], vec![1], vec![2]], vec![1.0; 3]).unwrap();
        let anchor = BitSet::from_indices(3, &[0]);
        let r = Oracle::residual_mapped(f, &anchor, vec![1, 2]);
        assert_eq!(r.n(), 2);
        assert_eq!(r.eval(&BitSet::from_indices(2, &[0])), 1.0);
        assert_eq!(r.eval(&BitSet::full(2)), 2.0);
    }

    #[test]
    fn coverage_family_is_monotone_submodular() {
        let f = Oracle::coverage(
            4,
            vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![0, 3], vec![]],
            vec![0.5, 2.0, 1.0, 3.0],
        )
        .unwrap();
        check_monotone_submodular(&f, 1e-9).unwrap();
        check_monotone_submodular(&Oracle::truncated(f.clone(), 2.5), 1e-9).unwrap();
        let anchor = BitSet::from_indices(5, &[1]);
        check_monotone_submodular(&Oracle::residual(f, &anchor), 1e-9).unwrap();
    }

    #[test]
    fn closed_form_extension_matches_hand_value() {
        // a -> {x}, b -> {y}, x = (0.5, 0.5): F = 0.5 + 0.5 = 1.
        let f = WeightedCoverageFunction::unit(2, vec![vec![0], vec![1]]).unwrap();
        assert!((f.extension_value(&[0.5, 0.5]) - 1.0).abs() < 1e-12);
    }
}
