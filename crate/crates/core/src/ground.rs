use crate::error::CoreError;
use crate::sets::BitSet;
use serde::{Deserialize, Serialize};

/// Dense, contiguously indexed ground set `0..n`, with optional display
/// labels for reporting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundSet {
    n: usize,
    labels: Option<Vec<String>>,
}

impl GroundSet {
    pub fn new(n: usize) -> Self {
        GroundSet { n, labels: None }
    }

    pub fn with_labels(labels: Vec<String>) -> Self {
        GroundSet { n: labels.len(), labels: Some(labels) }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(ls) if i < ls.len() => ls[i].clone(),
            _ => format!("e{}", i),
        }
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }
}

/// Nonnegative integer element costs.
///
/// Integrality is what makes OPT-range bisection and the knapsack pricing DP
/// exact; loaders rescale wilder inputs into `0..=n³` before constructing one
/// of these (see [`CostFunction::rescaled`]).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostFunction {
    costs: Vec<u64>,
}

impl CostFunction {
    pub fn new(costs: Vec<u64>) -> Self {
        CostFunction { costs }
    }

    /// Rescale costs so the maximum fits within `bound`, keeping zeros at
    /// zero and positives positive. Returns the scaled costs together with
    /// the multiplicative factor `scale` such that
    /// `scaled ≈ original * scale`. Costs already within the bound pass
    /// through unchanged (`scale = 1`).
    pub fn rescaled(costs: &[u64], bound: u64) -> Result<(Self, f64), CoreError> {
        let bound = bound.max(1);
        let cmax = costs.iter().copied().max().unwrap_or(0);
        if cmax <= bound {
            return Ok((CostFunction::new(costs.to_vec()), 1.0));
        }
        let scale = bound as f64 / cmax as f64;
        let scaled = costs
            .iter()
            .map(|&c| if c == 0 { 0 } else { ((c as f64 * scale).ceil() as u64).clamp(1, bound) })
            .collect();
        Ok((CostFunction::new(scaled), scale))
    }

    pub fn len(&self) -> usize {
        self.costs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.costs.is_empty()
    }

    pub fn cost(&self, e: usize) -> u64 {
        self.costs[e]
    }

    pub fn costs(&self) -> &[u64] {
        &self.costs
    }

    pub fn total(&self) -> u64 {
        self.costs.iter().sum()
    }

    pub fn max(&self) -> u64 {
        self.costs.iter().copied().max().unwrap_or(0)
    }

    pub fn cost_of(&self, s: &BitSet) -> u64 {
        s.iter_ones().map(|e| self.costs[e]).sum()
    }

    pub fn cost_of_indices(&self, s: &[usize]) -> u64 {
        s.iter().map(|&e| self.costs[e]).sum()
    }

    /// Fractional cost `c · x`.
    pub fn cost_of_point(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.costs).map(|(xi, &c)| xi * c as f64).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cost_helpers() {
        let c = CostFunction::new(vec![1, 2, 3, 1]);
        assert_eq!(c.total(), 7);
        assert_eq!(c.max(), 3);
        let s = BitSet::from_indices(4, &[0, 2]);
        assert_eq!(c.cost_of(&s), 4);
        assert!((c.cost_of_point(&[0.5, 0.0, 1.0, 0.0]) - 3.5).abs() < 1e-12);
    }

    #[test]
    fn rescale_within_bound_is_identity() {
        let (c, scale) = CostFunction::rescaled(&[1, 5, 9], 1000).unwrap();
        assert_eq!(c.costs(), &[1, 5, 9]);
        assert_eq!(scale, 1.0);
    }

    #[test]
    fn rescale_caps_at_bound_and_keeps_positives() {
        let (c, scale) = CostFunction::rescaled(&[0, 1, 2_000_000], 1000).unwrap();
        assert_eq!(c.cost(0), 0);
        assert!(c.cost(1) >= 1);
        assert_eq!(c.cost(2), 1000);
        assert!(scale < 1.0);
    }

    #[test]
    fn labels_fall_back_to_index_names() {
        let g = GroundSet::new(3);
        assert_eq!(g.label(2), "e2");
        let g = GroundSet::with_labels(vec!["a".into(), "b".into()]);
        assert_eq!(g.label(1), "b");
        assert_eq!(g.len(), 2);
    }
}
