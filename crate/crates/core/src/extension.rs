//! Multilinear extension of a set function and the sampling routines built
//! on it. `F(x) = E[f(R(x))]` where `R(x)` includes each element `e`
//! independently with probability `x_e`.

use crate::error::CoreError;
use crate::rng::RngStream;
use crate::sets::BitSet;
use crate::submodular::Oracle;

/// A vector in `[0,1]^n`, validated once at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalPoint {
    x: Vec<f64>,
}

impl FractionalPoint {
    pub fn new(x: Vec<f64>) -> Result<Self, CoreError> {
        for (i, &v) in x.iter().enumerate() {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(CoreError::Domain(format!("coordinate {} = {} outside [0,1]", i, v)));
            }
        }
        Ok(FractionalPoint { x })
    }

    pub fn zeros(n: usize) -> Self {
        FractionalPoint { x: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.x
    }

    pub fn get(&self, i: usize) -> f64 {
        self.x[i]
    }

    pub fn support(&self) -> Vec<usize> {
        self.x
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

const MLE_EXACT_CAP: usize = 20;

/// Exact multilinear extension value by enumerating all subsets of the
/// support. Only usable for small `n`; returns a capacity error above 20
/// support elements.
pub fn mle_exact(f: &Oracle, x: &FractionalPoint) -> Result<f64, CoreError> {
    if f.n() != x.len() {
        return Err(CoreError::Domain(format!(
            "function over {} elements evaluated at a {}-dim point",
            f.n(),
            x.len()
        )));
    }
    let support = x.support();
    if support.len() > MLE_EXACT_CAP {
        return Err(CoreError::Capacity(format!(
            "exact extension needs 2^{} evaluations; cap is 2^{}",
            support.len(),
            MLE_EXACT_CAP
        )));
    }
    let k = support.len();
    let mut total = 0.0;
    for code in 0u64..(1u64 << k) {
        let mut p = 1.0;
        let mut s = BitSet::new(f.n());
        for (bit, &e) in support.iter().enumerate() {
            if code >> bit & 1 == 1 {
                p *= x.get(e);
                s.insert(e);
            } else {
                p *= 1.0 - x.get(e);
            }
        }
        if p > 0.0 {
            total += p * f.eval(&s);
        }
    }
    Ok(total)
}

/// Sample-average estimate of `F(x)` with additive accuracy `t` holding with
/// probability `≥ 1 − δ`. Sample count comes from a Hoeffding bound on the
/// range `[0, f(N)]`.
pub fn mle_estimate(
    f: &Oracle,
    x: &FractionalPoint,
    t: f64,
    delta: f64,
    rng: &mut RngStream,
) -> Result<f64, CoreError> {
    if f.n() != x.len() {
        return Err(CoreError::Domain("dimension mismatch".into()));
    }
    if !(t > 0.0) || !(0.0 < delta && delta < 1.0) {
        return Err(CoreError::Domain(format!("need t > 0 and δ ∈ (0,1); got t={}, δ={}", t, delta)));
    }
    let range = f.full_value();
    if range <= 0.0 {
        return Ok(0.0);
    }
    let samples = ((2.0f64 / delta).ln() * range * range / (2.0 * t * t)).ceil() as usize;
    let samples = samples.max(1);
    let mut acc = 0.0;
    for _ in 0..samples {
        let s = independent_round(x, rng);
        acc += f.eval(&s);
    }
    Ok(acc / samples as f64)
}

/// One independent-rounding draw from `x`: element `e` joins with
/// probability `x_e`. Elements are visited in index order and exactly one
/// uniform is consumed per element, so a fixed seed gives a reproducible
/// set regardless of the support pattern.
pub fn independent_round(x: &FractionalPoint, rng: &mut RngStream) -> BitSet {
    let mut s = BitSet::new(x.len());
    for e in 0..x.len() {
        let u = rng.next_f64();
        if u < x.get(e) {
            s.insert(e);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::submodular::WeightedCoverageFunction;

    fn two_point_fn() -> Oracle {
        // points {p:1, q:1}; e0 covers p, e1 covers both.
        Oracle::coverage(2, vec![vec![0], vec![0, 1]], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn exact_matches_closed_form_coverage() {
        let f = two_point_fn();
        let wcf = WeightedCoverageFunction::new(2, vec![vec![0], vec![0, 1]], vec![1.0, 1.0]).unwrap();
        let x = FractionalPoint::new(vec![0.3, 0.6]).unwrap();
        let exact = mle_exact(&f, &x).unwrap();
        assert!((exact - wcf.extension_value(x.values())).abs() < 1e-12);
        // Hand value: P[p covered] = 1-(0.7)(0.4) = 0.72; P[q] = 0.6.
        assert!((exact - 1.32).abs() < 1e-12);
    }

    #[test]
    fn exact_at_integral_points_is_set_value() {
        let f = two_point_fn();
        for code in 0u64..4 {
            let s = BitSet::from_code(2, code);
            let x = FractionalPoint::new((0..2).map(|e| if s.contains(e) { 1.0 } else { 0.0 }).collect()).unwrap();
            assert!((mle_exact(&f, &x).unwrap() - f.eval(&s)).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_respects_support_cap() {
        let n = MLE_EXACT_CAP + 1;
        let covers: Vec<Vec<usize>> = (0..n).map(|e| vec![e]).collect();
        let f = Oracle::coverage(n, covers, vec![1.0; n]).unwrap();
        let x = FractionalPoint::new(vec![0.5; n]).unwrap();
        assert!(matches!(mle_exact(&f, &x), Err(CoreError::Capacity(_))));
        // Sparse support on a big ground set still fine.
        let mut sparse = vec![0.0; n];
        sparse[0] = 0.5;
        let x = FractionalPoint::new(sparse).unwrap();
        assert!((mle_exact(&f, &x).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn estimate_concentrates_near_exact() {
        let f = two_point_fn();
        let x = FractionalPoint::new(vec![0.3, 0.6]).unwrap();
        let exact = mle_exact(&f, &x).unwrap();
        let mut rng = RngStream::new(7);
        let est = mle_estimate(&f, &x, 0.05, 0.01, &mut rng).unwrap();
        assert!((est - exact).abs() < 0.05, "est {} vs exact {}", est, exact);
    }

    #[test]
    fn estimate_rejects_bad_parameters() {
        let f = two_point_fn();
        let x = FractionalPoint::zeros(2);
        let mut rng = RngStream::new(1);
        assert!(mle_estimate(&f, &x, 0.0, 0.5, &mut rng).is_err());
        assert!(mle_estimate(&f, &x, 0.1, 1.0, &mut rng).is_err());
    }

    #[test]
    fn rounding_is_deterministic_per_seed_and_monotone_in_x() {
        let x = FractionalPoint::new(vec![0.2, 0.8, 0.5, 0.0, 1.0]).unwrap();
        let a = independent_round(&x, &mut RngStream::new(42));
        let b = independent_round(&x, &mut RngStream::new(42));
        assert_eq!(a, b);
        assert!(!a.contains(3)); // zero prob never selected
        assert!(a.contains(4)); // prob 1 always selected

        // Same uniforms, pointwise-larger x ⇒ superset.
        let y = FractionalPoint::new(vec![0.6, 0.9, 0.9, 0.3, 1.0]).unwrap();
        let sy = independent_round(&y, &mut RngStream::new(42));
        assert!(a.is_subset_of(&sy));
    }

    #[test]
    fn rounding_frequency_tracks_probability() {
        let x = FractionalPoint::new(vec![0.25]).unwrap();
        let mut rng = RngStream::new(9);
        let trials = 20_000;
        let hits = (0..trials).filter(|_| independent_round(&x, &mut rng).contains(0)).count();
        let freq = hits as f64 / trials as f64;
        assert!((freq - 0.25).abs() < 0.02, "frequency {}", freq);
    }
}
