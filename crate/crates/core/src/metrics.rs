//! Assessment metrics, prediction averaging and empirical quantiles.

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::scalar::Real;

/// How a prediction vector was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Cv,
    Oob,
    Direct,
}

/// Predictions aligned index-for-index with the rows of a dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionVector<T> {
    pub values: Vec<T>,
    pub provenance: Provenance,
}

impl<T> PredictionVector<T> {
    pub fn new(values: Vec<T>, provenance: Provenance) -> Self {
        PredictionVector { values, provenance }
    }
}

impl<T> AsRef<[T]> for PredictionVector<T> {
    fn as_ref(&self) -> &[T] {
        &self.values
    }
}

/// Mean squared error `(1/N) Σ (y_i - ŷ_i)²`.
pub fn mse<T: Real>(y: &[T], yhat: &[T]) -> Result<T> {
    contract!(
        y.len() == yhat.len(),
        "mse: length mismatch ({} vs {})",
        y.len(),
        yhat.len()
    );
    contract!(!y.is_empty(), "mse: empty input");
    let ss = y
        .iter()
        .zip(yhat)
        .fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b));
    Ok(ss / T::of_usize(y.len()))
}

/// Elementwise mean of several prediction vectors.
pub fn ensemble_predictions<T: Real, V: AsRef<[T]>>(preds: &[V]) -> Result<Vec<T>> {
    contract!(!preds.is_empty(), "ensemble_predictions: no prediction vectors");
    let n = preds[0].as_ref().len();
    contract!(
        preds.iter().all(|p| p.as_ref().len() == n),
        "ensemble_predictions: prediction vectors differ in length"
    );
    let mut sum = vec![T::zero(); n];
    for p in preds {
        for (s, &v) in sum.iter_mut().zip(p.as_ref()) {
            *s = *s + v;
        }
    }
    let h = T::of_usize(preds.len());
    Ok(sum.into_iter().map(|s| s / h).collect())
}

/// MSE of the ensembled predictions; the single code path used for every
/// averaged assessment so cached and recomputed values agree bitwise.
pub fn ensemble_mse<T: Real, V: AsRef<[T]>>(y: &[T], preds: &[V]) -> Result<T> {
    mse(y, &ensemble_predictions(preds)?)
}

/// Order-statistic convention for [`quantile_with`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantileRule {
    /// Linear interpolation at position `q·(m-1)` of the sorted sample.
    #[default]
    Linear,
    /// Smallest order statistic whose empirical CDF reaches `q`.
    InverseCdf,
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn empirical_quantile<T: Real>(values: &[T], q: T) -> Result<T> {
    quantile_with(values, q, QuantileRule::Linear)
}

pub fn quantile_with<T: Real>(values: &[T], q: T, rule: QuantileRule) -> Result<T> {
    contract!(!values.is_empty(), "quantile of an empty sample");
    contract!(
        q >= T::zero() && q <= T::one(),
        "quantile level {q} outside [0, 1]"
    );
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Ok(quantile_sorted(&sorted, q, rule))
}

pub(crate) fn quantile_sorted<T: Real>(sorted: &[T], q: T, rule: QuantileRule) -> T {
    let m = sorted.len();
    match rule {
        QuantileRule::Linear => {
            let pos = q * T::of_usize(m - 1);
            let lo = pos.floor();
            let lo_idx = lo.to_usize().unwrap_or(0).min(m - 1);
            let hi_idx = (lo_idx + 1).min(m - 1);
            let frac = pos - lo;
            sorted[lo_idx] + frac * (sorted[hi_idx] - sorted[lo_idx])
        }
        QuantileRule::InverseCdf => {
            let k = (q * T::of_usize(m)).ceil().to_usize().unwrap_or(0);
            sorted[k.clamp(1, m) - 1]
        }
    }
}

pub fn mean<T: Real>(v: &[T]) -> T {
    v.iter().copied().sum::<T>() / T::of_usize(v.len())
}

/// Sample variance with the `n - 1` denominator.
pub fn sample_variance<T: Real>(v: &[T]) -> T {
    if v.len() < 2 {
        return T::zero();
    }
    let m = mean(v);
    v.iter().map(|&x| (x - m) * (x - m)).sum::<T>() / T::of_usize(v.len() - 1)
}

/// Five-number summary `(min, q1, median, q3, max)`.
pub fn five_number_summary<T: Real>(v: &[T]) -> Result<[T; 5]> {
    let mut out = [T::zero(); 5];
    for (slot, q) in out.iter_mut().zip([0.0, 0.25, 0.5, 0.75, 1.0]) {
        *slot = empirical_quantile(v, T::of(q))?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(mse(&[0.0, 2.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(mse(&[5.0], &[2.0]).unwrap(), 9.0);
        assert!(mse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn mse_f32() {
        assert_eq!(mse(&[0.0f32, 2.0], &[1.0, 1.0]).unwrap(), 1.0f32);
    }

    #[test]
    fn ensemble_examples() {
        let v = vec![1.5, -2.0, 4.0];
        assert_eq!(ensemble_predictions(&[v.clone()]).unwrap(), v);
        assert_eq!(
            ensemble_predictions(&[vec![1.0, 3.0], vec![3.0, 5.0]]).unwrap(),
            vec![2.0, 4.0]
        );
        assert_eq!(ensemble_predictions(&vec![v.clone(); 4]).unwrap(), v);
        assert!(ensemble_predictions::<f64, Vec<f64>>(&[]).is_err());
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(empirical_quantile(&[3.0], 0.3).unwrap(), 3.0);
        let v = [4.0, 2.0, 1.0, 3.0];
        assert_eq!(empirical_quantile(&v, 0.0).unwrap(), 1.0);
        assert_eq!(empirical_quantile(&v, 1.0).unwrap(), 4.0);
        assert_eq!(empirical_quantile(&[10.0, 20.0], 0.5).unwrap(), 15.0);
        assert!(empirical_quantile(&v, 1.5).is_err());
        assert!(empirical_quantile(&v, -0.1).is_err());
    }

    #[test]
    fn inverse_cdf_rule() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_with(&v, 0.5, QuantileRule::InverseCdf).unwrap(), 2.0);
        assert_eq!(quantile_with(&v, 0.0, QuantileRule::InverseCdf).unwrap(), 1.0);
        assert_eq!(quantile_with(&v, 1.0, QuantileRule::InverseCdf).unwrap(), 4.0);
    }

    proptest! {
        #[test]
        fn mse_detects_translation(y in prop::collection::vec(-100.0f64..100.0, 1..30), c in -10.0f64..10.0) {
            let shifted: Vec<f64> = y.iter().map(|v| v + c).collect();
            let m = mse(&y, &shifted).unwrap();
            prop_assert!((m - c * c).abs() <= 1e-9 * (1.0 + c * c));
        }

        #[test]
        fn ensemble_is_order_invariant(a in prop::collection::vec(-5.0f64..5.0, 6), b in prop::collection::vec(-5.0f64..5.0, 6), c in prop::collection::vec(-5.0f64..5.0, 6)) {
            let e1 = ensemble_predictions(&[a.clone(), b.clone(), c.clone()]).unwrap();
            let e2 = ensemble_predictions(&[c, a, b]).unwrap();
            for (x, y) in e1.iter().zip(&e2) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }

        #[test]
        fn quantile_monotone_in_q(v in prop::collection::vec(-50.0f64..50.0, 1..40), q1 in 0.0f64..1.0, q2 in 0.0f64..1.0) {
            let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
            for rule in [QuantileRule::Linear, QuantileRule::InverseCdf] {
                prop_assert!(quantile_with(&v, lo, rule).unwrap() <= quantile_with(&v, hi, rule).unwrap());
            }
        }
    }
}
