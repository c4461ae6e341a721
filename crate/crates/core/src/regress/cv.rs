use super::folds::fold_assignment;
use super::lasso::fit_lasso_cv_rows;
use super::spec::{BaseRegressorSpec, LassoParams, RegressorKind};
use crate::data::{Dataset, Matrix};
use crate::error::{contract, ErpxError, Result};
use crate::metrics::{mse, PredictionVector, Provenance};
use crate::scalar::Real;
use crate::seed::RngSeed;

/// K-fold cross-validated Lasso predictions for the features in `subset`.
///
/// Every row is predicted exactly once, by a model fit on the other K−1
/// folds whose penalty is itself chosen by an inner CV on those folds.
pub fn cv_predictions<T: Real>(
    data: &Dataset<T>,
    subset: &[usize],
    spec: &BaseRegressorSpec,
    seed: RngSeed,
) -> Result<PredictionVector<T>> {
    contract!(
        spec.kind == RegressorKind::Lasso,
        "cv_predictions requires a lasso spec"
    );
    let values = cv_predictions_raw(data.x(), data.y(), subset, &spec.lasso, seed)?;
    Ok(PredictionVector::new(values, Provenance::Cv))
}

pub(crate) fn cv_predictions_raw<T: Real>(
    x: &Matrix<T>,
    y: &[T],
    subset: &[usize],
    params: &LassoParams,
    seed: RngSeed,
) -> Result<Vec<T>> {
    contract!(!subset.is_empty(), "empty feature subset");
    contract!(
        subset.iter().all(|&j| j < x.n_cols()),
        "feature index out of range"
    );
    let n = y.len();
    let k = params.n_folds;
    contract!(k >= 2, "cross-validation needs K >= 2");
    if n < 2 * k {
        return Err(ErpxError::Data(format!(
            "{n} rows are too few for {k}-fold cross-validation with an inner CV; \
             use K <= {}",
            n / 2
        )));
    }
    let cols: Vec<&[T]> = subset.iter().map(|&j| x.col(j)).collect();
    let folds = fold_assignment(n, k, seed.derive("outer-folds"));
    let mut pred = vec![T::zero(); n];
    for fold in 0..k {
        let train: Vec<usize> = (0..n).filter(|&i| folds[i] != fold).collect();
        let model = fit_lasso_cv_rows(
            &cols,
            y,
            &train,
            params,
            seed.derive_index("inner-cv", fold as u64),
        )?;
        for i in (0..n).filter(|&i| folds[i] == fold) {
            pred[i] = model.predict_row(cols.iter().map(|c| c[i]));
        }
    }
    Ok(pred)
}

/// Mean CV-MSE over `reps` independent fold assignments.
pub fn repeated_cv_mse<T: Real>(
    data: &Dataset<T>,
    subset: &[usize],
    spec: &BaseRegressorSpec,
    reps: usize,
    seed: RngSeed,
) -> Result<T> {
    contract!(reps >= 1, "at least one CV repetition is required");
    let mut total = T::zero();
    for r in 0..reps {
        let p = cv_predictions(data, subset, spec, seed.derive_index("cv-rep", r as u64))?;
        total = total + mse(data.y(), &p.values)?;
    }
    Ok(total / T::of_usize(reps))
}
