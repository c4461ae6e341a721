use serde::{Deserialize, Serialize};

use super::forest::Forest;
use super::lasso::{fit_lasso_cv, LassoModel};
use super::spec::{BaseRegressorSpec, RegressorKind};
use crate::data::{Dataset, Matrix};
use crate::error::{contract, Result};
use crate::scalar::Real;
use crate::seed::RngSeed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelParams<T> {
    Lasso(LassoModel<T>),
    Forest(Forest<T>),
}

/// A trained base model together with the dataset columns it reads.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedModel<T> {
    pub feature_subset: Vec<usize>,
    pub params: ModelParams<T>,
}

/// Lasso: `β₀ + X_subset β`; forest: mean over all trees.
pub fn predict<T: Real>(model: &FittedModel<T>, xnew: &Matrix<T>) -> Result<Vec<T>> {
    let needed = model.feature_subset.iter().copied().max().map_or(0, |m| m + 1);
    contract!(
        xnew.n_cols() >= needed,
        "prediction matrix has {} columns, model needs {}",
        xnew.n_cols(),
        needed
    );
    let cols: Vec<&[T]> = model.feature_subset.iter().map(|&j| xnew.col(j)).collect();
    let out = (0..xnew.n_rows())
        .map(|i| match &model.params {
            ModelParams::Lasso(l) => l.predict_row(cols.iter().map(|c| c[i])),
            ModelParams::Forest(f) => f.predict_with(|k| cols[k][i]),
        })
        .collect();
    Ok(out)
}

/// Refit on all rows with final-quality settings: a fresh CV-chosen penalty
/// for the Lasso, `n_trees_final` trees for the forest.
pub fn fit_final<T: Real>(
    data: &Dataset<T>,
    subset: &[usize],
    spec: &BaseRegressorSpec,
    seed: RngSeed,
) -> Result<FittedModel<T>> {
    contract!(!subset.is_empty(), "empty feature subset");
    contract!(subset.iter().all(|&j| j < data.n_features()), "feature index out of range");
    data.require_fittable()?;
    let params = match spec.kind {
        RegressorKind::Lasso => ModelParams::Lasso(fit_lasso_cv(data, subset, &spec.lasso, seed)?),
        RegressorKind::Forest => ModelParams::Forest(Forest::fit_raw(
            data.x(),
            data.y(),
            subset,
            &spec.forest,
            spec.forest.n_trees_final,
            seed,
        )),
    };
    Ok(FittedModel {
        feature_subset: subset.to_vec(),
        params,
    })
}
