//! Regression random forest with per-tree bootstrap bookkeeping.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{FittedModel, ModelParams};
use super::spec::{BaseRegressorSpec, ForestParams, RegressorKind};
use super::tree::RegressionTree;
use crate::data::{Dataset, Matrix};
use crate::error::{contract, Result};
use crate::scalar::Real;
use crate::seed::RngSeed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Forest<T> {
    pub(crate) trees: Vec<RegressionTree<T>>,
    /// `inbag[t][i]` = number of times row `i` was drawn for tree `t`.
    pub(crate) inbag: Vec<Vec<u32>>,
}

/// Out-of-bag predictions plus the bookkeeping behind them.
#[derive(Clone, Debug, PartialEq)]
pub struct OobPredictions<T> {
    pub values: Vec<T>,
    /// Number of trees that contributed to each row's prediction.
    pub trees_per_row: Vec<u32>,
    /// Rows that were in-bag for every tree; they received the response mean.
    pub fallback_rows: Vec<usize>,
}

impl<T: Real> Forest<T> {
    pub fn from_parts(trees: Vec<RegressionTree<T>>, inbag: Vec<Vec<u32>>) -> Self {
        Forest { trees, inbag }
    }

    pub fn trees(&self) -> &[RegressionTree<T>] {
        &self.trees
    }

    pub fn inbag(&self) -> &[Vec<u32>] {
        &self.inbag
    }

    pub(crate) fn fit_raw(
        x: &Matrix<T>,
        y: &[T],
        subset: &[usize],
        params: &ForestParams,
        n_trees: usize,
        seed: RngSeed,
    ) -> Self {
        let n = y.len();
        let cols: Vec<&[T]> = subset.iter().map(|&j| x.col(j)).collect();
        let mtry = params.mtry(subset.len());
        let (trees, inbag) = (0..n_trees)
            .into_par_iter()
            .with_min_len(8)
            .map(|t| {
                let mut rng = seed.derive_index("tree", t as u64).rng();
                let mut counts = vec![0u32; n];
                for _ in 0..n {
                    counts[rng.random_range(0..n)] += 1;
                }
                let tree = RegressionTree::fit(&cols, y, &counts, mtry, params.min_node_size, &mut rng);
                (tree, counts)
            })
            .unzip();
        Forest { trees, inbag }
    }

    /// Mean over all trees; `value_of(k)` gives the k-th subset feature.
    pub(crate) fn predict_with(&self, value_of: impl Fn(usize) -> T + Copy) -> T {
        let s = self
            .trees
            .iter()
            .fold(T::zero(), |acc, t| acc + t.predict_with(value_of));
        s / T::of_usize(self.trees.len())
    }

    pub(crate) fn oob_raw(&self, x: &Matrix<T>, y: &[T], subset: &[usize]) -> OobPredictions<T> {
        let n = y.len();
        let cols: Vec<&[T]> = subset.iter().map(|&j| x.col(j)).collect();
        let mut sum = vec![T::zero(); n];
        let mut cnt = vec![0u32; n];
        for (tree, bag) in self.trees.iter().zip(&self.inbag) {
            for i in (0..n).filter(|&i| bag[i] == 0) {
                sum[i] = sum[i] + tree.predict_with(|k| cols[k][i]);
                cnt[i] += 1;
            }
        }
        let y_mean = crate::metrics::mean(y);
        let mut fallback_rows = Vec::new();
        let values = (0..n)
            .map(|i| {
                if cnt[i] == 0 {
                    fallback_rows.push(i);
                    y_mean
                } else {
                    sum[i] / T::from_u32(cnt[i]).unwrap_or_else(T::one)
                }
            })
            .collect();
        if !fallback_rows.is_empty() {
            log::warn!(
                "forest: {} row(s) in-bag for every tree; using the response mean as their OOB prediction",
                fallback_rows.len()
            );
        }
        OobPredictions {
            values,
            trees_per_row: cnt,
            fallback_rows,
        }
    }
}

/// Grows `n_trees_formation` trees on `subset`.
pub fn fit_forest<T: Real>(
    data: &Dataset<T>,
    subset: &[usize],
    spec: &BaseRegressorSpec,
    seed: RngSeed,
) -> Result<FittedModel<T>> {
    contract!(spec.kind == RegressorKind::Forest, "fit_forest requires a forest spec");
    contract!(!subset.is_empty(), "empty feature subset");
    contract!(subset.iter().all(|&j| j < data.n_features()), "feature index out of range");
    data.require_fittable()?;
    let forest = Forest::fit_raw(
        data.x(),
        data.y(),
        subset,
        &spec.forest,
        spec.forest.n_trees_formation,
        seed,
    );
    Ok(FittedModel {
        feature_subset: subset.to_vec(),
        params: ModelParams::Forest(forest),
    })
}

/// Each row's prediction averages exactly the trees whose bootstrap sample
/// excludes it.
pub fn oob_predictions<T: Real>(model: &FittedModel<T>, data: &Dataset<T>) -> Result<OobPredictions<T>> {
    match &model.params {
        ModelParams::Forest(f) => {
            contract!(
                f.inbag.iter().all(|b| b.len() == data.n()),
                "forest was not fit on a dataset with {} rows",
                data.n()
            );
            contract!(
                model.feature_subset.iter().all(|&j| j < data.n_features()),
                "dataset lacks the forest's features"
            );
            Ok(f.oob_raw(data.x(), data.y(), &model.feature_subset))
        }
        ModelParams::Lasso(_) => Err(crate::error::ErpxError::Contract(
            "oob_predictions requires a forest model".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::mse;
    use crate::regress::tree::TreeNode;
    use crate::regress::predict;

    fn data(y: Vec<f64>, cols: Vec<Vec<f64>>) -> Dataset<f64> {
        Dataset::from_parts(y, Matrix::from_columns(cols).unwrap()).unwrap()
    }

    fn forest_spec(trees: usize) -> BaseRegressorSpec {
        let mut s = BaseRegressorSpec::forest();
        s.forest.n_trees_formation = trees;
        s
    }

    #[test]
    fn constant_response_gives_zero_oob_mse() {
        let d = data(vec![4.0; 15], vec![(0..15).map(f64::from).collect()]);
        let m = fit_forest(&d, &[0], &forest_spec(50), RngSeed(1)).unwrap();
        let oob = oob_predictions(&m, &d).unwrap();
        assert_eq!(mse(d.y(), &oob.values).unwrap(), 0.0);
    }

    #[test]
    fn inbag_multisets_have_size_n() {
        let d = data((0..20).map(f64::from).collect(), vec![(0..20).map(|i| (i % 7) as f64).collect()]);
        let m = fit_forest(&d, &[0], &forest_spec(30), RngSeed(2)).unwrap();
        let ModelParams::Forest(f) = &m.params else { unreachable!() };
        assert_eq!(f.trees().len(), 30);
        assert!(f.inbag().iter().all(|b| b.iter().sum::<u32>() == 20));
    }

    #[test]
    fn stump_forest_predicts_near_mean() {
        let y: Vec<f64> = (0..30).map(|i| (i * i % 11) as f64).collect();
        let d = data(y.clone(), vec![(0..30).map(f64::from).collect()]);
        let mut s = forest_spec(300);
        s.forest.min_node_size = 30;
        let m = fit_forest(&d, &[0], &s, RngSeed(3)).unwrap();
        let ModelParams::Forest(f) = &m.params else { unreachable!() };
        assert!(f.trees().iter().all(|t| t.nodes().len() == 1));
        let oob = oob_predictions(&m, &d).unwrap();
        let ybar = crate::metrics::mean(&y);
        let sd = crate::metrics::sample_variance(&y).sqrt();
        for v in oob.values {
            assert!((v - ybar).abs() < 0.5 * sd);
        }
    }

    #[test]
    fn separating_binary_feature_drives_oob_to_zero() {
        let x: Vec<f64> = (0..24).map(|i| (i % 2) as f64).collect();
        let y: Vec<f64> = x.iter().map(|&v| if v == 1.0 { 5.0 } else { -1.0 }).collect();
        let d = data(y, vec![x]);
        let mut prev = f64::INFINITY;
        for trees in [1usize, 20, 200] {
            let m = fit_forest(&d, &[0], &forest_spec(trees), RngSeed(5)).unwrap();
            let oob = oob_predictions(&m, &d).unwrap();
            let e = mse(d.y(), &oob.values).unwrap();
            assert!(e <= prev);
            prev = e;
        }
        assert!(prev < 1e-20);
    }

    #[test]
    fn one_tree_exercises_fallback() {
        let d = data((0..12).map(f64::from).collect(), vec![(0..12).map(f64::from).collect()]);
        let m = fit_forest(&d, &[0], &forest_spec(1), RngSeed(7)).unwrap();
        let oob = oob_predictions(&m, &d).unwrap();
        let ModelParams::Forest(f) = &m.params else { unreachable!() };
        let inbag_rows: Vec<usize> = (0..12).filter(|&i| f.inbag()[0][i] > 0).collect();
        assert_eq!(oob.fallback_rows, inbag_rows);
        for &i in &oob.fallback_rows {
            assert_eq!(oob.values[i], 5.5);
        }
    }

    #[test]
    fn oob_bookkeeping_matches_recorded_bags() {
        let x: Vec<f64> = (0..33).map(|i| ((i * 7) % 13) as f64).collect();
        let z: Vec<f64> = (0..33).map(|i| ((i * 5) % 9) as f64).collect();
        let y: Vec<f64> = x.iter().zip(&z).map(|(a, b)| a - 0.5 * b).collect();
        let d = data(y, vec![x, z]);
        let m = fit_forest(&d, &[0, 1], &forest_spec(40), RngSeed(9)).unwrap();
        let ModelParams::Forest(f) = &m.params else { unreachable!() };
        let oob = oob_predictions(&m, &d).unwrap();
        for i in 0..33 {
            let contributing: Vec<usize> = (0..40).filter(|&t| f.inbag()[t][i] == 0).collect();
            assert_eq!(contributing.len() as u32, oob.trees_per_row[i]);
            if contributing.is_empty() {
                continue;
            }
            let row = d.x().row(i);
            let expect = contributing
                .iter()
                .map(|&t| f.trees()[t].predict_with(|k| row[k]))
                .sum::<f64>()
                / contributing.len() as f64;
            assert!((expect - oob.values[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn full_prediction_differs_from_oob_on_training_row() {
        // Tree 0 has row 0 in-bag and predicts 10; tree 1 excludes it and predicts 2.
        let leaf = |v| RegressionTree::from_nodes(vec![TreeNode::Leaf { value: v }]);
        let forest = Forest::from_parts(vec![leaf(10.0), leaf(2.0)], vec![vec![2, 0], vec![0, 2]]);
        let m = FittedModel {
            feature_subset: vec![0],
            params: ModelParams::Forest(forest),
        };
        let d = data(vec![1.0, 3.0], vec![vec![0.0, 1.0]]);
        let oob = oob_predictions(&m, &d).unwrap();
        let full = predict(&m, d.x()).unwrap();
        assert_eq!(oob.values[0], 2.0);
        assert_eq!(full[0], 6.0);
        assert_ne!(oob.values[0], full[0]);
    }

    #[test]
    fn many_trees_leave_no_row_uncovered() {
        let d = data((0..33).map(f64::from).collect(), vec![(0..33).map(|i| (i % 5) as f64).collect()]);
        let m = fit_forest(&d, &[0], &forest_spec(500), RngSeed(4)).unwrap();
        assert!(oob_predictions(&m, &d).unwrap().fallback_rows.is_empty());
    }
}
