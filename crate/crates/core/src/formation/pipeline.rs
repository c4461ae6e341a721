use log::info;
use serde::{Deserialize, Serialize};

use super::grouping::{initial_groups_by_clustering, initial_groups_by_name, singleton_grouping, Grouping, NameSchema, Stage};
use super::merge::{merge_phalanxes_with, MergeStep};
use super::screening::{screen_groups_with, ScreeningOptions};
use super::selection::screen_phalanxes_with;
use crate::data::{Dataset, Matrix};
use crate::error::{contract, Result};
use crate::metrics::{ensemble_mse, mse};
use crate::regress::{
    cv_predictions, fit_final, oob_predictions, predict, repeated_cv_mse, Assessor, BaseRegressorSpec, FittedModel,
    Forest, ModelParams, RegressorKind,
};
use crate::scalar::Real;
use crate::seed::RngSeed;

/// Source of the initial groups.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum GroupingMode {
    /// Every feature is its own group.
    #[default]
    None,
    ByName { schema: NameSchema },
    Clustering { d: usize },
    Explicit { grouping: Grouping },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormationConfig<T> {
    pub spec: BaseRegressorSpec,
    pub screening: ScreeningOptions<T>,
    /// Permuted responses pooled into the screening null distribution.
    pub n_permutations: usize,
    pub grouping: GroupingMode,
    pub seed: RngSeed,
}

impl<T: Real> FormationConfig<T> {
    pub fn new(spec: BaseRegressorSpec, seed: RngSeed) -> Self {
        FormationConfig {
            spec,
            screening: ScreeningOptions::default(),
            n_permutations: 1,
            grouping: GroupingMode::None,
            seed,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        self.spec.validate(n)?;
        let a = self.screening.alpha;
        if !(a > T::zero() && a < T::one()) {
            return Err(crate::error::ErpxError::Config(format!("alpha must lie in (0, 1), got {a}")));
        }
        if self.n_permutations == 0 {
            return Err(crate::error::ErpxError::Config("n_permutations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Stage counts and assessments recorded while forming an ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormationTrace<T> {
    pub n_features: usize,
    pub d: usize,
    pub s: usize,
    pub e: usize,
    pub h: usize,
    /// Screening thresholds; absent when there was a single initial group.
    pub p_alpha: Option<T>,
    pub q_upper: Option<T>,
    pub screening_fallback: bool,
    pub merges: Vec<MergeStep<T>>,
    pub candidate_c: Vec<T>,
    pub path_mse: Vec<T>,
    /// Formation-quality assessment of the selected ensemble.
    pub ensemble_c: T,
    pub fits: usize,
    pub oob_fallback_rows: usize,
}

/// A formed ensemble: one fitted base model per final phalanx.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErpxModel<T> {
    pub final_phalanxes: Grouping,
    pub fitted: Vec<FittedModel<T>>,
    pub spec: BaseRegressorSpec,
    pub feature_names: Vec<String>,
    pub trace: FormationTrace<T>,
}

impl<T: Real> ErpxModel<T> {
    pub fn h(&self) -> usize {
        self.fitted.len()
    }
}

fn initial_grouping<T: Real>(data: &Dataset<T>, mode: &GroupingMode) -> Result<Grouping> {
    let g = match mode {
        GroupingMode::None => singleton_grouping(data.n_features()),
        GroupingMode::ByName { schema } => initial_groups_by_name(data.feature_names(), schema),
        GroupingMode::Clustering { d } => initial_groups_by_clustering(data, *d)?,
        GroupingMode::Explicit { grouping } => Grouping {
            groups: grouping.groups.clone(),
            stage: Stage::Initial,
        },
    };
    g.validate(Some(data.n_features()))?;
    contract!(!g.is_empty(), "initial grouping is empty");
    Ok(g)
}

/// Runs initial grouping, group screening, hierarchical merging and
/// phalanx selection, then refits one final-quality model per phalanx.
pub fn form_erpx<T: Real>(data: &Dataset<T>, config: &FormationConfig<T>) -> Result<ErpxModel<T>> {
    data.require_fittable()?;
    config.validate(data.n())?;
    let initial = initial_grouping(data, &config.grouping)?;
    let d = initial.len();
    info!("formation: D={} d={d}", data.n_features());

    let assessor = Assessor::new(data, config.spec.clone(), config.seed.derive("formation"), config.n_permutations)?;
    let (screened, p_alpha, q_upper, screening_fallback) = if d >= 2 {
        let out = screen_groups_with(&initial, &assessor, &config.screening)?;
        (out.grouping, Some(out.thresholds.p_alpha), Some(out.thresholds.q_upper), out.fallback)
    } else {
        (initial.relabel("G", Stage::Screened), None, None, false)
    };
    info!("formation: s={}", screened.len());

    let merged = merge_phalanxes_with(&screened, &assessor)?;
    info!("formation: e={} after {} merges", merged.grouping.len(), merged.steps.len());

    let selected = screen_phalanxes_with(&merged.grouping, &merged.assessments, data.y())?;
    let h = selected.kept;
    info!("formation: h={h}");

    let fitted = selected
        .grouping
        .groups
        .iter()
        .map(|g| {
            let words: Vec<u64> = g.members.iter().map(|&m| m as u64).collect();
            fit_final(data, &g.members, &config.spec, config.seed.derive_words("final", &words))
        })
        .collect::<Result<Vec<_>>>()?;

    let trace = FormationTrace {
        n_features: data.n_features(),
        d,
        s: screened.len(),
        e: merged.grouping.len(),
        h,
        p_alpha,
        q_upper,
        screening_fallback,
        candidate_c: merged.assessments.iter().map(|a| a.c).collect(),
        merges: merged.steps,
        ensemble_c: selected.path_mse[h - 1],
        path_mse: selected.path_mse,
        fits: assessor.fit_count(),
        oob_fallback_rows: assessor.oob_fallback_rows(),
    };
    Ok(ErpxModel {
        final_phalanxes: selected.grouping,
        fitted,
        spec: config.spec.clone(),
        feature_names: data.feature_names().to_vec(),
        trace,
    })
}

/// Mean of the per-phalanx model predictions.
pub fn predict_erpx<T: Real>(model: &ErpxModel<T>, xnew: &Matrix<T>) -> Result<Vec<T>> {
    contract!(!model.fitted.is_empty(), "model has no fitted phalanxes");
    let preds = model
        .fitted
        .iter()
        .map(|m| predict(m, xnew))
        .collect::<Result<Vec<_>>>()?;
    if xnew.n_rows() == 0 {
        return Ok(Vec::new());
    }
    crate::metrics::ensemble_predictions(&preds)
}

/// Training-data assessment of the final ensemble.
///
/// Lasso: mean over `reps` fold assignments of the CV-MSE of the averaged
/// phalanx CV predictions (all phalanxes share each fold assignment).
/// Forest: MSE of the averaged OOB predictions of the final forests.
pub fn ensemble_assessment<T: Real>(model: &ErpxModel<T>, data: &Dataset<T>, reps: usize, seed: RngSeed) -> Result<T> {
    contract!(reps >= 1, "at least one repetition is required");
    contract!(!model.fitted.is_empty(), "model has no fitted phalanxes");
    match model.spec.kind {
        RegressorKind::Lasso => {
            let mut total = T::zero();
            for r in 0..reps {
                let rep_seed = seed.derive_index("cv-rep", r as u64);
                let preds = model
                    .final_phalanxes
                    .groups
                    .iter()
                    .map(|g| cv_predictions(data, &g.members, &model.spec, rep_seed))
                    .collect::<Result<Vec<_>>>()?;
                total = total + ensemble_mse(data.y(), &preds)?;
            }
            Ok(total / T::of_usize(reps))
        }
        RegressorKind::Forest => {
            let preds = model
                .fitted
                .iter()
                .map(|m| oob_predictions(m, data).map(|o| o.values))
                .collect::<Result<Vec<_>>>()?;
            ensemble_mse(data.y(), &preds)
        }
    }
}

/// The bare base model on all features, assessed the same way: repeated
/// CV-MSE for the Lasso, OOB-MSE of an `n_trees_final` forest otherwise.
pub fn base_assessment<T: Real>(data: &Dataset<T>, spec: &BaseRegressorSpec, reps: usize, seed: RngSeed) -> Result<T> {
    contract!(reps >= 1, "at least one repetition is required");
    data.require_fittable()?;
    spec.validate(data.n())?;
    let all: Vec<usize> = (0..data.n_features()).collect();
    match spec.kind {
        RegressorKind::Lasso => repeated_cv_mse(data, &all, spec, reps, seed),
        RegressorKind::Forest => {
            let forest = Forest::fit_raw(data.x(), data.y(), &all, &spec.forest, spec.forest.n_trees_final, seed.derive("base-forest"));
            let model = FittedModel { feature_subset: all, params: ModelParams::Forest(forest) };
            mse(data.y(), &oob_predictions(&model, data)?.values)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn linear(n: usize, p: usize, seed: u64) -> Dataset<f64> {
        let mut rng = RngSeed(seed).rng();
        let cols: Vec<Vec<f64>> = (0..p).map(|_| (0..n).map(|_| rng.random::<f64>()).collect()).collect();
        let y = (0..n).map(|i| 3.0 * cols[0][i] - 2.0 * cols[1][i] + 0.1 * rng.random::<f64>()).collect();
        Dataset::from_parts(y, Matrix::from_columns(cols).unwrap()).unwrap()
    }

    #[test]
    fn one_feature_dataset_is_its_own_ensemble() {
        let d = linear(30, 2, 1).select_features(&[0]).unwrap();
        let cfg = FormationConfig::new(BaseRegressorSpec::lasso(), RngSeed(4));
        let m = form_erpx(&d, &cfg).unwrap();
        let t = &m.trace;
        assert_eq!((t.n_features, t.d, t.s, t.e, t.h), (1, 1, 1, 1, 1));
        let direct = predict(&m.fitted[0], d.x()).unwrap();
        assert_eq!(predict_erpx(&m, d.x()).unwrap(), direct);
    }

    #[test]
    fn stage_counts_are_monotone() {
        let d = linear(30, 6, 2);
        for spec in [BaseRegressorSpec::lasso(), BaseRegressorSpec::forest()] {
            let mut spec = spec;
            spec.forest.n_trees_formation = 50;
            spec.forest.n_trees_final = 100;
            let m = form_erpx(&d, &FormationConfig::new(spec, RngSeed(5))).unwrap();
            let t = &m.trace;
            assert!(t.n_features >= t.d && t.d >= t.s && t.s >= t.e && t.e >= t.h && t.h >= 1, "{t:?}");
            assert_eq!(m.h(), t.h);
            let mut seen = std::collections::HashSet::new();
            for g in &m.final_phalanxes.groups {
                for &f in &g.members {
                    assert!(seen.insert(f));
                }
            }
        }
    }

    #[test]
    fn formation_is_deterministic() {
        let d = linear(30, 5, 3);
        let cfg = FormationConfig::new(BaseRegressorSpec::lasso(), RngSeed(6));
        assert_eq!(form_erpx(&d, &cfg).unwrap(), form_erpx(&d, &cfg).unwrap());
    }

    #[test]
    fn prediction_is_the_mean_of_phalanx_models() {
        use crate::regress::LassoModel;
        let lasso = |b0: f64| FittedModel {
            feature_subset: vec![0],
            params: ModelParams::Lasso(LassoModel { lambda: 0.0, intercept: b0, coefficients: vec![1.0] }),
        };
        let mut m = form_erpx(&linear(30, 2, 1).select_features(&[0]).unwrap(), &FormationConfig::new(BaseRegressorSpec::lasso(), RngSeed(1))).unwrap();
        m.fitted = vec![lasso(0.0), lasso(2.0)];
        let x = Matrix::from_columns(vec![vec![1.0, 3.0]]).unwrap();
        assert_eq!(predict_erpx(&m, &x).unwrap(), vec![2.0, 4.0]);
        m.fitted = vec![lasso(1.0), lasso(1.0)];
        assert_eq!(predict_erpx(&m, &x).unwrap(), predict(&lasso(1.0), &x).unwrap());
        let empty = Matrix::<f64>::zeros(0, 1);
        assert!(predict_erpx(&m, &empty).unwrap().is_empty());
        let narrow = Matrix::<f64>::zeros(2, 0);
        assert!(predict_erpx(&m, &narrow).is_err());
    }

    #[test]
    fn invalid_alpha_is_a_config_error() {
        let d = linear(30, 2, 1);
        let mut cfg = FormationConfig::new(BaseRegressorSpec::lasso(), RngSeed(1));
        cfg.screening.alpha = 1.5;
        assert!(matches!(form_erpx(&d, &cfg), Err(crate::error::ErpxError::Config(_))));
    }
}
