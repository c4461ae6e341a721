use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ErpxError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegressorKind {
    Lasso,
    Forest,
}

impl fmt::Display for RegressorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegressorKind::Lasso => "lasso",
            RegressorKind::Forest => "forest",
        })
    }
}

impl FromStr for RegressorKind {
    type Err = ErpxError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lasso" => Ok(RegressorKind::Lasso),
            "forest" | "rf" => Ok(RegressorKind::Forest),
            other => Err(ErpxError::Config(format!(
                "unknown base regressor '{other}' (expected lasso or forest)"
            ))),
        }
    }
}

/// Penalty selection rule applied to the inner cross-validation curve.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaRule {
    /// Penalty with the smallest CV error.
    Min,
    /// Largest penalty whose CV error is within one standard error of the minimum.
    #[default]
    OneSe,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LassoParams {
    pub n_folds: usize,
    pub path_length: usize,
    /// Smallest penalty on the path as a fraction of the null-model threshold.
    pub lambda_min_ratio: f64,
    pub lambda_rule: LambdaRule,
    /// Coordinate-descent stops when the largest weighted squared coefficient
    /// change `x_jᵀx_j/n · Δβ_j²` is at most this fraction of the response
    /// variance.
    pub convergence_tol: f64,
    /// Maximum coordinate sweeps per penalty value.
    pub max_iters: usize,
}

impl Default for LassoParams {
    fn default() -> Self {
        LassoParams {
            n_folds: 5,
            path_length: 100,
            lambda_min_ratio: 1e-4,
            lambda_rule: LambdaRule::OneSe,
            convergence_tol: 1e-7,
            max_iters: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees_formation: usize,
    pub n_trees_final: usize,
    pub mtry_fraction: f64,
    /// Nodes holding this many bootstrap draws or fewer are not split.
    pub min_node_size: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees_formation: 250,
            n_trees_final: 1000,
            mtry_fraction: 1.0 / 3.0,
            min_node_size: 5,
        }
    }
}

impl ForestParams {
    pub fn mtry(&self, n_features: usize) -> usize {
        ((self.mtry_fraction * n_features as f64).ceil() as usize).clamp(1, n_features.max(1))
    }

    pub fn n_trees(&self, quality: Quality) -> usize {
        match quality {
            Quality::Formation => self.n_trees_formation,
            Quality::Final => self.n_trees_final,
        }
    }
}

/// Formation-time fits are cheap; final fits use the larger budget.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Quality {
    Formation,
    Final,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseRegressorSpec {
    pub kind: RegressorKind,
    #[serde(default)]
    pub lasso: LassoParams,
    #[serde(default)]
    pub forest: ForestParams,
}

impl BaseRegressorSpec {
    pub fn lasso() -> Self {
        BaseRegressorSpec {
            kind: RegressorKind::Lasso,
            lasso: LassoParams::default(),
            forest: ForestParams::default(),
        }
    }

    pub fn forest() -> Self {
        BaseRegressorSpec {
            kind: RegressorKind::Forest,
            lasso: LassoParams::default(),
            forest: ForestParams::default(),
        }
    }

    pub fn of_kind(kind: RegressorKind) -> Self {
        match kind {
            RegressorKind::Lasso => Self::lasso(),
            RegressorKind::Forest => Self::forest(),
        }
    }

    /// Checks the parameter invariants; `n` is the row count the spec will see.
    pub fn validate(&self, n: usize) -> Result<()> {
        let l = &self.lasso;
        let f = &self.forest;
        let fail = |m: String| Err(ErpxError::Config(m));
        if l.n_folds < 2 || (self.kind == RegressorKind::Lasso && l.n_folds > n) {
            return fail(format!("n_folds must satisfy 2 <= K <= n (K={}, n={n})", l.n_folds));
        }
        if l.path_length < 1 {
            return fail("path_length must be at least 1".into());
        }
        if !(l.lambda_min_ratio > 0.0 && l.lambda_min_ratio < 1.0) {
            return fail("lambda_min_ratio must lie in (0, 1)".into());
        }
        if !(l.convergence_tol > 0.0) || l.max_iters == 0 {
            return fail("convergence_tol and max_iters must be positive".into());
        }
        if f.n_trees_formation < 1 || f.n_trees_final < 1 {
            return fail("tree counts must be at least 1".into());
        }
        if !(f.mtry_fraction > 0.0 && f.mtry_fraction <= 1.0) {
            return fail(format!("mtry_fraction must lie in (0, 1], got {}", f.mtry_fraction));
        }
        Ok(())
    }
}
