use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use dashmap::DashMap;

use super::cv::cv_predictions_raw;
use super::forest::Forest;
use super::spec::{BaseRegressorSpec, RegressorKind};
use crate::data::{Dataset, Matrix};
use crate::error::{contract, Result};
use crate::metrics::{mse, PredictionVector, Provenance};
use crate::scalar::Real;
use crate::seed::{permute_response, RngSeed};

/// An assessment value `c` and the prediction vector that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct Assessment<T> {
    pub c: T,
    pub predictions: PredictionVector<T>,
}

/// Which response an assessment was computed against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ResponseId {
    Observed,
    Permuted(u32),
}

impl ResponseId {
    fn tag(self) -> u64 {
        match self {
            ResponseId::Observed => 0,
            ResponseId::Permuted(r) => 1 + u64::from(r),
        }
    }
}

pub(crate) fn assess_raw<T: Real>(
    x: &Matrix<T>,
    y: &[T],
    subset: &[usize],
    spec: &BaseRegressorSpec,
    seed: RngSeed,
) -> Result<(Assessment<T>, usize)> {
    contract!(!subset.is_empty(), "empty feature subset");
    contract!(subset.iter().all(|&j| j < x.n_cols()), "feature index out of range");
    let (predictions, fallback) = match spec.kind {
        RegressorKind::Lasso => (
            PredictionVector::new(cv_predictions_raw(x, y, subset, &spec.lasso, seed)?, Provenance::Cv),
            0,
        ),
        RegressorKind::Forest => {
            if y.len() < 2 {
                return Err(crate::error::ErpxError::Data("at least 2 rows are needed to fit a forest".into()));
            }
            let forest = Forest::fit_raw(x, y, subset, &spec.forest, spec.forest.n_trees_formation, seed);
            let oob = forest.oob_raw(x, y, subset);
            (PredictionVector::new(oob.values, Provenance::Oob), oob.fallback_rows.len())
        }
    };
    let c = mse(y, &predictions.values)?;
    Ok((Assessment { c, predictions }, fallback))
}

/// CV-MSE (Lasso) or OOB-MSE (forest) of the base model on `subset`,
/// together with the predictions behind it.
pub fn assess<T: Real>(
    data: &Dataset<T>,
    subset: &[usize],
    spec: &BaseRegressorSpec,
    seed: RngSeed,
) -> Result<(T, PredictionVector<T>)> {
    let (a, _) = assess_raw(data.x(), data.y(), subset, spec, seed)?;
    Ok((a.c, a.predictions))
}

type CacheKey = (ResponseId, Vec<usize>);

/// Caching assessment service for one (dataset, spec, root seed).
///
/// Each feature subset gets its own stream derived from the root seed and the
/// subset's content, so an identical subset always yields an identical
/// assessment and is fit at most once per response.
pub struct Assessor<'a, T> {
    data: &'a Dataset<T>,
    spec: BaseRegressorSpec,
    seed: RngSeed,
    permuted: Vec<Vec<T>>,
    cache: DashMap<CacheKey, Arc<Assessment<T>>>,
    fits: AtomicUsize,
    fallback_rows: AtomicUsize,
}

impl<'a, T: Real> Assessor<'a, T> {
    /// `n_permutations` permuted copies of the response are drawn up front
    /// for null-distribution assessments.
    pub fn new(data: &'a Dataset<T>, spec: BaseRegressorSpec, seed: RngSeed, n_permutations: usize) -> Result<Self> {
        data.require_fittable()?;
        spec.validate(data.n())?;
        let permuted = (0..n_permutations)
            .map(|r| permute_response(data.y(), seed.derive_index("permutation", r as u64)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Assessor {
            data,
            spec,
            seed,
            permuted,
            cache: DashMap::new(),
            fits: AtomicUsize::new(0),
            fallback_rows: AtomicUsize::new(0),
        })
    }

    pub fn data(&self) -> &Dataset<T> {
        self.data
    }

    pub fn spec(&self) -> &BaseRegressorSpec {
        &self.spec
    }

    pub fn seed(&self) -> RngSeed {
        self.seed
    }

    pub fn n_permutations(&self) -> usize {
        self.permuted.len()
    }

    pub fn response(&self, id: ResponseId) -> &[T] {
        match id {
            ResponseId::Observed => self.data.y(),
            ResponseId::Permuted(r) => &self.permuted[r as usize],
        }
    }

    /// Number of model fits actually performed (cache misses).
    pub fn fit_count(&self) -> usize {
        self.fits.load(Ordering::Relaxed)
    }

    /// Total OOB fallback rows seen across all forest assessments.
    pub fn oob_fallback_rows(&self) -> usize {
        self.fallback_rows.load(Ordering::Relaxed)
    }

    pub fn subset_seed(&self, members: &[usize], id: ResponseId) -> RngSeed {
        let words: Vec<u64> = std::iter::once(id.tag())
            .chain(members.iter().map(|&m| m as u64))
            .collect();
        self.seed.derive_words("assess", &words)
    }

    pub fn assess(&self, members: &[usize], id: ResponseId) -> Result<Arc<Assessment<T>>> {
        let mut key_members = members.to_vec();
        key_members.sort_unstable();
        key_members.dedup();
        let key = (id, key_members);
        if let Some(hit) = self.cache.get(&key) {
            return Ok(Arc::clone(hit.value()));
        }
        let seed = self.subset_seed(&key.1, id);
        let (a, fallback) = assess_raw(self.data.x(), self.response(id), &key.1, &self.spec, seed)?;
        self.fits.fetch_add(1, Ordering::Relaxed);
        self.fallback_rows.fetch_add(fallback, Ordering::Relaxed);
        let a = Arc::new(a);
        self.cache.insert(key, Arc::clone(&a));
        Ok(a)
    }
}
