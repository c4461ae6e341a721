//! Scripted stand-in for a base regressor, for exercising the formation
//! logic without model fitting.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use super::assessor::GroupAssessor;
use crate::error::Result;
use crate::metrics::{mse, PredictionVector, Provenance};
use crate::regress::{Assessment, ResponseId};
use crate::scalar::Real;
use crate::seed::{permute_response, RngSeed};

type Script<T> = dyn Fn(&[usize], &[T], ResponseId) -> Vec<T> + Send + Sync;

/// Produces prediction vectors from a user closure of
/// `(sorted members, response, response id)`.
pub struct ScriptedAssessor<T> {
    y: Vec<T>,
    permuted: Vec<Vec<T>>,
    script: Box<Script<T>>,
    cache: Mutex<HashMap<(ResponseId, Vec<usize>), Arc<Assessment<T>>>>,
    calls: AtomicUsize,
}

impl<T: Real> ScriptedAssessor<T> {
    pub fn new(
        y: Vec<T>,
        n_permutations: usize,
        script: impl Fn(&[usize], &[T], ResponseId) -> Vec<T> + Send + Sync + 'static,
    ) -> Self {
        let permuted = (0..n_permutations)
            .map(|r| permute_response(&y, RngSeed(0x5eed).derive_index("permutation", r as u64)).unwrap_or_else(|_| y.clone()))
            .collect();
        ScriptedAssessor {
            y,
            permuted,
            script: Box::new(script),
            cache: Mutex::new(HashMap::new()),
            calls: AtomicUsize::new(0),
        }
    }

    /// Number of distinct (response, subset) evaluations.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

impl<T: Real> GroupAssessor<T> for ScriptedAssessor<T> {
    fn response(&self, id: ResponseId) -> &[T] {
        match id {
            ResponseId::Observed => &self.y,
            ResponseId::Permuted(r) => &self.permuted[r as usize],
        }
    }

    fn n_permutations(&self) -> usize {
        self.permuted.len()
    }

    fn assess(&self, members: &[usize], id: ResponseId) -> Result<Arc<Assessment<T>>> {
        let mut key = members.to_vec();
        key.sort_unstable();
        key.dedup();
        let key = (id, key);
        if let Some(hit) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(Arc::clone(hit));
        }
        let y = self.response(id);
        let values = (self.script)(&key.1, y, id);
        let c = mse(y, &values)?;
        let a = Arc::new(Assessment {
            c,
            predictions: PredictionVector::new(values, Provenance::Direct),
        });
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.cache.lock().expect("cache lock").insert(key, Arc::clone(&a));
        Ok(a)
    }
}
