use std::sync::Arc;

use crate::error::Result;
use crate::regress::{Assessment, Assessor, ResponseId};
use crate::scalar::Real;

/// Source of group assessments for the formation steps.
///
/// The production implementation is [`Assessor`]; tests substitute scripted
/// prediction vectors to check the combinatorial logic in isolation.
pub trait GroupAssessor<T: Real>: Sync {
    fn response(&self, id: ResponseId) -> &[T];

    fn n_permutations(&self) -> usize;

    /// Assessment of the base model fit on `members` against response `id`.
    /// Must return identical results for identical member sets.
    fn assess(&self, members: &[usize], id: ResponseId) -> Result<Arc<Assessment<T>>>;
}

impl<T: Real> GroupAssessor<T> for Assessor<'_, T> {
    fn response(&self, id: ResponseId) -> &[T] {
        Assessor::response(self, id)
    }

    fn n_permutations(&self) -> usize {
        Assessor::n_permutations(self)
    }

    fn assess(&self, members: &[usize], id: ResponseId) -> Result<Arc<Assessment<T>>> {
        Assessor::assess(self, members, id)
    }
}
