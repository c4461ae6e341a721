use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::assessor::GroupAssessor;
use super::grouping::{Grouping, Stage};
use crate::data::Dataset;
use crate::error::{contract, Result};
use crate::metrics::ensemble_mse;
use crate::regress::{Assessment, Assessor, BaseRegressorSpec, ResponseId};
use crate::scalar::Real;
use crate::seed::RngSeed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionOutcome<T> {
    /// Final phalanxes in path order, keeping their candidate labels.
    pub grouping: Grouping,
    /// Candidate indices in the order the forward path added them.
    pub path: Vec<usize>,
    /// Ensemble assessment of each path prefix.
    pub path_mse: Vec<T>,
    /// Length of the selected prefix.
    pub kept: usize,
}

/// Greedy forward path over prediction vectors. Starts at the smallest `c`,
/// then repeatedly adds the candidate giving the lowest ensemble MSE; `tie`
/// orders equal scores. Returns the path, its prefix MSEs and the length of
/// the best prefix (shortest among equals).
pub fn forward_select<T: Real, V: AsRef<[T]> + Sync>(
    y: &[T],
    c: &[T],
    predictions: &[V],
    tie: impl Fn(usize, usize) -> std::cmp::Ordering,
) -> Result<(Vec<usize>, Vec<T>, usize)> {
    let e = predictions.len();
    contract!(e >= 1, "forward selection needs at least one candidate");
    contract!(c.len() == e, "one assessment per candidate is required");
    let better = |a: (T, usize), b: (T, usize)| {
        a.0 < b.0 || (a.0 == b.0 && tie(a.1, b.1) == std::cmp::Ordering::Less)
    };
    let mut start = 0;
    for k in 1..e {
        if better((c[k], k), (c[start], start)) {
            start = k;
        }
    }
    let mut path = vec![start];
    let mut path_mse = vec![ensemble_mse(y, &[predictions[start].as_ref()])?];
    let mut remaining: Vec<usize> = (0..e).filter(|&k| k != start).collect();
    while !remaining.is_empty() {
        let mut best: Option<(T, usize)> = None;
        for &k in &remaining {
            let members: Vec<&[T]> = path.iter().chain(std::iter::once(&k)).map(|&i| predictions[i].as_ref()).collect();
            let m = ensemble_mse(y, &members)?;
            if best.is_none_or(|b| better((m, k), b)) {
                best = Some((m, k));
            }
        }
        let (m, k) = best.expect("non-empty remaining");
        path.push(k);
        path_mse.push(m);
        remaining.retain(|&r| r != k);
    }
    let mut kept = 1;
    for (len, &m) in path_mse.iter().enumerate() {
        if m < path_mse[kept - 1] {
            kept = len + 1;
        }
    }
    Ok((path, path_mse, kept))
}

/// Forward-selection screening of candidate phalanxes using their cached
/// observed-response assessments.
pub fn screen_phalanxes_with<T: Real>(
    candidates: &Grouping,
    assessments: &[Arc<Assessment<T>>],
    y: &[T],
) -> Result<SelectionOutcome<T>> {
    contract!(!candidates.is_empty(), "no candidate phalanxes");
    contract!(
        assessments.len() == candidates.len(),
        "one assessment per candidate is required"
    );
    let c: Vec<T> = assessments.iter().map(|a| a.c).collect();
    let preds: Vec<&[T]> = assessments.iter().map(|a| a.predictions.values.as_slice()).collect();
    let labels = candidates.labels();
    let (path, path_mse, kept) = forward_select(y, &c, &preds, |a, b| labels[a].cmp(labels[b]))?;
    let grouping = Grouping {
        groups: path[..kept].iter().map(|&k| candidates.groups[k].clone()).collect(),
        stage: Stage::Final,
    };
    Ok(SelectionOutcome {
        grouping,
        path,
        path_mse,
        kept,
    })
}

/// Assesses each candidate (through the cache) and runs forward selection.
pub fn screen_phalanxes<T: Real>(
    candidates: &Grouping,
    data: &Dataset<T>,
    spec: &BaseRegressorSpec,
    seed: RngSeed,
) -> Result<Grouping> {
    candidates.validate(Some(data.n_features()))?;
    let assessor = Assessor::new(data, spec.clone(), seed, 0)?;
    let assessments = candidates
        .groups
        .iter()
        .map(|g| GroupAssessor::assess(&assessor, &g.members, ResponseId::Observed))
        .collect::<Result<Vec<_>>>()?;
    Ok(screen_phalanxes_with(candidates, &assessments, data.y())?.grouping)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn natural(a: usize, b: usize) -> std::cmp::Ordering {
        a.cmp(&b)
    }

    #[test]
    fn single_candidate_is_final() {
        let y = [1.0, 2.0, 3.0];
        let (path, mse, kept) = forward_select(&y, &[0.5], &[vec![1.5, 2.5, 3.0]], natural).unwrap();
        assert_eq!((path, kept), (vec![0], 1));
        assert_eq!(mse.len(), 1);
    }

    #[test]
    fn identical_candidates_keep_one() {
        let y = [1.0, 2.0, 3.0];
        let p = vec![1.5, 2.5, 3.0];
        let c = crate::metrics::mse(&y, &p).unwrap();
        let (_, mse, kept) = forward_select(&y, &[c, c], &[p.clone(), p], natural).unwrap();
        assert_eq!(kept, 1);
        assert_eq!(mse[0], mse[1]);
    }

    #[test]
    fn complementary_errors_are_combined() {
        let y = [0.0, 0.0, 0.0, 0.0];
        let preds = vec![vec![1.0, -1.0, 1.0, -1.0], vec![-1.0, 1.0, -1.0, 1.0], vec![3.0, 3.0, 3.0, 3.0]];
        let c: Vec<f64> = preds.iter().map(|p| crate::metrics::mse(&y, p).unwrap()).collect();
        let (path, mse, kept) = forward_select(&y, &c, &preds, natural).unwrap();
        assert_eq!(&path[..2], &[0, 1]);
        assert_eq!(kept, 2);
        assert_eq!(mse[1], 0.0);
    }

    #[test]
    fn prefix_matches_enumeration_of_the_path() {
        use rand::Rng;
        let mut rng = crate::seed::RngSeed(9).rng();
        for _ in 0..50 {
            let n = 7;
            let e = rng.random_range(1..=5);
            let y: Vec<f64> = (0..n).map(|_| rng.random()).collect();
            let preds: Vec<Vec<f64>> = (0..e).map(|_| (0..n).map(|_| rng.random()).collect()).collect();
            let c: Vec<f64> = preds.iter().map(|p| crate::metrics::mse(&y, p).unwrap()).collect();
            let (path, _, kept) = forward_select(&y, &c, &preds, natural).unwrap();
            let prefix_mse = |len: usize| {
                let v: Vec<&Vec<f64>> = path[..len].iter().map(|&k| &preds[k]).collect();
                crate::metrics::ensemble_mse(&y, &v).unwrap()
            };
            let best = (1..=e).min_by(|&a, &b| prefix_mse(a).partial_cmp(&prefix_mse(b)).unwrap()).unwrap();
            assert_eq!(kept, best);
        }
    }
}
