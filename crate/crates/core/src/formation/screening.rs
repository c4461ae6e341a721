use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::assessor::GroupAssessor;
use super::grouping::{Group, Grouping, Stage};
use crate::data::Dataset;
use crate::error::{contract, Result};
use crate::metrics::{quantile_with, QuantileRule};
use crate::regress::{Assessor, BaseRegressorSpec, ResponseId};
use crate::scalar::Real;
use crate::seed::RngSeed;

/// How the combining-improvement test quantifies over partner groups.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Test5Rule {
    /// Passes if joining improves at least one other group significantly.
    #[default]
    Exists,
    /// Passes only if joining improves every other group significantly.
    ForAll,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScreeningOptions<T> {
    pub alpha: T,
    pub test5: Test5Rule,
    pub quantile_rule: QuantileRule,
}

impl<T: Real> Default for ScreeningOptions<T> {
    fn default() -> Self {
        ScreeningOptions {
            alpha: T::of(0.05),
            test5: Test5Rule::Exists,
            quantile_rule: QuantileRule::Linear,
        }
    }
}

impl<T: Real> ScreeningOptions<T> {
    pub fn with_alpha(alpha: T) -> Self {
        ScreeningOptions {
            alpha,
            ..Default::default()
        }
    }
}

/// Null-distribution thresholds of the two screening tests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScreeningThresholds<T> {
    /// α quantile of the permuted-response group assessments.
    pub p_alpha: T,
    /// `1 − α/(d−1)` quantile of the permuted-response improvements.
    pub q_upper: T,
    pub alpha: T,
    pub null_c: Vec<T>,
    /// `c̃_i − c̃_ij` over ordered pairs `i ≠ j`, pooled over permutations.
    pub null_diffs: Vec<T>,
}

#[derive(Clone, Debug)]
pub struct ScreenOutcome<T> {
    /// Survivors relabelled `G1..Gs`.
    pub grouping: Grouping,
    pub thresholds: ScreeningThresholds<T>,
    /// Observed-response assessment per input group, in input order.
    pub c: Vec<T>,
    pub passed_strength: Vec<bool>,
    pub passed_improvement: Vec<bool>,
    /// Input indices of the surviving groups.
    pub survivors: Vec<usize>,
    /// Set when nothing passed and the best single group was kept.
    pub fallback: bool,
}

/// Group assessments and symmetric pair assessments for one response.
struct PairTable<T> {
    single: Vec<T>,
    pair: Vec<T>,
    d: usize,
}

impl<T: Real> PairTable<T> {
    fn compute<A: GroupAssessor<T>>(groups: &[Group], assessor: &A, id: ResponseId) -> Result<Self> {
        let d = groups.len();
        let single = groups
            .par_iter()
            .map(|g| assessor.assess(&g.members, id).map(|a| a.c))
            .collect::<Result<Vec<T>>>()?;
        let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| ((i + 1)..d).map(move |j| (i, j))).collect();
        let values = pairs
            .par_iter()
            .map(|&(i, j)| {
                let union = union_members(&groups[i], &groups[j]);
                assessor.assess(&union, id).map(|a| a.c)
            })
            .collect::<Result<Vec<T>>>()?;
        let mut pair = vec![T::zero(); d * d];
        for (&(i, j), v) in pairs.iter().zip(values) {
            pair[i * d + j] = v;
            pair[j * d + i] = v;
        }
        Ok(PairTable { single, pair, d })
    }

    fn pair(&self, i: usize, j: usize) -> T {
        self.pair[i * self.d + j]
    }
}

pub(crate) fn union_members(a: &Group, b: &Group) -> Vec<usize> {
    let mut m: Vec<usize> = a.members.iter().chain(&b.members).copied().collect();
    m.sort_unstable();
    m.dedup();
    m
}

/// Permutation screening of initial groups against a strength test
/// (`c_i ≤ p̃_α`) and a combining-improvement test
/// (`c_j − c_ij ≥ q̃_{1−α/(d−1)}`).
pub fn screen_groups_with<T: Real, A: GroupAssessor<T>>(
    grouping: &Grouping,
    assessor: &A,
    options: &ScreeningOptions<T>,
) -> Result<ScreenOutcome<T>> {
    let d = grouping.len();
    contract!(d >= 2, "screening needs at least 2 groups, got {d}");
    contract!(
        options.alpha > T::zero() && options.alpha < T::one(),
        "alpha must lie in (0, 1), got {}",
        options.alpha
    );
    let r = assessor.n_permutations();
    contract!(r >= 1, "screening needs at least one permuted response");
    grouping.validate(None)?;
    let groups = &grouping.groups;

    let observed = PairTable::compute(groups, assessor, ResponseId::Observed)?;
    let mut null_c = Vec::with_capacity(d * r);
    let mut null_diffs = Vec::with_capacity(d * (d - 1) * r);
    for k in 0..r {
        let null = PairTable::compute(groups, assessor, ResponseId::Permuted(k as u32))?;
        null_c.extend_from_slice(&null.single);
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    null_diffs.push(null.single[i] - null.pair(i, j));
                }
            }
        }
    }
    let alpha = options.alpha;
    let p_alpha = quantile_with(&null_c, alpha, options.quantile_rule)?;
    let level = T::one() - alpha / T::of_usize(d - 1);
    let q_upper = quantile_with(&null_diffs, level, options.quantile_rule)?;

    let passed_strength: Vec<bool> = observed.single.iter().map(|&c| c <= p_alpha).collect();
    let passed_improvement: Vec<bool> = (0..d)
        .map(|i| {
            let mut improves = (0..d)
                .filter(|&j| j != i)
                .map(|j| observed.single[j] - observed.pair(i, j) >= q_upper);
            match options.test5 {
                Test5Rule::Exists => improves.any(|b| b),
                Test5Rule::ForAll => improves.all(|b| b),
            }
        })
        .collect();
    let mut survivors: Vec<usize> = (0..d)
        .filter(|&i| passed_strength[i] && passed_improvement[i])
        .collect();
    let fallback = survivors.is_empty();
    if fallback {
        let best = best_group(groups, &observed.single);
        warn!(
            "screening: no group passed both tests; keeping '{}' with the smallest assessment",
            groups[best].label
        );
        survivors.push(best);
    }
    let kept = Grouping {
        groups: survivors.iter().map(|&i| groups[i].clone()).collect(),
        stage: Stage::Screened,
    };
    Ok(ScreenOutcome {
        grouping: kept.relabel("G", Stage::Screened),
        thresholds: ScreeningThresholds {
            p_alpha,
            q_upper,
            alpha,
            null_c,
            null_diffs,
        },
        c: observed.single,
        passed_strength,
        passed_improvement,
        survivors,
        fallback,
    })
}

/// Index of the smallest assessment; ties go to the smaller label.
pub(crate) fn best_group<T: Real>(groups: &[Group], c: &[T]) -> usize {
    (0..groups.len())
        .min_by(|&a, &b| {
            c[a].partial_cmp(&c[b])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| groups[a].label.cmp(&groups[b].label))
        })
        .expect("at least one group")
}

/// Convenience wrapper building a single-permutation [`Assessor`].
pub fn screen_groups<T: Real>(
    grouping: &Grouping,
    data: &Dataset<T>,
    spec: &BaseRegressorSpec,
    alpha: T,
    seed: RngSeed,
) -> Result<(Grouping, ScreeningThresholds<T>)> {
    grouping.validate(Some(data.n_features()))?;
    let assessor = Assessor::new(data, spec.clone(), seed, 1)?;
    let out = screen_groups_with(grouping, &assessor, &ScreeningOptions::with_alpha(alpha))?;
    Ok((out.grouping, out.thresholds))
}
