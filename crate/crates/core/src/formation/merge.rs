use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::assessor::GroupAssessor;
use super::grouping::{Group, Grouping, Stage};
use super::screening::union_members;
use crate::data::Dataset;
use crate::error::{contract, Result};
use crate::metrics::ensemble_mse;
use crate::regress::{Assessment, Assessor, BaseRegressorSpec, ResponseId};
use crate::scalar::Real;
use crate::seed::RngSeed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairScore<T> {
    pub i: String,
    pub j: String,
    /// Assessment of one model fit on the union of both groups.
    pub c_ij: T,
    /// Assessment of the averaged predictions of the two group models.
    pub c_bar_ij: T,
    pub m_ij: T,
}

/// One executed merge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergeStep<T> {
    pub left: String,
    pub right: String,
    /// Label carried by the merged group (the smaller parent label).
    pub merged: String,
    pub m: T,
    pub c: T,
}

#[derive(Clone, Debug)]
pub struct MergeOutcome<T> {
    /// Candidate phalanxes labelled `PX_1..PX_e`.
    pub grouping: Grouping,
    pub steps: Vec<MergeStep<T>>,
    /// Cached assessment of each candidate, in output order.
    pub assessments: Vec<Arc<Assessment<T>>>,
}

fn ratio<T: Real>(c_ij: T, c_bar: T) -> T {
    if c_bar > T::zero() {
        c_ij / c_bar
    } else if c_ij > T::zero() {
        T::infinity()
    } else {
        T::one()
    }
}

fn score<T: Real, A: GroupAssessor<T>>(a: &LiveGroup<T>, b: &LiveGroup<T>, assessor: &A) -> Result<PairScore<T>> {
    let union = union_members(&a.group, &b.group);
    let c_ij = assessor.assess(&union, ResponseId::Observed)?.c;
    let y = assessor.response(ResponseId::Observed);
    let c_bar_ij = ensemble_mse(y, &[&a.assessment.predictions, &b.assessment.predictions])?;
    let (i, j) = ordered(&a.group.label, &b.group.label);
    Ok(PairScore {
        i: i.to_string(),
        j: j.to_string(),
        c_ij,
        c_bar_ij,
        m_ij: ratio(c_ij, c_bar_ij),
    })
}

fn ordered<'a>(a: &'a str, b: &'a str) -> (&'a str, &'a str) {
    if a <= b { (a, b) } else { (b, a) }
}

struct LiveGroup<T> {
    group: Group,
    assessment: Arc<Assessment<T>>,
}

fn live_groups<T: Real, A: GroupAssessor<T>>(grouping: &Grouping, assessor: &A) -> Result<Vec<LiveGroup<T>>> {
    grouping
        .groups
        .par_iter()
        .map(|g| {
            Ok(LiveGroup {
                group: g.clone(),
                assessment: assessor.assess(&g.members, ResponseId::Observed)?,
            })
        })
        .collect()
}

fn all_pairs<T: Real, A: GroupAssessor<T>>(live: &[LiveGroup<T>], assessor: &A) -> Result<Vec<PairScore<T>>> {
    let idx: Vec<(usize, usize)> = (0..live.len())
        .flat_map(|i| ((i + 1)..live.len()).map(move |j| (i, j)))
        .collect();
    idx.par_iter().map(|&(i, j)| score(&live[i], &live[j], assessor)).collect()
}

/// Scores for every unordered pair of groups, in lexicographic label order.
pub fn pair_scores_with<T: Real, A: GroupAssessor<T>>(grouping: &Grouping, assessor: &A) -> Result<Vec<PairScore<T>>> {
    grouping.validate(None)?;
    let live = live_groups(grouping, assessor)?;
    let mut out = all_pairs(&live, assessor)?;
    out.sort_by(|a, b| (&a.i, &a.j).cmp(&(&b.i, &b.j)));
    Ok(out)
}

pub fn pair_scores<T: Real>(
    grouping: &Grouping,
    data: &Dataset<T>,
    spec: &BaseRegressorSpec,
    seed: RngSeed,
) -> Result<Vec<PairScore<T>>> {
    grouping.validate(Some(data.n_features()))?;
    let assessor = Assessor::new(data, spec.clone(), seed, 0)?;
    pair_scores_with(grouping, &assessor)
}

/// Greedy hierarchical merging: repeatedly join the pair with the smallest
/// `m_ij` while it is below 1.
pub fn merge_phalanxes_with<T: Real, A: GroupAssessor<T>>(grouping: &Grouping, assessor: &A) -> Result<MergeOutcome<T>> {
    contract!(!grouping.is_empty(), "merging needs at least one group");
    grouping.validate(None)?;
    let groups = live_groups(grouping, assessor)?;
    let mut scores: BTreeMap<(String, String), PairScore<T>> = all_pairs(&groups, assessor)?
        .into_iter()
        .map(|s| ((s.i.clone(), s.j.clone()), s))
        .collect();
    let mut live: BTreeMap<String, LiveGroup<T>> = groups.into_iter().map(|g| (g.group.label.clone(), g)).collect();
    let mut steps = Vec::new();
    loop {
        // BTreeMap iteration is in label-pair order, so the first minimum wins ties.
        let best = scores
            .values()
            .fold(None::<&PairScore<T>>, |acc, s| match acc {
                Some(b) if b.m_ij <= s.m_ij || s.m_ij.is_nan() => Some(b),
                _ => Some(s),
            })
            .cloned();
        let Some(best) = best.filter(|s| s.m_ij < T::one()) else { break };
        let a = live.remove(&best.i).expect("live group");
        let b = live.remove(&best.j).expect("live group");
        let members = union_members(&a.group, &b.group);
        let assessment = assessor.assess(&members, ResponseId::Observed)?;
        let merged = LiveGroup {
            group: Group { label: best.i.clone(), members },
            assessment,
        };
        steps.push(MergeStep {
            left: best.i.clone(),
            right: best.j.clone(),
            merged: best.i.clone(),
            m: best.m_ij,
            c: merged.assessment.c,
        });
        scores.retain(|(i, j), _| ![&best.i, &best.j].iter().any(|l| *l == i || *l == j));
        let others: Vec<&LiveGroup<T>> = live.values().collect();
        let fresh = others
            .par_iter()
            .map(|o| score(&merged, o, assessor))
            .collect::<Result<Vec<_>>>()?;
        for s in fresh {
            scores.insert((s.i.clone(), s.j.clone()), s);
        }
        live.insert(best.i.clone(), merged);
    }
    let mut finals: Vec<LiveGroup<T>> = live.into_values().collect();
    finals.sort_by_key(|g| g.group.members[0]);
    let grouping = Grouping {
        groups: finals
            .iter()
            .enumerate()
            .map(|(k, g)| Group { label: format!("PX_{}", k + 1), members: g.group.members.clone() })
            .collect(),
        stage: Stage::Candidate,
    };
    Ok(MergeOutcome {
        grouping,
        steps,
        assessments: finals.into_iter().map(|g| g.assessment).collect(),
    })
}

pub fn merge_phalanxes<T: Real>(
    grouping: &Grouping,
    data: &Dataset<T>,
    spec: &BaseRegressorSpec,
    seed: RngSeed,
) -> Result<Grouping> {
    grouping.validate(Some(data.n_features()))?;
    let assessor = Assessor::new(data, spec.clone(), seed, 0)?;
    Ok(merge_phalanxes_with(grouping, &assessor)?.grouping)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formation::grouping::singleton_grouping;
    use crate::formation::mock::ScriptedAssessor;

    fn y() -> Vec<f64> {
        vec![3.0, -1.0, 2.0, 0.0, -2.0, 1.0]
    }

    #[test]
    fn identical_predictions_average_to_the_same_mse() {
        let a = ScriptedAssessor::new(y(), 0, |m, y, _| y.iter().map(|v| 0.5 * v + m.len() as f64 * 0.1).collect());
        let g = Grouping::new(vec![Group::new("a", vec![0]), Group::new("b", vec![1])], Stage::Screened).unwrap();
        let s = pair_scores_with(&g, &a).unwrap();
        let c_a = a.assess(&[0], ResponseId::Observed).unwrap().c;
        assert_eq!(s[0].c_bar_ij, c_a);
    }

    #[test]
    fn union_that_halves_error_scores_below_one() {
        // Each single group gets half the signal; the union gets all of it.
        let a = ScriptedAssessor::new(y(), 0, |m, y, _| {
            let w = if m.len() >= 2 { 0.9 } else { 0.3 };
            y.iter().map(|v| w * v).collect()
        });
        let s = pair_scores_with(&singleton_grouping(2), &a).unwrap();
        assert!(s[0].m_ij < 1.0);
        assert_eq!(s[0].m_ij, s[0].c_ij / s[0].c_bar_ij);
    }

    #[test]
    fn averaging_better_than_union_scores_above_one() {
        // Singles err in opposite directions, so their average is exact; the union is mediocre.
        let a = ScriptedAssessor::new(y(), 0, |m, y, _| match m {
            [0] => y.iter().map(|v| v + 1.0).collect(),
            [1] => y.iter().map(|v| v - 1.0).collect(),
            _ => y.iter().map(|v| v + 0.5).collect(),
        });
        let s = pair_scores_with(&singleton_grouping(2), &a).unwrap();
        assert!(s[0].m_ij > 1.0);
        let out = merge_phalanxes_with(&singleton_grouping(2), &a).unwrap();
        assert!(out.steps.is_empty());
        assert_eq!(out.grouping.len(), 2);
        assert_eq!(out.grouping.labels(), vec!["PX_1", "PX_2"]);
    }

    #[test]
    fn dominating_unions_merge_to_one() {
        let a = ScriptedAssessor::new(y(), 0, |m, y, _| {
            let w = 1.0 - 0.5f64.powi(m.len() as i32);
            y.iter().map(|v| w * v).collect()
        });
        let out = merge_phalanxes_with(&singleton_grouping(5), &a).unwrap();
        assert_eq!(out.grouping.len(), 1);
        assert_eq!(out.grouping.groups[0].members, vec![0, 1, 2, 3, 4]);
        assert_eq!(out.steps.len(), 4);
        assert_eq!(out.grouping.stage, Stage::Candidate);
    }

    #[test]
    fn single_group_is_returned_unchanged() {
        let a = ScriptedAssessor::new(y(), 0, |_, y, _| y.to_vec());
        let out = merge_phalanxes_with(&singleton_grouping(1), &a).unwrap();
        assert_eq!(out.grouping.groups[0].members, vec![0]);
        assert!(out.steps.is_empty());
    }

    #[test]
    fn merged_group_keeps_the_union_assessment() {
        let a = ScriptedAssessor::new(y(), 0, |m, y, _| {
            let w = 1.0 - 0.5f64.powi(m.len() as i32);
            y.iter().map(|v| w * v).collect()
        });
        let g = singleton_grouping(3);
        let scores = pair_scores_with(&g, &a).unwrap();
        let out = merge_phalanxes_with(&g, &a).unwrap();
        let first = &out.steps[0];
        let s = scores.iter().find(|s| s.i == first.left && s.j == first.right).unwrap();
        assert_eq!(first.c, s.c_ij);
    }
}
