use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FeatureKind};
use crate::error::{contract, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Initial,
    Screened,
    Candidate,
    Final,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Initial => "initial",
            Stage::Screened => "screened",
            Stage::Candidate => "candidate",
            Stage::Final => "final",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    pub label: String,
    /// Sorted feature indices.
    pub members: Vec<usize>,
}

impl Group {
    pub fn new(label: impl Into<String>, mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        members.dedup();
        Group {
            label: label.into(),
            members,
        }
    }
}

/// A partition of (a subset of) the features into labelled groups.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grouping {
    pub groups: Vec<Group>,
    pub stage: Stage,
}

impl Grouping {
    pub fn new(groups: Vec<Group>, stage: Stage) -> Result<Self> {
        let g = Grouping { groups, stage };
        g.validate(None)?;
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.groups.iter().map(|g| g.label.as_str()).collect()
    }

    pub fn n_features(&self) -> usize {
        self.groups.iter().map(|g| g.members.len()).sum()
    }

    /// Checks non-empty groups, unique labels, pairwise disjointness and,
    /// when `n_features` is given, that every index is in range.
    pub fn validate(&self, n_features: Option<usize>) -> Result<()> {
        let mut labels = HashSet::new();
        let mut seen = HashSet::new();
        for g in &self.groups {
            contract!(!g.members.is_empty(), "group '{}' is empty", g.label);
            contract!(labels.insert(g.label.as_str()), "duplicate group label '{}'", g.label);
            for &m in &g.members {
                contract!(seen.insert(m), "feature {m} appears in more than one group");
                if let Some(d) = n_features {
                    contract!(m < d, "feature index {m} out of range (D={d})");
                }
            }
        }
        Ok(())
    }

    /// Same groups relabelled `{prefix}1..{prefix}k` in order.
    pub fn relabel(&self, prefix: &str, stage: Stage) -> Grouping {
        Grouping {
            groups: self
                .groups
                .iter()
                .enumerate()
                .map(|(i, g)| Group {
                    label: format!("{prefix}{}", i + 1),
                    members: g.members.clone(),
                })
                .collect(),
            stage,
        }
    }
}

/// One group per feature, labelled by feature name order `g1..gD`.
pub fn singleton_grouping(n_features: usize) -> Grouping {
    Grouping {
        groups: (0..n_features)
            .map(|j| Group::new(format!("g{}", j + 1), vec![j]))
            .collect(),
        stage: Stage::Initial,
    }
}

/// `1 − |x_i ∧ x_j| / |x_i ∨ x_j|`; 1 when neither vector has a 1.
pub fn jaccard_dissimilarity<T: Real>(xi: &[T], xj: &[T]) -> Result<T> {
    contract!(xi.len() == xj.len(), "jaccard: length mismatch");
    let is_bin = |v: &T| *v == T::zero() || *v == T::one();
    contract!(
        xi.iter().all(is_bin) && xj.iter().all(is_bin),
        "jaccard dissimilarity needs binary vectors"
    );
    let (mut both, mut either) = (0usize, 0usize);
    for (&a, &b) in xi.iter().zip(xj) {
        let (a, b) = (a == T::one(), b == T::one());
        both += usize::from(a && b);
        either += usize::from(a || b);
    }
    if either == 0 {
        return Ok(T::one());
    }
    Ok(T::one() - T::of_usize(both) / T::of_usize(either))
}

/// `1 − |corr(x_i, x_j)|`; 1 when either vector is constant.
pub fn correlation_dissimilarity<T: Real>(xi: &[T], xj: &[T]) -> Result<T> {
    contract!(xi.len() == xj.len(), "correlation: length mismatch");
    contract!(xi.len() >= 2, "correlation needs at least 2 observations");
    let mi = crate::metrics::mean(xi);
    let mj = crate::metrics::mean(xj);
    let (mut sij, mut sii, mut sjj) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in xi.iter().zip(xj) {
        let (da, db) = (a - mi, b - mj);
        sij = sij + da * db;
        sii = sii + da * da;
        sjj = sjj + db * db;
    }
    if sii == T::zero() || sjj == T::zero() {
        return Ok(T::one());
    }
    let r = (sij / (sii.sqrt() * sjj.sqrt())).max(-T::one()).min(T::one());
    Ok(T::one() - r.abs())
}

/// Average-linkage clustering of the features, cut to exactly `d_target`
/// clusters. Jaccard dissimilarity is used when every feature is binary,
/// `1 − |corr|` otherwise.
pub fn initial_groups_by_clustering<T: Real>(data: &Dataset<T>, d_target: usize) -> Result<Grouping> {
    let p = data.n_features();
    contract!(
        (1..=p).contains(&d_target),
        "d_target must lie in 1..={p}, got {d_target}"
    );
    let all_binary = data.feature_kinds().iter().all(|&k| k == FeatureKind::Binary);
    let mut dist = vec![0.0f64; p * p];
    for i in 0..p {
        for j in (i + 1)..p {
            let (a, b) = (data.x().col(i), data.x().col(j));
            let d = if all_binary {
                jaccard_dissimilarity(a, b)?
            } else {
                correlation_dissimilarity(a, b)?
            };
            dist[i * p + j] = d.as_f64();
            dist[j * p + i] = d.as_f64();
        }
    }
    let merges = average_linkage(p, dist);
    let clusters = cut_tree(p, &merges, d_target);
    Ok(Grouping {
        groups: clusters
            .into_iter()
            .enumerate()
            .map(|(k, m)| Group::new(format!("C{}", k + 1), m))
            .collect(),
        stage: Stage::Initial,
    })
}

/// Merge record `(slot_a, slot_b, height)`; the merged cluster keeps slot_b.
pub(crate) type Merge = (usize, usize, f64);

/// Nearest-neighbour-chain average linkage on a full `p × p` dissimilarity
/// matrix. Returns the `p − 1` merges sorted by height.
pub(crate) fn average_linkage(p: usize, mut dist: Vec<f64>) -> Vec<Merge> {
    let mut size = vec![1usize; p];
    let mut active = vec![true; p];
    let mut merges: Vec<Merge> = Vec::with_capacity(p.saturating_sub(1));
    let mut chain: Vec<usize> = Vec::new();
    let mut remaining = p;
    while remaining > 1 {
        if chain.is_empty() {
            chain.push(active.iter().position(|&a| a).expect("an active cluster"));
        }
        let a = *chain.last().unwrap();
        let prev = chain.len().checked_sub(2).map(|k| chain[k]);
        let mut best = prev;
        let mut best_d = prev.map_or(f64::INFINITY, |b| dist[a * p + b]);
        for k in 0..p {
            if k != a && active[k] && dist[a * p + k] < best_d {
                best_d = dist[a * p + k];
                best = Some(k);
            }
        }
        let b = best.expect("another active cluster");
        if Some(b) == prev {
            chain.pop();
            chain.pop();
            let (lo, hi) = (a.min(b), a.max(b));
            merges.push((hi, lo, best_d));
            let (sa, sb) = (size[hi] as f64, size[lo] as f64);
            for k in 0..p {
                if active[k] && k != lo && k != hi {
                    let d = (sa * dist[hi * p + k] + sb * dist[lo * p + k]) / (sa + sb);
                    dist[lo * p + k] = d;
                    dist[k * p + lo] = d;
                }
            }
            size[lo] += size[hi];
            active[hi] = false;
            remaining -= 1;
        } else {
            chain.push(b);
        }
    }
    merges.sort_by(|x, y| x.2.total_cmp(&y.2));
    merges
}

/// Applies the first `p − k` merges; clusters are ordered by smallest member.
pub(crate) fn cut_tree(p: usize, merges: &[Merge], k: usize) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..p).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(a, b, _) in merges.iter().take(p - k) {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra] = rb;
    }
    let mut by_root: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..p {
        let r = find(&mut parent, i);
        by_root.entry(r).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = by_root.into_values().collect();
    out.sort_by_key(|m| m[0]);
    out
}

/// Deterministic feature-name → group-label rule.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum NameSchema {
    /// Delete every run of ASCII digits: `AR_01_AR` → `AR__AR`.
    StripDigits,
    /// Text before the first occurrence of `delimiter`; names without it
    /// stay singletons.
    Prefix { delimiter: String },
}

impl NameSchema {
    pub fn label(&self, name: &str) -> String {
        match self {
            NameSchema::StripDigits => name.chars().filter(|c| !c.is_ascii_digit()).collect(),
            NameSchema::Prefix { delimiter } => match name.find(delimiter.as_str()) {
                Some(pos) if !delimiter.is_empty() => name[..pos].to_string(),
                _ => name.to_string(),
            },
        }
    }
}

/// Groups features whose names map to the same label; groups appear in order
/// of first occurrence.
pub fn initial_groups_by_name(names: &[String], schema: &NameSchema) -> Grouping {
    let mut order: Vec<String> = Vec::new();
    let mut members: HashMap<String, Vec<usize>> = HashMap::new();
    for (j, name) in names.iter().enumerate() {
        let label = schema.label(name);
        let entry = members.entry(label.clone()).or_default();
        if entry.is_empty() {
            order.push(label);
        }
        entry.push(j);
    }
    Grouping {
        groups: order
            .into_iter()
            .map(|l| {
                let m = members.remove(&l).unwrap_or_default();
                Group::new(l, m)
            })
            .collect(),
        stage: Stage::Initial,
    }
}
