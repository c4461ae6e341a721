//! Brute-force reference implementations of merging and forward selection,
//! recomputing every quantity from scratch at each step.

use std::collections::BTreeMap;

use erpx::seed::RngSeed;
use rand::Rng;

pub fn mse(y: &[f64], p: &[f64]) -> f64 {
    y.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64
}

pub fn average(preds: &[&[f64]]) -> Vec<f64> {
    (0..preds[0].len())
        .map(|i| preds.iter().map(|p| p[i]).sum::<f64>() / preds.len() as f64)
        .collect()
}

/// A deterministic scripted predictor: `y + s(S)·mean_{f∈S} e_f`, where the
/// factor `s(S)` is a pseudo-random function of the member set, so unions
/// can be better or worse than averaging.
pub struct Script {
    pub y: Vec<f64>,
    pub noise: Vec<Vec<f64>>,
    pub salt: u64,
}

impl Script {
    pub fn random(n: usize, d: usize, seed: u64) -> Script {
        let mut rng = RngSeed(seed).rng();
        let y = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let noise = (0..d)
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        Script { y, noise, salt: seed }
    }

    pub fn factor(&self, members: &[usize]) -> f64 {
        let words: Vec<u64> = members.iter().map(|&m| m as u64).collect();
        let h = RngSeed(self.salt).derive_words("factor", &words).0;
        0.3 + 1.2 * (h >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn predict(&self, members: &[usize], y: &[f64]) -> Vec<f64> {
        let s = self.factor(members);
        (0..y.len())
            .map(|i| {
                let e = members.iter().map(|&f| self.noise[f][i]).sum::<f64>() / members.len() as f64;
                y[i] + s * e
            })
            .collect()
    }
}

/// Greedy merging over `(label, members)` groups. Returns the executed
/// `(left, right)` label pairs and the final member sets ordered by their
/// smallest member.
pub fn brute_force_merge(
    groups: &[(String, Vec<usize>)],
    predict: impl Fn(&[usize]) -> Vec<f64>,
    y: &[f64],
) -> (Vec<(String, String)>, Vec<Vec<usize>>) {
    let mut live: BTreeMap<String, Vec<usize>> = groups.iter().cloned().collect();
    let mut order = Vec::new();
    loop {
        let mut best: Option<(f64, String, String)> = None;
        let labels: Vec<String> = live.keys().cloned().collect();
        for a in 0..labels.len() {
            for b in (a + 1)..labels.len() {
                let (li, lj) = (&labels[a], &labels[b]);
                let mut union: Vec<usize> = live[li].iter().chain(&live[lj]).copied().collect();
                union.sort_unstable();
                let c = mse(y, &predict(&union));
                let pa = predict(&live[li]);
                let pb = predict(&live[lj]);
                let cbar = mse(y, &average(&[&pa, &pb]));
                let m = if cbar > 0.0 { c / cbar } else if c > 0.0 { f64::INFINITY } else { 1.0 };
                if best.as_ref().is_none_or(|b| m < b.0) {
                    best = Some((m, li.clone(), lj.clone()));
                }
            }
        }
        match best {
            Some((m, li, lj)) if m < 1.0 => {
                let mut union: Vec<usize> = live[&li].iter().chain(&live[&lj]).copied().collect();
                union.sort_unstable();
                live.remove(&lj);
                live.insert(li.clone(), union);
                order.push((li, lj));
            }
            _ => break,
        }
    }
    let mut finals: Vec<Vec<usize>> = live.into_values().collect();
    finals.sort_by_key(|m| m[0]);
    (order, finals)
}

/// Forward selection by exhaustive recomputation: every step scores every
/// remaining candidate on the full averaged prediction, ties going to the
/// lower index. Returns the kept candidate indices in path order.
pub fn brute_force_select(y: &[f64], preds: &[Vec<f64>]) -> Vec<usize> {
    let e = preds.len();
    let c: Vec<f64> = preds.iter().map(|p| mse(y, p)).collect();
    let start = (0..e).fold(0, |b, k| if c[k] < c[b] { k } else { b });
    let mut path = vec![start];
    let mut scores = vec![c[start]];
    while path.len() < e {
        let mut best: Option<(f64, usize)> = None;
        for k in (0..e).filter(|k| !path.contains(k)) {
            let mut members: Vec<&[f64]> = path.iter().map(|&i| preds[i].as_slice()).collect();
            members.push(&preds[k]);
            let m = mse(y, &average(&members));
            if best.is_none_or(|b| m < b.0) {
                best = Some((m, k));
            }
        }
        let (m, k) = best.unwrap();
        path.push(k);
        scores.push(m);
    }
    let best_len = (0..e).fold(0, |b, k| if scores[k] < scores[b] { k } else { b }) + 1;
    path.truncate(best_len);
    path
}
