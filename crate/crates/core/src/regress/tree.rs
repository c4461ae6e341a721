//! CART-style regression tree grown on a bootstrap sample.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum TreeNode<T> {
    Leaf {
        value: T,
    },
    /// Rows with `x[feature] <= threshold` go left. `feature` indexes the
    /// model's feature subset, not the dataset.
    Split {
        feature: usize,
        threshold: T,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree<T> {
    nodes: Vec<TreeNode<T>>,
}

impl<T: Real> RegressionTree<T> {
    pub fn from_nodes(nodes: Vec<TreeNode<T>>) -> Self {
        RegressionTree { nodes }
    }

    pub fn nodes(&self) -> &[TreeNode<T>] {
        &self.nodes
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    /// Prediction for one row; `value_of(k)` returns the row's value of the
    /// k-th subset feature.
    #[inline]
    pub fn predict_with(&self, value_of: impl Fn(usize) -> T) -> T {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    id = if value_of(*feature) <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    /// Grows a tree on the rows with non-zero `counts` (bootstrap
    /// multiplicities), drawing `mtry` candidate features at every node and
    /// keeping the split with the largest decrease in weighted sum of squares.
    /// Nodes holding at most `min_node_size` draws become leaves.
    pub(crate) fn fit(
        cols: &[&[T]],
        y: &[T],
        counts: &[u32],
        mtry: usize,
        min_node_size: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let p = cols.len();
        let mut samples: Vec<usize> = (0..y.len()).filter(|&i| counts[i] > 0).collect();
        let mut nodes = vec![TreeNode::Leaf { value: T::zero() }];
        let mut stack = vec![(0usize, 0usize, samples.len())];
        let mut features: Vec<usize> = (0..p).collect();
        let mut scratch: Vec<(T, usize)> = Vec::with_capacity(samples.len());
        let mtry = mtry.clamp(1, p.max(1));

        while let Some((id, start, end)) = stack.pop() {
            let node = &samples[start..end];
            let mut w = T::zero();
            let mut s = T::zero();
            let mut draws = 0usize;
            let (mut lo, mut hi) = (T::infinity(), T::neg_infinity());
            for &i in node {
                let c = T::from_u32(counts[i]).unwrap_or_else(T::one);
                w = w + c;
                s = s + c * y[i];
                draws += counts[i] as usize;
                lo = lo.min(y[i]);
                hi = hi.max(y[i]);
            }
            let mean = s / w;
            if draws <= min_node_size || lo == hi {
                nodes[id] = TreeNode::Leaf { value: mean };
                continue;
            }

            let parent = s * s / w;
            let mut best_score = parent;
            let mut best: Option<(usize, T)> = None;
            for k in 0..mtry {
                let pick = rng.random_range(k..p);
                features.swap(k, pick);
                let f = features[k];
                let col = cols[f];
                scratch.clear();
                scratch.extend(node.iter().map(|&i| (col[i], i)));
                scratch.sort_unstable_by(|a, b| {
                    a.0.partial_cmp(&b.0)
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(a.1.cmp(&b.1))
                });
                if scratch[0].0 == scratch[scratch.len() - 1].0 {
                    continue;
                }
                let mut wl = T::zero();
                let mut sl = T::zero();
                for m in 0..scratch.len() - 1 {
                    let (xv, i) = scratch[m];
                    let c = T::from_u32(counts[i]).unwrap_or_else(T::one);
                    wl = wl + c;
                    sl = sl + c * y[i];
                    let next = scratch[m + 1].0;
                    if xv < next {
                        let wr = w - wl;
                        let sr = s - sl;
                        let score = sl * sl / wl + sr * sr / wr;
                        if score > best_score {
                            best_score = score;
                            let mid = xv + (next - xv) / T::of(2.0);
                            best = Some((f, if mid < next { mid } else { xv }));
                        }
                    }
                }
            }

            let tol = T::epsilon() * T::of(64.0) * parent.abs().max(T::one());
            match best {
                Some((f, threshold)) if best_score - parent > tol => {
                    let col = cols[f];
                    let seg = &mut samples[start..end];
                    let mut split = 0;
                    for m in 0..seg.len() {
                        if col[seg[m]] <= threshold {
                            seg.swap(m, split);
                            split += 1;
                        }
                    }
                    let left = nodes.len();
                    let right = left + 1;
                    nodes.push(TreeNode::Leaf { value: T::zero() });
                    nodes.push(TreeNode::Leaf { value: T::zero() });
                    nodes[id] = TreeNode::Split {
                        feature: f,
                        threshold,
                        left,
                        right,
                    };
                    stack.push((right, start + split, end));
                    stack.push((left, start, start + split));
                }
                _ => nodes[id] = TreeNode::Leaf { value: mean },
            }
        }
        RegressionTree { nodes }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::RngSeed;

    #[test]
    fn separates_two_levels() {
        let x: Vec<f64> = vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0];
        let y: Vec<f64> = x.iter().map(|&v| if v == 0.0 { 2.0 } else { 7.0 }).collect();
        let counts = vec![1u32; 8];
        let t = RegressionTree::fit(&[&x], &y, &counts, 1, 1, &mut RngSeed(0).rng());
        assert_eq!(t.n_leaves(), 2);
        assert_eq!(t.predict_with(|_| 0.0), 2.0);
        assert_eq!(t.predict_with(|_| 1.0), 7.0);
    }

    #[test]
    fn min_node_size_n_gives_single_leaf() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v).collect();
        let counts = vec![1u32; 10];
        let t = RegressionTree::fit(&[&x], &y, &counts, 1, 10, &mut RngSeed(0).rng());
        assert_eq!(t.nodes().len(), 1);
        assert_eq!(t.predict_with(|_| 3.0), 28.5);
    }

    #[test]
    fn bootstrap_weights_enter_leaf_means() {
        let x = vec![0.0, 1.0];
        let y = vec![1.0, 4.0];
        let t = RegressionTree::fit(&[&x], &y, &[3, 1], 1, 10, &mut RngSeed(0).rng());
        assert_eq!(t.predict_with(|_| 0.0), 1.75);
    }

    #[test]
    fn constant_feature_cannot_split() {
        let x = vec![5.0; 12];
        let y: Vec<f64> = (0..12).map(f64::from).collect();
        let t = RegressionTree::fit(&[&x], &y, &[1; 12], 1, 1, &mut RngSeed(0).rng());
        assert_eq!(t.nodes().len(), 1);
    }
}
