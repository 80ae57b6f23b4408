//! Variance-reduction (CART) regression trees.
//!
//! Shared by the random forest used for feature selection and by the bagged
//! downstream regressor. Split search runs over per-feature presorted index
//! lists that are stably partitioned as the tree grows, so each level costs
//! O(D·n) instead of a fresh sort per node.

use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape_err, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Number of candidate features drawn per split; `None` uses all of them.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_leaf: 1,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
        samples: usize,
        impurity: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        samples: usize,
        /// Variance of the targets reaching this node.
        impurity: f64,
        /// Sample-weighted mean of the two children's variances.
        child_impurity: f64,
    },
}

impl Node {
    pub fn samples(&self) -> usize {
        match self {
            Node::Leaf { samples, .. } | Node::Split { samples, .. } => *samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
    n_features: usize,
}

impl RegressionTree {
    /// A tree consisting of a single leaf.
    pub fn constant(value: f64, samples: usize, n_features: usize) -> Self {
        RegressionTree {
            nodes: vec![Node::Leaf {
                value,
                samples,
                impurity: 0.0,
            }],
            n_features,
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn predict_row(&self, row: ArrayView1<'_, f64>) -> f64 {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf { value, .. } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    id = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        if x.ncols() != self.n_features {
            return Err(shape_err(format!(
                "tree expects {} features, got {}",
                self.n_features,
                x.ncols()
            )));
        }
        Ok(x.rows().into_iter().map(|r| self.predict_row(r)).collect())
    }

    /// Per-feature sum of (node sample fraction × impurity decrease).
    pub fn impurity_decrease(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_features];
        let root = self.nodes[0].samples() as f64;
        for node in &self.nodes {
            if let Node::Split {
                feature,
                samples,
                impurity,
                child_impurity,
                ..
            } = node
            {
                out[*feature] += (*samples as f64 / root) * (impurity - child_impurity).max(0.0);
            }
        }
        out
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match &nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

struct Builder<'a> {
    params: &'a TreeParams,
    n_features: usize,
    /// Column-major copy of the sampled rows: `values[f][p]`.
    values: Vec<Vec<f64>>,
    targets: Vec<f64>,
    /// `sorted[f]` holds sample positions ordered by feature `f`; every node owns a common range.
    sorted: Vec<Vec<u32>>,
    goes_left: Vec<bool>,
    scratch: Vec<u32>,
    nodes: Vec<Node>,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    left_len: usize,
    score: f64,
}

impl<'a> Builder<'a> {
    fn node_stats(&self, start: usize, end: usize) -> (f64, f64, f64, f64) {
        let range = &self.sorted[0][start..end];
        let n = range.len() as f64;
        let sum: f64 = range.iter().map(|&p| self.targets[p as usize]).sum();
        let mean = sum / n;
        let sse: f64 = range
            .iter()
            .map(|&p| {
                let d = self.targets[p as usize] - mean;
                d * d
            })
            .sum();
        let (lo, hi) = range.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| {
            let v = self.targets[p as usize];
            (lo.min(v), hi.max(v))
        });
        (mean, sse, sum, hi - lo)
    }

    fn best_split(&self, features: &[usize], start: usize, end: usize, total: f64) -> Option<Candidate> {
        let n = end - start;
        let min_leaf = self.params.min_leaf.max(1);
        let mut best: Option<Candidate> = None;
        for &f in features {
            let order = &self.sorted[f][start..end];
            let column = &self.values[f];
            let mut left_sum = 0.0;
            for i in 0..n - 1 {
                let p = order[i] as usize;
                left_sum += self.targets[p];
                let left_len = i + 1;
                if left_len < min_leaf {
                    continue;
                }
                if n - left_len < min_leaf {
                    break;
                }
                let a = column[p];
                let b = column[order[i + 1] as usize];
                if !(a < b) {
                    continue;
                }
                let right_sum = total - left_sum;
                let score = left_sum * left_sum / left_len as f64
                    + right_sum * right_sum / (n - left_len) as f64;
                if best.as_ref().map_or(true, |c| score > c.score) {
                    let mut threshold = 0.5 * (a + b);
                    if threshold >= b {
                        threshold = a;
                    }
                    best = Some(Candidate {
                        feature: f,
                        threshold,
                        left_len,
                        score,
                    });
                }
            }
        }
        best
    }

    fn partition(&mut self, split_feature: usize, start: usize, end: usize, left_len: usize) {
        for &p in &self.sorted[split_feature][start..start + left_len] {
            self.goes_left[p as usize] = true;
        }
        for f in 0..self.n_features {
            if f == split_feature {
                continue;
            }
            self.scratch.clear();
            let range = &mut self.sorted[f][start..end];
            let mut write = 0;
            for read in 0..range.len() {
                let p = range[read];
                if self.goes_left[p as usize] {
                    range[write] = p;
                    write += 1;
                } else {
                    self.scratch.push(p);
                }
            }
            range[write..].copy_from_slice(&self.scratch);
        }
        for &p in &self.sorted[split_feature][start..start + left_len] {
            self.goes_left[p as usize] = false;
        }
    }

    fn build<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let n_total = self.targets.len();
        // (node id, start, end, depth)
        let mut stack = vec![(0usize, 0usize, n_total, 0usize)];
        self.nodes.push(Node::Leaf {
            value: 0.0,
            samples: n_total,
            impurity: 0.0,
        });
        let all_features: Vec<usize> = (0..self.n_features).collect();

        while let Some((id, start, end, depth)) = stack.pop() {
            let n = end - start;
            let (mean, sse, sum, range) = self.node_stats(start, end);
            let impurity = sse / n as f64;
            let leaf = Node::Leaf {
                value: mean,
                samples: n,
                impurity,
            };
            let can_split = range > 0.0
                && n >= 2 * self.params.min_leaf.max(1)
                && self.params.max_depth.map_or(true, |d| depth < d);
            if !can_split {
                self.nodes[id] = leaf;
                continue;
            }

            let features: Vec<usize> = match self.params.max_features {
                Some(k) if k < self.n_features => {
                    let mut picked = index::sample(rng, self.n_features, k.max(1)).into_vec();
                    picked.sort_unstable();
                    picked
                }
                _ => all_features.clone(),
            };

            let parent_proxy = sum * sum / n as f64;
            match self.best_split(&features, start, end, sum) {
                Some(c) if c.score > parent_proxy => {
                    let decrease = ((c.score - parent_proxy) / n as f64).min(impurity).max(0.0);
                    self.partition(c.feature, start, end, c.left_len);
                    let left = self.nodes.len();
                    let right = left + 1;
                    for _ in 0..2 {
                        self.nodes.push(Node::Leaf {
                            value: 0.0,
                            samples: 0,
                            impurity: 0.0,
                        });
                    }
                    self.nodes[id] = Node::Split {
                        feature: c.feature,
                        threshold: c.threshold,
                        left,
                        right,
                        samples: n,
                        impurity,
                        child_impurity: impurity - decrease,
                    };
                    // Right pushed first so the left subtree is built (and draws randomness) first.
                    stack.push((right, start + c.left_len, end, depth + 1));
                    stack.push((left, start, start + c.left_len, depth + 1));
                }
                _ => self.nodes[id] = leaf,
            }
        }
    }
}

/// Fits a tree on the given rows of `x` (repeats allowed, as produced by bootstrapping).
pub fn fit_tree<R: Rng + ?Sized>(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    rows: &[usize],
    params: &TreeParams,
    rng: &mut R,
) -> Result<RegressionTree> {
    if x.nrows() != y.len() {
        return Err(shape_err(format!("{} rows but {} targets", x.nrows(), y.len())));
    }
    if rows.is_empty() || x.ncols() == 0 {
        return Err(invalid("cannot fit a tree on empty input"));
    }
    if let Some(&bad) = rows.iter().find(|&&r| r >= x.nrows()) {
        return Err(invalid(format!("row index {bad} out of range")));
    }
    if rows.len() > u32::MAX as usize {
        return Err(invalid("too many rows for a single tree"));
    }
    let n_features = x.ncols();
    let values: Vec<Vec<f64>> = (0..n_features)
        .map(|f| rows.iter().map(|&r| x[[r, f]]).collect())
        .collect();
    let sorted: Vec<Vec<u32>> = values
        .iter()
        .map(|column| {
            let mut order: Vec<u32> = (0..rows.len() as u32).collect();
            order.sort_by(|&a, &b| {
                column[a as usize]
                    .total_cmp(&column[b as usize])
                    .then(a.cmp(&b))
            });
            order
        })
        .collect();
    let mut builder = Builder {
        params,
        n_features,
        values,
        targets: rows.iter().map(|&r| y[r]).collect(),
        sorted,
        goes_left: vec![false; rows.len()],
        scratch: Vec::with_capacity(rows.len()),
        nodes: Vec::new(),
    };
    builder.build(rng);
    Ok(RegressionTree {
        nodes: builder.nodes,
        n_features,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    #[test]
    fn stump_on_step_function() {
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let y = array![1.0, 1.0, 5.0, 5.0];
        let params = TreeParams {
            max_depth: Some(1),
            ..TreeParams::default()
        };
        let tree = fit_tree(x.view(), y.view(), &[0, 1, 2, 3], &params, &mut rng()).unwrap();
        match &tree.nodes()[0] {
            Node::Split {
                feature, threshold, ..
            } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 1.5);
            }
            other => panic!("expected split, got {other:?}"),
        }
        assert_eq!(tree.predict(x.view()).unwrap(), array![1.0, 1.0, 5.0, 5.0]);
        let imp = tree.impurity_decrease();
        assert!((imp[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn leaves_hold_target_means() {
        let x = array![[0.0], [0.0], [1.0], [1.0]];
        let y = array![1.0, 3.0, 10.0, 20.0];
        let tree = fit_tree(x.view(), y.view(), &[0, 1, 2, 3], &TreeParams::default(), &mut rng()).unwrap();
        let pred = tree.predict(x.view()).unwrap();
        assert_eq!(pred, array![2.0, 2.0, 15.0, 15.0]);
    }

    #[test]
    fn constant_target_is_a_single_leaf() {
        let x = Array2::from_shape_fn((20, 3), |(i, j)| (i * 7 + j) as f64 % 5.0);
        let y = Array1::from_elem(20, 4.0);
        let rows: Vec<usize> = (0..20).collect();
        let tree = fit_tree(x.view(), y.view(), &rows, &TreeParams::default(), &mut rng()).unwrap();
        assert_eq!(tree.nodes().len(), 1);
        assert_eq!(tree.impurity_decrease(), vec![0.0; 3]);
    }

    #[test]
    fn respects_min_leaf_and_depth() {
        let x = Array2::from_shape_fn((50, 1), |(i, _)| i as f64);
        let y = Array1::from_shape_fn(50, |i| (i as f64).sin());
        let rows: Vec<usize> = (0..50).collect();
        let params = TreeParams {
            max_depth: Some(3),
            min_leaf: 5,
            max_features: None,
        };
        let tree = fit_tree(x.view(), y.view(), &rows, &params, &mut rng()).unwrap();
        assert!(tree.depth() <= 3);
        for node in tree.nodes() {
            if let Node::Leaf { samples, .. } = node {
                assert!(*samples >= 5);
            }
        }
    }

    #[test]
    fn impurity_decrease_is_non_negative_everywhere() {
        let mut r = rng();
        let x = Array2::from_shape_fn((200, 4), |_| r.random::<f64>());
        let y = Array1::from_shape_fn(200, |i| x[[i, 0]] * 3.0 + x[[i, 2]] + r.random::<f64>() * 0.1);
        let rows: Vec<usize> = (0..200).map(|_| r.random_range(0..200)).collect();
        let params = TreeParams {
            max_features: Some(2),
            ..TreeParams::default()
        };
        let tree = fit_tree(x.view(), y.view(), &rows, &params, &mut r).unwrap();
        for node in tree.nodes() {
            if let Node::Split {
                impurity,
                child_impurity,
                ..
            } = node
            {
                assert!(impurity - child_impurity >= 0.0);
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        let x = array![[0.0], [1.0]];
        let y = array![0.0, 1.0];
        assert!(fit_tree(x.view(), y.view(), &[], &TreeParams::default(), &mut rng()).is_err());
        assert!(fit_tree(x.view(), y.view(), &[5], &TreeParams::default(), &mut rng()).is_err());
        let tree = fit_tree(x.view(), y.view(), &[0, 1], &TreeParams::default(), &mut rng()).unwrap();
        assert!(tree.predict(array![[0.0, 1.0]].view()).is_err());
    }
}
