//! Multi-output CART regression trees and the buffered online tree learner.

use std::collections::VecDeque;

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Leaf {
        value: Vec<f64>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Regression tree minimizing the summed squared error over all outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<Node>,
    outputs: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 4,
            min_leaf: 1,
        }
    }
}

impl RegressionTree {
    /// A single leaf predicting zero.
    pub fn constant_zero(outputs: usize) -> Self {
        RegressionTree {
            nodes: vec![Node::Leaf {
                value: vec![0.0; outputs],
            }],
            outputs,
        }
    }

    pub fn from_nodes(nodes: Vec<Node>, outputs: usize) -> Self {
        RegressionTree { nodes, outputs }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaf_value(&self, x: &[f64]) -> &[f64] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    /// Fits a tree on `(x, y)` pairs. Empty input yields the zero tree.
    pub fn fit<X: AsRef<[f64]>, Y: AsRef<[f64]>>(xs: &[X], ys: &[Y], outputs: usize, params: TreeParams) -> Self {
        let mut tree = RegressionTree {
            nodes: Vec::new(),
            outputs,
        };
        if xs.is_empty() {
            return Self::constant_zero(outputs);
        }
        let mut idx: Vec<usize> = (0..xs.len()).collect();
        tree.grow(xs, ys, &mut idx, 0, params);
        tree
    }

    fn mean(ys: &[impl AsRef<[f64]>], idx: &[usize], outputs: usize) -> Vec<f64> {
        let mut m = vec![0.0; outputs];
        for &i in idx {
            for (a, b) in m.iter_mut().zip(ys[i].as_ref()) {
                *a += b;
            }
        }
        let n = idx.len() as f64;
        m.iter_mut().for_each(|a| *a /= n);
        m
    }

    fn grow<X: AsRef<[f64]>, Y: AsRef<[f64]>>(
        &mut self,
        xs: &[X],
        ys: &[Y],
        idx: &mut [usize],
        depth: usize,
        params: TreeParams,
    ) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value: Self::mean(ys, idx, self.outputs),
        });
        if depth >= params.max_depth || idx.len() < 2 * params.min_leaf.max(1) {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(xs, ys, idx, params.min_leaf.max(1)) else {
            return id;
        };
        // partition in place: left block holds x[feature] <= threshold
        let mut cut = 0;
        for k in 0..idx.len() {
            if xs[idx[k]].as_ref()[feature] <= threshold {
                idx.swap(k, cut);
                cut += 1;
            }
        }
        let (l, r) = idx.split_at_mut(cut);
        let left = self.grow(xs, ys, l, depth + 1, params);
        let right = self.grow(xs, ys, r, depth + 1, params);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }

    fn best_split<X: AsRef<[f64]>, Y: AsRef<[f64]>>(
        &self,
        xs: &[X],
        ys: &[Y],
        idx: &[usize],
        min_leaf: usize,
    ) -> Option<(usize, f64)> {
        let m = self.outputs;
        let n = idx.len();
        let dim = xs[idx[0]].as_ref().len();
        let mut total = vec![0.0; m];
        for &i in idx {
            for (t, v) in total.iter_mut().zip(ys[i].as_ref()) {
                *t += v;
            }
        }
        let parent: f64 = total.iter().map(|s| s * s).sum::<f64>() / n as f64;
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order = idx.to_vec();
        let mut left = vec![0.0; m];
        for f in 0..dim {
            order.sort_by(|&a, &b| xs[a].as_ref()[f].total_cmp(&xs[b].as_ref()[f]));
            left.iter_mut().for_each(|v| *v = 0.0);
            for k in 0..n - 1 {
                for (l, v) in left.iter_mut().zip(ys[order[k]].as_ref()) {
                    *l += v;
                }
                let nl = k + 1;
                let nr = n - nl;
                if nl < min_leaf || nr < min_leaf {
                    continue;
                }
                let a = xs[order[k]].as_ref()[f];
                let b = xs[order[k + 1]].as_ref()[f];
                if a == b {
                    continue;
                }
                // SSE reduction = sum_j SL_j^2/nL + SR_j^2/nR - S_j^2/n
                let score: f64 = left
                    .iter()
                    .zip(&total)
                    .map(|(l, t)| l * l / nl as f64 + (t - l) * (t - l) / nr as f64)
                    .sum::<f64>()
                    - parent;
                if score > 1e-12 && best.is_none_or(|(s, _, _)| score > s) {
                    best = Some((score, f, 0.5 * (a + b)));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

/// Online stand-in for a tree learner: a sliding window of recent
/// `(x, target)` pairs, refit into a CART tree every `refit_every` updates.
#[derive(Clone, Debug)]
pub struct BufferedTree {
    tree: RegressionTree,
    window: VecDeque<(Vec<f64>, Vec<f64>)>,
    capacity: usize,
    refit_every: usize,
    since_refit: usize,
    params: TreeParams,
    inputs: usize,
}

impl BufferedTree {
    pub fn new(inputs: usize, outputs: usize, capacity: usize, refit_every: usize, params: TreeParams) -> Self {
        BufferedTree {
            tree: RegressionTree::constant_zero(outputs),
            window: VecDeque::with_capacity(capacity),
            capacity: capacity.max(1),
            refit_every: refit_every.max(1),
            since_refit: 0,
            params,
            inputs,
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.tree.outputs()
    }

    pub fn tree(&self) -> &RegressionTree {
        &self.tree
    }

    pub fn predict_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(self.tree.leaf_value(x));
    }

    pub fn learn(&mut self, x: &[f64], target: &[f64]) {
        if self.window.len() == self.capacity {
            self.window.pop_front();
        }
        self.window.push_back((x.to_vec(), target.to_vec()));
        self.since_refit += 1;
        if self.since_refit >= self.refit_every {
            self.since_refit = 0;
            let (xs, ys): (Vec<&[f64]>, Vec<&[f64]>) =
                self.window.iter().map(|(x, y)| (x.as_slice(), y.as_slice())).unzip();
            self.tree = RegressionTree::fit(&xs, &ys, self.tree.outputs(), self.params);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deep_tree_interpolates_distinct_points() {
        let xs: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64 * 0.37]).collect();
        let ys: Vec<Vec<f64>> = xs.iter().map(|x| vec![(3.0 * x[0]).sin() * 10.0 + x[0]]).collect();
        let tree = RegressionTree::fit(
            &xs,
            &ys,
            1,
            TreeParams {
                max_depth: 15,
                min_leaf: 1,
            },
        );
        let sse: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (tree.leaf_value(x)[0] - y[0]).powi(2))
            .sum();
        assert!(sse < 1e-18, "sse {sse}");
        assert!(tree.depth() <= 15);
    }

    #[test]
    fn depth_one_stump_picks_best_threshold() {
        let xs = [[0.0], [1.0], [2.0], [3.0]];
        let ys = [[1.0], [1.0], [5.0], [5.0]];
        let t = RegressionTree::fit(&xs, &ys, 1, TreeParams { max_depth: 1, min_leaf: 1 });
        assert_eq!(t.leaf_value(&[0.5]), &[1.0]);
        assert_eq!(t.leaf_value(&[2.5]), &[5.0]);
        match &t.nodes()[0] {
            Node::Split { threshold, .. } => assert_eq!(*threshold, 1.5),
            n => panic!("expected split, got {n:?}"),
        }
    }

    #[test]
    fn constant_feature_gives_leaf_mean() {
        let xs = [[1.0], [1.0], [1.0]];
        let ys = [[1.0, 0.0], [2.0, 0.0], [3.0, 3.0]];
        let t = RegressionTree::fit(&xs, &ys, 2, TreeParams::default());
        assert_eq!(t.nodes().len(), 1);
        assert_eq!(t.leaf_value(&[1.0]), &[2.0, 1.0]);
    }

    #[test]
    fn buffered_tree_refits_on_schedule() {
        let params = TreeParams {
            max_depth: 3,
            min_leaf: 1,
        };
        let mut b = BufferedTree::new(1, 1, 8, 8, params);
        let mut out = [0.0];
        for i in 0..7 {
            b.learn(&[i as f64], &[if i < 4 { -1.0 } else { 2.0 }]);
            b.predict_into(&[0.0], &mut out);
            assert_eq!(out, [0.0]);
        }
        b.learn(&[7.0], &[2.0]);
        b.predict_into(&[0.0], &mut out);
        assert_eq!(out, [-1.0]);
        b.predict_into(&[6.0], &mut out);
        assert_eq!(out, [2.0]);
    }

    #[test]
    fn buffered_tree_window_slides() {
        let mut b = BufferedTree::new(1, 1, 4, 4, TreeParams { max_depth: 0, min_leaf: 1 });
        for i in 0..8 {
            b.learn(&[0.0], &[i as f64]);
        }
        // window holds targets 4..8 -> mean 5.5
        let mut out = [0.0];
        b.predict_into(&[0.0], &mut out);
        assert_eq!(out, [5.5]);
    }
}
