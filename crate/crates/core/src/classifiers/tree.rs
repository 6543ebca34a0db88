//! Binary decision trees over real-valued features.
//!
//! Splits have the form `x[feature] <= threshold`, with thresholds at the
//! midpoint between consecutive distinct values. Candidate splits are
//! compared by the weighted child impurity; the first best split found wins
//! ties (features in examination order, then ascending threshold), where
//! impurities within `1e-12` of each other are ties.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Impurity differences below this count as ties.
const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// Gini impurity on 0/1 targets.
    Gini,
    /// Sum of squared deviations from the node mean.
    Variance,
}

impl Criterion {
    /// Impurity of `n` rows with target sum `s` and sum of squares `ss`,
    /// scaled by `n` so child impurities add.
    fn weighted_impurity(self, n: f64, s: f64, ss: f64) -> f64 {
        if n == 0.0 {
            return 0.0;
        }
        match self {
            Criterion::Gini => {
                let p = s / n;
                n * 2.0 * p * (1.0 - p)
            }
            Criterion::Variance => (ss - s * s / n).max(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Depth 0 is a single leaf; depth 1 a stump.
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Features examined per node; `None` examines all. When none of the
    /// sampled features yields a valid split, further features are tried.
    pub max_features: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
        /// Position in the tree's leaf list.
        leaf: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    n_leaves: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// Weighted impurity of the two children.
    pub impurity: f64,
}

impl DecisionTree {
    /// Grows a tree on the rows listed in `rows` (repeats allowed, as in a
    /// bootstrap sample). Leaf values are the mean target of their rows.
    pub fn fit(
        features: &[Vec<f64>],
        targets: &[f64],
        rows: &[usize],
        params: &TreeParams,
        criterion: Criterion,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut tree = DecisionTree {
            nodes: Vec::new(),
            n_leaves: 0,
        };
        let mut rows = rows.to_vec();
        tree.grow(features, targets, &mut rows, 0, params, criterion, rng);
        tree
    }

    #[allow(clippy::too_many_arguments)]
    fn grow(
        &mut self,
        features: &[Vec<f64>],
        targets: &[f64],
        rows: &mut [usize],
        depth: usize,
        params: &TreeParams,
        criterion: Criterion,
        rng: &mut ChaCha8Rng,
    ) -> usize {
        let n = rows.len() as f64;
        let (s, ss) = sums(targets, rows);
        let parent = criterion.weighted_impurity(n, s, ss);
        let splittable = depth < params.max_depth
            && rows.len() >= params.min_samples_split.max(2)
            && parent > 1e-12;
        let split = if splittable {
            let dim = features[rows[0]].len();
            let mut order: Vec<usize> = (0..dim).collect();
            let wanted = match params.max_features {
                Some(m) if m < dim => {
                    order.shuffle(rng);
                    m.max(1)
                }
                _ => dim,
            };
            search(features, targets, rows, &order, wanted, params.min_samples_leaf, criterion)
                .filter(|sp| sp.impurity < parent - 1e-12)
        } else {
            None
        };

        let id = self.nodes.len();
        match split {
            None => {
                self.nodes.push(Node::Leaf {
                    value: if n > 0.0 { s / n } else { 0.0 },
                    leaf: self.n_leaves,
                });
                self.n_leaves += 1;
            }
            Some(sp) => {
                self.nodes.push(Node::Split {
                    feature: sp.feature,
                    threshold: sp.threshold,
                    left: 0,
                    right: 0,
                });
                let mid = partition(rows, |r| features[r][sp.feature] <= sp.threshold);
                let (l_rows, r_rows) = rows.split_at_mut(mid);
                let left = self.grow(features, targets, l_rows, depth + 1, params, criterion, rng);
                let right = self.grow(features, targets, r_rows, depth + 1, params, criterion, rng);
                if let Node::Split {
                    left: l, right: r, ..
                } = &mut self.nodes[id]
                {
                    *l = left;
                    *r = right;
                }
            }
        }
        id
    }

    fn leaf_node(&self, x: &[f64]) -> &Node {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
                leaf => return leaf,
            }
        }
    }

    pub fn predict_value(&self, x: &[f64]) -> f64 {
        match self.leaf_node(x) {
            Node::Leaf { value, .. } => *value,
            Node::Split { .. } => unreachable!(),
        }
    }

    /// Index of the leaf `x` falls into, in `0..n_leaves()`.
    pub fn leaf_index(&self, x: &[f64]) -> usize {
        match self.leaf_node(x) {
            Node::Leaf { leaf, .. } => *leaf,
            Node::Split { .. } => unreachable!(),
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    pub fn set_leaf_values(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.n_leaves);
        for node in &mut self.nodes {
            if let Node::Leaf { value, leaf } = node {
                *value = values[*leaf];
            }
        }
    }

    /// The root split, if the tree has one.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match self.nodes.first()? {
            Node::Split {
                feature, threshold, ..
            } => Some((*feature, *threshold)),
            Node::Leaf { .. } => None,
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }
}

fn sums(targets: &[f64], rows: &[usize]) -> (f64, f64) {
    rows.iter().fold((0.0, 0.0), |(s, ss), &r| {
        let t = targets[r];
        (s + t, ss + t * t)
    })
}

/// Stable in-place partition; returns the number of rows satisfying `pred`.
fn partition(rows: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let (yes, no): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| pred(r));
    let mid = yes.len();
    for (slot, r) in rows.iter_mut().zip(yes.into_iter().chain(no)) {
        *slot = r;
    }
    mid
}

/// Best split over `order`, examining at least `wanted` features and
/// continuing past that only until a valid split exists.
fn search(
    features: &[Vec<f64>],
    targets: &[f64],
    rows: &[usize],
    order: &[usize],
    wanted: usize,
    min_leaf: usize,
    criterion: Criterion,
) -> Option<Split> {
    let mut best: Option<Split> = None;
    let mut sorted = rows.to_vec();
    let min_leaf = min_leaf.max(1);
    let n = rows.len();
    let (total_s, total_ss) = sums(targets, rows);
    for (examined, &f) in order.iter().enumerate() {
        if examined >= wanted && best.is_some() {
            break;
        }
        sorted.sort_by(|&a, &b| features[a][f].total_cmp(&features[b][f]));
        let (mut ls, mut lss) = (0.0, 0.0);
        for i in 0..n - 1 {
            let t = targets[sorted[i]];
            ls += t;
            lss += t * t;
            let left_n = i + 1;
            let lo = features[sorted[i]][f];
            let hi = features[sorted[i + 1]][f];
            if lo == hi || left_n < min_leaf || n - left_n < min_leaf {
                continue;
            }
            let impurity = criterion.weighted_impurity(left_n as f64, ls, lss)
                + criterion.weighted_impurity((n - left_n) as f64, total_s - ls, total_ss - lss);
            if best.is_none_or(|b| impurity < b.impurity - TIE_EPS) {
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some(Split {
                    feature: f,
                    threshold,
                    impurity,
                });
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn all_features(max_depth: usize) -> TreeParams {
        TreeParams {
            max_depth,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: None,
        }
    }

    #[test]
    fn stump_on_pure_split() {
        let x = vec![vec![0.0, 5.0], vec![1.0, 1.0], vec![2.0, 4.0], vec![3.0, 2.0]];
        let y = vec![0.0, 0.0, 1.0, 1.0];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = DecisionTree::fit(&x, &y, &[0, 1, 2, 3], &all_features(1), Criterion::Gini, &mut rng);
        assert_eq!(t.root_split(), Some((0, 1.5)));
        assert_eq!(t.predict_value(&[0.5, 0.0]), 0.0);
        assert_eq!(t.predict_value(&[2.5, 0.0]), 1.0);
        assert_eq!(t.n_leaves(), 2);
    }

    #[test]
    fn gini_and_variance_agree_on_binary_targets() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<Vec<f64>> = (0..40).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
        let y: Vec<f64> = x.iter().map(|r| f64::from(r[1] + 0.3 * r[2] > 0.6)).collect();
        let rows: Vec<usize> = (0..40).collect();
        let a = DecisionTree::fit(&x, &y, &rows, &all_features(3), Criterion::Gini, &mut rng);
        let b = DecisionTree::fit(&x, &y, &rows, &all_features(3), Criterion::Variance, &mut rng);
        assert_eq!(a, b);
    }

    #[test]
    fn depth_zero_is_a_leaf() {
        let x = vec![vec![0.0], vec![1.0]];
        let y = vec![0.0, 1.0];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = DecisionTree::fit(&x, &y, &[0, 1], &all_features(0), Criterion::Gini, &mut rng);
        assert_eq!(t.root_split(), None);
        assert_eq!(t.predict_value(&[0.0]), 0.5);
    }

    #[test]
    fn min_samples_leaf_is_respected() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let mut y = vec![0.0; 10];
        y[0] = 1.0;
        let params = TreeParams {
            min_samples_leaf: 3,
            ..all_features(5)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rows: Vec<usize> = (0..10).collect();
        let t = DecisionTree::fit(&x, &y, &rows, &params, Criterion::Gini, &mut rng);
        let mut counts = vec![0; t.n_leaves()];
        for r in &x {
            counts[t.leaf_index(r)] += 1;
        }
        assert!(counts.iter().all(|&c| c >= 3), "{counts:?}");
    }
}
