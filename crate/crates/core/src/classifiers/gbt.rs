//! Gradient-boosted regression trees on the logistic loss.
//!
//! Starts from the log-odds of the class prior. Each stage fits a
//! variance-criterion tree to the residuals `y - p`, sets every leaf to the
//! Newton step `sum(y - p) / sum(p (1 - p))` over its rows, and adds the
//! tree scaled by the learning rate.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{Criterion, DecisionTree, TreeParams};
use super::{sigmoid, TrainingSet};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbtParams {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            n_estimators: 100,
            max_depth: 3,
            learning_rate: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gbt {
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<DecisionTree>,
}

impl Gbt {
    pub fn score(&self, x: &[f64]) -> f64 {
        self.base_score
            + self.learning_rate * self.trees.iter().map(|t| t.predict_value(x)).sum::<f64>()
    }

    pub fn predict_one(&self, x: &[f64]) -> u8 {
        u8::from(self.score(x) > 0.0)
    }
}

/// Mean logistic loss of raw scores against 0/1 labels.
pub fn logistic_loss(scores: &[f64], labels: &[u8]) -> f64 {
    let total: f64 = scores
        .iter()
        .zip(labels)
        .map(|(&z, &y)| z.max(0.0) - f64::from(y) * z + (-z.abs()).exp().ln_1p())
        .sum();
    total / scores.len() as f64
}

pub fn train_gbt(data: &TrainingSet, params: &GbtParams, seed: u64) -> Result<Gbt> {
    train_gbt_traced(data, params, seed).map(|(m, _)| m)
}

/// Also returns the training loss before the first stage and after each one.
pub fn train_gbt_traced(data: &TrainingSet, params: &GbtParams, seed: u64) -> Result<(Gbt, Vec<f64>)> {
    data.check_trainable()?;
    let n = data.len();
    let prior = data.positives() as f64 / n as f64;
    let base_score = (prior / (1.0 - prior)).ln();
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_split: 2,
        min_samples_leaf: 1,
        max_features: None,
    };
    // Only consulted for feature-order shuffling, which is off when every
    // feature is examined; kept so the seed fully determines training.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<usize> = (0..n).collect();
    let mut scores = vec![base_score; n];
    let mut losses = vec![logistic_loss(&scores, &data.labels)];
    let mut trees = Vec::with_capacity(params.n_estimators);

    for _ in 0..params.n_estimators {
        let probs: Vec<f64> = scores.iter().map(|&z| sigmoid(z)).collect();
        let residuals: Vec<f64> = data
            .labels
            .iter()
            .zip(&probs)
            .map(|(&y, &p)| f64::from(y) - p)
            .collect();
        let mut tree = DecisionTree::fit(
            &data.features,
            &residuals,
            &rows,
            &tree_params,
            Criterion::Variance,
            &mut rng,
        );
        let mut num = vec![0.0; tree.n_leaves()];
        let mut den = vec![0.0; tree.n_leaves()];
        let leaves: Vec<usize> = data.features.iter().map(|x| tree.leaf_index(x)).collect();
        for i in 0..n {
            num[leaves[i]] += residuals[i];
            den[leaves[i]] += probs[i] * (1.0 - probs[i]);
        }
        let values: Vec<f64> = num
            .iter()
            .zip(&den)
            .map(|(&a, &b)| if b > 1e-12 { a / b } else { 0.0 })
            .collect();
        tree.set_leaf_values(&values);
        for i in 0..n {
            scores[i] += params.learning_rate * values[leaves[i]];
        }
        losses.push(logistic_loss(&scores, &data.labels));
        trees.push(tree);
    }
    Ok((
        Gbt {
            base_score,
            learning_rate: params.learning_rate,
            trees,
        },
        losses,
    ))
}
