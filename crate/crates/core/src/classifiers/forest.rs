//! Random forest of Gini trees with bootstrap sampling and per-split
//! feature subsampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{Criterion, DecisionTree, TreeParams};
use super::TrainingSet;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    Sqrt,
    All,
}

impl MaxFeatures {
    fn count(self, dim: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => ((dim as f64).sqrt().floor() as usize).max(1),
            MaxFeatures::All => dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_estimators: 50,
            max_depth: 20,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
}

impl RandomForest {
    /// Majority vote of the trees; each tree votes for the majority class of
    /// its leaf. Ties, at either level, go to label 0.
    pub fn predict_one(&self, x: &[f64]) -> u8 {
        let votes = self
            .trees
            .iter()
            .filter(|t| t.predict_value(x) > 0.5)
            .count();
        u8::from(2 * votes > self.trees.len())
    }
}

pub fn train_random_forest(data: &TrainingSet, params: &ForestParams, seed: u64) -> Result<RandomForest> {
    data.check_trainable()?;
    if params.n_estimators == 0 {
        return Err(Error::InvalidInput("a forest needs at least one tree".into()));
    }
    let n = data.len();
    let targets: Vec<f64> = data.labels.iter().map(|&l| f64::from(l)).collect();
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_split: params.min_samples_split,
        min_samples_leaf: params.min_samples_leaf,
        max_features: Some(params.max_features.count(data.dim())),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trees = (0..params.n_estimators)
        .map(|_| {
            let rows: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            DecisionTree::fit(&data.features, &targets, &rows, &tree_params, Criterion::Gini, &mut rng)
        })
        .collect();
    Ok(RandomForest { trees })
}
