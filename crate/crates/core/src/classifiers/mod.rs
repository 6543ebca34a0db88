//! Binary classifiers behind one training interface.
//!
//! Labels are `1` for the target family and `0` for the other family.

mod forest;
mod gbt;
mod grid;
mod mlp;
mod svm;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::FeatureVector;
use crate::{Error, Result};

pub use forest::{train_random_forest, ForestParams, MaxFeatures, RandomForest};
pub use gbt::{train_gbt, train_gbt_traced, Gbt, GbtParams};
pub use grid::{grid_search, ForestGrid, GbtGrid, GridSearchResult, HyperGrid, MlpGrid, SvmGrid};
pub use mlp::{train_mlp, Activation, Mlp, MlpParams, Solver};
pub use svm::{train_linear_svm, train_linear_svm_traced, LinearSvm, Penalty, SvmParams};

pub const TARGET_LABEL: u8 = 1;
pub const OTHER_LABEL: u8 = 0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

impl TrainingSet {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.len(),
                got: labels.len(),
            });
        }
        if let Some(&l) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::InvalidInput(format!("labels must be 0 or 1, got {l}")));
        }
        if let Some(first) = features.first() {
            let dim = first.len();
            if let Some(row) = features.iter().find(|r| r.len() != dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
        }
        Ok(TrainingSet { features, labels })
    }

    /// Target-family rows labeled 1 followed by other-family rows labeled 0.
    pub fn from_families(target: &[FeatureVector], other: &[FeatureVector]) -> Result<Self> {
        let features = target
            .iter()
            .chain(other)
            .map(|s| s.values.clone())
            .collect();
        let labels = std::iter::repeat_n(TARGET_LABEL, target.len())
            .chain(std::iter::repeat_n(OTHER_LABEL, other.len()))
            .collect();
        TrainingSet::new(features, labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    /// Trainers need at least one row of each class.
    pub(crate) fn check_trainable(&self) -> Result<()> {
        let pos = self.positives();
        if pos == 0 || pos == self.len() {
            return Err(Error::InvalidInput(
                "training data must contain both classes".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Mlp,
    LinearSvm,
    RandomForest,
    Gbt,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] = [
        ClassifierKind::Mlp,
        ClassifierKind::LinearSvm,
        ClassifierKind::RandomForest,
        ClassifierKind::Gbt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::Mlp => "mlp",
            ClassifierKind::LinearSvm => "linear_svm",
            ClassifierKind::RandomForest => "random_forest",
            ClassifierKind::Gbt => "gbt",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClassifierKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown classifier kind '{s}'")))
    }
}

/// Hyperparameters of one classifier, tagged by kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Hyperparams {
    Mlp(MlpParams),
    LinearSvm(SvmParams),
    RandomForest(ForestParams),
    Gbt(GbtParams),
}

impl Hyperparams {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            Hyperparams::Mlp(_) => ClassifierKind::Mlp,
            Hyperparams::LinearSvm(_) => ClassifierKind::LinearSvm,
            Hyperparams::RandomForest(_) => ClassifierKind::RandomForest,
            Hyperparams::Gbt(_) => ClassifierKind::Gbt,
        }
    }

    /// Defaults used when grid search is off.
    pub fn default_for(kind: ClassifierKind) -> Self {
        match kind {
            ClassifierKind::Mlp => Hyperparams::Mlp(MlpParams::default()),
            ClassifierKind::LinearSvm => Hyperparams::LinearSvm(SvmParams::default()),
            ClassifierKind::RandomForest => Hyperparams::RandomForest(ForestParams::default()),
            ClassifierKind::Gbt => Hyperparams::Gbt(GbtParams::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "snake_case")]
pub enum ModelParams {
    Mlp(Mlp),
    LinearSvm(LinearSvm),
    RandomForest(RandomForest),
    Gbt(Gbt),
}

/// A fitted classifier. Prediction is a pure function of `params` and the
/// input rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub hyperparams: Hyperparams,
    pub train_seed: u64,
    pub dim: usize,
    pub params: ModelParams,
}

impl TrainedModel {
    pub fn kind(&self) -> ClassifierKind {
        self.hyperparams.kind()
    }
}

/// Trains whichever classifier `hyperparams` describes.
pub fn train(hyperparams: &Hyperparams, data: &TrainingSet, seed: u64) -> Result<TrainedModel> {
    let params = match hyperparams {
        Hyperparams::Mlp(p) => ModelParams::Mlp(train_mlp(data, p, seed)?),
        Hyperparams::LinearSvm(p) => ModelParams::LinearSvm(train_linear_svm(data, p, seed)?),
        Hyperparams::RandomForest(p) => {
            ModelParams::RandomForest(train_random_forest(data, p, seed)?)
        }
        Hyperparams::Gbt(p) => ModelParams::Gbt(train_gbt(data, p, seed)?),
    };
    Ok(TrainedModel {
        hyperparams: hyperparams.clone(),
        train_seed: seed,
        dim: data.dim(),
        params,
    })
}

/// One label per row.
pub fn predict(model: &TrainedModel, features: &[Vec<f64>]) -> Result<Vec<u8>> {
    if let Some(row) = features.iter().find(|r| r.len() != model.dim) {
        return Err(Error::DimensionMismatch {
            expected: model.dim,
            got: row.len(),
        });
    }
    Ok(features
        .iter()
        .map(|x| match &model.params {
            ModelParams::Mlp(m) => m.predict_one(x),
            ModelParams::LinearSvm(m) => m.predict_one(x),
            ModelParams::RandomForest(m) => m.predict_one(x),
            ModelParams::Gbt(m) => m.predict_one(x),
        })
        .collect())
}

/// Fraction of rows whose prediction matches the label.
pub fn accuracy(model: &TrainedModel, data: &TrainingSet) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::InvalidInput("accuracy of an empty set".into()));
    }
    let pred = predict(model, &data.features)?;
    let hits = pred.iter().zip(&data.labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / data.len() as f64)
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
