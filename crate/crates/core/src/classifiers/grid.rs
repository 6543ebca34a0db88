//! Exhaustive hyperparameter search.
//!
//! Candidates are enumerated as a cartesian product with the first-listed
//! dimension varying slowest. The first candidate reaching the best
//! validation accuracy wins.

use serde::{Deserialize, Serialize};

use super::{
    accuracy, train, Activation, ClassifierKind, ForestParams, GbtParams, Hyperparams, MaxFeatures,
    MlpParams, Penalty, Solver, SvmParams, TrainedModel, TrainingSet,
};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpGrid {
    pub hidden_layer_sizes: Vec<Vec<usize>>,
    pub max_iter: Vec<usize>,
    pub activation: Vec<Activation>,
    pub solver: Vec<Solver>,
    pub learning_rate: f64,
}

impl Default for MlpGrid {
    fn default() -> Self {
        MlpGrid {
            hidden_layer_sizes: vec![vec![50], vec![100], vec![100, 75, 75]],
            max_iter: vec![200, 300, 500],
            activation: vec![Activation::Relu, Activation::Tanh],
            solver: vec![Solver::Adam, Solver::Sgd],
            learning_rate: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmGrid {
    pub penalty: Vec<Penalty>,
    pub c: Vec<f64>,
    pub tol: Vec<f64>,
    pub max_epochs: usize,
}

impl Default for SvmGrid {
    fn default() -> Self {
        SvmGrid {
            penalty: vec![Penalty::L1, Penalty::L2],
            c: vec![0.01, 0.1, 1.0],
            tol: vec![1e-3, 1e-4],
            max_epochs: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestGrid {
    pub n_estimators: Vec<usize>,
    pub max_depth: Vec<usize>,
    pub min_samples_split: Vec<usize>,
    pub min_samples_leaf: Vec<usize>,
}

impl Default for ForestGrid {
    fn default() -> Self {
        ForestGrid {
            n_estimators: vec![10, 50, 200],
            max_depth: vec![10, 20, 30],
            min_samples_split: vec![2, 5, 10],
            min_samples_leaf: vec![1, 5, 10],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbtGrid {
    pub n_estimators: Vec<usize>,
    pub max_depth: Vec<usize>,
    pub learning_rate: Vec<f64>,
}

impl Default for GbtGrid {
    fn default() -> Self {
        GbtGrid {
            n_estimators: vec![50, 100, 200],
            max_depth: vec![3, 4, 5],
            learning_rate: vec![0.01, 0.1, 0.2],
        }
    }
}

/// Candidate values per classifier; defaults reproduce the tuning grids the
/// experiments were run with.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HyperGrid {
    pub mlp: MlpGrid,
    pub linear_svm: SvmGrid,
    pub random_forest: ForestGrid,
    pub gbt: GbtGrid,
}

impl HyperGrid {
    /// All candidates for `kind`, in search order.
    pub fn candidates(&self, kind: ClassifierKind) -> Result<Vec<Hyperparams>> {
        let out: Vec<Hyperparams> = match kind {
            ClassifierKind::Mlp => {
                let g = &self.mlp;
                let mut v = Vec::new();
                for h in &g.hidden_layer_sizes {
                    for &it in &g.max_iter {
                        for &a in &g.activation {
                            for &s in &g.solver {
                                v.push(Hyperparams::Mlp(MlpParams {
                                    hidden_sizes: h.clone(),
                                    activation: a,
                                    max_iter: it,
                                    solver: s,
                                    learning_rate: g.learning_rate,
                                }));
                            }
                        }
                    }
                }
                v
            }
            ClassifierKind::LinearSvm => {
                let g = &self.linear_svm;
                let mut v = Vec::new();
                for &p in &g.penalty {
                    for &c in &g.c {
                        for &t in &g.tol {
                            v.push(Hyperparams::LinearSvm(SvmParams {
                                c,
                                tol: t,
                                max_epochs: g.max_epochs,
                                penalty: p,
                            }));
                        }
                    }
                }
                v
            }
            ClassifierKind::RandomForest => {
                let g = &self.random_forest;
                let mut v = Vec::new();
                for &n in &g.n_estimators {
                    for &d in &g.max_depth {
                        for &s in &g.min_samples_split {
                            for &l in &g.min_samples_leaf {
                                v.push(Hyperparams::RandomForest(ForestParams {
                                    n_estimators: n,
                                    max_depth: d,
                                    min_samples_split: s,
                                    min_samples_leaf: l,
                                    max_features: MaxFeatures::Sqrt,
                                    bootstrap: true,
                                }));
                            }
                        }
                    }
                }
                v
            }
            ClassifierKind::Gbt => {
                let g = &self.gbt;
                let mut v = Vec::new();
                for &n in &g.n_estimators {
                    for &d in &g.max_depth {
                        for &lr in &g.learning_rate {
                            v.push(Hyperparams::Gbt(GbtParams {
                                n_estimators: n,
                                max_depth: d,
                                learning_rate: lr,
                            }));
                        }
                    }
                }
                v
            }
        };
        if out.is_empty() {
            return Err(Error::Config(format!("the {kind} grid has an empty dimension")));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best: Hyperparams,
    pub validation_accuracy: f64,
    pub model: TrainedModel,
    /// Every candidate with its validation accuracy, in search order.
    pub evaluated: Vec<(Hyperparams, f64)>,
}

pub fn grid_search(
    kind: ClassifierKind,
    grid: &HyperGrid,
    train_set: &TrainingSet,
    validation: &TrainingSet,
    seed: u64,
) -> Result<GridSearchResult> {
    let mut best: Option<(TrainedModel, f64)> = None;
    let mut evaluated = Vec::new();
    for h in grid.candidates(kind)? {
        let model = train(&h, train_set, seed)?;
        let acc = accuracy(&model, validation)?;
        evaluated.push((h, acc));
        if best.as_ref().is_none_or(|(_, b)| acc > *b) {
            best = Some((model, acc));
        }
    }
    let (model, validation_accuracy) = best.expect("candidates are non-empty");
    Ok(GridSearchResult {
        best: model.hyperparams.clone(),
        validation_accuracy,
        model,
        evaluated,
    })
}
