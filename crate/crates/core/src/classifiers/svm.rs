//! Linear SVM trained by subgradient descent on the regularized hinge loss.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TrainingSet;
use crate::linalg::dot;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Penalty {
    L1,
    L2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub c: f64,
    pub tol: f64,
    pub max_epochs: usize,
    pub penalty: Penalty,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            tol: 1e-4,
            max_epochs: 1000,
            penalty: Penalty::L2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearSvm {
    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    pub fn predict_one(&self, x: &[f64]) -> u8 {
        u8::from(self.decision(x) > 0.0)
    }
}

/// `penalty(w) + C * sum_i max(0, 1 - y_i (w.x_i + b))` with `y_i` in
/// `{-1, +1}`. The bias is not regularized.
pub fn objective(model: &LinearSvm, data: &TrainingSet, params: &SvmParams) -> f64 {
    let reg = match params.penalty {
        Penalty::L2 => 0.5 * dot(&model.weights, &model.weights),
        Penalty::L1 => model.weights.iter().map(|w| w.abs()).sum(),
    };
    let hinge: f64 = data
        .features
        .iter()
        .zip(&data.labels)
        .map(|(x, &l)| (1.0 - sign(l) * model.decision(x)).max(0.0))
        .sum();
    reg + params.c * hinge
}

fn sign(label: u8) -> f64 {
    if label == 1 {
        1.0
    } else {
        -1.0
    }
}

pub fn train_linear_svm(data: &TrainingSet, params: &SvmParams, seed: u64) -> Result<LinearSvm> {
    train_linear_svm_traced(data, params, seed).map(|(m, _)| m)
}

/// Trains and also returns the objective after every accepted epoch.
///
/// Each epoch makes one pass of per-sample subgradient steps in a seeded
/// random order. An epoch that raises the objective is rolled back and the
/// step size halved, so the recorded objective never increases. Training
/// stops when an accepted epoch improves the objective by less than `tol`,
/// or after `max_epochs` epochs.
pub fn train_linear_svm_traced(
    data: &TrainingSet,
    params: &SvmParams,
    seed: u64,
) -> Result<(LinearSvm, Vec<f64>)> {
    data.check_trainable()?;
    let n = data.len();
    let dim = data.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = LinearSvm {
        weights: vec![0.0; dim],
        bias: 0.0,
    };
    let max_sq = data
        .features
        .iter()
        .map(|x| dot(x, x))
        .fold(0.0, f64::max);
    let mut eta = 1.0 / (params.c * (max_sq + 1.0) + 1.0);
    let mut current = objective(&model, data, params);
    let mut history = vec![current];
    let mut order: Vec<usize> = (0..n).collect();

    for _ in 0..params.max_epochs {
        order.shuffle(&mut rng);
        let mut trial = model.clone();
        for &i in &order {
            let x = &data.features[i];
            let y = sign(data.labels[i]);
            let violated = y * trial.decision(x) < 1.0;
            for (w, &xj) in trial.weights.iter_mut().zip(x) {
                let reg = match params.penalty {
                    Penalty::L2 => *w,
                    Penalty::L1 => w.signum() * f64::from(*w != 0.0),
                };
                let mut g = reg / n as f64;
                if violated {
                    g -= params.c * y * xj;
                }
                *w -= eta * g;
            }
            if violated {
                trial.bias += eta * params.c * y;
            }
        }
        let value = objective(&trial, data, params);
        if value <= current {
            let improvement = current - value;
            model = trial;
            current = value;
            history.push(current);
            if improvement < params.tol {
                break;
            }
        } else {
            eta *= 0.5;
            if eta < 1e-14 {
                break;
            }
        }
    }
    Ok((model, history))
}
