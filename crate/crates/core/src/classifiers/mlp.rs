//! Feedforward network with a sigmoid output unit, trained on binary
//! cross-entropy by Adam (or plain SGD).

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{sigmoid, TrainingSet};
use crate::{Error, Result};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPSILON: f64 = 1e-8;
const MAX_MINIBATCH: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation `z`.
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => f64::from(z > 0.0),
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpParams {
    pub hidden_sizes: Vec<usize>,
    pub activation: Activation,
    /// Training epochs.
    pub max_iter: usize,
    pub solver: Solver,
    pub learning_rate: f64,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden_sizes: vec![100],
            activation: Activation::Relu,
            max_iter: 200,
            solver: Solver::Adam,
            learning_rate: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Layer {
    inputs: usize,
    outputs: usize,
    /// Row-major `outputs x inputs`.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Layer {
    fn forward(&self, x: &[f64]) -> Vec<f64> {
        (0..self.outputs)
            .map(|o| {
                let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
                row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias[o]
            })
            .collect()
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<Layer>,
    activation: Activation,
}

impl Mlp {
    /// Glorot-uniform initialization.
    pub fn initialized(input_dim: usize, hidden_sizes: &[usize], activation: Activation, seed: u64) -> Result<Self> {
        if hidden_sizes.is_empty() {
            return Err(Error::InvalidInput(
                "an MLP needs at least one hidden layer".into(),
            ));
        }
        if input_dim == 0 || hidden_sizes.contains(&0) {
            return Err(Error::InvalidInput("layer sizes must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sizes = vec![input_dim];
        sizes.extend_from_slice(hidden_sizes);
        sizes.push(1);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (inputs, outputs) = (w[0], w[1]);
                let limit = (6.0 / (inputs + outputs) as f64).sqrt();
                let mut draw = || rng.random_range(-limit..limit);
                Layer {
                    inputs,
                    outputs,
                    weights: (0..inputs * outputs).map(|_| draw()).collect(),
                    bias: (0..outputs).map(|_| draw()).collect(),
                }
            })
            .collect();
        Ok(Mlp { layers, activation })
    }

    /// Output logit for one row.
    pub fn logit(&self, x: &[f64]) -> f64 {
        let last = self.layers.len() - 1;
        let mut a = x.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(&a);
            a = if l == last {
                z
            } else {
                z.into_iter().map(|v| self.activation.apply(v)).collect()
            };
        }
        a[0]
    }

    pub fn predict_one(&self, x: &[f64]) -> u8 {
        u8::from(self.logit(x) > 0.0)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// Parameters flattened layer by layer, weights before biases.
    pub fn flat_params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count());
        let mut it = flat.iter().copied();
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *w = it.next().expect("length checked");
            }
        }
    }

    /// Mean binary cross-entropy over the rows and its gradient in
    /// [`Mlp::flat_params`] order.
    pub fn loss_and_gradient(&self, xs: &[&[f64]], ys: &[u8]) -> (f64, Vec<f64>) {
        let n = xs.len() as f64;
        let last = self.layers.len() - 1;
        let mut grads: Vec<(Vec<f64>, Vec<f64>)> = self
            .layers
            .iter()
            .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.bias.len()]))
            .collect();
        let mut loss = 0.0;
        for (x, &y) in xs.iter().zip(ys) {
            // inputs[l] feeds layer l; pre[l] is its pre-activation.
            let mut inputs: Vec<Vec<f64>> = vec![x.to_vec()];
            let mut pre: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
            for (l, layer) in self.layers.iter().enumerate() {
                let z = layer.forward(&inputs[l]);
                if l != last {
                    inputs.push(z.iter().map(|&v| self.activation.apply(v)).collect());
                }
                pre.push(z);
            }
            let z = pre[last][0];
            let y = f64::from(y);
            loss += z.max(0.0) - y * z + (-z.abs()).exp().ln_1p();

            let mut delta = vec![(sigmoid(z) - y) / n];
            for l in (0..=last).rev() {
                let layer = &self.layers[l];
                let (gw, gb) = &mut grads[l];
                for o in 0..layer.outputs {
                    gb[o] += delta[o];
                    for i in 0..layer.inputs {
                        gw[o * layer.inputs + i] += delta[o] * inputs[l][i];
                    }
                }
                if l > 0 {
                    delta = (0..layer.inputs)
                        .map(|i| {
                            let back: f64 = (0..layer.outputs)
                                .map(|o| layer.weights[o * layer.inputs + i] * delta[o])
                                .sum();
                            back * self.activation.derivative(pre[l - 1][i])
                        })
                        .collect();
                }
            }
        }
        let flat = grads.into_iter().flat_map(|(w, b)| w.into_iter().chain(b)).collect();
        (loss / n, flat)
    }
}

pub fn train_mlp(data: &TrainingSet, params: &MlpParams, seed: u64) -> Result<Mlp> {
    data.check_trainable()?;
    let mut net = Mlp::initialized(data.dim(), &params.hidden_sizes, params.activation, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let count = net.param_count();
    let mut theta = net.flat_params();
    let mut m = vec![0.0; count];
    let mut v = vec![0.0; count];
    let mut step = 0i32;
    let batch = data.len().min(MAX_MINIBATCH);
    let mut order: Vec<usize> = (0..data.len()).collect();

    for _ in 0..params.max_iter {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            let xs: Vec<&[f64]> = chunk.iter().map(|&i| data.features[i].as_slice()).collect();
            let ys: Vec<u8> = chunk.iter().map(|&i| data.labels[i]).collect();
            let (_, grad) = net.loss_and_gradient(&xs, &ys);
            match params.solver {
                Solver::Adam => {
                    step += 1;
                    let c1 = 1.0 - BETA1.powi(step);
                    let c2 = 1.0 - BETA2.powi(step);
                    for j in 0..count {
                        m[j] = BETA1 * m[j] + (1.0 - BETA1) * grad[j];
                        v[j] = BETA2 * v[j] + (1.0 - BETA2) * grad[j] * grad[j];
                        theta[j] -= params.learning_rate * (m[j] / c1) / ((v[j] / c2).sqrt() + EPSILON);
                    }
                }
                Solver::Sgd => {
                    for j in 0..count {
                        theta[j] -= params.learning_rate * grad[j];
                    }
                }
            }
            net.set_flat_params(&theta);
        }
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::super::testutil::separable;
    use super::*;

    fn central_difference_check(activation: Activation, seed: u64) -> f64 {
        let data = separable(3, 4, 0.3, seed);
        let xs: Vec<&[f64]> = data.features.iter().take(5).map(Vec::as_slice).collect();
        let ys: Vec<u8> = data.labels.iter().take(5).copied().collect();
        let net = Mlp::initialized(4, &[6, 5], activation, seed).unwrap();
        let (_, analytic) = net.loss_and_gradient(&xs, &ys);
        let base = net.flat_params();
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for j in 0..base.len() {
            let mut plus = net.clone();
            let mut p = base.clone();
            p[j] += h;
            plus.set_flat_params(&p);
            let mut minus = net.clone();
            p[j] -= 2.0 * h;
            minus.set_flat_params(&p);
            let numeric = (plus.loss_and_gradient(&xs, &ys).0 - minus.loss_and_gradient(&xs, &ys).0) / (2.0 * h);
            let rel = (numeric - analytic[j]).abs() / numeric.abs().max(analytic[j].abs()).max(1e-8);
            worst = worst.max(rel);
        }
        worst
    }

    #[test]
    fn gradient_matches_finite_differences() {
        assert!(central_difference_check(Activation::Tanh, 3) <= 1e-4);
        assert!(central_difference_check(Activation::Relu, 3) <= 1e-4);
    }

    #[test]
    fn learns_xor() {
        let data = TrainingSet::new(
            vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]],
            vec![0, 1, 1, 0],
        )
        .unwrap();
        let params = MlpParams {
            hidden_sizes: vec![8],
            max_iter: 500,
            ..MlpParams::default()
        };
        let net = train_mlp(&data, &params, 0).unwrap();
        let pred: Vec<u8> = data.features.iter().map(|x| net.predict_one(x)).collect();
        assert_eq!(pred, data.labels);
    }

    #[test]
    fn zero_hidden_layers_is_an_error() {
        let data = separable(5, 2, 0.1, 1);
        let params = MlpParams {
            hidden_sizes: vec![],
            ..MlpParams::default()
        };
        assert!(train_mlp(&data, &params, 1).is_err());
    }
}
