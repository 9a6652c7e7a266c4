//! Single-hidden-layer feedforward network (tanh hidden units, one bias per
//! layer) trained by backpropagation with momentum.
//!
//! The default shape is 1-5-1 with a linear output neuron. A tanh output is
//! available through [`OutputActivation::Tanh`].

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::math::tanh;
use crate::seed;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OutputActivation {
    #[default]
    Identity,
    Tanh,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub hidden_units: usize,
    pub output_dim: usize,
    pub output_activation: OutputActivation,
    /// Weights start uniform in `[-init_scale, init_scale]`.
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            input_dim: 1,
            hidden_units: 5,
            output_dim: 1,
            output_activation: OutputActivation::Identity,
            init_scale: 0.5,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum UpdateMode {
    /// One update per sample, epoch order shuffled.
    #[default]
    Stochastic,
    /// One update per epoch with the mean gradient.
    FullBatch,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub max_epochs: usize,
    /// Training stops once the epoch-end MSE drops below this.
    pub target_mse: f64,
    pub shuffle_seed: u64,
    pub mode: UpdateMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.05,
            momentum: 0.9,
            max_epochs: 5000,
            target_mse: 1e-3,
            shuffle_seed: 0,
            mode: UpdateMode::Stochastic,
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum TrainError {
    #[error("invalid network config: {0}")]
    InvalidConfig(&'static str),
    #[error("training set is empty")]
    EmptyDataset,
    #[error("training diverged at epoch {epoch} (mse = {mse})")]
    Divergence { epoch: usize, mse: f64 },
}

/// Weights and biases, laid out as `hidden_w` (hidden x input, row-major),
/// `hidden_b`, `output_w` (output x hidden, row-major), `output_b`.
/// Gradients and momentum buffers use the same layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    pub hidden_w: Vec<f64>,
    pub hidden_b: Vec<f64>,
    pub output_w: Vec<f64>,
    pub output_b: Vec<f64>,
}

impl Params {
    pub fn zeros(input: usize, hidden: usize, output: usize) -> Self {
        Params {
            hidden_w: vec![0.0; hidden * input],
            hidden_b: vec![0.0; hidden],
            output_w: vec![0.0; output * hidden],
            output_b: vec![0.0; output],
        }
    }

    pub fn len(&self) -> usize {
        self.hidden_w.len() + self.hidden_b.len() + self.output_w.len() + self.output_b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.hidden_w
            .iter()
            .chain(&self.hidden_b)
            .chain(&self.output_w)
            .chain(&self.output_b)
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.hidden_w
            .iter_mut()
            .chain(&mut self.hidden_b)
            .chain(&mut self.output_w)
            .chain(&mut self.output_b)
    }

    fn zero_like(&self) -> Self {
        Params {
            hidden_w: vec![0.0; self.hidden_w.len()],
            hidden_b: vec![0.0; self.hidden_b.len()],
            output_w: vec![0.0; self.output_w.len()],
            output_b: vec![0.0; self.output_b.len()],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpModel {
    pub input_dim: usize,
    pub hidden_units: usize,
    pub output_dim: usize,
    pub output_activation: OutputActivation,
    pub params: Params,
    pub epochs_run: usize,
    pub final_mse: Option<f64>,
}

impl MlpConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.input_dim == 0 || self.hidden_units == 0 || self.output_dim == 0 {
            return Err(TrainError::InvalidConfig("layer sizes must be >= 1"));
        }
        if !(self.init_scale.is_finite() && self.init_scale >= 0.0) {
            return Err(TrainError::InvalidConfig(
                "init_scale must be finite and >= 0",
            ));
        }
        Ok(())
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(TrainError::InvalidConfig("learning rate must be > 0"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(TrainError::InvalidConfig("momentum must be in [0, 1)"));
        }
        if self.max_epochs == 0 {
            return Err(TrainError::InvalidConfig("max_epochs must be >= 1"));
        }
        if self.target_mse.is_nan() {
            return Err(TrainError::InvalidConfig("target_mse is NaN"));
        }
        Ok(())
    }
}

/// Fresh network with uniformly drawn weights and biases.
pub fn init_model(config: &MlpConfig) -> Result<MlpModel, TrainError> {
    config.validate()?;
    let mut params = Params::zeros(config.input_dim, config.hidden_units, config.output_dim);
    if config.init_scale > 0.0 {
        let mut rng = seed::rng(config.seed);
        let s = config.init_scale;
        for w in params.iter_mut() {
            *w = rng.gen_range(-s..=s);
        }
    }
    Ok(MlpModel {
        input_dim: config.input_dim,
        hidden_units: config.hidden_units,
        output_dim: config.output_dim,
        output_activation: config.output_activation,
        params,
        epochs_run: 0,
        final_mse: None,
    })
}

impl MlpModel {
    fn hidden(&self, input: &[f64], out: &mut [f64]) {
        let p = &self.params;
        for (j, h) in out.iter_mut().enumerate() {
            let row = &p.hidden_w[j * self.input_dim..(j + 1) * self.input_dim];
            let z: f64 = row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + p.hidden_b[j];
            *h = tanh(z);
        }
    }

    fn output(&self, hidden: &[f64], out: &mut [f64]) {
        let p = &self.params;
        for (k, o) in out.iter_mut().enumerate() {
            let row = &p.output_w[k * self.hidden_units..(k + 1) * self.hidden_units];
            let z: f64 = row.iter().zip(hidden).map(|(w, h)| w * h).sum::<f64>() + p.output_b[k];
            *o = match self.output_activation {
                OutputActivation::Identity => z,
                OutputActivation::Tanh => tanh(z),
            };
        }
    }

    /// `output_w . tanh(hidden_w . x + hidden_b) + output_b`.
    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        assert_eq!(input.len(), self.input_dim, "input dimension mismatch");
        let mut h = vec![0.0; self.hidden_units];
        let mut o = vec![0.0; self.output_dim];
        self.hidden(input, &mut h);
        self.output(&h, &mut o);
        o
    }

    /// Scalar forward pass for single-input, single-output networks.
    pub fn predict(&self, x: f64) -> f64 {
        assert!(
            self.input_dim == 1 && self.output_dim == 1,
            "not a scalar network"
        );
        let p = &self.params;
        let mut z = 0.0;
        for j in 0..self.hidden_units {
            z += p.output_w[j] * tanh(p.hidden_w[j] * x + p.hidden_b[j]);
        }
        z += p.output_b[0];
        match self.output_activation {
            OutputActivation::Identity => z,
            OutputActivation::Tanh => tanh(z),
        }
    }

    /// Backpropagated gradient of `0.5 * |prediction - target|^2`.
    pub fn gradient(&self, input: &[f64], target: &[f64]) -> Params {
        let mut g = self.params.zero_like();
        let mut h = vec![0.0; self.hidden_units];
        let mut o = vec![0.0; self.output_dim];
        self.accumulate_gradient(input, target, 1.0, &mut g, &mut h, &mut o);
        g
    }

    fn accumulate_gradient(
        &self,
        input: &[f64],
        target: &[f64],
        scale: f64,
        g: &mut Params,
        h: &mut [f64],
        o: &mut [f64],
    ) {
        let (ni, nh) = (self.input_dim, self.hidden_units);
        self.hidden(input, h);
        self.output(h, o);
        let p = &self.params;
        for k in 0..self.output_dim {
            let mut delta = (o[k] - target[k]) * scale;
            if self.output_activation == OutputActivation::Tanh {
                delta *= 1.0 - o[k] * o[k];
            }
            g.output_b[k] += delta;
            for (gw, hj) in g.output_w[k * nh..(k + 1) * nh].iter_mut().zip(&*h) {
                *gw += delta * hj;
            }
        }
        for (j, &hj) in h.iter().enumerate() {
            let mut back = 0.0;
            for k in 0..self.output_dim {
                let mut delta = o[k] - target[k];
                if self.output_activation == OutputActivation::Tanh {
                    delta *= 1.0 - o[k] * o[k];
                }
                back += delta * p.output_w[k * nh + j];
            }
            let dh = back * (1.0 - hj * hj) * scale;
            g.hidden_b[j] += dh;
            for (gw, x) in g.hidden_w[j * ni..(j + 1) * ni].iter_mut().zip(input) {
                *gw += dh * x;
            }
        }
    }

    /// Mean squared error over scalar pairs.
    pub fn mse(&self, data: &[(f64, f64)]) -> f64 {
        let sum: f64 = data
            .iter()
            .map(|&(x, y)| {
                let e = self.predict(x) - y;
                e * e
            })
            .sum();
        sum / data.len() as f64
    }

    /// Lipschitz bound of a single-input network:
    /// `sum_j |output_w_j| * max_j |hidden_w_j|`.
    pub fn lipschitz_bound(&self) -> f64 {
        let out: f64 = self.params.output_w.iter().map(|w| w.abs()).sum();
        let hid = self
            .params
            .hidden_w
            .iter()
            .fold(0.0f64, |m, w| m.max(w.abs()));
        // tanh' <= 1, so the bound also covers a tanh output neuron
        out * hid
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub model: MlpModel,
    /// Epoch-end MSE, one entry per epoch run.
    pub loss_history: Vec<f64>,
}

fn apply_update(model: &mut MlpModel, velocity: &mut Params, grad: &Params, config: &TrainConfig) {
    let (eta, alpha) = (config.learning_rate, config.momentum);
    for ((w, v), g) in model
        .params
        .iter_mut()
        .zip(velocity.iter_mut())
        .zip(grad.iter())
    {
        *v = alpha * *v - eta * g;
        *w += *v;
    }
}

/// Backpropagation with momentum, `dw_t = -eta * grad + alpha * dw_{t-1}`,
/// on scalar `(input, target)` pairs.
pub fn train(
    model: MlpModel,
    data: &[(f64, f64)],
    config: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    if data.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    if model.input_dim != 1 || model.output_dim != 1 {
        return Err(TrainError::InvalidConfig(
            "scalar training needs a 1-input, 1-output network",
        ));
    }
    let mut model = model;
    let mut velocity = model.params.zero_like();
    let mut grad = model.params.zero_like();
    let mut h = vec![0.0; model.hidden_units];
    let mut o = vec![0.0; 1];
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = seed::rng(config.shuffle_seed);
    let mut history = Vec::new();
    for epoch in 1..=config.max_epochs {
        match config.mode {
            UpdateMode::Stochastic => {
                order.shuffle(&mut rng);
                for &i in &order {
                    let (x, y) = data[i];
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    model.accumulate_gradient(&[x], &[y], 1.0, &mut grad, &mut h, &mut o);
                    apply_update(&mut model, &mut velocity, &grad, config);
                }
            }
            UpdateMode::FullBatch => {
                grad.iter_mut().for_each(|g| *g = 0.0);
                let scale = 1.0 / data.len() as f64;
                for &(x, y) in data {
                    model.accumulate_gradient(&[x], &[y], scale, &mut grad, &mut h, &mut o);
                }
                apply_update(&mut model, &mut velocity, &grad, config);
            }
        }
        let mse = model.mse(data);
        history.push(mse);
        model.epochs_run = epoch;
        model.final_mse = Some(mse);
        if !mse.is_finite() {
            return Err(TrainError::Divergence { epoch, mse });
        }
        if mse < config.target_mse {
            break;
        }
    }
    Ok(TrainOutcome {
        model,
        loss_history: history,
    })
}
