//! Fully connected sigmoid network trained with cross-entropy and Adam.
//!
//! Parameters are stored flat, layer by layer: the `out × in` weight matrix
//! in row-major order followed by the `out` biases. Gradients and Adam
//! moments use the same layout.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng;

/// Layer widths used by DeepSP.
pub const DEEPSP_DIMS: [usize; 5] = [4, 40, 40, 40, 1];

/// Probabilities are clamped to `[PROB_CLAMP, 1 − PROB_CLAMP]` before logs.
pub const PROB_CLAMP: f64 = 1e-12;

#[inline]
pub fn sigmoid(a: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-a))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpModel {
    dims: Vec<usize>,
    params: Vec<f64>,
}

/// One training example: features and the Boolean target.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub x: [f64; 4],
    pub target: bool,
}

fn param_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[1] * (w[0] + 1)).sum()
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 || dims.contains(&0) || *dims.last().unwrap() != 1 {
        return Err(Error::ModelShape(dims.to_vec()));
    }
    Ok(())
}

impl MlpModel {
    /// All parameters zero; every output is σ(0) = ½.
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        check_dims(dims)?;
        Ok(MlpModel {
            dims: dims.to_vec(),
            params: vec![0.0; param_count(dims)],
        })
    }

    /// Weights uniform on ±√(6 / (in + out)), biases zero.
    pub fn xavier(dims: &[usize], seed: u64) -> Result<Self> {
        let mut m = Self::zeros(dims)?;
        let mut r = rng::rng_for(seed, rng::TAG_MLP_INIT);
        let mut off = 0;
        for w in dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
            for p in &mut m.params[off..off + fan_in * fan_out] {
                *p = r.gen_range(-limit..limit);
            }
            off += fan_out * (fan_in + 1);
        }
        Ok(m)
    }

    pub fn from_parts(dims: Vec<usize>, params: Vec<f64>) -> Result<Self> {
        check_dims(&dims)?;
        if params.len() != param_count(&dims) {
            return Err(Error::ModelShape(dims));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFiniteParameter);
        }
        Ok(MlpModel { dims, params })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_layers(&self) -> usize {
        self.dims.len() - 1
    }

    /// `(weights, biases)` of layer `l`.
    pub fn layer(&self, l: usize) -> (&[f64], &[f64]) {
        let (off, fan_in, fan_out) = self.layer_span(l);
        let w_end = off + fan_in * fan_out;
        (&self.params[off..w_end], &self.params[w_end..w_end + fan_out])
    }

    fn layer_span(&self, l: usize) -> (usize, usize, usize) {
        let off = param_count(&self.dims[..=l]);
        (off, self.dims[l], self.dims[l + 1])
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.params.iter().all(|p| p.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFiniteParameter)
        }
    }

    /// Activations of every layer, input included.
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        assert_eq!(x.len(), self.dims[0], "input width");
        let mut acts = Vec::with_capacity(self.dims.len());
        acts.push(x.to_vec());
        for l in 0..self.num_layers() {
            let (w, b) = self.layer(l);
            let input = acts.last().unwrap();
            let fan_in = input.len();
            let out: Vec<f64> = b
                .iter()
                .enumerate()
                .map(|(o, bias)| {
                    let row = &w[o * fan_in..(o + 1) * fan_in];
                    sigmoid(row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>() + bias)
                })
                .collect();
            acts.push(out);
        }
        acts
    }

    /// Network output `y(x)`, read as P(x_i = TRUE | features).
    pub fn forward(&self, x: &[f64]) -> f64 {
        let mut cur = [0.0f64; 64];
        let mut next = [0.0f64; 64];
        if self.dims.iter().any(|&d| d > cur.len()) {
            return self.activations(x)[self.dims.len() - 1][0];
        }
        assert_eq!(x.len(), self.dims[0], "input width");
        cur[..x.len()].copy_from_slice(x);
        for l in 0..self.num_layers() {
            let (w, b) = self.layer(l);
            let fan_in = self.dims[l];
            for (o, bias) in b.iter().enumerate() {
                let row = &w[o * fan_in..(o + 1) * fan_in];
                let mut acc = *bias;
                for (wi, xi) in row.iter().zip(&cur[..fan_in]) {
                    acc += wi * xi;
                }
                next[o] = sigmoid(acc);
            }
            core::mem::swap(&mut cur, &mut next);
        }
        cur[0]
    }

    /// Summed cross-entropy over `batch`.
    pub fn loss(&self, batch: &[Sample]) -> f64 {
        batch.iter().map(|s| cross_entropy(self.forward(&s.x), s.target)).sum()
    }

    /// Analytic gradient of [`MlpModel::loss`].
    pub fn gradient(&self, batch: &[Sample]) -> Vec<f64> {
        let mut grad = vec![0.0; self.params.len()];
        for s in batch {
            self.accumulate_gradient(&s.x, s.target, &mut grad);
        }
        grad
    }

    fn accumulate_gradient(&self, x: &[f64], target: bool, grad: &mut [f64]) {
        let acts = self.activations(x);
        let y = acts[self.num_layers()][0];
        let t = if target { 1.0 } else { 0.0 };
        // d loss / d pre-activation of the output; zero where the clamp is active
        let mut delta = if !(PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&y) {
            vec![0.0]
        } else {
            vec![y - t]
        };
        for l in (0..self.num_layers()).rev() {
            let (off, fan_in, fan_out) = self.layer_span(l);
            let input = &acts[l];
            for o in 0..fan_out {
                let d = delta[o];
                let row = &mut grad[off + o * fan_in..off + (o + 1) * fan_in];
                for (g, a) in row.iter_mut().zip(input) {
                    *g += d * a;
                }
                grad[off + fan_in * fan_out + o] += d;
            }
            if l == 0 {
                break;
            }
            let (w, _) = self.layer(l);
            delta = (0..fan_in)
                .map(|i| {
                    let back: f64 = (0..fan_out).map(|o| w[o * fan_in + i] * delta[o]).sum();
                    let a = input[i];
                    back * a * (1.0 - a)
                })
                .collect();
        }
    }
}

pub fn cross_entropy(y: f64, target: bool) -> f64 {
    let p = y.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    if target {
        -libm::log(p)
    } else {
        -libm::log(1.0 - p)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub layer_dims: Vec<usize>,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_adam: f64,
    pub epochs: usize,
    /// Steps per epoch; `None` uses ⌊dataset / batch⌋.
    pub steps_per_epoch: Option<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            layer_dims: DEEPSP_DIMS.to_vec(),
            batch_size: 20,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps_adam: 1e-8,
            epochs: 1,
            steps_per_epoch: None,
            seed: 0,
        }
    }
}

/// Adam moment estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(num_params: usize) -> Self {
        AdamState {
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
        }
    }
}

/// One bias-corrected Adam update; `step` counts from 1.
pub fn adam_step(params: &mut [f64], grad: &[f64], state: &mut AdamState, cfg: &TrainConfig, step: u64) {
    assert!(step >= 1);
    assert_eq!(params.len(), grad.len());
    let c1 = 1.0 - libm::pow(cfg.beta1, step as f64);
    let c2 = 1.0 - libm::pow(cfg.beta2, step as f64);
    for (((p, &g), m), v) in params.iter_mut().zip(grad).zip(&mut state.m).zip(&mut state.v) {
        *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
        *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= cfg.learning_rate * m_hat / (libm::sqrt(v_hat) + cfg.eps_adam);
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: MlpModel,
    /// Batch loss after each step, divided by the batch size.
    pub losses: Vec<f64>,
}

/// Trains from Xavier initialization. `monitor(step, model)` is called
/// before the first step (step 0) and after every step.
pub fn train(dataset: &[Sample], cfg: &TrainConfig, mut monitor: impl FnMut(usize, &MlpModel)) -> Result<TrainOutcome> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if cfg.batch_size == 0 {
        return Err(Error::InvalidConfig("batch size must be at least 1"));
    }
    if dataset.len() < cfg.batch_size {
        return Err(Error::DatasetTooSmall {
            len: dataset.len(),
            batch: cfg.batch_size,
        });
    }
    let mut model = MlpModel::xavier(&cfg.layer_dims, cfg.seed)?;
    if model.input_dim() != 4 {
        return Err(Error::ModelInput {
            expected: 4,
            got: model.input_dim(),
        });
    }
    let mut adam = AdamState::new(model.params.len());
    let batches_per_pass = dataset.len() / cfg.batch_size;
    let steps_per_epoch = cfg.steps_per_epoch.unwrap_or(batches_per_pass);
    let shuffle_seed = rng::derive(cfg.seed, rng::TAG_MLP_SHUFFLE);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut passes = 0u64;
    let mut cursor = batches_per_pass; // forces a shuffle before the first batch
    let mut losses = Vec::with_capacity(cfg.epochs * steps_per_epoch);
    let mut batch = Vec::with_capacity(cfg.batch_size);
    let mut step = 0usize;
    monitor(0, &model);
    for _ in 0..cfg.epochs {
        for _ in 0..steps_per_epoch {
            if cursor == batches_per_pass {
                order.shuffle(&mut rng::rng_for(shuffle_seed, passes));
                passes += 1;
                cursor = 0;
            }
            batch.clear();
            let start = cursor * cfg.batch_size;
            batch.extend(order[start..start + cfg.batch_size].iter().map(|&i| dataset[i]));
            cursor += 1;

            let grad = model.gradient(&batch);
            step += 1;
            adam_step(&mut model.params, &grad, &mut adam, cfg, step as u64);
            model.check_finite()?;
            losses.push(model.loss(&batch) / cfg.batch_size as f64);
            monitor(step, &model);
        }
    }
    Ok(TrainOutcome { model, losses })
}
