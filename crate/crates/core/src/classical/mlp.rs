//! Fully connected ReLU network with a sigmoid output unit.
//!
//! Parameters live in one flat vector, layer by layer: the row-major weight
//! matrix (`out x in`) followed by the bias.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{train_adam, TrainConfig};
use crate::classical::logistic::{sigmoid, softplus};
use crate::classical::svm::sign;
use crate::error::{check_len, invalid, Result};

pub const DEFAULT_BATCH_SIZE: usize = 32;
pub const MAX_EPOCHS: usize = 3000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden_layer_sizes: Vec<usize>,
    pub learning_rate: f64,
    /// L2 strength; the penalty is `alpha / (2 B) * sum W^2` per batch of size `B`.
    pub alpha: f64,
    pub batch_size: usize,
    pub max_steps: usize,
    pub seed: u64,
}

impl MlpConfig {
    pub fn new(hidden_layer_sizes: Vec<usize>, learning_rate: f64, alpha: f64, seed: u64) -> Self {
        Self {
            hidden_layer_sizes,
            learning_rate,
            alpha,
            batch_size: DEFAULT_BATCH_SIZE,
            max_steps: crate::autodiff::DEFAULT_MAX_STEPS,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    /// Layer widths from input to the single output.
    pub sizes: Vec<usize>,
    pub params: Vec<f64>,
    pub loss_history: Vec<f64>,
    pub converged: bool,
}

/// Number of parameters of a network with the given layer widths.
pub fn mlp_param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

/// Glorot-uniform weights and biases; the sigmoid output layer uses the
/// narrower bound `sqrt(2 / (fan_in + fan_out))`.
pub fn mlp_init(sizes: &[usize], rng: &mut impl Rng) -> Vec<f64> {
    let mut p = Vec::with_capacity(mlp_param_count(sizes));
    let last = sizes.len() - 2;
    for (l, w) in sizes.windows(2).enumerate() {
        let factor = if l == last { 2.0 } else { 6.0 };
        let bound = (factor / (w[0] + w[1]) as f64).sqrt();
        for _ in 0..w[0] * w[1] + w[1] {
            p.push(rng.random_range(-bound..bound));
        }
    }
    p
}

/// Output logit and the post-activation values of every layer.
fn forward(sizes: &[usize], params: &[f64], x: &[f64]) -> (f64, Vec<Vec<f64>>) {
    let mut acts = vec![x.to_vec()];
    let mut off = 0;
    let n_layers = sizes.len() - 1;
    for l in 0..n_layers {
        let (n_in, n_out) = (sizes[l], sizes[l + 1]);
        let w = &params[off..off + n_in * n_out];
        let b = &params[off + n_in * n_out..off + n_in * n_out + n_out];
        off += n_in * n_out + n_out;
        let input = acts.last().unwrap();
        let mut out: Vec<f64> = (0..n_out)
            .map(|o| b[o] + w[o * n_in..(o + 1) * n_in].iter().zip(input).map(|(a, v)| a * v).sum::<f64>())
            .collect();
        if l + 1 < n_layers {
            out.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        acts.push(out);
    }
    let logit = acts.last().unwrap()[0];
    (logit, acts)
}

/// Mean binary cross-entropy plus the L2 penalty, and its gradient, on a batch.
pub fn mlp_loss_grad(
    sizes: &[usize],
    params: &[f64],
    xs: &[&[f64]],
    ys: &[f64],
    alpha: f64,
) -> (f64, Vec<f64>) {
    let n_layers = sizes.len() - 1;
    let mut grad = vec![0.0; params.len()];
    let mut loss = 0.0;
    let bsz = xs.len() as f64;
    let offsets: Vec<usize> = sizes
        .windows(2)
        .scan(0, |acc, w| {
            let o = *acc;
            *acc += w[0] * w[1] + w[1];
            Some(o)
        })
        .collect();
    for (x, &y) in xs.iter().zip(ys) {
        let (z, acts) = forward(sizes, params, x);
        loss += softplus(-y * z);
        // d loss / d z for label y in {-1,+1}
        let mut delta = vec![-y * sigmoid(-y * z) / bsz];
        for l in (0..n_layers).rev() {
            let (n_in, n_out) = (sizes[l], sizes[l + 1]);
            let off = offsets[l];
            let input = &acts[l];
            for o in 0..n_out {
                for i in 0..n_in {
                    grad[off + o * n_in + i] += delta[o] * input[i];
                }
                grad[off + n_in * n_out + o] += delta[o];
            }
            if l > 0 {
                let w = &params[off..off + n_in * n_out];
                delta = (0..n_in)
                    .map(|i| {
                        if input[i] > 0.0 {
                            (0..n_out).map(|o| w[o * n_in + i] * delta[o]).sum()
                        } else {
                            0.0
                        }
                    })
                    .collect();
            }
        }
    }
    loss /= bsz;
    for l in 0..n_layers {
        let (n_in, n_out) = (sizes[l], sizes[l + 1]);
        let off = offsets[l];
        for k in off..off + n_in * n_out {
            loss += 0.5 * alpha / bsz * params[k] * params[k];
            grad[k] += alpha / bsz * params[k];
        }
    }
    (loss, grad)
}

/// Cycles through shuffled epochs, yielding index batches.
pub(crate) struct EpochSampler {
    order: Vec<usize>,
    pos: usize,
    batch: usize,
}

impl EpochSampler {
    pub(crate) fn new(n: usize, batch: usize) -> Self {
        Self {
            order: (0..n).collect(),
            pos: n,
            batch: batch.min(n).max(1),
        }
    }

    pub(crate) fn next(&mut self, rng: &mut impl Rng) -> Vec<usize> {
        if self.pos >= self.order.len() {
            self.order.shuffle(rng);
            self.pos = 0;
        }
        let end = (self.pos + self.batch).min(self.order.len());
        let b = self.order[self.pos..end].to_vec();
        self.pos = end;
        b
    }

    pub(crate) fn batches_per_epoch(&self) -> usize {
        self.order.len().div_ceil(self.batch)
    }
}

pub fn mlp_fit(x: &[Vec<f64>], y: &[f64], cfg: &MlpConfig) -> Result<MlpModel> {
    check_len("MLP rows", x.len(), y.len())?;
    if x.is_empty() {
        return Err(invalid("MLP needs training data"));
    }
    if cfg.hidden_layer_sizes.iter().any(|&h| h == 0) {
        return Err(invalid("hidden layers must be non-empty"));
    }
    let d = x[0].len();
    let mut sizes = vec![d];
    sizes.extend(&cfg.hidden_layer_sizes);
    sizes.push(1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let init = mlp_init(&sizes, &mut rng);
    let mut sampler = EpochSampler::new(x.len(), cfg.batch_size);
    let train_cfg = TrainConfig {
        learning_rate: cfg.learning_rate,
        max_steps: cfg.max_steps.min(MAX_EPOCHS * sampler.batches_per_epoch()),
        stop_on_convergence: true,
    };
    let out = train_adam(init, &train_cfg, &mut rng, |p, rng| {
        let idx = sampler.next(rng);
        let xs: Vec<&[f64]> = idx.iter().map(|&i| x[i].as_slice()).collect();
        let ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
        Ok(mlp_loss_grad(&sizes, p, &xs, &ys, cfg.alpha))
    })?;
    Ok(MlpModel {
        sizes,
        params: out.params,
        loss_history: out.loss_history,
        converged: out.converged,
    })
}

impl MlpModel {
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        check_len("MLP input width", self.sizes[0], x.len())?;
        Ok(forward(&self.sizes, &self.params, x).0)
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(sign(self.decision(x)?))
    }

    /// Mean cross-entropy (without penalty) on a data set.
    pub fn loss(&self, x: &[Vec<f64>], y: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for (row, &t) in x.iter().zip(y) {
            total += softplus(-t * self.decision(row)?);
        }
        Ok(total / x.len() as f64)
    }
}
