//! Shared pieces of the gradient-trained models.

use std::f64::consts::TAU;

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::autodiff::{adjoint_vjp, shift_jacobian, train_adam, GradMethod, TrainConfig, TrainOutcome};
use crate::classical::sigmoid;
use crate::error::{check_len, invalid, Result};
use crate::sim::observable::{expectation_unchecked, Observable};
use crate::sim::{Circuit, StateVector};

pub const BATCH_SIZE: usize = 32;
/// Standard deviation of classical weight initialization.
pub const WEIGHT_INIT_STD: f64 = 0.1;

/// A model trained by minimizing a differentiable minibatch loss.
pub trait Variational {
    fn n_params(&self) -> usize;

    fn init_params(&self, rng: &mut ChaCha8Rng) -> Vec<f64>;

    /// Mean loss over the batch.
    fn loss(&self, params: &[f64], xs: &[&[f64]], ys: &[f64]) -> Result<f64>;

    /// Mean loss and its gradient. `method` selects how circuit derivatives
    /// are taken; models without gates differentiate analytically.
    fn loss_grad(&self, params: &[f64], xs: &[&[f64]], ys: &[f64], method: GradMethod) -> Result<(f64, Vec<f64>)>;

    /// Real-valued scores whose sign is the predicted label.
    fn decisions(&self, params: &[f64], xs: &[&[f64]]) -> Result<Vec<f64>>;

    /// Indices of the next training batch.
    fn sample_batch(&self, ys: &[f64], rng: &mut ChaCha8Rng) -> Vec<usize> {
        let n = ys.len();
        let mut idx = sample(rng, n, BATCH_SIZE.min(n)).into_vec();
        idx.sort_unstable();
        idx
    }

    /// Hook run once after training, e.g. to store reference data.
    fn finalize(&mut self, _params: &[f64], _x: &[Vec<f64>], _y: &[f64], _rng: &mut ChaCha8Rng) -> Result<()> {
        Ok(())
    }
}

pub(crate) fn gather<'a>(x: &'a [Vec<f64>], y: &[f64], idx: &[usize]) -> (Vec<&'a [f64]>, Vec<f64>) {
    (idx.iter().map(|&i| x[i].as_slice()).collect(), idx.iter().map(|&i| y[i]).collect())
}

/// Trains `model` with Adam from its own initialization.
pub fn train_variational(
    model: &mut dyn Variational,
    x: &[Vec<f64>],
    y: &[f64],
    cfg: &TrainConfig,
    method: GradMethod,
    rng: &mut ChaCha8Rng,
) -> Result<TrainOutcome> {
    check_len("training labels", x.len(), y.len())?;
    if x.is_empty() {
        return Err(invalid("no training data"));
    }
    let init = model.init_params(rng);
    check_len("initial parameters", model.n_params(), init.len())?;
    let out = {
        let m: &dyn Variational = model;
        train_adam(init, cfg, rng, |p, rng| {
            let idx = m.sample_batch(y, rng);
            let (xs, ys) = gather(x, y, &idx);
            m.loss_grad(p, &xs, &ys, method)
        })?
    };
    model.finalize(&out.params, x, y, rng)?;
    Ok(out)
}

pub(crate) fn uniform_angles(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.0..TAU)).collect()
}

pub(crate) fn normal_weights(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let dist = Normal::new(0.0, WEIGHT_INIT_STD).expect("valid normal");
    (0..n).map(|_| dist.sample(rng)).collect()
}

/// Binary cross entropy of `sigma(z)` against a ±1 label, and its
/// derivative in `z`.
pub(crate) fn bce_logit(z: f64, y: f64) -> (f64, f64) {
    let m = -y * z;
    let loss = crate::classical::softplus(m);
    (loss, -y * sigmoid(m))
}

/// Binary cross entropy of a probability `p` of class +1, with derivative
/// in `p`. Probabilities are clipped away from 0 and 1.
pub(crate) fn bce_prob(p: f64, y: f64) -> (f64, f64) {
    const EPS: f64 = 1e-12;
    let p = p.clamp(EPS, 1.0 - EPS);
    if y > 0.0 {
        (-p.ln(), -1.0 / p)
    } else {
        (-(1.0 - p).ln(), 1.0 / (1.0 - p))
    }
}

/// Expectations of `observables` after `circuit`, together with the
/// gradient of `sum_k c_k <O_k>` where `c = cotangent(values)`.
///
/// Returns `(values, d/d params, d/d features)`; the feature gradient is
/// empty unless `with_features`.
pub(crate) fn expectations_vjp(
    circuit: &Circuit,
    initial: &StateVector,
    features: &[f64],
    params: &[f64],
    observables: &[Observable],
    with_features: bool,
    method: GradMethod,
    cotangent: impl FnOnce(&[f64]) -> Vec<f64>,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    match method {
        GradMethod::Adjoint => {
            let psi = circuit.run_on(initial.clone(), features, params)?;
            let values: Vec<f64> = observables.iter().map(|o| expectation_unchecked(&psi, o)).collect();
            let c = cotangent(&values);
            let mut combined = Observable::zero(circuit.n_qubits());
            for (ck, o) in c.iter().zip(observables) {
                for (coeff, word) in o.terms() {
                    if *ck != 0.0 {
                        combined.push(ck * coeff, word.clone())?;
                    }
                }
            }
            let lambda = combined.apply(&psi);
            let (gp, gx) = adjoint_vjp(circuit, features, params, &psi, &lambda)?;
            let gx = if with_features { gx } else { Vec::new() };
            Ok((values, gp, gx))
        }
        GradMethod::ParameterShift => {
            let jac = shift_jacobian(circuit, initial, features, params, with_features, &|s| {
                observables.iter().map(|o| expectation_unchecked(s, o)).collect()
            })?;
            let c = cotangent(&jac.values);
            let mut gp = vec![0.0; params.len()];
            let mut gx = vec![0.0; if with_features { features.len() } else { 0 }];
            for (k, ck) in c.iter().enumerate() {
                for (g, j) in gp.iter_mut().zip(&jac.params[k]) {
                    *g += ck * j;
                }
                if with_features {
                    for (g, j) in gx.iter_mut().zip(&jac.features[k]) {
                        *g += ck * j;
                    }
                }
            }
            Ok((jac.values, gp, gx))
        }
    }
}

pub(crate) fn zero_state(n: usize) -> Result<StateVector> {
    StateVector::zero(n)
}

pub(crate) fn add_scaled(acc: &mut [f64], g: &[f64], s: f64) {
    for (a, v) in acc.iter_mut().zip(g) {
        *a += s * v;
    }
}
