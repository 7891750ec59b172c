use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::GradMethod;
use crate::error::{invalid, Result};
use crate::models::common::{bce_logit, expectations_vjp, uniform_angles, zero_state, Variational};
use crate::sim::observable::{expectation_unchecked, Observable};
use crate::sim::{Angle, Circuit, Gate};

/// Multiplier of `<O>` inside the sigmoid.
pub const LOGIT_SCALE: f64 = 6.0;

/// One independent qubit per feature: `L` blocks of a trainable general
/// rotation then `RY(x_j)`, and a final trainable rotation. The model
/// output is the mean `<Z_j>`; `P(+1) = sigmoid(6 <O>)`.
///
/// Parameters are stored per qubit, `theta [d][L+1][3]`. Only `d` two-level
/// states are ever allocated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparableVariational {
    pub n_features: usize,
    pub n_layers: usize,
}

impl SeparableVariational {
    pub fn new(n_features: usize, n_layers: usize) -> Result<Self> {
        if n_features == 0 || n_layers == 0 {
            return Err(invalid("separable variational model needs features and layers"));
        }
        Ok(Self { n_features, n_layers })
    }

    fn per_qubit(&self) -> usize {
        3 * (self.n_layers + 1)
    }

    /// The single-qubit circuit shared by every feature (one feature slot).
    pub fn qubit_circuit(&self) -> Result<Circuit> {
        let mut c = Circuit::new(1, 1, self.per_qubit())?;
        let rot = |b: usize| Gate::Rot(0, [Angle::param(b), Angle::param(b + 1), Angle::param(b + 2)]);
        for l in 0..self.n_layers {
            c.push(rot(3 * l))?;
            c.push(Gate::Ry(0, Angle::feature(0)))?;
        }
        c.push(rot(3 * self.n_layers))?;
        Ok(c)
    }

    /// `<O> = mean_j <Z_j>`.
    pub fn mean_z(&self, params: &[f64], x: &[f64]) -> Result<f64> {
        let c = self.qubit_circuit()?;
        self.mean_z_with(&c, params, x)
    }

    fn mean_z_with(&self, c: &Circuit, params: &[f64], x: &[f64]) -> Result<f64> {
        let z = Observable::z(1, 0);
        let k = self.per_qubit();
        let mut s = 0.0;
        for j in 0..self.n_features {
            let psi = c.run_on(zero_state(1)?, &x[j..j + 1], &params[j * k..(j + 1) * k])?;
            s += expectation_unchecked(&psi, &z);
        }
        Ok(s / self.n_features as f64)
    }
}

impl Variational for SeparableVariational {
    fn n_params(&self) -> usize {
        self.n_features * self.per_qubit()
    }

    fn init_params(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        uniform_angles(rng, self.n_params())
    }

    fn loss(&self, params: &[f64], xs: &[&[f64]], ys: &[f64]) -> Result<f64> {
        let f = self.decisions(params, xs)?;
        Ok(f.iter().zip(ys).map(|(f, y)| bce_logit(LOGIT_SCALE * f, *y).0).sum::<f64>() / ys.len() as f64)
    }

    fn loss_grad(&self, params: &[f64], xs: &[&[f64]], ys: &[f64], method: GradMethod) -> Result<(f64, Vec<f64>)> {
        let c = self.qubit_circuit()?;
        let obs = [Observable::z(1, 0)];
        let init = zero_state(1)?;
        let k = self.per_qubit();
        let d = self.n_features as f64;
        let scale = 1.0 / ys.len() as f64;
        let mut loss = 0.0;
        let mut grad = vec![0.0; params.len()];
        for (x, &y) in xs.iter().zip(ys) {
            let f = self.mean_z_with(&c, params, x)?;
            let (l, dl) = bce_logit(LOGIT_SCALE * f, y);
            loss += l * scale;
            let cot = dl * LOGIT_SCALE * scale / d;
            for j in 0..self.n_features {
                let slice = &params[j * k..(j + 1) * k];
                let (_, gp, _) = expectations_vjp(&c, &init, &x[j..j + 1], slice, &obs, false, method, |_| vec![cot])?;
                for (a, b) in grad[j * k..(j + 1) * k].iter_mut().zip(&gp) {
                    *a += b;
                }
            }
        }
        Ok((loss, grad))
    }

    fn decisions(&self, params: &[f64], xs: &[&[f64]]) -> Result<Vec<f64>> {
        let c = self.qubit_circuit()?;
        xs.iter().map(|x| self.mean_z_with(&c, params, x)).collect()
    }
}
