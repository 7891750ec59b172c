use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::GradMethod;
use crate::error::{invalid, Result};
use crate::models::common::{expectations_vjp, normal_weights, uniform_angles, Variational};
use crate::sim::observable::{expectation_unchecked, Observable};
use crate::sim::state::{check_register, MAX_STATE_QUBITS};
use crate::sim::templates::push_strongly_entangling;
use crate::sim::{amplitude_embed, amplitude_register_size, Circuit, StateVector};

/// Amplitude-embedded copies of the input, strongly entangling layers, and
/// `f = <Z_0> + b` trained with the square loss.
///
/// Parameters: `3 n L` rotation angles followed by the bias.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitCentric {
    pub n_features: usize,
    pub n_layers: usize,
    pub n_copies: usize,
}

impl CircuitCentric {
    pub fn new(n_features: usize, n_layers: usize, n_copies: usize) -> Result<Self> {
        if n_features == 0 || n_layers == 0 || n_copies == 0 {
            return Err(invalid("circuit-centric model needs features, layers and copies"));
        }
        let m = Self {
            n_features,
            n_layers,
            n_copies,
        };
        check_register(m.n_qubits(), MAX_STATE_QUBITS)?;
        Ok(m)
    }

    pub fn qubits_per_copy(&self) -> usize {
        amplitude_register_size(self.n_features)
    }

    pub fn n_qubits(&self) -> usize {
        self.qubits_per_copy() * self.n_copies
    }

    pub fn circuit(&self) -> Result<Circuit> {
        let n = self.n_qubits();
        let mut c = Circuit::new(n, 0, 3 * n * self.n_layers)?;
        push_strongly_entangling(&mut c, self.n_layers, 0)?;
        Ok(c)
    }

    /// Tensor product of `n_copies` amplitude embeddings of `x`.
    pub fn embed(&self, x: &[f64]) -> Result<StateVector> {
        let one = amplitude_embed(x, self.qubits_per_copy())?;
        let mut s = one.clone();
        for _ in 1..self.n_copies {
            s = s.tensor(&one)?;
        }
        Ok(s)
    }

    fn n_angles(&self) -> usize {
        3 * self.n_qubits() * self.n_layers
    }
}

impl Variational for CircuitCentric {
    fn n_params(&self) -> usize {
        self.n_angles() + 1
    }

    fn init_params(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut p = uniform_angles(rng, self.n_angles());
        p.extend(normal_weights(rng, 1));
        p
    }

    fn loss(&self, params: &[f64], xs: &[&[f64]], ys: &[f64]) -> Result<f64> {
        let f = self.decisions(params, xs)?;
        Ok(f.iter().zip(ys).map(|(f, y)| (f - y).powi(2)).sum::<f64>() / ys.len() as f64)
    }

    fn loss_grad(&self, params: &[f64], xs: &[&[f64]], ys: &[f64], method: GradMethod) -> Result<(f64, Vec<f64>)> {
        let circ = self.circuit()?;
        let obs = [Observable::z(self.n_qubits(), 0)];
        let na = self.n_angles();
        let (theta, b) = (&params[..na], params[na]);
        let scale = 1.0 / ys.len() as f64;
        let mut loss = 0.0;
        let mut grad = vec![0.0; params.len()];
        for (x, &y) in xs.iter().zip(ys) {
            let init = self.embed(x)?;
            let mut resid = 0.0;
            let (_, gp, _) = expectations_vjp(&circ, &init, &[], theta, &obs, false, method, |v| {
                resid = v[0] + b - y;
                vec![2.0 * resid * scale]
            })?;
            loss += resid * resid * scale;
            crate::models::common::add_scaled(&mut grad[..na], &gp, 1.0);
            grad[na] += 2.0 * resid * scale;
        }
        Ok((loss, grad))
    }

    fn decisions(&self, params: &[f64], xs: &[&[f64]]) -> Result<Vec<f64>> {
        let circ = self.circuit()?;
        let obs = Observable::z(self.n_qubits(), 0);
        let na = self.n_angles();
        xs.iter()
            .map(|x| {
                let psi = circ.run_on(self.embed(x)?, &[], &params[..na])?;
                Ok(expectation_unchecked(&psi, &obs) + params[na])
            })
            .collect()
    }
}
