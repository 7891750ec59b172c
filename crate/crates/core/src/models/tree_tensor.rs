use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::GradMethod;
use crate::error::{invalid, Result};
use crate::models::common::{expectations_vjp, uniform_angles, Variational};
use crate::sim::observable::{expectation_unchecked, Observable};
use crate::sim::state::{check_register, MAX_STATE_QUBITS};
use crate::sim::{amplitude_embed, amplitude_register_size, Angle, Circuit, Gate, StateVector};

/// Amplitude embedding on a power-of-two register followed by a binary tree
/// of RY rotations and CNOTs that funnels into qubit 0; square loss on
/// `<Z_0>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeTensor {
    pub n_features: usize,
}

impl TreeTensor {
    pub fn new(n_features: usize) -> Result<Self> {
        if n_features == 0 {
            return Err(invalid("tree tensor model needs features"));
        }
        let m = Self { n_features };
        check_register(m.n_qubits(), MAX_STATE_QUBITS)?;
        Ok(m)
    }

    /// Next power of two at or above the amplitude register size.
    pub fn n_qubits(&self) -> usize {
        amplitude_register_size(self.n_features).next_power_of_two()
    }

    /// At each level every active qubit gets an RY, then qubit `2i+1` of the
    /// active list controls a CNOT onto qubit `2i`, which stays active.
    pub fn circuit(&self) -> Result<Circuit> {
        let n = self.n_qubits();
        let mut c = Circuit::new(n, 0, 2 * n - 1)?;
        let mut active: Vec<usize> = (0..n).collect();
        let mut p = 0;
        loop {
            for &w in &active {
                c.push(Gate::Ry(w, Angle::param(p)))?;
                p += 1;
            }
            if active.len() == 1 {
                break;
            }
            for pair in active.chunks(2) {
                c.push(Gate::Cnot {
                    control: pair[1],
                    target: pair[0],
                })?;
            }
            active = active.iter().step_by(2).copied().collect();
        }
        Ok(c)
    }

    pub fn embed(&self, x: &[f64]) -> Result<StateVector> {
        amplitude_embed(x, self.n_qubits())
    }
}

impl Variational for TreeTensor {
    fn n_params(&self) -> usize {
        2 * self.n_qubits() - 1
    }

    fn init_params(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        uniform_angles(rng, self.n_params())
    }

    fn loss(&self, params: &[f64], xs: &[&[f64]], ys: &[f64]) -> Result<f64> {
        let f = self.decisions(params, xs)?;
        Ok(f.iter().zip(ys).map(|(f, y)| (f - y).powi(2)).sum::<f64>() / ys.len() as f64)
    }

    fn loss_grad(&self, params: &[f64], xs: &[&[f64]], ys: &[f64], method: GradMethod) -> Result<(f64, Vec<f64>)> {
        let circ = self.circuit()?;
        let obs = [Observable::z(self.n_qubits(), 0)];
        let scale = 1.0 / ys.len() as f64;
        let mut loss = 0.0;
        let mut grad = vec![0.0; params.len()];
        for (x, &y) in xs.iter().zip(ys) {
            let init = self.embed(x)?;
            let (v, gp, _) = expectations_vjp(&circ, &init, &[], params, &obs, false, method, |v| {
                vec![2.0 * (v[0] - y) * scale]
            })?;
            loss += (v[0] - y).powi(2) * scale;
            for (a, b) in grad.iter_mut().zip(&gp) {
                *a += b;
            }
        }
        Ok((loss, grad))
    }

    fn decisions(&self, params: &[f64], xs: &[&[f64]]) -> Result<Vec<f64>> {
        let circ = self.circuit()?;
        let obs = Observable::z(self.n_qubits(), 0);
        xs.iter()
            .map(|x| Ok(expectation_unchecked(&circ.run_on(self.embed(x)?, &[], params)?, &obs)))
            .collect()
    }
}
