use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::GradMethod;
use crate::error::{invalid, Result};
use crate::models::common::{expectations_vjp, uniform_angles, zero_state, Variational};
use crate::sim::observable::{expectation_unchecked, Observable, Pauli, PauliString};
use crate::sim::state::{check_register, MAX_STATE_QUBITS};
use crate::sim::templates::{push_iqp_embedding, push_strongly_entangling};
use crate::sim::Circuit;

/// IQP embedding followed by strongly entangling layers; `f = <Z_0 Z_1>`
/// trained with the linear loss `(1 - y f) / 2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IqpVariational {
    pub n_features: usize,
    pub n_layers: usize,
    pub repeats: usize,
    pub entangling: bool,
}

impl IqpVariational {
    pub fn new(n_features: usize, n_layers: usize, repeats: usize, entangling: bool) -> Result<Self> {
        if n_features < 2 {
            return Err(invalid("IQP variational model needs at least two features"));
        }
        if n_layers == 0 || repeats == 0 {
            return Err(invalid("IQP variational model needs layers and repeats"));
        }
        check_register(n_features, MAX_STATE_QUBITS)?;
        Ok(Self {
            n_features,
            n_layers,
            repeats,
            entangling,
        })
    }

    pub fn circuit(&self) -> Result<Circuit> {
        let n = self.n_features;
        let mut c = Circuit::new(n, n, 3 * n * self.n_layers)?;
        push_iqp_embedding(&mut c, self.repeats)?;
        push_strongly_entangling(&mut c, self.n_layers, 0)?;
        Ok(if self.entangling { c } else { c.without_entanglers() })
    }

    pub fn observable(&self) -> Observable {
        let mut ops = vec![Pauli::I; self.n_features];
        ops[0] = Pauli::Z;
        ops[1] = Pauli::Z;
        Observable::new(self.n_features, vec![(1.0, PauliString::new(ops))]).expect("valid observable")
    }
}

impl Variational for IqpVariational {
    fn n_params(&self) -> usize {
        3 * self.n_features * self.n_layers
    }

    fn init_params(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        uniform_angles(rng, self.n_params())
    }

    fn loss(&self, params: &[f64], xs: &[&[f64]], ys: &[f64]) -> Result<f64> {
        let f = self.decisions(params, xs)?;
        Ok(f.iter().zip(ys).map(|(f, y)| (1.0 - y * f) / 2.0).sum::<f64>() / ys.len() as f64)
    }

    fn loss_grad(&self, params: &[f64], xs: &[&[f64]], ys: &[f64], method: GradMethod) -> Result<(f64, Vec<f64>)> {
        let circ = self.circuit()?;
        let obs = [self.observable()];
        let init = zero_state(self.n_features)?;
        let scale = 1.0 / ys.len() as f64;
        let mut loss = 0.0;
        let mut grad = vec![0.0; params.len()];
        for (x, &y) in xs.iter().zip(ys) {
            let (v, gp, _) = expectations_vjp(&circ, &init, x, params, &obs, false, method, |_| vec![-y * scale / 2.0])?;
            loss += (1.0 - y * v[0]) / 2.0 * scale;
            for (a, b) in grad.iter_mut().zip(&gp) {
                *a += b;
            }
        }
        Ok((loss, grad))
    }

    fn decisions(&self, params: &[f64], xs: &[&[f64]]) -> Result<Vec<f64>> {
        let circ = self.circuit()?;
        let obs = self.observable();
        xs.iter()
            .map(|x| {
                let psi = circ.run_on(zero_state(self.n_features)?, x, params)?;
                Ok(expectation_unchecked(&psi, &obs))
            })
            .collect()
    }
}
