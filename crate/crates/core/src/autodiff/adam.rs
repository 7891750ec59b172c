use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Adam moments and hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(n_params: usize, lr: f64) -> Self {
        Self {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    /// In-place bias-corrected Adam update.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        check_len("Adam parameters", self.m.len(), params.len())?;
        check_len("Adam gradient", self.m.len(), grad.len())?;
        if let Some(k) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!(
                "gradient component {k} is {} at Adam step {}",
                grad[k],
                self.t + 1
            )));
        }
        self.t += 1;
        let t = self.t as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for k in 0..params.len() {
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * grad[k];
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * grad[k] * grad[k];
            let m_hat = self.m[k] / c1;
            let v_hat = self.v[k] / c2;
            params[k] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

/// Functional form of [`AdamState::step`].
pub fn adam_step(state: &AdamState, params: &[f64], grad: &[f64]) -> Result<(Vec<f64>, AdamState)> {
    let mut s = state.clone();
    let mut p = params.to_vec();
    s.step(&mut p, grad)?;
    Ok((p, s))
}
