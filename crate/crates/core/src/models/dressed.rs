use std::f64::consts::FRAC_PI_2;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::GradMethod;
use crate::error::{invalid, Result};
use crate::models::common::{expectations_vjp, normal_weights, uniform_angles, zero_state, Variational};
use crate::sim::observable::{z_expectations, Observable};
use crate::sim::state::{check_register, MAX_STATE_QUBITS};
use crate::sim::templates::push_cnot_ring;
use crate::sim::{Angle, Circuit, Gate};

/// Classical layer `(pi/2) tanh(W_in x + b_in)` into a circuit of `n = d`
/// qubits (Hadamards, RY embedding, then per layer a CNOT ring and
/// trainable RY), whose `<Z_j>` feed a linear layer with two logits.
///
/// Parameters: `W_in [n][d]`, `b_in [n]`, `theta [L][n]`, `W_out [2][n]`,
/// `b_out [2]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dressed {
    pub n_features: usize,
    pub n_layers: usize,
    pub entangling: bool,
}

struct Forward {
    pre_tanh: Vec<f64>,
    angles: Vec<f64>,
    q: Vec<f64>,
    logits: [f64; 2],
}

impl Dressed {
    pub fn new(n_features: usize, n_layers: usize, entangling: bool) -> Result<Self> {
        if n_features == 0 || n_layers == 0 {
            return Err(invalid("dressed circuit needs features and at least one layer"));
        }
        check_register(n_features, MAX_STATE_QUBITS)?;
        Ok(Self {
            n_features,
            n_layers,
            entangling,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_features
    }

    pub fn circuit(&self) -> Result<Circuit> {
        let n = self.n_qubits();
        let mut c = Circuit::new(n, n, n * self.n_layers)?;
        for j in 0..n {
            c.push(Gate::H(j))?;
        }
        for j in 0..n {
            c.push(Gate::Ry(j, Angle::feature(j)))?;
        }
        for l in 0..self.n_layers {
            if self.entangling {
                push_cnot_ring(&mut c)?;
            }
            for j in 0..n {
                c.push(Gate::Ry(j, Angle::param(l * n + j)))?;
            }
        }
        Ok(c)
    }

    fn offsets(&self) -> [usize; 5] {
        let (n, d) = (self.n_qubits(), self.n_features);
        let w_in = 0;
        let b_in = w_in + n * d;
        let theta = b_in + n;
        let w_out = theta + n * self.n_layers;
        let b_out = w_out + 2 * n;
        [w_in, b_in, theta, w_out, b_out]
    }

    fn forward(&self, circ: &Circuit, p: &[f64], x: &[f64]) -> Result<Forward> {
        let (n, d) = (self.n_qubits(), self.n_features);
        let [w_in, b_in, theta, w_out, b_out] = self.offsets();
        let pre_tanh: Vec<f64> = (0..n)
            .map(|j| p[b_in + j] + (0..d).map(|k| p[w_in + j * d + k] * x[k]).sum::<f64>())
            .collect();
        let angles: Vec<f64> = pre_tanh.iter().map(|v| FRAC_PI_2 * v.tanh()).collect();
        let psi = circ.run_on(zero_state(n)?, &angles, &p[theta..w_out])?;
        let q = z_expectations(&psi);
        let logit = |c: usize| p[b_out + c] + (0..n).map(|j| p[w_out + c * n + j] * q[j]).sum::<f64>();
        let logits = [logit(0), logit(1)];
        Ok(Forward {
            pre_tanh,
            angles,
            q,
            logits,
        })
    }

    /// Class probabilities `(P(-1), P(+1))`.
    pub fn probabilities(&self, params: &[f64], x: &[f64]) -> Result<[f64; 2]> {
        let f = self.forward(&self.circuit()?, params, x)?;
        Ok(softmax(f.logits))
    }
}

fn softmax(l: [f64; 2]) -> [f64; 2] {
    let m = l[0].max(l[1]);
    let e = [(l[0] - m).exp(), (l[1] - m).exp()];
    let s = e[0] + e[1];
    [e[0] / s, e[1] / s]
}

fn cross_entropy(l: [f64; 2], y: f64) -> f64 {
    let m = l[0].max(l[1]);
    let lse = m + ((l[0] - m).exp() + (l[1] - m).exp()).ln();
    lse - if y > 0.0 { l[1] } else { l[0] }
}

impl Variational for Dressed {
    fn n_params(&self) -> usize {
        self.offsets()[4] + 2
    }

    fn init_params(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let [_, b_in, theta, w_out, b_out] = self.offsets();
        let mut p = normal_weights(rng, b_in);
        p.extend(vec![0.0; theta - b_in]);
        p.extend(uniform_angles(rng, w_out - theta));
        p.extend(normal_weights(rng, b_out - w_out));
        p.extend([0.0, 0.0]);
        p
    }

    fn loss(&self, params: &[f64], xs: &[&[f64]], ys: &[f64]) -> Result<f64> {
        let circ = self.circuit()?;
        let mut total = 0.0;
        for (x, &y) in xs.iter().zip(ys) {
            total += cross_entropy(self.forward(&circ, params, x)?.logits, y);
        }
        Ok(total / ys.len() as f64)
    }

    fn loss_grad(&self, params: &[f64], xs: &[&[f64]], ys: &[f64], method: GradMethod) -> Result<(f64, Vec<f64>)> {
        let circ = self.circuit()?;
        let (n, d) = (self.n_qubits(), self.n_features);
        let [w_in, b_in, theta, w_out, b_out] = self.offsets();
        let obs: Vec<Observable> = (0..n).map(|j| Observable::z(n, j)).collect();
        let scale = 1.0 / ys.len() as f64;
        let mut loss = 0.0;
        let mut g = vec![0.0; params.len()];
        let init = zero_state(n)?;
        for (x, &y) in xs.iter().zip(ys) {
            let f = self.forward(&circ, params, x)?;
            loss += cross_entropy(f.logits, y) * scale;
            let p = softmax(f.logits);
            let target = if y > 0.0 { [0.0, 1.0] } else { [1.0, 0.0] };
            let dl = [(p[0] - target[0]) * scale, (p[1] - target[1]) * scale];
            for c in 0..2 {
                g[b_out + c] += dl[c];
                for j in 0..n {
                    g[w_out + c * n + j] += dl[c] * f.q[j];
                }
            }
            let dq: Vec<f64> = (0..n)
                .map(|j| dl[0] * params[w_out + j] + dl[1] * params[w_out + n + j])
                .collect();
            let (_, gt, gz) = expectations_vjp(&circ, &init, &f.angles, &params[theta..w_out], &obs, true, method, |_| dq)?;
            for (a, v) in g[theta..w_out].iter_mut().zip(&gt) {
                *a += v;
            }
            for j in 0..n {
                let t = f.pre_tanh[j].tanh();
                let dpre = gz[j] * FRAC_PI_2 * (1.0 - t * t);
                g[b_in + j] += dpre;
                for k in 0..d {
                    g[w_in + j * d + k] += dpre * x[k];
                }
            }
        }
        Ok((loss, g))
    }

    /// Logit difference `l_+ - l_-`.
    fn decisions(&self, params: &[f64], xs: &[&[f64]]) -> Result<Vec<f64>> {
        let circ = self.circuit()?;
        xs.iter()
            .map(|x| {
                let f = self.forward(&circ, params, x)?;
                Ok(f.logits[1] - f.logits[0])
            })
            .collect()
    }
}
