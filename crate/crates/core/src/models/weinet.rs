use std::f64::consts::TAU;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::GradMethod;
use crate::error::{invalid, Error, Result};
use crate::models::common::{bce_logit, normal_weights, Variational};
use crate::sim::amplitude_embed;
use crate::sim::state::{check_register, MAX_STATE_QUBITS};

/// 3x3 image filter whose spectrum signs define the convolution unitary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterType {
    EdgeDetect,
    Smooth,
    Sharpen,
}

impl FilterType {
    pub fn kernel(self) -> [[f64; 3]; 3] {
        match self {
            FilterType::EdgeDetect => [[-1.0, -1.0, -1.0], [-1.0, 8.0, -1.0], [-1.0, -1.0, -1.0]],
            FilterType::Smooth => [[1.0 / 9.0; 3]; 3],
            FilterType::Sharpen => [[0.0, -1.0, 0.0], [-1.0, 5.0, -1.0], [0.0, -1.0, 0.0]],
        }
    }
}

impl FromStr for FilterType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edge_detect" => Ok(FilterType::EdgeDetect),
            "smooth" => Ok(FilterType::Smooth),
            "sharpen" => Ok(FilterType::Sharpen),
            _ => Err(Error::Parse(format!("unknown filter type {s:?}"))),
        }
    }
}

/// Number of shifted copies of the filter unitary mixed by the model.
pub const N_SHIFTS: usize = 16;

/// Quantum convolution on an amplitude-encoded square image.
///
/// The image (side a power of two, `n = 2 log2(side)` qubits) is amplitude
/// encoded; `U_F` is the real orthogonal circulant whose spectrum is the sign
/// of the filter's Fourier transform. Sixteen candidate unitaries
/// `S_(a,b) U_F` compose it with cyclic shifts by `(a, b) in {-1,0,1,2}^2`.
/// After tracing out the lowest row and column bits, each candidate yields
/// features `<Z_j>` and `<Z_j Z_k>` on the remaining qubits; the model
/// mixes candidates with softmax weights and applies a logistic readout.
///
/// The circuit has no trainable gates, so the quantum features are computed
/// once per image by [`WeiNet::encode`]; the [`Variational`] implementation
/// consumes those encodings. Parameters: 16 mixture logits, readout weights,
/// bias.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeiNet {
    pub side: usize,
    pub filter: FilterType,
}

impl WeiNet {
    pub fn new(n_pixels: usize, filter: FilterType) -> Result<Self> {
        let side = (n_pixels as f64).sqrt().round() as usize;
        if side * side != n_pixels || !side.is_power_of_two() || side < 4 {
            return Err(invalid(format!(
                "WeiNet needs a square image with power-of-two side of at least 4, got {n_pixels} pixels"
            )));
        }
        let m = Self { side, filter };
        check_register(m.n_qubits(), MAX_STATE_QUBITS)?;
        Ok(m)
    }

    pub fn n_qubits(&self) -> usize {
        2 * self.side.trailing_zeros() as usize
    }

    /// Qubits left after the partial trace.
    pub fn n_kept(&self) -> usize {
        self.n_qubits() - 2
    }

    /// Features per candidate unitary.
    pub fn n_local_features(&self) -> usize {
        let r = self.n_kept();
        r + r * (r - 1) / 2
    }

    /// Length of [`WeiNet::encode`] output.
    pub fn encoded_len(&self) -> usize {
        N_SHIFTS * self.n_local_features()
    }

    /// Convolution kernel `u(a, b)` of `U_F` on the `side x side` torus.
    pub fn unitary_kernel(&self) -> Vec<f64> {
        let s = self.side;
        let k = self.filter.kernel();
        let mut spectrum_sign = vec![0.0; s * s];
        for u in 0..s {
            for v in 0..s {
                let mut re = 0.0;
                for (i, row) in k.iter().enumerate() {
                    for (j, &kv) in row.iter().enumerate() {
                        let (a, b) = (i as f64 - 1.0, j as f64 - 1.0);
                        re += kv * (TAU * (a * u as f64 + b * v as f64) / s as f64).cos();
                    }
                }
                // symmetric filters have a real spectrum; sign(0) = +1
                spectrum_sign[u * s + v] = if re >= -1e-12 { 1.0 } else { -1.0 };
            }
        }
        let mut kernel = vec![0.0; s * s];
        for a in 0..s {
            for b in 0..s {
                let mut re = 0.0;
                for u in 0..s {
                    for v in 0..s {
                        re += spectrum_sign[u * s + v] * (TAU * ((a * u + b * v) as f64) / s as f64).cos();
                    }
                }
                kernel[a * s + b] = re / (s * s) as f64;
            }
        }
        kernel
    }

    /// `U_F |x>` as real amplitudes in row-major pixel order.
    pub fn filtered_amplitudes(&self, x: &[f64]) -> Result<Vec<f64>> {
        let s = self.side;
        let psi = amplitude_embed(x, self.n_qubits())?;
        let amps: Vec<f64> = psi.amplitudes().iter().map(|c| c.re).collect();
        let u = self.unitary_kernel();
        let mut out = vec![0.0; s * s];
        for r in 0..s {
            for c in 0..s {
                let mut acc = 0.0;
                for a in 0..s {
                    for b in 0..s {
                        acc += u[a * s + b] * amps[((r + s - a) % s) * s + (c + s - b) % s];
                    }
                }
                out[r * s + c] = acc;
            }
        }
        Ok(out)
    }

    /// Features of all sixteen candidates, candidate-major.
    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        let s = self.side;
        let n = self.n_qubits();
        let phi = self.filtered_amplitudes(x)?;
        let kept: Vec<usize> = (0..n).filter(|&w| w != n / 2 - 1 && w != n - 1).collect();
        let mut out = Vec::with_capacity(self.encoded_len());
        for a in [-1i64, 0, 1, 2] {
            for b in [-1i64, 0, 1, 2] {
                // (S psi)(r, c) = psi(r - a, c - b); only probabilities matter
                // since all features are diagonal
                let mut probs = vec![0.0; s * s];
                for r in 0..s {
                    for c in 0..s {
                        let rr = (r as i64 - a).rem_euclid(s as i64) as usize;
                        let cc = (c as i64 - b).rem_euclid(s as i64) as usize;
                        probs[r * s + c] = phi[rr * s + cc].powi(2);
                    }
                }
                let z = |k: usize, w: usize| if (k >> (n - 1 - w)) & 1 == 0 { 1.0 } else { -1.0 };
                for &w in &kept {
                    out.push(probs.iter().enumerate().map(|(k, p)| p * z(k, w)).sum());
                }
                for (i, &w1) in kept.iter().enumerate() {
                    for &w2 in &kept[i + 1..] {
                        out.push(probs.iter().enumerate().map(|(k, p)| p * z(k, w1) * z(k, w2)).sum());
                    }
                }
            }
        }
        Ok(out)
    }

    fn forward(&self, params: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
        let f = self.n_local_features();
        let logits = &params[..N_SHIFTS];
        let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
        let total: f64 = e.iter().sum();
        let p: Vec<f64> = e.iter().map(|v| v / total).collect();
        let mut feat = vec![0.0; f];
        for (i, pi) in p.iter().enumerate() {
            for k in 0..f {
                feat[k] += pi * g[i * f + k];
            }
        }
        let w = &params[N_SHIFTS..N_SHIFTS + f];
        let z = params[N_SHIFTS + f] + w.iter().zip(&feat).map(|(a, b)| a * b).sum::<f64>();
        (p, feat, z)
    }
}

impl Variational for WeiNet {
    fn n_params(&self) -> usize {
        N_SHIFTS + self.n_local_features() + 1
    }

    fn init_params(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        normal_weights(rng, self.n_params())
    }

    /// Inputs are encodings from [`WeiNet::encode`].
    fn loss(&self, params: &[f64], xs: &[&[f64]], ys: &[f64]) -> Result<f64> {
        let total: f64 = xs
            .iter()
            .zip(ys)
            .map(|(g, &y)| bce_logit(self.forward(params, g).2, y).0)
            .sum();
        Ok(total / ys.len() as f64)
    }

    fn loss_grad(&self, params: &[f64], xs: &[&[f64]], ys: &[f64], _method: GradMethod) -> Result<(f64, Vec<f64>)> {
        let f = self.n_local_features();
        let scale = 1.0 / ys.len() as f64;
        let mut loss = 0.0;
        let mut grad = vec![0.0; params.len()];
        let w = &params[N_SHIFTS..N_SHIFTS + f];
        for (g, &y) in xs.iter().zip(ys) {
            let (p, feat, z) = self.forward(params, g);
            let (l, dz) = bce_logit(z, y);
            loss += l * scale;
            let dz = dz * scale;
            let wf: f64 = w.iter().zip(&feat).map(|(a, b)| a * b).sum();
            for i in 0..N_SHIFTS {
                let wg: f64 = w.iter().zip(&g[i * f..(i + 1) * f]).map(|(a, b)| a * b).sum();
                grad[i] += dz * p[i] * (wg - wf);
            }
            for k in 0..f {
                grad[N_SHIFTS + k] += dz * feat[k];
            }
            grad[N_SHIFTS + f] += dz;
        }
        Ok((loss, grad))
    }

    fn decisions(&self, params: &[f64], xs: &[&[f64]]) -> Result<Vec<f64>> {
        Ok(xs.iter().map(|g| self.forward(params, g).2).collect())
    }
}
