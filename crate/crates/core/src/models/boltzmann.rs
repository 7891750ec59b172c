use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::GradMethod;
use crate::error::{invalid, Error, Result};
use crate::models::common::{bce_prob, normal_weights, Variational};
use crate::sim::density::MAX_DENSITY_QUBITS;
use crate::sim::observable::{Observable, Pauli, PauliString};
use crate::sim::state::check_register;

/// Which qubits enter the observable `O = (1/n_vis) sum_j Z_j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VisibleQubits {
    Single,
    Half,
    All,
}

impl VisibleQubits {
    pub fn count(self, n_qubits: usize) -> usize {
        match self {
            VisibleQubits::Single => 1,
            VisibleQubits::Half => n_qubits.div_ceil(2),
            VisibleQubits::All => n_qubits,
        }
    }
}

impl FromStr for VisibleQubits {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(VisibleQubits::Single),
            "half" => Ok(VisibleQubits::Half),
            "all" => Ok(VisibleQubits::All),
            _ => Err(Error::Parse(format!("unknown visible_qubits {s:?}"))),
        }
    }
}

/// Classifier reading `<O>` off the exact Gibbs state of
///
/// `H(x) = sum_j (thZ_j . x) Z_j + sum_j (thX_j . x) X_j + sum_{j<k} (thJ_jk . x) Z_j Z_k`
///
/// at temperature `T`, with `P(+1) = (1 + <O>) / 2`. One qubit per feature.
/// The separable form drops the couplings; its Gibbs state is a product of
/// one-qubit states and is evaluated in closed form.
///
/// Parameters: `thZ [n][d]`, `thX [n][d]`, then `thJ [n(n-1)/2][d]` with
/// pairs in lexicographic order (absent when separable).
///
/// Gradients are exact: the derivative of the matrix exponential is taken in
/// the eigenbasis of `H` (divided differences of the Gibbs weights).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantumBoltzmann {
    pub n_features: usize,
    pub temperature: f64,
    pub visible: VisibleQubits,
    pub separable: bool,
}

impl QuantumBoltzmann {
    pub fn new(n_features: usize, temperature: f64, visible: VisibleQubits, separable: bool) -> Result<Self> {
        if n_features == 0 {
            return Err(invalid("Boltzmann machine needs features"));
        }
        if !(temperature > 0.0) || !temperature.is_finite() {
            return Err(invalid(format!("temperature must be positive, got {temperature}")));
        }
        if !separable {
            check_register(n_features, MAX_DENSITY_QUBITS)?;
        }
        Ok(Self {
            n_features,
            temperature,
            visible,
            separable,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_features
    }

    pub fn n_visible(&self) -> usize {
        self.visible.count(self.n_qubits())
    }

    fn n_couplings(&self) -> usize {
        let n = self.n_qubits();
        if self.separable {
            0
        } else {
            n * (n - 1) / 2
        }
    }

    /// Number of Hamiltonian terms.
    fn n_terms(&self) -> usize {
        2 * self.n_qubits() + self.n_couplings()
    }

    fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.n_qubits();
        if self.separable {
            return Vec::new();
        }
        (0..n).flat_map(|j| (j + 1..n).map(move |k| (j, k))).collect()
    }

    /// Field strengths `theta_m . x` in parameter-block order.
    fn fields(&self, params: &[f64], x: &[f64]) -> Vec<f64> {
        let d = self.n_features;
        (0..self.n_terms())
            .map(|m| params[m * d..(m + 1) * d].iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// The data-dependent Hamiltonian as a Pauli sum.
    pub fn hamiltonian(&self, params: &[f64], x: &[f64]) -> Result<Observable> {
        let n = self.n_qubits();
        let h = self.fields(params, x);
        let mut terms = Vec::with_capacity(h.len());
        for j in 0..n {
            terms.push((h[j], PauliString::single(n, j, Pauli::Z)));
        }
        for j in 0..n {
            terms.push((h[n + j], PauliString::single(n, j, Pauli::X)));
        }
        for (p, (j, k)) in self.pairs().into_iter().enumerate() {
            let mut ops = vec![Pauli::I; n];
            ops[j] = Pauli::Z;
            ops[k] = Pauli::Z;
            terms.push((h[2 * n + p], PauliString::new(ops)));
        }
        Observable::new(n, terms)
    }

    /// The readout observable `O`.
    pub fn observable(&self) -> Observable {
        Observable::mean_z(self.n_qubits(), self.n_visible())
    }

    /// `<O>` and its derivative in each field strength.
    fn expectation_fields(&self, h: &[f64]) -> (f64, Vec<f64>) {
        if self.separable {
            self.expectation_product(h)
        } else {
            self.expectation_dense(h)
        }
    }

    fn expectation_product(&self, h: &[f64]) -> (f64, Vec<f64>) {
        let n = self.n_qubits();
        let nv = self.n_visible();
        let beta = 1.0 / self.temperature;
        let mut grad = vec![0.0; h.len()];
        let mut o = 0.0;
        for j in 0..nv {
            let (a, b) = (h[j], h[n + j]);
            let r = a.hypot(b);
            let u = beta * r;
            // <Z> = -a tanh(beta r) / r = -a g(r)
            let (g, dg) = if u < 1e-4 {
                (beta * (1.0 - u * u / 3.0), -2.0 * beta * beta * u / 3.0)
            } else {
                let t = u.tanh();
                (t / r, (u * (1.0 - t * t) - t) / (r * r))
            };
            o -= a * g;
            // dg/da = dg/dr * a / r, guarded at r = 0 where dg/dr vanishes
            let (ra, rb) = if r > 0.0 { (a / r, b / r) } else { (0.0, 0.0) };
            grad[j] = -(g + a * dg * ra) / nv as f64;
            grad[n + j] = -(a * dg * rb) / nv as f64;
        }
        (o / nv as f64, grad)
    }

    fn dense_hamiltonian(&self, h: &[f64]) -> DMatrix<f64> {
        let n = self.n_qubits();
        let dim = 1usize << n;
        let bit = |i: usize, j: usize| (i >> (n - 1 - j)) & 1;
        let sign = |i: usize, j: usize| if bit(i, j) == 0 { 1.0 } else { -1.0 };
        let pairs = self.pairs();
        let mut m = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            let mut diag = 0.0;
            for j in 0..n {
                diag += h[j] * sign(i, j);
                m[(i ^ (1 << (n - 1 - j)), i)] += h[n + j];
            }
            for (p, &(j, k)) in pairs.iter().enumerate() {
                diag += h[2 * n + p] * sign(i, j) * sign(i, k);
            }
            m[(i, i)] += diag;
        }
        m
    }

    fn expectation_dense(&self, h: &[f64]) -> (f64, Vec<f64>) {
        let n = self.n_qubits();
        let dim = 1usize << n;
        let beta = 1.0 / self.temperature;
        let eig = SymmetricEigen::new(self.dense_hamiltonian(h));
        let e = &eig.eigenvalues;
        let v = &eig.eigenvectors;
        let e_min = e.iter().copied().fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = e.iter().map(|&ea| (-beta * (ea - e_min)).exp()).collect();
        let zp: f64 = w.iter().sum();
        let nv = self.n_visible();
        let o_diag: Vec<f64> = (0..dim)
            .map(|i| (0..nv).map(|j| if (i >> (n - 1 - j)) & 1 == 0 { 1.0 } else { -1.0 }).sum::<f64>() / nv as f64)
            .collect();
        // O in the eigenbasis
        let mut ov = v.clone();
        for i in 0..dim {
            for c in 0..dim {
                ov[(i, c)] *= o_diag[i];
            }
        }
        let mut o_eig = v.transpose() * ov;
        let o: f64 = (0..dim).map(|a| w[a] * o_eig[(a, a)]).sum::<f64>() / zp;
        // divided differences of the weights
        for a in 0..dim {
            for b in 0..dim {
                let delta = e[a] - e[b];
                let f = if (beta * delta).abs() < 1e-10 {
                    -beta * 0.5 * (w[a] + w[b])
                } else {
                    w[b] * (-beta * delta).exp_m1() / delta
                };
                o_eig[(a, b)] *= f;
            }
        }
        let g = v * o_eig * v.transpose();
        let mut rho_w = v.clone();
        for c in 0..dim {
            for i in 0..dim {
                rho_w[(i, c)] *= w[c] / zp;
            }
        }
        let rho = rho_w * v.transpose();
        // tr(P G) and <P> for every Hamiltonian term
        let tr_pair = |mat: &DMatrix<f64>, m: usize| -> f64 {
            if m < n {
                (0..dim).map(|i| if (i >> (n - 1 - m)) & 1 == 0 { mat[(i, i)] } else { -mat[(i, i)] }).sum()
            } else if m < 2 * n {
                let mask = 1usize << (n - 1 - (m - n));
                (0..dim).map(|i| mat[(i ^ mask, i)]).sum()
            } else {
                let (j, k) = self.pairs()[m - 2 * n];
                (0..dim)
                    .map(|i| {
                        let s = ((i >> (n - 1 - j)) ^ (i >> (n - 1 - k))) & 1;
                        if s == 0 {
                            mat[(i, i)]
                        } else {
                            -mat[(i, i)]
                        }
                    })
                    .sum()
            }
        };
        let grad = (0..h.len())
            .map(|m| tr_pair(&g, m) / zp + beta * o * tr_pair(&rho, m))
            .collect();
        (o, grad)
    }

    /// `<O>` for one input.
    pub fn expectation(&self, params: &[f64], x: &[f64]) -> f64 {
        self.expectation_fields(&self.fields(params, x)).0
    }
}

impl Variational for QuantumBoltzmann {
    fn n_params(&self) -> usize {
        self.n_terms() * self.n_features
    }

    fn init_params(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        normal_weights(rng, self.n_params())
    }

    fn loss(&self, params: &[f64], xs: &[&[f64]], ys: &[f64]) -> Result<f64> {
        let total: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, &y)| bce_prob((1.0 + self.expectation(params, x)) / 2.0, y).0)
            .sum();
        Ok(total / ys.len() as f64)
    }

    /// Exact gradient; `method` is irrelevant since no gates are involved.
    fn loss_grad(&self, params: &[f64], xs: &[&[f64]], ys: &[f64], _method: GradMethod) -> Result<(f64, Vec<f64>)> {
        let d = self.n_features;
        let scale = 1.0 / ys.len() as f64;
        let mut loss = 0.0;
        let mut grad = vec![0.0; params.len()];
        for (x, &y) in xs.iter().zip(ys) {
            let (o, dh) = self.expectation_fields(&self.fields(params, x));
            let (l, dp) = bce_prob((1.0 + o) / 2.0, y);
            loss += l * scale;
            let c = dp * 0.5 * scale;
            for (m, g) in dh.iter().enumerate() {
                for k in 0..d {
                    grad[m * d + k] += c * g * x[k];
                }
            }
        }
        if !loss.is_finite() {
            return Err(Error::NonFinite("Boltzmann machine loss".into()));
        }
        Ok((loss, grad))
    }

    fn decisions(&self, params: &[f64], xs: &[&[f64]]) -> Result<Vec<f64>> {
        Ok(xs.iter().map(|x| self.expectation(params, x)).collect())
    }
}
