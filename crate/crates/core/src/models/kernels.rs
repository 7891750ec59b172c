//! Quantum kernels and the SVM classifier built on them.

use std::f64::consts::{FRAC_PI_4, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classical::{rbf, svm_fit_precomputed, SvmModel};
use crate::error::{invalid, Result};
use crate::sim::density::bloch_vector;
use crate::sim::observable::Pauli;
use crate::sim::state::{check_register, MAX_STATE_QUBITS};
use crate::sim::templates::push_iqp_embedding;
use crate::sim::{Angle, Circuit, Gate, StateVector};

/// Trotterized Heisenberg embedding followed by an RBF kernel on the
/// single-qubit Pauli expectations of the embedded state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectedKernel {
    pub n_features: usize,
    pub trotter_steps: usize,
    pub t: f64,
    /// Random `Rot` angles applied to each qubit of `|0>` before evolving.
    pub rotations: Vec<[f64; 3]>,
    /// RBF bandwidth on the feature vectors.
    pub gamma: f64,
}

impl ProjectedKernel {
    /// Kernel with the given bandwidth; rotations drawn from `seed`.
    pub fn new(n_features: usize, trotter_steps: usize, t: f64, gamma: f64, seed: u64) -> Result<Self> {
        if n_features == 0 || trotter_steps == 0 {
            return Err(invalid("projected kernel needs features and Trotter steps"));
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(invalid(format!("gamma must be positive, got {gamma}")));
        }
        check_register(n_features + 1, MAX_STATE_QUBITS)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rotations = (0..n_features + 1)
            .map(|_| [rng.random_range(0.0..TAU), rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)])
            .collect();
        Ok(Self {
            n_features,
            trotter_steps,
            t,
            rotations,
            gamma,
        })
    }

    /// Sets `gamma = gamma_factor / (Var(phi) d)` from the feature vectors of
    /// the training inputs.
    pub fn fit(x: &[Vec<f64>], trotter_steps: usize, t: f64, gamma_factor: f64, seed: u64) -> Result<Self> {
        let d = x.first().map_or(0, Vec::len);
        let mut k = Self::new(d, trotter_steps, t, 1.0, seed)?;
        let feats = x.iter().map(|v| k.features(v)).collect::<Result<Vec<_>>>()?;
        let all: Vec<f64> = feats.into_iter().flatten().collect();
        let mean = all.iter().sum::<f64>() / all.len() as f64;
        let var = all.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / all.len() as f64;
        if !(var > 0.0) {
            return Err(invalid("projected features have zero variance; bandwidth undefined"));
        }
        let gamma = gamma_factor / (var * d as f64);
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(invalid(format!("gamma must be positive, got {gamma}")));
        }
        k.gamma = gamma;
        Ok(k)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_features + 1
    }

    pub fn circuit(&self) -> Result<Circuit> {
        let n = self.n_qubits();
        let mut c = Circuit::new(n, self.n_features, 0)?;
        for (w, r) in self.rotations.iter().enumerate() {
            c.push(Gate::Rot(w, r.map(Angle::constant)))?;
        }
        // exp(-i (t/L) x_j (XX + YY + ZZ)); the three terms commute
        let scale = 2.0 * self.t / self.trotter_steps as f64;
        for _ in 0..self.trotter_steps {
            for j in 0..self.n_features {
                for p in [Pauli::X, Pauli::Y, Pauli::Z] {
                    c.push(Gate::PauliRot {
                        wires: vec![j, j + 1],
                        paulis: vec![p, p],
                        angle: Angle::scaled_feature(scale, j),
                    })?;
                }
            }
        }
        Ok(c)
    }

    /// Bloch vectors of every qubit, concatenated (`3n` values).
    pub fn features(&self, x: &[f64]) -> Result<Vec<f64>> {
        let psi = self.circuit()?.run_on(StateVector::zero(self.n_qubits())?, x, &[])?;
        Ok((0..self.n_qubits()).flat_map(|w| bloch_vector(&psi, w)).collect())
    }
}

/// A kernel defined by a data-encoding circuit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum QuantumKernel {
    /// Fidelity of IQP-embedded states.
    Iqp {
        n_features: usize,
        repeats: usize,
        entangling: bool,
    },
    Projected(ProjectedKernel),
    /// Fidelity of product states with `L` layers of `RX(pi/4)` then
    /// `RY(x_j)` on qubit `j`.
    Separable { n_features: usize, encoding_layers: usize },
}

/// The per-input data a kernel compares.
#[derive(Clone, Debug, PartialEq)]
pub enum Embedded {
    State(StateVector),
    Product(Vec<StateVector>),
    Features(Vec<f64>),
}

impl QuantumKernel {
    pub fn iqp(n_features: usize, repeats: usize, entangling: bool) -> Result<Self> {
        if n_features == 0 || repeats == 0 {
            return Err(invalid("IQP kernel needs features and repeats"));
        }
        check_register(n_features, MAX_STATE_QUBITS)?;
        Ok(QuantumKernel::Iqp {
            n_features,
            repeats,
            entangling,
        })
    }

    pub fn separable(n_features: usize, encoding_layers: usize) -> Result<Self> {
        if n_features == 0 || encoding_layers == 0 {
            return Err(invalid("separable kernel needs features and layers"));
        }
        Ok(QuantumKernel::Separable {
            n_features,
            encoding_layers,
        })
    }

    pub fn n_features(&self) -> usize {
        match self {
            QuantumKernel::Iqp { n_features, .. } | QuantumKernel::Separable { n_features, .. } => *n_features,
            QuantumKernel::Projected(p) => p.n_features,
        }
    }

    /// The full embedding circuit. For the separable kernel this is the
    /// `d`-qubit product circuit, which [`QuantumKernel::embed`] never builds.
    pub fn circuit(&self) -> Result<Circuit> {
        match self {
            QuantumKernel::Iqp {
                n_features,
                repeats,
                entangling,
            } => {
                let mut c = Circuit::new(*n_features, *n_features, 0)?;
                push_iqp_embedding(&mut c, *repeats)?;
                Ok(if *entangling { c } else { c.without_entanglers() })
            }
            QuantumKernel::Projected(p) => p.circuit(),
            QuantumKernel::Separable {
                n_features,
                encoding_layers,
            } => {
                let mut c = Circuit::new(*n_features, *n_features, 0)?;
                for _ in 0..*encoding_layers {
                    for j in 0..*n_features {
                        c.push(Gate::Rx(j, Angle::constant(FRAC_PI_4)))?;
                        c.push(Gate::Ry(j, Angle::feature(j)))?;
                    }
                }
                Ok(c)
            }
        }
    }

    pub fn embed(&self, x: &[f64]) -> Result<Embedded> {
        if x.len() != self.n_features() {
            return Err(invalid(format!(
                "kernel expects {} features, got {}",
                self.n_features(),
                x.len()
            )));
        }
        match self {
            QuantumKernel::Iqp { n_features, .. } => Ok(Embedded::State(
                self.circuit()?.run_on(StateVector::zero(*n_features)?, x, &[])?,
            )),
            QuantumKernel::Projected(p) => Ok(Embedded::Features(p.features(x)?)),
            QuantumKernel::Separable { encoding_layers, .. } => {
                let mut c = Circuit::new(1, 1, 0)?;
                for _ in 0..*encoding_layers {
                    c.push(Gate::Rx(0, Angle::constant(FRAC_PI_4)))?;
                    c.push(Gate::Ry(0, Angle::feature(0)))?;
                }
                let states = x
                    .iter()
                    .map(|&v| c.run_on(StateVector::zero(1)?, &[v], &[]))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Embedded::Product(states))
            }
        }
    }

    /// Kernel value between two embeddings produced by this kernel.
    pub fn value(&self, a: &Embedded, b: &Embedded) -> f64 {
        match (self, a, b) {
            (_, Embedded::State(a), Embedded::State(b)) => a.inner_unchecked(b).norm_sqr(),
            (_, Embedded::Product(a), Embedded::Product(b)) => {
                a.iter().zip(b).map(|(u, v)| u.inner_unchecked(v).norm_sqr()).product()
            }
            (QuantumKernel::Projected(p), Embedded::Features(a), Embedded::Features(b)) => rbf(a, b, p.gamma),
            _ => panic!("embeddings do not belong to this kernel"),
        }
    }

    pub fn evaluate(&self, x: &[f64], x2: &[f64]) -> Result<f64> {
        Ok(self.value(&self.embed(x)?, &self.embed(x2)?))
    }

    pub fn embed_all(&self, xs: &[Vec<f64>]) -> Result<Vec<Embedded>> {
        xs.iter().map(|x| self.embed(x)).collect()
    }

    /// Symmetric Gram matrix; each input is embedded once.
    pub fn gram(&self, xs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let e = self.embed_all(xs)?;
        let n = e.len();
        let mut g = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let v = self.value(&e[i], &e[j]);
                g[i][j] = v;
                g[j][i] = v;
            }
        }
        Ok(g)
    }

    /// `K[i][j] = k(a_i, b_j)`.
    pub fn cross_gram(&self, a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let (ea, eb) = (self.embed_all(a)?, self.embed_all(b)?);
        Ok(ea.iter().map(|u| eb.iter().map(|v| self.value(u, v)).collect()).collect())
    }
}

/// SVM on a quantum kernel; keeps the support inputs for prediction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelClassifier {
    pub kernel: QuantumKernel,
    pub svm: SvmModel,
    pub support_inputs: Vec<Vec<f64>>,
}

impl KernelClassifier {
    pub fn fit(kernel: QuantumKernel, x: &[Vec<f64>], y: &[f64], c: f64) -> Result<Self> {
        let g = kernel.gram(x)?;
        let svm = svm_fit_precomputed(&g, y, c)?;
        let support_inputs = svm.support.iter().map(|&i| x[i].clone()).collect();
        Ok(Self {
            kernel,
            svm,
            support_inputs,
        })
    }

    pub fn decisions(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        let sv = self.kernel.embed_all(&self.support_inputs)?;
        xs.iter()
            .map(|x| {
                let e = self.kernel.embed(x)?;
                Ok(sv
                    .iter()
                    .zip(&self.svm.dual_coef)
                    .map(|(s, a)| a * self.kernel.value(s, &e))
                    .sum::<f64>()
                    + self.svm.bias)
            })
            .collect()
    }
}
