use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::GradMethod;
use crate::error::{invalid, Error, Result};
use crate::models::common::{add_scaled, bce_logit, expectations_vjp, uniform_angles, zero_state, Variational};
use crate::models::spec::Variant;
use crate::sim::observable::{z_expectations, Observable};
use crate::sim::templates::push_cz_ladder;
use crate::sim::{Angle, Circuit, Gate};

/// Logit multiplier of the cross-entropy ablation.
pub const NO_COST_LOGIT_SCALE: f64 = 6.0;

/// How many qubits enter the fidelity loss and the prediction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableType {
    Single,
    Half,
    Full,
}

impl ObservableType {
    pub fn n_max(self, n_qubits: usize) -> usize {
        match self {
            ObservableType::Single => 1,
            ObservableType::Half => n_qubits.div_ceil(2),
            ObservableType::Full => n_qubits,
        }
    }
}

impl FromStr for ObservableType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(ObservableType::Single),
            "half" => Ok(ObservableType::Half),
            "full" => Ok(ObservableType::Full),
            _ => Err(Error::Parse(format!("unknown observable type {s:?}"))),
        }
    }
}

/// Trainable reuploading of `x * omega + theta` through general rotations,
/// one qubit per three features, with CZ ladders between layers.
///
/// Parameters: `theta [L][n][3]`, then `omega [L][n][3]` (absent under
/// `no_scaling`), then `alpha0 [n_max]`, `alpha1 [n_max]` (absent under
/// `no_cost`). Class +1 is associated with `|1>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataReuploading {
    pub n_features: usize,
    pub n_layers: usize,
    pub observable_type: ObservableType,
    pub variant: Option<Variant>,
}

impl DataReuploading {
    pub fn new(
        n_features: usize,
        n_layers: usize,
        observable_type: ObservableType,
        variant: Option<Variant>,
    ) -> Result<Self> {
        if n_features == 0 || n_layers == 0 {
            return Err(invalid("data reuploading needs features and at least one layer"));
        }
        if let Some(v) = variant {
            if !matches!(
                v,
                Variant::NoEntanglement | Variant::NoCost | Variant::NoScaling | Variant::NoTrainableEmbedding
            ) {
                return Err(invalid(format!("unsupported variant {v}")));
            }
        }
        Ok(Self {
            n_features,
            n_layers,
            observable_type,
            variant,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_features.div_ceil(3).max(1)
    }

    /// Qubits entering loss and prediction.
    pub fn n_max(&self) -> usize {
        if self.has(Variant::NoCost) {
            1
        } else {
            self.observable_type.n_max(self.n_qubits())
        }
    }

    fn has(&self, v: Variant) -> bool {
        self.variant == Some(v)
    }

    fn n_block(&self) -> usize {
        3 * self.n_layers * self.n_qubits()
    }

    fn omega_offset(&self) -> Option<usize> {
        (!self.has(Variant::NoScaling)).then(|| self.n_block())
    }

    fn alpha_offset(&self) -> Option<usize> {
        if self.has(Variant::NoCost) {
            return None;
        }
        Some(self.n_block() * if self.has(Variant::NoScaling) { 1 } else { 2 })
    }

    fn encoding(&self, l: usize, j: usize, k: usize) -> Option<Angle> {
        let f = 3 * j + k;
        if f >= self.n_features {
            return None;
        }
        let idx = 3 * (l * self.n_qubits() + j) + k;
        Some(match self.omega_offset() {
            Some(o) => Angle::param_times_feature(o + idx, f),
            None => Angle::feature(f),
        })
    }

    pub fn circuit(&self) -> Result<Circuit> {
        let n = self.n_qubits();
        let mut c = Circuit::new(n, self.n_features, self.n_circuit_params())?;
        let theta = |l: usize, j: usize, k: usize| Angle::param(3 * (l * n + j) + k);
        let entangle = !self.has(Variant::NoEntanglement);
        if self.has(Variant::NoTrainableEmbedding) {
            for l in 0..self.n_layers {
                for j in 0..n {
                    let a = |k| self.encoding(l, j, k).unwrap_or_else(|| Angle::constant(0.0));
                    c.push(Gate::Rot(j, [a(0), a(1), a(2)]))?;
                }
            }
            for l in 0..self.n_layers {
                for j in 0..n {
                    c.push(Gate::Rot(j, [theta(l, j, 0), theta(l, j, 1), theta(l, j, 2)]))?;
                }
                if entangle {
                    push_cz_ladder(&mut c)?;
                }
            }
        } else {
            for l in 0..self.n_layers {
                for j in 0..n {
                    let a = |k| match self.encoding(l, j, k) {
                        Some(e) => e + theta(l, j, k),
                        None => theta(l, j, k),
                    };
                    c.push(Gate::Rot(j, [a(0), a(1), a(2)]))?;
                }
                if entangle {
                    push_cz_ladder(&mut c)?;
                }
            }
        }
        Ok(c)
    }

    fn n_circuit_params(&self) -> usize {
        self.n_block() * if self.has(Variant::NoScaling) { 1 } else { 2 }
    }
}

impl Variational for DataReuploading {
    fn n_params(&self) -> usize {
        let base = self.n_circuit_params();
        if self.has(Variant::NoCost) {
            base
        } else {
            base + 2 * self.n_max()
        }
    }

    /// Angles uniform on `[0, 2 pi)`; scalings and fidelity weights start at 1.
    fn init_params(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut p = uniform_angles(rng, self.n_block());
        p.resize(self.n_params(), 1.0);
        p
    }

    fn loss(&self, params: &[f64], xs: &[&[f64]], ys: &[f64]) -> Result<f64> {
        let circ = self.circuit()?;
        let nc = self.n_circuit_params();
        let mut total = 0.0;
        for (x, &y) in xs.iter().zip(ys) {
            let psi = circ.run_on(zero_state(self.n_qubits())?, x, &params[..nc])?;
            let z = z_expectations(&psi);
            total += self.point_loss(params, &z, y).0;
        }
        Ok(total / ys.len() as f64)
    }

    fn loss_grad(&self, params: &[f64], xs: &[&[f64]], ys: &[f64], method: GradMethod) -> Result<(f64, Vec<f64>)> {
        let circ = self.circuit()?;
        let n = self.n_qubits();
        let nc = self.n_circuit_params();
        let obs: Vec<Observable> = (0..self.n_max()).map(|j| Observable::z(n, j)).collect();
        let scale = 1.0 / ys.len() as f64;
        let init = zero_state(n)?;
        let mut loss = 0.0;
        let mut grad = vec![0.0; params.len()];
        for (x, &y) in xs.iter().zip(ys) {
            let mut extra = Vec::new();
            let (_, gp, _) = expectations_vjp(&circ, &init, x, &params[..nc], &obs, false, method, |z| {
                let (l, dz, da) = self.point_loss(params, z, y);
                loss += l * scale;
                extra = da;
                dz.iter().map(|g| g * scale).collect()
            })?;
            add_scaled(&mut grad[..nc], &gp, 1.0);
            add_scaled(&mut grad[nc..], &extra, scale);
        }
        Ok((loss, grad))
    }

    /// `mean F1 - mean F0 = -mean <Z_j>` over the first `n_max` qubits; for
    /// the cross-entropy ablation, `-<Z_0>`.
    fn decisions(&self, params: &[f64], xs: &[&[f64]]) -> Result<Vec<f64>> {
        let circ = self.circuit()?;
        let nc = self.n_circuit_params();
        let m = self.n_max();
        xs.iter()
            .map(|x| {
                let psi = circ.run_on(zero_state(self.n_qubits())?, x, &params[..nc])?;
                let z = z_expectations(&psi);
                Ok(-z[..m].iter().sum::<f64>() / m as f64)
            })
            .collect()
    }
}

impl DataReuploading {
    /// Loss of one point from the `<Z_j>` values; returns the loss, its
    /// derivative in each used `<Z_j>`, and in the fidelity weights.
    fn point_loss(&self, params: &[f64], z: &[f64], y: f64) -> (f64, Vec<f64>, Vec<f64>) {
        let Some(ao) = self.alpha_offset() else {
            let (l, dl) = bce_logit(-NO_COST_LOGIT_SCALE * z[0], y);
            return (l, vec![-NO_COST_LOGIT_SCALE * dl], Vec::new());
        };
        let m = self.n_max();
        let t1 = (y + 1.0) / 2.0;
        let t0 = 1.0 - t1;
        let (a0, a1) = (&params[ao..ao + m], &params[ao + m..ao + 2 * m]);
        let mut loss = 0.0;
        let mut dz = vec![0.0; m];
        let mut da = vec![0.0; 2 * m];
        for j in 0..m {
            let f0 = (1.0 + z[j]) / 2.0;
            let f1 = 1.0 - f0;
            let r0 = a0[j] * f0 - t0;
            let r1 = a1[j] * f1 - t1;
            loss += r0 * r0 + r1 * r1;
            dz[j] = r0 * a0[j] - r1 * a1[j];
            da[j] = 2.0 * r0 * f0;
            da[m + j] = 2.0 * r1 * f1;
        }
        (loss, dz, da)
    }
}
