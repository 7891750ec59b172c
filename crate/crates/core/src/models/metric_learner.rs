use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{adjoint_vjp, shift_jacobian, GradMethod};
use crate::error::{invalid, Result};
use crate::models::common::{uniform_angles, zero_state, Variational};
use crate::sim::state::{check_register, MAX_STATE_QUBITS};
use crate::sim::templates::{push_qaoa_embedding, qaoa_param_count};
use crate::sim::{Circuit, StateVector, C64};

/// Points per class in a training batch.
pub const CLASS_BATCH: usize = 32;
/// Pairs of each kind (AA, BB, AB) entering the cost.
pub const N_PAIRS: usize = 16;
/// Training points per class kept for the fidelity classifier.
pub const N_REFERENCE: usize = 32;

/// Trainable QAOA-style embedding on `d + 1` qubits, trained so that states
/// of the same class overlap and states of different classes do not.
/// Classification compares the mean fidelity to stored reference states of
/// each class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricLearner {
    pub n_features: usize,
    pub n_layers: usize,
    pub entangling: bool,
    /// Reference inputs of class +1 and class -1, set after training.
    pub reference_pos: Vec<Vec<f64>>,
    pub reference_neg: Vec<Vec<f64>>,
}

/// Indices into the batch of the three pair kinds, with their cost weights.
struct Pairs {
    pairs: Vec<(usize, usize, f64)>,
}

impl MetricLearner {
    pub fn new(n_features: usize, n_layers: usize, entangling: bool) -> Result<Self> {
        if n_features == 0 || n_layers == 0 {
            return Err(invalid("metric learner needs features and layers"));
        }
        check_register(n_features + 1, MAX_STATE_QUBITS)?;
        Ok(Self {
            n_features,
            n_layers,
            entangling,
            reference_pos: Vec::new(),
            reference_neg: Vec::new(),
        })
    }

    /// One more qubit than there are features.
    pub fn n_qubits(&self) -> usize {
        self.n_features + 1
    }

    pub fn circuit(&self) -> Result<Circuit> {
        let n = self.n_qubits();
        let mut c = Circuit::new(n, self.n_features, qaoa_param_count(n, self.n_layers))?;
        push_qaoa_embedding(&mut c, self.n_layers, 0)?;
        Ok(if self.entangling { c } else { c.without_entanglers() })
    }

    pub fn embed(&self, params: &[f64], x: &[f64]) -> Result<StateVector> {
        self.circuit()?.run_on(zero_state(self.n_qubits())?, x, params)
    }

    /// Cost `1 + mean_AB F - (mean_AA F + mean_BB F) / 2` in terms of pair
    /// fidelities: low when classes are internally close and mutually far.
    fn pairs(ys: &[f64]) -> Result<Pairs> {
        let a: Vec<usize> = (0..ys.len()).filter(|&i| ys[i] > 0.0).collect();
        let b: Vec<usize> = (0..ys.len()).filter(|&i| ys[i] <= 0.0).collect();
        if a.is_empty() || b.is_empty() {
            return Err(invalid("metric learner batch needs both classes"));
        }
        let mut pairs = Vec::new();
        let within = |s: &[usize], pairs: &mut Vec<(usize, usize, f64)>| {
            let k = N_PAIRS.min(s.len() / 2);
            for i in 0..k {
                pairs.push((s[2 * i], s[2 * i + 1], -0.5 / k as f64));
            }
        };
        within(&a, &mut pairs);
        within(&b, &mut pairs);
        let k = N_PAIRS.min(a.len()).min(b.len());
        for i in 0..k {
            pairs.push((a[i], b[i], 1.0 / k as f64));
        }
        Ok(Pairs { pairs })
    }

    /// `<a|b>`; the fidelity is its squared modulus.
    fn overlap(a: &StateVector, b: &StateVector) -> C64 {
        a.inner_unchecked(b)
    }

    fn cost_from_states(states: &[StateVector], pairs: &Pairs) -> f64 {
        1.0 + pairs
            .pairs
            .iter()
            .map(|&(i, j, w)| w * Self::overlap(&states[i], &states[j]).norm_sqr())
            .sum::<f64>()
    }

    /// Mean fidelity to class +1 references minus mean fidelity to class -1,
    /// for each input.
    pub fn fidelity_scores(&self, params: &[f64], xs: &[&[f64]]) -> Result<Vec<f64>> {
        if self.reference_pos.is_empty() || self.reference_neg.is_empty() {
            return Err(invalid("metric learner has no reference data; train it first"));
        }
        let circ = self.circuit()?;
        let run = |v: &[f64]| circ.run_on(zero_state(self.n_qubits())?, v, params);
        let embed_all = |refs: &[Vec<f64>]| refs.iter().map(|r| run(r)).collect::<Result<Vec<_>>>();
        let (pos, neg) = (embed_all(&self.reference_pos)?, embed_all(&self.reference_neg)?);
        let mean = |refs: &[StateVector], psi: &StateVector| {
            refs.iter().map(|r| Self::overlap(r, psi).norm_sqr()).sum::<f64>() / refs.len() as f64
        };
        xs.iter()
            .map(|x| {
                let psi = run(x)?;
                Ok(mean(&pos, &psi) - mean(&neg, &psi))
            })
            .collect()
    }
}

impl Variational for MetricLearner {
    fn n_params(&self) -> usize {
        qaoa_param_count(self.n_qubits(), self.n_layers)
    }

    fn init_params(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        uniform_angles(rng, self.n_params())
    }

    fn loss(&self, params: &[f64], xs: &[&[f64]], ys: &[f64]) -> Result<f64> {
        let pairs = Self::pairs(ys)?;
        let states = xs.iter().map(|x| self.embed(params, x)).collect::<Result<Vec<_>>>()?;
        Ok(Self::cost_from_states(&states, &pairs))
    }

    fn loss_grad(&self, params: &[f64], xs: &[&[f64]], ys: &[f64], method: GradMethod) -> Result<(f64, Vec<f64>)> {
        let pairs = Self::pairs(ys)?;
        let circ = self.circuit()?;
        let n = self.n_qubits();
        let states = xs
            .iter()
            .map(|x| circ.run_on(zero_state(n)?, x, params))
            .collect::<Result<Vec<_>>>()?;
        let cost = Self::cost_from_states(&states, &pairs);
        let mut grad = vec![0.0; params.len()];
        match method {
            GradMethod::Adjoint => {
                // d F / d psi_i for F = |c|^2, c = <psi_i|psi_j>:
                // lambda_i = conj(c) psi_j, lambda_j = c psi_i
                let dim = 1usize << n;
                let mut lambdas = vec![vec![C64::new(0.0, 0.0); dim]; states.len()];
                for &(i, j, w) in &pairs.pairs {
                    let c = Self::overlap(&states[i], &states[j]);
                    let (ai, aj) = (states[i].amplitudes(), states[j].amplitudes());
                    for k in 0..dim {
                        lambdas[i][k] += c.conj() * aj[k] * w;
                        lambdas[j][k] += c * ai[k] * w;
                    }
                }
                for (i, lam) in lambdas.into_iter().enumerate() {
                    if lam.iter().all(|v| v.norm_sqr() == 0.0) {
                        continue;
                    }
                    let lam = StateVector::from_raw(n, lam);
                    let (gp, _) = adjoint_vjp(&circ, xs[i], params, &states[i], &lam)?;
                    for (a, b) in grad.iter_mut().zip(&gp) {
                        *a += b;
                    }
                }
            }
            GradMethod::ParameterShift => {
                // product rule: differentiate each state with its partners held fixed
                for i in 0..states.len() {
                    let partners: Vec<(usize, f64)> = pairs
                        .pairs
                        .iter()
                        .filter_map(|&(a, b, w)| {
                            if a == i {
                                Some((b, w))
                            } else if b == i {
                                Some((a, w))
                            } else {
                                None
                            }
                        })
                        .collect();
                    if partners.is_empty() {
                        continue;
                    }
                    let out = |s: &StateVector| {
                        vec![partners
                            .iter()
                            .map(|&(p, w)| w * Self::overlap(&states[p], s).norm_sqr())
                            .sum::<f64>()]
                    };
                    let jac = shift_jacobian(&circ, &zero_state(n)?, xs[i], params, false, &out)?;
                    for (a, b) in grad.iter_mut().zip(&jac.params[0]) {
                        *a += b;
                    }
                }
            }
        }
        Ok((cost, grad))
    }

    fn decisions(&self, params: &[f64], xs: &[&[f64]]) -> Result<Vec<f64>> {
        self.fidelity_scores(params, xs)
    }

    /// `CLASS_BATCH` indices drawn with replacement from each class, class +1 first.
    fn sample_batch(&self, ys: &[f64], rng: &mut ChaCha8Rng) -> Vec<usize> {
        let a: Vec<usize> = (0..ys.len()).filter(|&i| ys[i] > 0.0).collect();
        let b: Vec<usize> = (0..ys.len()).filter(|&i| ys[i] <= 0.0).collect();
        let mut out = Vec::with_capacity(2 * CLASS_BATCH);
        for class in [&a, &b] {
            if class.is_empty() {
                continue;
            }
            for _ in 0..CLASS_BATCH {
                out.push(class[rng.random_range(0..class.len())]);
            }
        }
        out
    }

    fn finalize(&mut self, _params: &[f64], x: &[Vec<f64>], y: &[f64], rng: &mut ChaCha8Rng) -> Result<()> {
        let mut pick = |label: bool| -> Result<Vec<Vec<f64>>> {
            let idx: Vec<usize> = (0..y.len()).filter(|&i| (y[i] > 0.0) == label).collect();
            if idx.is_empty() {
                return Err(invalid("metric learner needs training data of both classes"));
            }
            let k = N_REFERENCE.min(idx.len());
            let mut chosen = sample(rng, idx.len(), k).into_vec();
            chosen.sort_unstable();
            Ok(chosen.into_iter().map(|c| x[idx[c]].clone()).collect())
        };
        self.reference_pos = pick(true)?;
        self.reference_neg = pick(false)?;
        Ok(())
    }
}
