use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::classical::{logistic_fit, LogisticConfig, LogisticModel};
use crate::error::{invalid, Result};
use crate::sim::{Angle, Circuit, Gate};

/// Random linear maps into `n` rotation angles, one measured bitstring per
/// map, and a logistic readout on the concatenated bits.
///
/// The circuit is `RX(x'_j)` on each qubit followed by CNOTs `(j, j+1)` and
/// then `(j, j+2)` (omitted without entanglement). CNOTs permute basis
/// states, so a shot is drawn exactly by sampling the independent RX outputs
/// and pushing the bits through the CNOT cascade.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KitchenSinks {
    pub n_features: usize,
    pub n_qubits: usize,
    pub n_episodes: usize,
    pub entangling: bool,
    pub seed: u64,
    /// `W_k`, shape `[episodes][n][d]`.
    pub weights: Vec<Vec<Vec<f64>>>,
    /// `b_k`, shape `[episodes][n]`.
    pub offsets: Vec<Vec<f64>>,
}

impl KitchenSinks {
    pub fn new(n_features: usize, n_qubits: usize, n_episodes: usize, entangling: bool, seed: u64) -> Result<Self> {
        if n_features == 0 || n_qubits == 0 || n_episodes == 0 {
            return Err(invalid("kitchen sinks need features, qubits and episodes"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(n_episodes);
        let mut offsets = Vec::with_capacity(n_episodes);
        for _ in 0..n_episodes {
            weights.push(
                (0..n_qubits)
                    .map(|_| (0..n_features).map(|_| StandardNormal.sample(&mut rng)).collect())
                    .collect(),
            );
            offsets.push((0..n_qubits).map(|_| rng.random_range(0.0..TAU)).collect());
        }
        Ok(Self {
            n_features,
            n_qubits,
            n_episodes,
            entangling,
            seed,
            weights,
            offsets,
        })
    }

    /// Angles `x' = W_k x + b_k` of one episode.
    pub fn angles(&self, episode: usize, x: &[f64]) -> Vec<f64> {
        self.weights[episode]
            .iter()
            .zip(&self.offsets[episode])
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect()
    }

    fn cnot_pairs(&self) -> Vec<(usize, usize)> {
        if !self.entangling {
            return Vec::new();
        }
        let n = self.n_qubits;
        let mut p: Vec<(usize, usize)> = (0..n.saturating_sub(1)).map(|j| (j, j + 1)).collect();
        p.extend((0..n.saturating_sub(2)).map(|j| (j, j + 2)));
        p
    }

    /// The circuit for one episode, with the angles as its features.
    pub fn circuit(&self) -> Result<Circuit> {
        let n = self.n_qubits;
        let mut c = Circuit::new(n, n, 0)?;
        for j in 0..n {
            c.push(Gate::Rx(j, Angle::feature(j)))?;
        }
        for (control, target) in self.cnot_pairs() {
            c.push(Gate::Cnot { control, target })?;
        }
        Ok(c)
    }

    /// One shot of the episode circuit for angles `a`.
    pub fn sample_shot(&self, a: &[f64], rng: &mut impl Rng) -> Vec<bool> {
        let mut bits: Vec<bool> = a.iter().map(|t| rng.random::<f64>() < (t / 2.0).sin().powi(2)).collect();
        for (c, t) in self.cnot_pairs() {
            if bits[c] {
                bits[t] = !bits[t];
            }
        }
        bits
    }

    /// Concatenated bits over all episodes. The shot randomness is seeded
    /// from the model seed and the input, so equal inputs map to equal
    /// features.
    pub fn features(&self, x: &[f64]) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(input_seed(self.seed, x));
        let mut out = Vec::with_capacity(self.n_episodes * self.n_qubits);
        for k in 0..self.n_episodes {
            let a = self.angles(k, x);
            out.extend(self.sample_shot(&a, &mut rng).into_iter().map(|b| if b { 1.0 } else { 0.0 }));
        }
        out
    }
}

/// FNV-1a over the seed and the bit patterns of the input.
fn input_seed(seed: u64, x: &[f64]) -> u64 {
    const PRIME: u64 = 0x100_0000_01b3;
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for word in std::iter::once(seed).chain(x.iter().map(|v| v.to_bits())) {
        for byte in word.to_le_bytes() {
            h ^= u64::from(byte);
            h = h.wrapping_mul(PRIME);
        }
    }
    h
}

/// Kitchen-sink feature map with its fitted logistic readout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KitchenSinksClassifier {
    pub map: KitchenSinks,
    pub readout: LogisticModel,
}

impl KitchenSinksClassifier {
    pub fn fit(map: KitchenSinks, x: &[Vec<f64>], y: &[f64]) -> Result<Self> {
        let z: Vec<Vec<f64>> = x.iter().map(|v| map.features(v)).collect();
        let readout = logistic_fit(&z, y, &LogisticConfig::default())?;
        Ok(Self { map, readout })
    }

    pub fn decisions(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        xs.iter().map(|x| self.readout.decision(&self.map.features(x))).collect()
    }
}
