use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classical::{cnn_fit, CnnConfig, CnnModel, MinMaxScaler};
use crate::error::{check_len, invalid, Result};
use crate::sim::sampling::most_probable_bitstring;
use crate::sim::templates::push_random_layers;
use crate::sim::{Angle, Circuit, Gate, StateVector};

/// Largest window side; a window uses `side^2` qubits.
pub const MAX_QKERNEL: usize = 4;

/// Fixed quantum convolution: pixels are min-max scaled to `[-1, 1]`,
/// thresholded to `{0, pi}`, and every `q x q` window (stride 1, no padding)
/// is fed through a seeded random circuit per channel as `RY` angles. The
/// output is the number of ones in the most probable bitstring.
///
/// Inputs are binary after thresholding, so each channel is a lookup table
/// over the `2^(q^2)` window patterns, built once.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quanvolution {
    pub side: usize,
    pub qkernel: usize,
    pub n_channels: usize,
    pub entangling: bool,
    pub seed: u64,
    pub scaler: MinMaxScaler,
    /// `tables[c][pattern]`, pattern bit `k` (MSB first) is window pixel `k`.
    pub tables: Vec<Vec<u8>>,
}

impl Quanvolution {
    pub fn fit(
        x: &[Vec<f64>],
        qkernel: usize,
        n_channels: usize,
        entangling: bool,
        seed: u64,
    ) -> Result<Self> {
        if x.is_empty() {
            return Err(invalid("quanvolution needs training images"));
        }
        let n_pixels = x[0].len();
        let side = (n_pixels as f64).sqrt().round() as usize;
        if side * side != n_pixels {
            return Err(invalid(format!("input of length {n_pixels} is not a square image")));
        }
        if qkernel == 0 || qkernel > MAX_QKERNEL || qkernel > side {
            return Err(invalid(format!("window side {qkernel} invalid for {side}x{side} images")));
        }
        if n_channels == 0 {
            return Err(invalid("quanvolution needs at least one channel"));
        }
        let scaler = MinMaxScaler::fit(x, -1.0, 1.0)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nq = qkernel * qkernel;
        let mut tables = Vec::with_capacity(n_channels);
        for _ in 0..n_channels {
            let mut c = Circuit::new(nq, nq, 0)?;
            for k in 0..nq {
                c.push(Gate::Ry(k, Angle::feature(k)))?;
            }
            push_random_layers(&mut c, 1, &mut rng)?;
            let c = if entangling { c } else { c.without_entanglers() };
            let mut table = Vec::with_capacity(1 << nq);
            for pattern in 0..1usize << nq {
                let angles: Vec<f64> = (0..nq)
                    .map(|k| if (pattern >> (nq - 1 - k)) & 1 == 1 { PI } else { 0.0 })
                    .collect();
                let psi = c.run_on(StateVector::zero(nq)?, &angles, &[])?;
                table.push(most_probable_bitstring(&psi).count_ones() as u8);
            }
            tables.push(table);
        }
        Ok(Self {
            side,
            qkernel,
            n_channels,
            entangling,
            seed,
            scaler,
            tables,
        })
    }

    /// Side of each output map.
    pub fn out_side(&self) -> usize {
        self.side - self.qkernel + 1
    }

    /// Output maps, channel-major.
    pub fn transform(&self, image: &[f64]) -> Result<Vec<f64>> {
        check_len("image pixels", self.side * self.side, image.len())?;
        let scaled = self.scaler.transform_row(image)?;
        let bits: Vec<bool> = scaled.iter().map(|&v| v > 0.0).collect();
        let (s, q, o) = (self.side, self.qkernel, self.out_side());
        let mut out = Vec::with_capacity(self.n_channels * o * o);
        for table in &self.tables {
            for r in 0..o {
                for c in 0..o {
                    let mut pattern = 0usize;
                    for i in 0..q {
                        for j in 0..q {
                            pattern = (pattern << 1) | usize::from(bits[(r + i) * s + c + j]);
                        }
                    }
                    out.push(f64::from(table[pattern]));
                }
            }
        }
        Ok(out)
    }
}

/// Quantum convolution followed by the classical CNN.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuanvolutionalNet {
    pub quanv: Quanvolution,
    pub cnn: CnnModel,
}

impl QuanvolutionalNet {
    pub fn fit(quanv: Quanvolution, x: &[Vec<f64>], y: &[f64], cfg: &CnnConfig) -> Result<Self> {
        if quanv.out_side() < cfg.kernel_shape {
            return Err(invalid(format!(
                "quanvolution output side {} is smaller than the CNN kernel {}",
                quanv.out_side(),
                cfg.kernel_shape
            )));
        }
        let maps = x.iter().map(|v| quanv.transform(v)).collect::<Result<Vec<_>>>()?;
        let cnn = cnn_fit(&maps, y, quanv.n_channels, cfg)?;
        Ok(Self { quanv, cnn })
    }

    pub fn decisions(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        xs.iter().map(|x| self.cnn.decision(&self.quanv.transform(x)?)).collect()
    }
}
