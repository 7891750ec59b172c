//! Circuit templates shared by the models.
//!
//! Gate orders:
//! - `iqp_embedding`: per repeat, `H` on every wire, `RZ(x_j)` on wire `j`,
//!   then `exp(-i x_i x_j/2 Z_i Z_j)` for every pair `i < j` in lexicographic order.
//! - `qaoa_embedding` (d features, d+1 wires): per layer, `RX(x_j)` on wires
//!   `j < d` and `H` on the extra wire, then trainable `ZZ` couplings (ring for
//!   more than two wires, a single pair for two) and trainable `RY` local
//!   fields; one more feature layer closes the circuit.
//! - `strongly_entangling`: per layer `l`, `Rot(theta)` on every wire, then
//!   for `n > 1` with `r = l mod (n-1) + 1`, `CNOT(j, j+r mod n)` for all `j`.
//! - `random_layers`: `n_layers * n_qubits` seeded draws from
//!   {`RX`, `RY`, `RZ` on a random wire with angle in `[0, 2pi)`, `CNOT` on a
//!   random ordered pair}; single-qubit registers redraw the `CNOT` choice.
//! - `cnot_ring`: `CNOT(j, j+1 mod n)` for `n >= 3`, a single `CNOT(0, 1)` for `n = 2`.
//! - `cz_ladder`: `CZ(j, j+1)` for `j < n-1`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sim::circuit::{Angle, Circuit, Gate};
use crate::sim::observable::Pauli;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateKind {
    IqpEmbedding,
    QaoaEmbedding,
    StronglyEntangling,
    RandomLayers,
    CnotRing,
    CzLadder,
}

impl TemplateKind {
    pub const ALL: [TemplateKind; 6] = [
        TemplateKind::IqpEmbedding,
        TemplateKind::QaoaEmbedding,
        TemplateKind::StronglyEntangling,
        TemplateKind::RandomLayers,
        TemplateKind::CnotRing,
        TemplateKind::CzLadder,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TemplateKind::IqpEmbedding => "iqp_embedding",
            TemplateKind::QaoaEmbedding => "qaoa_embedding",
            TemplateKind::StronglyEntangling => "strongly_entangling",
            TemplateKind::RandomLayers => "random_layers",
            TemplateKind::CnotRing => "cnot_ring",
            TemplateKind::CzLadder => "cz_ladder",
        }
    }
}

impl fmt::Display for TemplateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TemplateKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        TemplateKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown template kind {s:?}")))
    }
}

/// Builds a template circuit.
///
/// `width` is the number of features for the two embeddings (the register is
/// `d` wires for IQP and `d + 1` for QAOA) and the number of qubits otherwise.
/// `seed` only matters for `random_layers`.
pub fn build_template(kind: TemplateKind, width: usize, n_layers: usize, seed: u64) -> Result<Circuit> {
    if n_layers == 0 {
        return Err(invalid("templates need at least one layer"));
    }
    if width == 0 {
        return Err(invalid("templates need a non-empty register"));
    }
    match kind {
        TemplateKind::IqpEmbedding => {
            let mut c = Circuit::new(width, width, 0)?;
            push_iqp_embedding(&mut c, n_layers)?;
            Ok(c)
        }
        TemplateKind::QaoaEmbedding => {
            let n = width + 1;
            let mut c = Circuit::new(n, width, qaoa_param_count(n, n_layers))?;
            push_qaoa_embedding(&mut c, n_layers, 0)?;
            Ok(c)
        }
        TemplateKind::StronglyEntangling => {
            let mut c = Circuit::new(width, 0, 3 * width * n_layers)?;
            push_strongly_entangling(&mut c, n_layers, 0)?;
            Ok(c)
        }
        TemplateKind::RandomLayers => {
            let mut c = Circuit::new(width, 0, 0)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            push_random_layers(&mut c, n_layers, &mut rng)?;
            Ok(c)
        }
        TemplateKind::CnotRing => {
            let mut c = Circuit::new(width, 0, 0)?;
            for _ in 0..n_layers {
                push_cnot_ring(&mut c)?;
            }
            Ok(c)
        }
        TemplateKind::CzLadder => {
            let mut c = Circuit::new(width, 0, 0)?;
            for _ in 0..n_layers {
                push_cz_ladder(&mut c)?;
            }
            Ok(c)
        }
    }
}

/// IQP embedding of features `0..n` on wires `0..n`.
pub fn push_iqp_embedding(c: &mut Circuit, repeats: usize) -> Result<()> {
    let n = c.n_qubits();
    for _ in 0..repeats {
        for w in 0..n {
            c.push(Gate::H(w))?;
        }
        for w in 0..n {
            c.push(Gate::Rz(w, Angle::feature(w)))?;
        }
        for i in 0..n {
            for j in i + 1..n {
                c.push(Gate::PauliRot {
                    wires: vec![i, j],
                    paulis: vec![Pauli::Z, Pauli::Z],
                    angle: Angle::feature_product(i, j),
                })?;
            }
        }
    }
    Ok(())
}

/// Strongly entangling layers reading `3 * n * n_layers` parameters from
/// `offset`, indexed `offset + 3 (l n + j) + k`.
pub fn push_strongly_entangling(c: &mut Circuit, n_layers: usize, offset: usize) -> Result<()> {
    let n = c.n_qubits();
    for l in 0..n_layers {
        for j in 0..n {
            let base = offset + 3 * (l * n + j);
            c.push(Gate::Rot(
                j,
                [Angle::param(base), Angle::param(base + 1), Angle::param(base + 2)],
            ))?;
        }
        if n > 1 {
            let r = l % (n - 1) + 1;
            for j in 0..n {
                c.push(Gate::Cnot {
                    control: j,
                    target: (j + r) % n,
                })?;
            }
        }
    }
    Ok(())
}

/// Trainable parameters of the QAOA embedding on `n_wires` wires.
pub fn qaoa_param_count(n_wires: usize, n_layers: usize) -> usize {
    let per_layer = match n_wires {
        1 => 1,
        2 => 3,
        n => 2 * n,
    };
    per_layer * n_layers
}

fn qaoa_features(c: &mut Circuit) -> Result<()> {
    let d = c.n_features();
    for w in 0..c.n_qubits() {
        if w < d {
            c.push(Gate::Rx(w, Angle::feature(w)))?;
        } else {
            c.push(Gate::H(w))?;
        }
    }
    Ok(())
}

/// QAOA-style embedding of the circuit's features, reading parameters from `offset`.
pub fn push_qaoa_embedding(c: &mut Circuit, n_layers: usize, offset: usize) -> Result<()> {
    let n = c.n_qubits();
    let per_layer = qaoa_param_count(n, 1);
    let zz = |a: usize, b: usize, p: usize| Gate::PauliRot {
        wires: vec![a, b],
        paulis: vec![Pauli::Z, Pauli::Z],
        angle: Angle::param(p),
    };
    for l in 0..n_layers {
        let base = offset + l * per_layer;
        qaoa_features(c)?;
        match n {
            1 => c.push(Gate::Ry(0, Angle::param(base)))?,
            2 => {
                c.push(zz(0, 1, base))?;
                c.push(Gate::Ry(0, Angle::param(base + 1)))?;
                c.push(Gate::Ry(1, Angle::param(base + 2)))?;
            }
            _ => {
                for j in 0..n {
                    c.push(zz(j, (j + 1) % n, base + j))?;
                }
                for j in 0..n {
                    c.push(Gate::Ry(j, Angle::param(base + n + j)))?;
                }
            }
        }
    }
    qaoa_features(c)
}

pub fn push_random_layers(c: &mut Circuit, n_layers: usize, rng: &mut impl Rng) -> Result<()> {
    let n = c.n_qubits();
    for _ in 0..n_layers * n {
        let choice = loop {
            let k = rng.random_range(0..4u8);
            if k < 3 || n > 1 {
                break k;
            }
        };
        if choice == 3 {
            let control = rng.random_range(0..n);
            let mut target = rng.random_range(0..n - 1);
            if target >= control {
                target += 1;
            }
            c.push(Gate::Cnot { control, target })?;
        } else {
            let w = rng.random_range(0..n);
            let a = Angle::constant(rng.random_range(0.0..2.0 * PI));
            c.push(match choice {
                0 => Gate::Rx(w, a),
                1 => Gate::Ry(w, a),
                _ => Gate::Rz(w, a),
            })?;
        }
    }
    Ok(())
}

pub fn push_cnot_ring(c: &mut Circuit) -> Result<()> {
    let n = c.n_qubits();
    match n {
        1 => Ok(()),
        2 => c.push(Gate::Cnot {
            control: 0,
            target: 1,
        }),
        _ => {
            for j in 0..n {
                c.push(Gate::Cnot {
                    control: j,
                    target: (j + 1) % n,
                })?;
            }
            Ok(())
        }
    }
}

pub fn push_cz_ladder(c: &mut Circuit) -> Result<()> {
    for j in 0..c.n_qubits().saturating_sub(1) {
        c.push(Gate::Cz(j, j + 1))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::circuit::apply_circuit;
    use crate::sim::state::{StateVector, C64};

    #[test]
    fn names_round_trip() {
        for k in TemplateKind::ALL {
            assert_eq!(k.name().parse::<TemplateKind>().unwrap(), k);
        }
    }

    #[test]
    fn register_sizes() {
        assert_eq!(build_template(TemplateKind::QaoaEmbedding, 3, 2, 0).unwrap().n_qubits(), 4);
        assert_eq!(build_template(TemplateKind::QaoaEmbedding, 3, 2, 0).unwrap().n_params(), 16);
        assert_eq!(build_template(TemplateKind::StronglyEntangling, 3, 2, 0).unwrap().n_params(), 18);
        assert_eq!(build_template(TemplateKind::CnotRing, 2, 1, 0).unwrap().gates().len(), 1);
        assert_eq!(build_template(TemplateKind::CnotRing, 4, 1, 0).unwrap().gates().len(), 4);
        assert_eq!(build_template(TemplateKind::CzLadder, 4, 1, 0).unwrap().gates().len(), 3);
        assert!(build_template(TemplateKind::IqpEmbedding, 0, 1, 0).is_err());
    }

    #[test]
    fn random_layers_are_seeded() {
        let a = build_template(TemplateKind::RandomLayers, 3, 4, 9).unwrap();
        let b = build_template(TemplateKind::RandomLayers, 3, 4, 9).unwrap();
        assert_eq!(a.gates(), b.gates());
        assert_eq!(a.gates().len(), 12);
        let one = build_template(TemplateKind::RandomLayers, 1, 5, 1).unwrap();
        assert!(one.is_product());
    }

    #[test]
    fn iqp_two_features_closed_form() {
        // one repeat on |00>: H H, then phases exp(-i(x0 z0 + x1 z1 + x0 x1 z0 z1)/2)
        let x = [0.4, -1.3];
        let c = build_template(TemplateKind::IqpEmbedding, 2, 1, 0).unwrap();
        let s = apply_circuit(&c, &x, &[]).unwrap();
        let z = |b: usize| if b == 0 { 1.0 } else { -1.0 };
        let want: Vec<C64> = (0..4)
            .map(|k| {
                let (z0, z1) = (z(k >> 1), z(k & 1));
                C64::from_polar(0.5, -(x[0] * z0 + x[1] * z1 + x[0] * x[1] * z0 * z1) / 2.0)
            })
            .collect();
        let want = StateVector::from_amplitudes(want).unwrap();
        assert!((s.inner(&want).unwrap().norm() - 1.0).abs() < 1e-14);
    }
}
