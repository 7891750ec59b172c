use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sim::state::{StateVector, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Result<Self> {
        match c {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            other => Err(Error::Parse(format!("unknown Pauli letter {other:?}"))),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// A Pauli word over a whole register, e.g. `ZIZ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliString(Vec<Pauli>);

impl PauliString {
    pub fn new(ops: Vec<Pauli>) -> Self {
        Self(ops)
    }

    /// `P` on `wire`, identity elsewhere.
    pub fn single(n_qubits: usize, wire: usize, p: Pauli) -> Self {
        let mut ops = vec![Pauli::I; n_qubits];
        ops[wire] = p;
        Self(ops)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ops(&self) -> &[Pauli] {
        &self.0
    }

    /// `(flip mask, sign mask, number of Y factors)` with wire 0 as the MSB.
    pub(crate) fn masks(&self) -> (usize, usize, usize) {
        let n = self.0.len();
        let mut flip = 0;
        let mut sign = 0;
        let mut n_y = 0;
        for (w, p) in self.0.iter().enumerate() {
            let m = 1 << (n - 1 - w);
            match p {
                Pauli::I => {}
                Pauli::X => flip |= m,
                Pauli::Y => {
                    flip |= m;
                    sign |= m;
                    n_y += 1;
                }
                Pauli::Z => sign |= m,
            }
        }
        (flip, sign, n_y)
    }
}

impl FromStr for PauliString {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        s.chars().map(Pauli::from_char).collect::<Result<Vec<_>>>().map(Self)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

/// Real linear combination of Pauli words.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    n_qubits: usize,
    terms: Vec<(f64, PauliString)>,
}

impl Observable {
    pub fn new(n_qubits: usize, terms: Vec<(f64, PauliString)>) -> Result<Self> {
        for (c, p) in &terms {
            if !c.is_finite() {
                return Err(Error::NonFinite(format!("observable coefficient {c}")));
            }
            if p.len() != n_qubits {
                return Err(invalid(format!(
                    "Pauli word {p} has length {} but the register has {n_qubits} qubits",
                    p.len()
                )));
            }
        }
        Ok(Self { n_qubits, terms })
    }

    /// Parses terms like `[(0.5, "ZIZ"), (0.2, "XXI")]`.
    pub fn from_words(terms: &[(f64, &str)]) -> Result<Self> {
        let parsed = terms
            .iter()
            .map(|(c, w)| Ok((*c, w.parse::<PauliString>()?)))
            .collect::<Result<Vec<_>>>()?;
        let n = parsed.first().map(|(_, p)| p.len()).unwrap_or(0);
        Self::new(n, parsed)
    }

    pub fn zero(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            terms: Vec::new(),
        }
    }

    /// `Z` on a single wire.
    pub fn z(n_qubits: usize, wire: usize) -> Self {
        Self {
            n_qubits,
            terms: vec![(1.0, PauliString::single(n_qubits, wire, Pauli::Z))],
        }
    }

    /// `(1/k) sum_{j<k} Z_j`.
    pub fn mean_z(n_qubits: usize, k: usize) -> Self {
        let w = 1.0 / k as f64;
        Self {
            n_qubits,
            terms: (0..k)
                .map(|j| (w, PauliString::single(n_qubits, j, Pauli::Z)))
                .collect(),
        }
    }

    /// `sum_j w_j Z_j`.
    pub fn weighted_z(n_qubits: usize, weights: &[f64]) -> Self {
        Self {
            n_qubits,
            terms: weights
                .iter()
                .enumerate()
                .filter(|(_, w)| **w != 0.0)
                .map(|(j, &w)| (w, PauliString::single(n_qubits, j, Pauli::Z)))
                .collect(),
        }
    }

    pub fn push(&mut self, coeff: f64, word: PauliString) -> Result<()> {
        if word.len() != self.n_qubits {
            return Err(invalid("Pauli word length differs from register size"));
        }
        self.terms.push((coeff, word));
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    /// Sum of absolute coefficients, an upper bound on `|<O>|`.
    pub fn norm_bound(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c.abs()).sum()
    }

    /// `O|psi>` without normalization.
    pub(crate) fn apply(&self, psi: &StateVector) -> StateVector {
        let amps = psi.amplitudes();
        let mut out = vec![C64::new(0.0, 0.0); amps.len()];
        for (c, word) in &self.terms {
            let (flip, sign, n_y) = word.masks();
            let phase = match n_y % 4 {
                0 => C64::new(*c, 0.0),
                1 => C64::new(0.0, *c),
                2 => C64::new(-*c, 0.0),
                _ => C64::new(0.0, -*c),
            };
            for (k, &a) in amps.iter().enumerate() {
                let s = if (k & sign).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                out[k ^ flip] += a * phase * s;
            }
        }
        StateVector::from_raw(psi.n_qubits(), out)
    }

    /// Dense `2^n x 2^n` matrix (row-major), for density-matrix work.
    pub fn to_dense(&self) -> nalgebra::DMatrix<C64> {
        let dim = 1usize << self.n_qubits;
        let mut m = nalgebra::DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
        for (c, word) in &self.terms {
            let (flip, sign, n_y) = word.masks();
            let phase = match n_y % 4 {
                0 => C64::new(*c, 0.0),
                1 => C64::new(0.0, *c),
                2 => C64::new(-*c, 0.0),
                _ => C64::new(0.0, -*c),
            };
            for k in 0..dim {
                let s = if (k & sign).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                m[(k ^ flip, k)] += phase * s;
            }
        }
        m
    }
}

/// `<psi|O|psi>`; the imaginary residue is discarded.
pub fn expectation(state: &StateVector, obs: &Observable) -> Result<f64> {
    if state.n_qubits() != obs.n_qubits() {
        return Err(Error::DimensionMismatch {
            what: "observable qubit count",
            expected: state.n_qubits(),
            got: obs.n_qubits(),
        });
    }
    Ok(expectation_unchecked(state, obs))
}

pub(crate) fn expectation_unchecked(state: &StateVector, obs: &Observable) -> f64 {
    let amps = state.amplitudes();
    let mut total = 0.0;
    for (c, word) in &obs.terms {
        let (flip, sign, n_y) = word.masks();
        let term = if flip == 0 {
            amps.iter()
                .enumerate()
                .map(|(k, a)| {
                    let p = a.norm_sqr();
                    if (k & sign).count_ones() % 2 == 0 {
                        p
                    } else {
                        -p
                    }
                })
                .sum::<f64>()
        } else {
            let phase = match n_y % 4 {
                0 => C64::new(1.0, 0.0),
                1 => C64::new(0.0, 1.0),
                2 => C64::new(-1.0, 0.0),
                _ => C64::new(0.0, -1.0),
            };
            let acc: C64 = amps
                .iter()
                .enumerate()
                .map(|(k, &a)| {
                    let s = if (k & sign).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                    amps[k ^ flip].conj() * a * phase * s
                })
                .sum();
            acc.re
        };
        total += c * term;
    }
    total
}

/// `<Z_j>` for every wire.
pub fn z_expectations(state: &StateVector) -> Vec<f64> {
    let n = state.n_qubits();
    let mut out = vec![0.0; n];
    for (k, a) in state.amplitudes().iter().enumerate() {
        let p = a.norm_sqr();
        for (w, o) in out.iter_mut().enumerate() {
            if k & (1 << (n - 1 - w)) == 0 {
                *o += p;
            } else {
                *o -= p;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_state(re: &[f64], im: &[f64]) -> StateVector {
        StateVector::from_amplitudes(re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)).collect()).unwrap()
    }

    #[test]
    fn parse_round_trip() {
        let p: PauliString = "XIZY".parse().unwrap();
        assert_eq!(p.to_string(), "XIZY");
        assert!("XQ".parse::<PauliString>().is_err());
        assert!(Observable::from_words(&[(1.0, "ZZ"), (0.5, "Z")]).is_err());
    }

    #[test]
    fn pauli_y_on_basis_states() {
        // Y|0> = i|1>
        let o = Observable::from_words(&[(1.0, "Y")]).unwrap();
        let out = o.apply(&StateVector::zero(1).unwrap());
        assert!((out.amplitudes()[1] - C64::new(0.0, 1.0)).norm() < 1e-15);
        let m = o.to_dense();
        assert!((m[(0, 1)] - C64::new(0.0, -1.0)).norm() < 1e-15);
    }

    proptest! {
        #[test]
        fn expectation_matches_dense_matrix(
            re in proptest::collection::vec(-1.0f64..1.0, 8),
            im in proptest::collection::vec(-1.0f64..1.0, 8),
            c in proptest::collection::vec(-2.0f64..2.0, 3),
        ) {
            prop_assume!(re.iter().chain(&im).map(|v| v * v).sum::<f64>() > 1e-3);
            let psi = random_state(&re, &im);
            let o = Observable::from_words(&[(c[0], "XYZ"), (c[1], "ZIZ"), (c[2], "YYI")]).unwrap();
            let m = o.to_dense();
            let v = nalgebra::DVector::from_column_slice(psi.amplitudes());
            let dense = (v.adjoint() * &m * &v)[(0, 0)];
            prop_assert!(dense.im.abs() < 1e-12);
            prop_assert!((expectation(&psi, &o).unwrap() - dense.re).abs() < 1e-12);
            prop_assert!(expectation(&psi, &o).unwrap().abs() <= o.norm_bound() + 1e-12);
            let applied = o.apply(&psi);
            let mv = &m * &v;
            for k in 0..8 {
                prop_assert!((applied.amplitudes()[k] - mv[k]).norm() < 1e-12);
            }
        }

        #[test]
        fn z_expectations_match_single_wire_observables(
            re in proptest::collection::vec(-1.0f64..1.0, 8),
        ) {
            prop_assume!(re.iter().map(|v| v * v).sum::<f64>() > 1e-3);
            let psi = StateVector::from_real(&re).unwrap();
            let zs = z_expectations(&psi);
            for (w, z) in zs.iter().enumerate() {
                prop_assert!((expectation(&psi, &Observable::z(3, w)).unwrap() - z).abs() < 1e-12);
            }
            let mean = expectation(&psi, &Observable::mean_z(3, 2)).unwrap();
            prop_assert!((mean - (zs[0] + zs[1]) / 2.0).abs() < 1e-12);
        }
    }
}
