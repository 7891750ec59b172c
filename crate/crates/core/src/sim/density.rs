use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{invalid, Error, Result};
use crate::sim::observable::Observable;
use crate::sim::state::{check_register, StateVector, C64};

/// Largest register accepted for dense density matrices.
pub const MAX_DENSITY_QUBITS: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    /// Wraps a matrix, checking shape, Hermiticity, trace and positivity.
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        let dim = matrix.nrows();
        if dim != matrix.ncols() || dim < 2 || !dim.is_power_of_two() {
            return Err(invalid(format!(
                "density matrix must be square with power-of-two side, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        check_register(n_qubits, MAX_DENSITY_QUBITS)?;
        let rho = Self { n_qubits, matrix };
        if rho.hermiticity_error() > 1e-10 {
            return Err(invalid("density matrix is not Hermitian"));
        }
        if (rho.trace() - 1.0).abs() > 1e-10 {
            return Err(invalid(format!("density matrix trace {} != 1", rho.trace())));
        }
        if rho.eigenvalues().iter().any(|&e| e < -1e-10) {
            return Err(invalid("density matrix has negative eigenvalues"));
        }
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(n_qubits: usize, matrix: DMatrix<C64>) -> Self {
        Self { n_qubits, matrix }
    }

    pub fn from_pure(state: &StateVector) -> Result<Self> {
        check_register(state.n_qubits(), MAX_DENSITY_QUBITS)?;
        let v = nalgebra::DVector::from_column_slice(state.amplitudes());
        Ok(Self {
            n_qubits: state.n_qubits(),
            matrix: &v * v.adjoint(),
        })
    }

    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        check_register(n_qubits, MAX_DENSITY_QUBITS)?;
        let dim = 1usize << n_qubits;
        Ok(Self {
            n_qubits,
            matrix: DMatrix::identity(dim, dim) * C64::new(1.0 / dim as f64, 0.0),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    /// `max |rho - rho^dagger|` over entries.
    pub fn hermiticity_error(&self) -> f64 {
        let d = &self.matrix - self.matrix.adjoint();
        d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut e: Vec<f64> = SymmetricEigen::new(self.matrix.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        e.sort_by(f64::total_cmp);
        e
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|z| z.re).collect()
    }

    /// `tr[O rho]`.
    pub fn expectation(&self, obs: &Observable) -> Result<f64> {
        if obs.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                what: "observable qubit count",
                expected: self.n_qubits,
                got: obs.n_qubits(),
            });
        }
        let o = obs.to_dense();
        Ok((o * &self.matrix).trace().re)
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        let n = self.n_qubits + other.n_qubits;
        check_register(n, MAX_DENSITY_QUBITS)?;
        Ok(Self {
            n_qubits: n,
            matrix: self.matrix.kronecker(&other.matrix),
        })
    }
}

/// `exp(-H/T) / Z` from the eigendecomposition of the dense Hamiltonian.
pub fn gibbs_state(hamiltonian: &Observable, temperature: f64) -> Result<DensityMatrix> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(invalid(format!("temperature must be positive, got {temperature}")));
    }
    let n = hamiltonian.n_qubits();
    check_register(n, MAX_DENSITY_QUBITS)?;
    let h = hamiltonian.to_dense();
    let eig = SymmetricEigen::new(h);
    let e_min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&e| (-(e - e_min) / temperature).exp())
        .collect();
    let z: f64 = weights.iter().sum();
    let v = &eig.eigenvectors;
    let dim = v.nrows();
    let mut scaled = v.clone();
    for (k, w) in weights.iter().enumerate() {
        let s = C64::new(w / z, 0.0);
        for i in 0..dim {
            scaled[(i, k)] *= s;
        }
    }
    let mut rho = scaled * v.adjoint();
    // symmetrize away rounding
    let adj = rho.adjoint();
    rho = (rho + adj) * C64::new(0.5, 0.0);
    Ok(DensityMatrix::from_matrix_unchecked(n, rho))
}

/// Reduced state of the listed wires (kept in the given order), tracing out
/// the rest.
pub fn reduced_density_matrix_of(state: &StateVector, keep: &[usize]) -> Result<DensityMatrix> {
    let n = state.n_qubits();
    if keep.is_empty() {
        return Err(invalid("must keep at least one wire"));
    }
    for (i, &w) in keep.iter().enumerate() {
        if w >= n {
            return Err(invalid(format!("wire {w} out of range for {n} qubits")));
        }
        if keep[..i].contains(&w) {
            return Err(invalid(format!("wire {w} listed twice")));
        }
    }
    check_register(keep.len(), MAX_DENSITY_QUBITS)?;
    let masks: Vec<usize> = keep.iter().map(|&w| 1 << (n - 1 - w)).collect();
    let keep_mask: usize = masks.iter().sum();
    let sub = |k: usize| -> usize {
        masks
            .iter()
            .fold(0, |acc, &m| (acc << 1) | usize::from(k & m != 0))
    };
    let m = keep.len();
    let dim = 1usize << m;
    let mut rho = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
    let amps = state.amplitudes();
    // group basis indices by the traced-out bits
    let rest_mask = (state.dim() - 1) & !keep_mask;
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for k in 0..amps.len() {
        groups.entry(k & rest_mask).or_default().push(k);
    }
    for members in groups.values() {
        for &a in members {
            for &b in members {
                rho[(sub(a), sub(b))] += amps[a] * amps[b].conj();
            }
        }
    }
    Ok(DensityMatrix::from_matrix_unchecked(m, rho))
}

/// One-qubit reduced state of `wire`.
pub fn reduced_density_matrix(state: &StateVector, wire: usize) -> Result<DensityMatrix> {
    reduced_density_matrix_of(state, &[wire])
}

/// Single-qubit Bloch vector `(<X>, <Y>, <Z>)` of `wire`, computed without
/// building the reduced matrix.
pub fn bloch_vector(state: &StateVector, wire: usize) -> [f64; 3] {
    let mask = state.wire_mask(wire);
    let mut r01 = C64::new(0.0, 0.0);
    let mut z = 0.0;
    for (k, a) in state.amplitudes().iter().enumerate() {
        if k & mask == 0 {
            z += a.norm_sqr();
            r01 += a * state.amplitudes()[k | mask].conj();
        } else {
            z -= a.norm_sqr();
        }
    }
    // rho_01 = sum a_{k0} conj(a_{k1}); <X> = 2 Re rho_01, <Y> = -2 Im rho_01
    [2.0 * r01.re, -2.0 * r01.im, z]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::circuit::{apply_circuit, Angle, Circuit, Gate};
    use proptest::prelude::*;

    fn bell() -> StateVector {
        let mut c = Circuit::new(2, 0, 0).unwrap();
        c.extend([Gate::H(0), Gate::Cnot { control: 0, target: 1 }]).unwrap();
        apply_circuit(&c, &[], &[]).unwrap()
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let r = reduced_density_matrix(&bell(), 1).unwrap();
        let mixed = DensityMatrix::maximally_mixed(1).unwrap();
        assert!((r.matrix() - mixed.matrix()).norm() < 1e-15);
        assert_eq!(bloch_vector(&bell(), 0).map(|v| (v * 1e12).round()), [0.0; 3]);
    }

    #[test]
    fn gibbs_limits() {
        // Z with T -> 0 tends to |1><1|; large T tends to I/2
        let h = Observable::z(1, 0);
        let cold = gibbs_state(&h, 1e-3).unwrap();
        assert!((cold.diagonal()[1] - 1.0).abs() < 1e-12);
        let hot = gibbs_state(&h, 1e6).unwrap();
        assert!((hot.diagonal()[0] - 0.5).abs() < 1e-6);
        // analytic: p0 = e^{-1/T} / (e^{-1/T} + e^{1/T})
        let t = 0.7;
        let g = gibbs_state(&h, t).unwrap();
        let p0 = (-1.0 / t).exp() / ((-1.0 / t).exp() + (1.0 / t).exp());
        assert!((g.diagonal()[0] - p0).abs() < 1e-12);
        assert!(gibbs_state(&h, 0.0).is_err());
    }

    #[test]
    fn keep_order_permutes_subsystems() {
        let mut c = Circuit::new(2, 0, 0).unwrap();
        c.push(Gate::X(1)).unwrap();
        let s = apply_circuit(&c, &[], &[]).unwrap();
        let r = reduced_density_matrix_of(&s, &[1, 0]).unwrap();
        // |01> seen with wire 1 first is |10>, index 2
        assert!((r.diagonal()[2] - 1.0).abs() < 1e-15);
        assert!(reduced_density_matrix_of(&s, &[0, 0]).is_err());
    }

    proptest! {
        #[test]
        fn bloch_vector_matches_reduced_state(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0) {
            let mut circ = Circuit::new(2, 0, 0).unwrap();
            circ.extend([
                Gate::Ry(0, Angle::constant(a)),
                Gate::Rz(0, Angle::constant(b)),
                Gate::Cnot { control: 0, target: 1 },
                Gate::Rx(1, Angle::constant(c)),
            ]).unwrap();
            let s = apply_circuit(&circ, &[], &[]).unwrap();
            for w in 0..2 {
                let r = reduced_density_matrix(&s, w).unwrap();
                let bv = bloch_vector(&s, w);
                for (k, word) in ["X", "Y", "Z"].iter().enumerate() {
                    let o = Observable::from_words(&[(1.0, word)]).unwrap();
                    prop_assert!((r.expectation(&o).unwrap() - bv[k]).abs() < 1e-12);
                }
                prop_assert!((r.trace() - 1.0).abs() < 1e-12);
                prop_assert!(r.eigenvalues().iter().all(|&e| e > -1e-12));
            }
        }
    }
}
