use num_complex::Complex64;

use crate::error::{check_len, invalid, Error, Result};
use crate::sim::observable::Pauli;

pub type C64 = Complex64;

/// Largest register accepted for state-vector simulation.
pub const MAX_STATE_QUBITS: usize = 20;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Dense pure state of `n_qubits` qubits.
///
/// Wire 0 is the most significant bit of the basis index, so the amplitude
/// of `|b_0 b_1 ... b_{n-1}>` lives at index `sum_k b_k 2^(n-1-k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<C64>,
}

pub(crate) fn check_register(n_qubits: usize, cap: usize) -> Result<()> {
    if n_qubits == 0 {
        return Err(invalid("a register needs at least one qubit"));
    }
    if n_qubits > cap {
        return Err(Error::RegisterCap {
            qubits: n_qubits,
            cap,
        });
    }
    Ok(())
}

impl StateVector {
    /// The computational basis state `|0...0>`.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_register(n_qubits, MAX_STATE_QUBITS)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(invalid(format!("basis index {index} out of range for {n_qubits} qubits")));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ok(Self { n_qubits, amps })
    }

    /// Builds a state from raw amplitudes, normalizing them.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let dim = amps.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(invalid(format!("amplitude count {dim} is not a power of two >= 2")));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        check_register(n_qubits, MAX_STATE_QUBITS)?;
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(invalid("cannot normalize a zero or non-finite amplitude vector"));
        }
        let amps = amps.into_iter().map(|a| a / norm).collect();
        Ok(Self { n_qubits, amps })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::from_amplitudes(values.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    /// Wraps amplitudes without normalizing; used for unnormalized
    /// intermediate vectors such as `M|psi>` in reverse-mode sweeps.
    pub(crate) fn from_raw(n_qubits: usize, amps: Vec<C64>) -> Self {
        debug_assert_eq!(amps.len(), 1 << n_qubits);
        Self { n_qubits, amps }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        check_len("state dimension", self.dim(), other.dim())?;
        Ok(self.inner_unchecked(other))
    }

    pub(crate) fn inner_unchecked(&self, other: &StateVector) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Tensor product `self ⊗ other`; `self` occupies the leading wires.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let n = self.n_qubits + other.n_qubits;
        check_register(n, MAX_STATE_QUBITS)?;
        let mut amps = Vec::with_capacity(1 << n);
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(Self { n_qubits: n, amps })
    }

    #[inline]
    pub(crate) fn wire_mask(&self, wire: usize) -> usize {
        1 << (self.n_qubits - 1 - wire)
    }

    pub(crate) fn apply_1q(&mut self, wire: usize, m: &[[C64; 2]; 2]) {
        let mask = self.wire_mask(wire);
        let dim = self.amps.len();
        let mut base = 0;
        while base < dim {
            for i in base..base + mask {
                let j = i | mask;
                let a0 = self.amps[i];
                let a1 = self.amps[j];
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[j] = m[1][0] * a0 + m[1][1] * a1;
            }
            base += 2 * mask;
        }
    }

    /// Applies `m` to `target` on the subspace where `control` is 1.
    pub(crate) fn apply_controlled_1q(&mut self, control: usize, target: usize, m: &[[C64; 2]; 2]) {
        let cmask = self.wire_mask(control);
        let tmask = self.wire_mask(target);
        for i in 0..self.amps.len() {
            if i & cmask != 0 && i & tmask == 0 {
                let j = i | tmask;
                let a0 = self.amps[i];
                let a1 = self.amps[j];
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[j] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    pub(crate) fn apply_x(&mut self, wire: usize) {
        let mask = self.wire_mask(wire);
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                self.amps.swap(i, i | mask);
            }
        }
    }

    pub(crate) fn apply_h(&mut self, wire: usize) {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mask = self.wire_mask(wire);
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let j = i | mask;
                let a0 = self.amps[i];
                let a1 = self.amps[j];
                self.amps[i] = (a0 + a1) * s;
                self.amps[j] = (a0 - a1) * s;
            }
        }
    }

    pub(crate) fn apply_cnot(&mut self, control: usize, target: usize) {
        let cmask = self.wire_mask(control);
        let tmask = self.wire_mask(target);
        for i in 0..self.amps.len() {
            if i & cmask != 0 && i & tmask == 0 {
                self.amps.swap(i, i | tmask);
            }
        }
    }

    pub(crate) fn apply_cz(&mut self, a: usize, b: usize) {
        let mask = self.wire_mask(a) | self.wire_mask(b);
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if i & mask == mask {
                *amp = -*amp;
            }
        }
    }

    /// Bit masks describing a Pauli string on the given wires: the X-type
    /// flip mask, the Z-type sign mask and the number of Y factors.
    pub(crate) fn pauli_masks(&self, wires: &[usize], paulis: &[Pauli]) -> (usize, usize, usize) {
        let mut flip = 0;
        let mut sign = 0;
        let mut n_y = 0;
        for (&w, p) in wires.iter().zip(paulis) {
            let m = self.wire_mask(w);
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

    /// Returns `P|self>` for a Pauli string `P` acting on `wires`, optionally
    /// restricted to the subspace where `control` is 1 (zero elsewhere).
    pub(crate) fn pauli_applied(
        &self,
        wires: &[usize],
        paulis: &[Pauli],
        control: Option<usize>,
    ) -> StateVector {
        let (flip, sign, n_y) = self.pauli_masks(wires, paulis);
        let y_phase = i_pow(n_y);
        let cmask = control.map(|c| self.wire_mask(c)).unwrap_or(0);
        let mut out = vec![ZERO; self.amps.len()];
        for (k, &a) in self.amps.iter().enumerate() {
            if k & cmask != cmask {
                continue;
            }
            let s = if (k & sign).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            out[k ^ flip] += a * y_phase * s;
        }
        StateVector {
            n_qubits: self.n_qubits,
            amps: out,
        }
    }

    /// `<bra|P|self>` for a Pauli string on `wires`, restricted to the
    /// `control = 1` subspace when a control is given.
    pub(crate) fn pauli_matrix_element(
        &self,
        bra: &StateVector,
        wires: &[usize],
        paulis: &[Pauli],
        control: Option<usize>,
    ) -> C64 {
        let (flip, sign, n_y) = self.pauli_masks(wires, paulis);
        let cmask = control.map(|c| self.wire_mask(c)).unwrap_or(0);
        let mut acc = ZERO;
        for (k, &a) in self.amps.iter().enumerate() {
            if k & cmask != cmask {
                continue;
            }
            let t = bra.amps[k ^ flip].conj() * a;
            if (k & sign).count_ones() % 2 == 0 {
                acc += t;
            } else {
                acc -= t;
            }
        }
        acc * i_pow(n_y)
    }

    /// Applies `exp(-i theta/2 P)`, optionally controlled.
    pub(crate) fn apply_pauli_rotation(
        &mut self,
        wires: &[usize],
        paulis: &[Pauli],
        control: Option<usize>,
        theta: f64,
    ) {
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        if control.is_none() && wires.len() == 1 {
            let m = single_rotation_matrix(paulis[0], c, s);
            self.apply_1q(wires[0], &m);
            return;
        }
        if let Some(ctrl) = control {
            if wires.len() == 1 {
                let m = single_rotation_matrix(paulis[0], c, s);
                self.apply_controlled_1q(ctrl, wires[0], &m);
                return;
            }
        }
        let (flip, sign, _) = self.pauli_masks(wires, paulis);
        if flip == 0 && control.is_none() {
            // diagonal generator: eigenvalue (-1)^parity
            let minus = C64::new(c, -s);
            let plus = C64::new(c, s);
            for (k, a) in self.amps.iter_mut().enumerate() {
                *a *= if (k & sign).count_ones() % 2 == 0 { minus } else { plus };
            }
            return;
        }
        let p_psi = self.pauli_applied(wires, paulis, control);
        let cmask = control.map(|c| self.wire_mask(c)).unwrap_or(0);
        let neg_i_s = C64::new(0.0, -s);
        for (k, (a, pa)) in self.amps.iter_mut().zip(p_psi.amps).enumerate() {
            if k & cmask == cmask {
                *a = *a * c + pa * neg_i_s;
            }
        }
    }
}

fn i_pow(n: usize) -> C64 {
    match n % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

fn single_rotation_matrix(p: Pauli, c: f64, s: f64) -> [[C64; 2]; 2] {
    match p {
        Pauli::I => [
            [C64::new(c, -s), ZERO],
            [ZERO, C64::new(c, -s)],
        ],
        Pauli::X => [
            [C64::new(c, 0.0), C64::new(0.0, -s)],
            [C64::new(0.0, -s), C64::new(c, 0.0)],
        ],
        Pauli::Y => [
            [C64::new(c, 0.0), C64::new(-s, 0.0)],
            [C64::new(s, 0.0), C64::new(c, 0.0)],
        ],
        Pauli::Z => [
            [C64::new(c, -s), ZERO],
            [ZERO, C64::new(c, s)],
        ],
    }
}

/// Amplitude-embeds `x` into `n_qubits` qubits.
///
/// The first `x.len()` amplitudes are set to `x`, the remaining ones to the
/// constant `1/2^n`, and the whole vector is normalized.
pub fn amplitude_embed(x: &[f64], n_qubits: usize) -> Result<StateVector> {
    if x.is_empty() {
        return Err(invalid("cannot amplitude-embed an empty vector"));
    }
    check_register(n_qubits, MAX_STATE_QUBITS)?;
    let dim = 1usize << n_qubits;
    if x.len() > dim {
        return Err(invalid(format!(
            "{} features do not fit into {} amplitudes of {n_qubits} qubits",
            x.len(),
            dim
        )));
    }
    let pad = 1.0 / dim as f64;
    let mut amps: Vec<C64> = x.iter().map(|&v| C64::new(v, 0.0)).collect();
    amps.resize(dim, C64::new(pad, 0.0));
    StateVector::from_amplitudes(amps)
}

/// Smallest register with `2^n >= d` (at least one qubit).
pub fn amplitude_register_size(d: usize) -> usize {
    let mut n = 1;
    while (1usize << n) < d {
        n += 1;
    }
    n
}

/// `|<a|b>|^2`.
pub fn state_overlap(a: &StateVector, b: &StateVector) -> Result<f64> {
    if a.n_qubits() != b.n_qubits() {
        return Err(Error::DimensionMismatch {
            what: "qubit count",
            expected: a.n_qubits(),
            got: b.n_qubits(),
        });
    }
    Ok(a.inner_unchecked(b).norm_sqr().min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_state(n: usize, seed: u64) -> StateVector {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let amps = (0..1 << n)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        StateVector::from_amplitudes(amps).unwrap()
    }

    fn max_diff(a: &StateVector, b: &StateVector) -> f64 {
        a.amps.iter().zip(&b.amps).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn wire_zero_is_most_significant() {
        let mut s = StateVector::zero(3).unwrap();
        s.apply_x(0);
        assert_eq!(s.amplitudes()[0b100], ONE);
        let mut s = StateVector::zero(3).unwrap();
        s.apply_x(2);
        assert_eq!(s.amplitudes()[0b001], ONE);
    }

    #[test]
    fn cnot_truth_table() {
        for (input, output) in [(0b00, 0b00), (0b01, 0b01), (0b10, 0b11), (0b11, 0b10)] {
            let mut s = StateVector::basis(2, input).unwrap();
            s.apply_cnot(0, 1);
            assert_eq!(s.amplitudes()[output], ONE, "input {input:02b}");
        }
    }

    #[test]
    fn cz_flips_only_the_all_ones_amplitude() {
        let mut s = random_state(2, 1);
        let before = s.clone();
        s.apply_cz(0, 1);
        for k in 0..3 {
            assert_eq!(s.amps[k], before.amps[k]);
        }
        assert_eq!(s.amps[3], -before.amps[3]);
    }

    #[test]
    fn hadamard_is_an_involution() {
        let mut s = random_state(3, 2);
        let before = s.clone();
        s.apply_h(1);
        s.apply_h(1);
        assert!(max_diff(&s, &before) < 1e-14);
    }

    #[test]
    fn xx_rotation_is_conjugated_zz_rotation() {
        let theta = 0.731;
        let mut a = random_state(3, 3);
        let mut b = a.clone();
        a.apply_pauli_rotation(&[0, 2], &[Pauli::X, Pauli::X], None, theta);
        b.apply_h(0);
        b.apply_h(2);
        b.apply_pauli_rotation(&[0, 2], &[Pauli::Z, Pauli::Z], None, theta);
        b.apply_h(0);
        b.apply_h(2);
        assert!(max_diff(&a, &b) < 1e-14);
    }

    #[test]
    fn controlled_rotation_acts_only_when_control_set() {
        let mut s = StateVector::basis(2, 0b01).unwrap();
        s.apply_pauli_rotation(&[1], &[Pauli::X], Some(0), std::f64::consts::PI);
        assert!((s.amplitudes()[0b01] - ONE).norm() < 1e-15);
        let mut s = StateVector::basis(2, 0b10).unwrap();
        s.apply_pauli_rotation(&[1], &[Pauli::X], Some(0), std::f64::consts::PI);
        // RX(pi) = -iX
        assert!((s.amplitudes()[0b11] - C64::new(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn amplitude_embedding_pads_with_constant() {
        let s = amplitude_embed(&[3.0, 4.0, 0.0], 2).unwrap();
        let raw = [3.0, 4.0, 0.0, 0.25];
        let norm = raw.iter().map(|v: &f64| v * v).sum::<f64>().sqrt();
        for (a, r) in s.amplitudes().iter().zip(raw) {
            assert!((a.re - r / norm).abs() < 1e-15 && a.im == 0.0);
        }
        assert!(amplitude_embed(&[1.0; 5], 2).is_err());
    }

    #[test]
    fn register_sizes() {
        assert_eq!(amplitude_register_size(1), 1);
        assert_eq!(amplitude_register_size(2), 1);
        assert_eq!(amplitude_register_size(3), 2);
        assert_eq!(amplitude_register_size(16), 4);
        assert_eq!(amplitude_register_size(17), 5);
        assert!(StateVector::zero(MAX_STATE_QUBITS + 1).is_err());
        assert!(StateVector::zero(0).is_err());
    }

    #[test]
    fn tensor_orders_left_factor_first() {
        let a = StateVector::basis(1, 1).unwrap();
        let b = StateVector::basis(2, 0b01).unwrap();
        let t = a.tensor(&b).unwrap();
        assert_eq!(t.amplitudes()[0b101], ONE);
    }

    proptest! {
        #[test]
        fn rotations_preserve_norm(theta in -10.0f64..10.0, seed in 0u64..1000, p in 0usize..4, q in 0usize..4) {
            let paulis = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
            let mut s = random_state(3, seed);
            s.apply_pauli_rotation(&[0, 2], &[paulis[p], paulis[q]], None, theta);
            s.apply_pauli_rotation(&[1], &[paulis[q]], Some(2), theta * 0.5);
            prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn rotation_by_opposite_angle_undoes(theta in -10.0f64..10.0, seed in 0u64..1000) {
            let mut s = random_state(3, seed);
            let before = s.clone();
            s.apply_pauli_rotation(&[0, 1, 2], &[Pauli::Y, Pauli::X, Pauli::Z], None, theta);
            s.apply_pauli_rotation(&[0, 1, 2], &[Pauli::Y, Pauli::X, Pauli::Z], None, -theta);
            prop_assert!(max_diff(&s, &before) < 1e-12);
        }

        #[test]
        fn overlap_is_a_probability(a in 0u64..500, b in 0u64..500) {
            let f = state_overlap(&random_state(2, a), &random_state(2, b)).unwrap();
            prop_assert!((0.0..=1.0).contains(&f));
        }
    }
}
