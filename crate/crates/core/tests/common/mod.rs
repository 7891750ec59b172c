//! Independent oracles shared by the integration suites.

#![allow(dead_code)]

use qmlbench_core::sim::{apply_circuit, Circuit, StateVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

/// Simulates every wire of a product circuit on its own one-qubit register
/// and joins the results with Kronecker products (wire 0 leading).
pub fn product_state(c: &Circuit, x: &[f64], params: &[f64]) -> StateVector {
    let mut out: Option<StateVector> = None;
    for w in 0..c.n_qubits() {
        let wire = c.restricted_to_wire(w).unwrap();
        let s = apply_circuit(&wire, x, params).unwrap();
        out = Some(match out {
            None => s,
            Some(acc) => acc.tensor(&s).unwrap(),
        });
    }
    out.unwrap()
}

/// Largest entrywise distance between two state vectors.
pub fn state_distance(a: &StateVector, b: &StateVector) -> f64 {
    a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(u, v)| (u - v).norm())
        .fold(0.0, f64::max)
}

/// `<Z>` of a one-qubit state.
pub fn z_of(s: &StateVector) -> f64 {
    let a = s.amplitudes();
    a[0].norm_sqr() - a[1].norm_sqr()
}

/// Fidelity `|<a|b>|^2` from a plain loop over amplitudes.
pub fn fidelity(a: &StateVector, b: &StateVector) -> f64 {
    let mut s = num_complex::Complex64::new(0.0, 0.0);
    for (u, v) in a.amplitudes().iter().zip(b.amplitudes()) {
        s += u.conj() * v;
    }
    s.norm_sqr()
}

/// Gradient tolerance: relative 1e-6, or absolute 1e-8 where both values
/// are below 1e-2 in magnitude.
pub fn grad_close(a: f64, b: f64) -> bool {
    let scale = a.abs().max(b.abs());
    if scale < 1e-2 {
        (a - b).abs() <= 1e-8
    } else {
        (a - b).abs() <= 1e-6 * scale
    }
}

/// Smallest eigenvalue of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_min_eigenvalue(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-22 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).fold(f64::INFINITY, f64::min)
}
