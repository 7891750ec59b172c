use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Result};
use crate::sim::circuit::{Circuit, Step};
use crate::sim::observable::{expectation_unchecked, Observable};
use crate::sim::state::StateVector;

/// How circuit gradients are computed during training.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradMethod {
    /// Reverse sweep through the circuit; one forward and one backward pass.
    #[default]
    Adjoint,
    /// Two shifted circuit evaluations per rotation.
    ParameterShift,
}

/// Step used for rotations that have no two-term shift rule.
const FALLBACK_STEP: f64 = 1e-6;

/// Gradient of a circuit expectation with respect to parameters and features.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitGradient {
    pub value: f64,
    pub params: Vec<f64>,
    pub features: Vec<f64>,
}

/// Reverse-mode vector-Jacobian product.
///
/// `final_state` is the circuit output and `lambda` the cotangent, defined so
/// that the loss changes by `2 Re <lambda|d psi>`. For `<psi|O|psi>` this is
/// `lambda = O|psi>`. Returns `(d/d params, d/d features)`.
pub fn adjoint_vjp(
    circuit: &Circuit,
    features: &[f64],
    params: &[f64],
    final_state: &StateVector,
    lambda: &StateVector,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_len("circuit features", circuit.n_features(), features.len())?;
    check_len("circuit parameters", circuit.n_params(), params.len())?;
    check_len("final state qubits", circuit.n_qubits(), final_state.n_qubits())?;
    check_len("cotangent qubits", circuit.n_qubits(), lambda.n_qubits())?;
    let mut psi = final_state.clone();
    let mut lam = lambda.clone();
    let mut gp = vec![0.0; params.len()];
    let mut gx = vec![0.0; features.len()];
    for step in circuit.steps().iter().rev() {
        let phi = match step {
            Step::Rotation {
                wires,
                paulis,
                control,
                angle,
            } => {
                let g = psi.pauli_matrix_element(&lam, wires, paulis, *control).im;
                angle.accumulate(features, params, g, &mut gp, Some(&mut gx));
                angle.value(features, params)
            }
            _ => 0.0,
        };
        step.apply_inverse(&mut psi, phi);
        step.apply_inverse(&mut lam, phi);
    }
    Ok((gp, gx))
}

/// `<O>` and its exact gradient via the reverse sweep.
pub fn adjoint_gradient(
    circuit: &Circuit,
    initial: &StateVector,
    features: &[f64],
    params: &[f64],
    obs: &Observable,
) -> Result<CircuitGradient> {
    check_len("observable qubits", circuit.n_qubits(), obs.n_qubits())?;
    let psi = circuit.run_on(initial.clone(), features, params)?;
    let lambda = obs.apply(&psi);
    let value = expectation_unchecked(&psi, obs);
    let (params, features) = adjoint_vjp(circuit, features, params, &psi, &lambda)?;
    Ok(CircuitGradient {
        value,
        params,
        features,
    })
}

/// Jacobian of a vector of expectation-type outputs computed with shift rules.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftJacobian {
    /// Outputs at the unshifted point.
    pub values: Vec<f64>,
    /// `params[o][p] = d output_o / d theta_p`.
    pub params: Vec<Vec<f64>>,
    /// `features[o][j] = d output_o / d x_j` (empty rows unless requested).
    pub features: Vec<Vec<f64>>,
    /// Parameters that touch at least one rotation without a two-term shift
    /// rule (controlled rotations); their entries use central differences.
    pub fallback: Vec<bool>,
}

/// Parameter-shift Jacobian of `outputs(U|initial>)`.
///
/// `outputs` must be linear in the density matrix (expectation values,
/// fidelities with fixed states), which is what makes the two-term rule exact
/// for rotations `exp(-i phi/2 P)`. Every rotation angle is shifted
/// separately and the shifts are chained through the angle's dependence on
/// parameters and features.
pub fn shift_jacobian(
    circuit: &Circuit,
    initial: &StateVector,
    features: &[f64],
    params: &[f64],
    with_features: bool,
    outputs: &dyn Fn(&StateVector) -> Vec<f64>,
) -> Result<ShiftJacobian> {
    let psi = circuit.run_on(initial.clone(), features, params)?;
    let values = outputs(&psi);
    let n_out = values.len();
    let mut jp = vec![vec![0.0; params.len()]; n_out];
    let mut jx = vec![vec![0.0; if with_features { features.len() } else { 0 }]; n_out];
    let mut fallback = vec![false; params.len()];
    let mut slot = 0;
    for step in circuit.steps() {
        let Some(angle) = step.angle() else { continue };
        let k = slot;
        slot += 1;
        let relevant = angle.depends_on_params() || (with_features && angle.depends_on_features());
        if !relevant {
            continue;
        }
        let controlled = step.is_controlled();
        let (delta, scale) = if controlled {
            (FALLBACK_STEP, 1.0 / (2.0 * FALLBACK_STEP))
        } else {
            (FRAC_PI_2, 0.5)
        };
        let plus = outputs(&circuit.run_with_shift(initial, features, params, k, delta));
        let minus = outputs(&circuit.run_with_shift(initial, features, params, k, -delta));
        check_len("shifted output length", n_out, plus.len())?;
        for o in 0..n_out {
            let d = (plus[o] - minus[o]) * scale;
            let gx = if with_features { Some(jx[o].as_mut_slice()) } else { None };
            angle.accumulate(features, params, d, &mut jp[o], gx);
        }
        if controlled {
            for t in &angle.terms {
                if let Some(p) = t.param {
                    fallback[p] = true;
                }
            }
        }
    }
    Ok(ShiftJacobian {
        values,
        params: jp,
        features: jx,
        fallback,
    })
}

/// Gradient of `<O>` with respect to the trainable parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftGradient {
    pub value: f64,
    pub grad: Vec<f64>,
    /// Coordinates computed by central differences instead of the shift rule.
    pub fallback: Vec<bool>,
}

/// `d<O>/d theta_k` by the parameter-shift rule, starting from `|0...0>`.
pub fn parameter_shift_grad(
    circuit: &Circuit,
    obs: &Observable,
    features: &[f64],
    params: &[f64],
) -> Result<ShiftGradient> {
    parameter_shift_grad_from(
        circuit,
        &StateVector::zero(circuit.n_qubits())?,
        obs,
        features,
        params,
    )
}

pub fn parameter_shift_grad_from(
    circuit: &Circuit,
    initial: &StateVector,
    obs: &Observable,
    features: &[f64],
    params: &[f64],
) -> Result<ShiftGradient> {
    check_len("observable qubits", circuit.n_qubits(), obs.n_qubits())?;
    let jac = shift_jacobian(circuit, initial, features, params, false, &|s| {
        vec![expectation_unchecked(s, obs)]
    })?;
    Ok(ShiftGradient {
        value: jac.values[0],
        grad: jac.params.into_iter().next().unwrap_or_default(),
        fallback: jac.fallback,
    })
}

/// Central differences `(f(x + h e_k) - f(x - h e_k)) / 2h`.
pub fn finite_diff_grad(
    mut f: impl FnMut(&[f64]) -> f64,
    params: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(invalid(format!("finite-difference step must be positive, got {h}")));
    }
    let mut x = params.to_vec();
    let mut g = Vec::with_capacity(params.len());
    for k in 0..params.len() {
        let orig = x[k];
        x[k] = orig + h;
        let fp = f(&x);
        x[k] = orig - h;
        let fm = f(&x);
        x[k] = orig;
        g.push((fp - fm) / (2.0 * h));
    }
    Ok(g)
}

/// Fallible variant of [`finite_diff_grad`].
pub fn try_finite_diff_grad(
    mut f: impl FnMut(&[f64]) -> Result<f64>,
    params: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    let mut err = None;
    let g = finite_diff_grad(
        |p| match f(p) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                f64::NAN
            }
        },
        params,
        h,
    )?;
    match err {
        Some(e) => Err(e),
        None => Ok(g),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::circuit::{Angle, Gate};
    use crate::sim::observable::Pauli;
    use proptest::prelude::*;

    #[test]
    fn ry_closed_form() {
        // <Z> after RY(t)|0> is cos t
        let mut c = Circuit::new(1, 0, 1).unwrap();
        c.push(Gate::Ry(0, Angle::param(0))).unwrap();
        let z = Observable::z(1, 0);
        let t = 0.83;
        let a = adjoint_gradient(&c, &StateVector::zero(1).unwrap(), &[], &[t], &z).unwrap();
        let s = parameter_shift_grad(&c, &z, &[], &[t]).unwrap();
        assert!((a.value - t.cos()).abs() < 1e-15);
        assert!((a.params[0] + t.sin()).abs() < 1e-14);
        assert!((s.grad[0] + t.sin()).abs() < 1e-14);
        assert_eq!(s.fallback, vec![false]);
    }

    #[test]
    fn controlled_rotations_use_differences() {
        let mut c = Circuit::new(2, 0, 1).unwrap();
        c.extend([
            Gate::H(0),
            Gate::CRot {
                control: 0,
                target: 1,
                angles: [Angle::constant(0.2), Angle::param(0), Angle::constant(-0.4)],
            },
        ])
        .unwrap();
        let z = Observable::z(2, 1);
        let s = parameter_shift_grad(&c, &z, &[], &[0.7]).unwrap();
        assert_eq!(s.fallback, vec![true]);
        let a = adjoint_gradient(&c, &StateVector::zero(2).unwrap(), &[], &[0.7], &z).unwrap();
        assert!((a.params[0] - s.grad[0]).abs() < 1e-8);
    }

    #[test]
    fn finite_diff_rejects_bad_step() {
        assert!(finite_diff_grad(|p| p[0], &[1.0], 0.0).is_err());
        assert!(try_finite_diff_grad(|_| Err(invalid("boom")), &[1.0], 1e-3).is_err());
    }

    proptest! {
        #[test]
        fn adjoint_matches_shift_and_differences(
            th in proptest::collection::vec(-3.0f64..3.0, 4),
            x in proptest::collection::vec(-1.0f64..1.0, 2),
        ) {
            let mut c = Circuit::new(2, 2, 4).unwrap();
            c.extend([
                Gate::Ry(0, Angle::param_times_feature(0, 0)),
                Gate::Rx(1, Angle::feature(1) + Angle::param(1)),
                Gate::Cnot { control: 0, target: 1 },
                Gate::PauliRot { wires: vec![0, 1], paulis: vec![Pauli::X, Pauli::Y], angle: Angle::param(2) },
                Gate::Rz(1, Angle::feature_product(0, 1)),
                Gate::Ry(1, Angle::param(3)),
            ]).unwrap();
            let obs = Observable::from_words(&[(1.0, "ZX"), (0.3, "YI")]).unwrap();
            let zero = StateVector::zero(2).unwrap();
            let a = adjoint_gradient(&c, &zero, &x, &th, &obs).unwrap();
            let s = parameter_shift_grad(&c, &obs, &x, &th).unwrap();
            let f = |p: &[f64]| expectation_unchecked(&c.run_on(zero.clone(), &x, p).unwrap(), &obs);
            let fd = finite_diff_grad(f, &th, 1e-5).unwrap();
            for k in 0..4 {
                prop_assert!((a.params[k] - s.grad[k]).abs() < 1e-12);
                prop_assert!((a.params[k] - fd[k]).abs() < 1e-7);
            }
            let fx = |xx: &[f64]| expectation_unchecked(&c.run_on(zero.clone(), xx, &th).unwrap(), &obs);
            let fdx = finite_diff_grad(fx, &x, 1e-5).unwrap();
            let jx = shift_jacobian(&c, &zero, &x, &th, true, &|st| vec![expectation_unchecked(st, &obs)]).unwrap();
            for j in 0..2 {
                prop_assert!((a.features[j] - fdx[j]).abs() < 1e-7);
                prop_assert!((a.features[j] - jx.features[0][j]).abs() < 1e-12);
            }
        }
    }
}
