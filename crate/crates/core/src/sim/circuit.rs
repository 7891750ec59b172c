use std::ops::{Add, Mul};

use crate::error::{check_len, invalid, Result};
use crate::sim::observable::Pauli;
use crate::sim::state::{check_register, StateVector, MAX_STATE_QUBITS};

/// One product `coeff * theta[param] * x[f1] * x[f2] * ...`.
///
/// A missing `param` stands for the factor 1, as does an empty feature list.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleTerm {
    pub coeff: f64,
    pub param: Option<usize>,
    pub features: Vec<usize>,
}

impl AngleTerm {
    fn value(&self, x: &[f64], theta: &[f64]) -> f64 {
        let mut v = self.coeff;
        if let Some(p) = self.param {
            v *= theta[p];
        }
        for &f in &self.features {
            v *= x[f];
        }
        v
    }

    fn feature_product(&self, x: &[f64]) -> f64 {
        self.features.iter().map(|&f| x[f]).product()
    }
}

/// Gate angle as a sum of monomials in features and (at most linearly) in
/// trainable parameters.
///
/// This covers literal angles, `x_j`, `theta_k`, `x_i x_j` (IQP couplings) and
/// `omega_k x_j + theta_l` (trainable input scaling).
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Angle {
    pub terms: Vec<AngleTerm>,
}

impl Angle {
    pub fn constant(c: f64) -> Self {
        Self {
            terms: vec![AngleTerm {
                coeff: c,
                param: None,
                features: Vec::new(),
            }],
        }
    }

    pub fn param(p: usize) -> Self {
        Self {
            terms: vec![AngleTerm {
                coeff: 1.0,
                param: Some(p),
                features: Vec::new(),
            }],
        }
    }

    pub fn feature(f: usize) -> Self {
        Self::scaled_feature(1.0, f)
    }

    pub fn scaled_feature(c: f64, f: usize) -> Self {
        Self {
            terms: vec![AngleTerm {
                coeff: c,
                param: None,
                features: vec![f],
            }],
        }
    }

    /// `x_i * x_j`.
    pub fn feature_product(i: usize, j: usize) -> Self {
        Self {
            terms: vec![AngleTerm {
                coeff: 1.0,
                param: None,
                features: vec![i, j],
            }],
        }
    }

    /// `theta_p * x_f`.
    pub fn param_times_feature(p: usize, f: usize) -> Self {
        Self {
            terms: vec![AngleTerm {
                coeff: 1.0,
                param: Some(p),
                features: vec![f],
            }],
        }
    }

    pub fn value(&self, x: &[f64], theta: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.value(x, theta)).sum()
    }

    pub fn depends_on_params(&self) -> bool {
        self.terms.iter().any(|t| t.param.is_some())
    }

    pub fn depends_on_features(&self) -> bool {
        self.terms.iter().any(|t| !t.features.is_empty())
    }

    /// True when the angle is exactly `theta_p` for a single `p`, which is
    /// the case where shifting the angle equals shifting the parameter.
    pub fn as_bare_param(&self) -> Option<usize> {
        match self.terms.as_slice() {
            [AngleTerm {
                coeff,
                param: Some(p),
                features,
            }] if *coeff == 1.0 && features.is_empty() => Some(*p),
            _ => None,
        }
    }

    pub(crate) fn max_param(&self) -> Option<usize> {
        self.terms.iter().filter_map(|t| t.param).max()
    }

    pub(crate) fn max_feature(&self) -> Option<usize> {
        self.terms.iter().flat_map(|t| t.features.iter().copied()).max()
    }

    /// Adds `g * d(angle)/d(theta)` to `grad_params` and
    /// `g * d(angle)/d(x)` to `grad_features` (when given).
    pub fn accumulate(
        &self,
        x: &[f64],
        theta: &[f64],
        g: f64,
        grad_params: &mut [f64],
        mut grad_features: Option<&mut [f64]>,
    ) {
        for t in &self.terms {
            if let Some(p) = t.param {
                grad_params[p] += g * t.coeff * t.feature_product(x);
            }
            if let Some(gx) = grad_features.as_deref_mut() {
                let scale = g * t.coeff * t.param.map(|p| theta[p]).unwrap_or(1.0);
                for (k, &f) in t.features.iter().enumerate() {
                    let rest: f64 = t
                        .features
                        .iter()
                        .enumerate()
                        .filter(|(m, _)| *m != k)
                        .map(|(_, &o)| x[o])
                        .product();
                    gx[f] += scale * rest;
                }
            }
        }
    }

    fn shift_params(&mut self, offset: usize) {
        for t in &mut self.terms {
            if let Some(p) = t.param.as_mut() {
                *p += offset;
            }
        }
    }
}

impl Add for Angle {
    type Output = Angle;
    fn add(mut self, rhs: Angle) -> Angle {
        self.terms.extend(rhs.terms);
        self
    }
}

impl Mul<f64> for Angle {
    type Output = Angle;
    fn mul(mut self, rhs: f64) -> Angle {
        for t in &mut self.terms {
            t.coeff *= rhs;
        }
        self
    }
}

/// A gate of a circuit. Rotations follow `R_P(phi) = exp(-i phi/2 P)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    H(usize),
    X(usize),
    Cnot { control: usize, target: usize },
    Cz(usize, usize),
    Rx(usize, Angle),
    Ry(usize, Angle),
    Rz(usize, Angle),
    /// `RZ(a[2]) RY(a[1]) RZ(a[0])`: the first angle acts first.
    Rot(usize, [Angle; 3]),
    /// `Rot` applied on the subspace where `control` is 1.
    CRot {
        control: usize,
        target: usize,
        angles: [Angle; 3],
    },
    /// `exp(-i phi/2 P_1 x ... x P_k)` on `wires`.
    PauliRot {
        wires: Vec<usize>,
        paulis: Vec<Pauli>,
        angle: Angle,
    },
}

impl Gate {
    pub fn wires(&self) -> Vec<usize> {
        match self {
            Gate::H(w) | Gate::X(w) | Gate::Rx(w, _) | Gate::Ry(w, _) | Gate::Rz(w, _) => vec![*w],
            Gate::Rot(w, _) => vec![*w],
            Gate::Cnot { control, target } | Gate::CRot { control, target, .. } => {
                vec![*control, *target]
            }
            Gate::Cz(a, b) => vec![*a, *b],
            Gate::PauliRot { wires, .. } => wires.clone(),
        }
    }

    /// True for gates that can create entanglement between wires.
    pub fn is_entangling(&self) -> bool {
        match self {
            Gate::Cnot { .. } | Gate::Cz(..) | Gate::CRot { .. } => true,
            Gate::PauliRot { wires, paulis, .. } => {
                wires
                    .iter()
                    .zip(paulis)
                    .filter(|(_, p)| **p != Pauli::I)
                    .count()
                    > 1
            }
            _ => false,
        }
    }

    fn angles(&self) -> Vec<&Angle> {
        match self {
            Gate::Rx(_, a) | Gate::Ry(_, a) | Gate::Rz(_, a) => vec![a],
            Gate::Rot(_, a) | Gate::CRot { angles: a, .. } => a.iter().collect(),
            Gate::PauliRot { angle, .. } => vec![angle],
            _ => Vec::new(),
        }
    }

    fn angles_mut(&mut self) -> Vec<&mut Angle> {
        match self {
            Gate::Rx(_, a) | Gate::Ry(_, a) | Gate::Rz(_, a) => vec![a],
            Gate::Rot(_, a) | Gate::CRot { angles: a, .. } => a.iter_mut().collect(),
            Gate::PauliRot { angle, .. } => vec![angle],
            _ => Vec::new(),
        }
    }

    fn remap_wires(&self, f: impl Fn(usize) -> usize) -> Gate {
        match self.clone() {
            Gate::H(w) => Gate::H(f(w)),
            Gate::X(w) => Gate::X(f(w)),
            Gate::Cnot { control, target } => Gate::Cnot {
                control: f(control),
                target: f(target),
            },
            Gate::Cz(a, b) => Gate::Cz(f(a), f(b)),
            Gate::Rx(w, a) => Gate::Rx(f(w), a),
            Gate::Ry(w, a) => Gate::Ry(f(w), a),
            Gate::Rz(w, a) => Gate::Rz(f(w), a),
            Gate::Rot(w, a) => Gate::Rot(f(w), a),
            Gate::CRot {
                control,
                target,
                angles,
            } => Gate::CRot {
                control: f(control),
                target: f(target),
                angles,
            },
            Gate::PauliRot {
                wires,
                paulis,
                angle,
            } => Gate::PauliRot {
                wires: wires.into_iter().map(f).collect(),
                paulis,
                angle,
            },
        }
    }
}

/// Elementary step after lowering: a fixed gate or a single Pauli rotation.
#[derive(Clone, Debug)]
pub(crate) enum Step {
    H(usize),
    X(usize),
    Cnot(usize, usize),
    Cz(usize, usize),
    Rotation {
        wires: Vec<usize>,
        paulis: Vec<Pauli>,
        control: Option<usize>,
        angle: Angle,
    },
}

impl Step {
    pub(crate) fn apply(&self, psi: &mut StateVector, phi: f64) {
        match self {
            Step::H(w) => psi.apply_h(*w),
            Step::X(w) => psi.apply_x(*w),
            Step::Cnot(c, t) => psi.apply_cnot(*c, *t),
            Step::Cz(a, b) => psi.apply_cz(*a, *b),
            Step::Rotation {
                wires,
                paulis,
                control,
                ..
            } => psi.apply_pauli_rotation(wires, paulis, *control, phi),
        }
    }

    /// Applies the inverse step. All fixed gates here are self-inverse.
    pub(crate) fn apply_inverse(&self, psi: &mut StateVector, phi: f64) {
        self.apply(psi, -phi);
    }

    pub(crate) fn angle(&self) -> Option<&Angle> {
        match self {
            Step::Rotation { angle, .. } => Some(angle),
            _ => None,
        }
    }

    pub(crate) fn is_controlled(&self) -> bool {
        matches!(self, Step::Rotation { control: Some(_), .. })
    }
}

fn lower(gate: &Gate, out: &mut Vec<Step>) {
    let rot = |w: usize, p: Pauli, a: &Angle, control: Option<usize>| Step::Rotation {
        wires: vec![w],
        paulis: vec![p],
        control,
        angle: a.clone(),
    };
    match gate {
        Gate::H(w) => out.push(Step::H(*w)),
        Gate::X(w) => out.push(Step::X(*w)),
        Gate::Cnot { control, target } => out.push(Step::Cnot(*control, *target)),
        Gate::Cz(a, b) => out.push(Step::Cz(*a, *b)),
        Gate::Rx(w, a) => out.push(rot(*w, Pauli::X, a, None)),
        Gate::Ry(w, a) => out.push(rot(*w, Pauli::Y, a, None)),
        Gate::Rz(w, a) => out.push(rot(*w, Pauli::Z, a, None)),
        Gate::Rot(w, [a0, a1, a2]) => {
            out.push(rot(*w, Pauli::Z, a0, None));
            out.push(rot(*w, Pauli::Y, a1, None));
            out.push(rot(*w, Pauli::Z, a2, None));
        }
        Gate::CRot {
            control,
            target,
            angles: [a0, a1, a2],
        } => {
            out.push(rot(*target, Pauli::Z, a0, Some(*control)));
            out.push(rot(*target, Pauli::Y, a1, Some(*control)));
            out.push(rot(*target, Pauli::Z, a2, Some(*control)));
        }
        Gate::PauliRot {
            wires,
            paulis,
            angle,
        } => out.push(Step::Rotation {
            wires: wires.clone(),
            paulis: paulis.clone(),
            control: None,
            angle: angle.clone(),
        }),
    }
}

/// Ordered gate list over `n_qubits` wires, reading `n_features` data
/// features and `n_params` trainable parameters.
#[derive(Clone, Debug)]
pub struct Circuit {
    n_qubits: usize,
    n_features: usize,
    n_params: usize,
    gates: Vec<Gate>,
    steps: Vec<Step>,
}

impl Circuit {
    pub fn new(n_qubits: usize, n_features: usize, n_params: usize) -> Result<Self> {
        check_register(n_qubits, MAX_STATE_QUBITS)?;
        Ok(Self {
            n_qubits,
            n_features,
            n_params,
            gates: Vec::new(),
            steps: Vec::new(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub(crate) fn steps(&self) -> &[Step] {
        &self.steps
    }

    /// Number of elementary rotations after lowering `Rot` into three.
    pub fn n_rotations(&self) -> usize {
        self.steps.iter().filter(|s| s.angle().is_some()).count()
    }

    pub fn set_n_params(&mut self, n_params: usize) -> Result<()> {
        let used = self
            .gates
            .iter()
            .flat_map(|g| g.angles())
            .filter_map(|a| a.max_param())
            .max();
        if let Some(m) = used {
            if m >= n_params {
                return Err(invalid(format!("parameter index {m} already in use")));
            }
        }
        self.n_params = n_params;
        Ok(())
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        let wires = gate.wires();
        for (i, &w) in wires.iter().enumerate() {
            if w >= self.n_qubits {
                return Err(invalid(format!(
                    "wire {w} out of range for {} qubits",
                    self.n_qubits
                )));
            }
            if wires[..i].contains(&w) {
                return Err(invalid(format!("wire {w} repeated in one gate")));
            }
        }
        if let Gate::PauliRot { wires, paulis, .. } = &gate {
            check_len("Pauli generator length", wires.len(), paulis.len())?;
            if wires.is_empty() {
                return Err(invalid("Pauli rotation without wires"));
            }
        }
        for a in gate.angles() {
            if let Some(p) = a.max_param() {
                if p >= self.n_params {
                    return Err(invalid(format!(
                        "parameter index {p} out of range for {} parameters",
                        self.n_params
                    )));
                }
            }
            if let Some(f) = a.max_feature() {
                if f >= self.n_features {
                    return Err(invalid(format!(
                        "feature index {f} out of range for {} features",
                        self.n_features
                    )));
                }
            }
        }
        lower(&gate, &mut self.steps);
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> Result<()> {
        for g in gates {
            self.push(g)?;
        }
        Ok(())
    }

    /// Appends `other` (same register and features), renumbering its
    /// parameters to start at `param_offset`.
    pub fn append(&mut self, other: &Circuit, param_offset: usize) -> Result<()> {
        check_len("appended circuit qubits", self.n_qubits, other.n_qubits)?;
        for g in &other.gates {
            let mut g = g.clone();
            for a in g.angles_mut() {
                a.shift_params(param_offset);
            }
            self.push(g)?;
        }
        Ok(())
    }

    /// Same circuit with every entangling gate removed.
    pub fn without_entanglers(&self) -> Circuit {
        let mut out = Circuit {
            n_qubits: self.n_qubits,
            n_features: self.n_features,
            n_params: self.n_params,
            gates: Vec::new(),
            steps: Vec::new(),
        };
        for g in self.gates.iter().filter(|g| !g.is_entangling()) {
            lower(g, &mut out.steps);
            out.gates.push(g.clone());
        }
        out
    }

    pub fn is_product(&self) -> bool {
        !self.gates.iter().any(Gate::is_entangling)
    }

    /// The single-qubit circuit of the gates acting on `wire`. Only
    /// meaningful for product circuits; entangling gates are rejected.
    pub fn restricted_to_wire(&self, wire: usize) -> Result<Circuit> {
        if wire >= self.n_qubits {
            return Err(invalid(format!("wire {wire} out of range")));
        }
        let mut out = Circuit::new(1, self.n_features, self.n_params)?;
        for g in &self.gates {
            if g.is_entangling() {
                return Err(invalid("circuit is not a product of single-qubit circuits"));
            }
            if g.wires().contains(&wire) {
                match g {
                    Gate::PauliRot { wires, paulis, angle } => {
                        // drop identity factors on other wires
                        let p = wires.iter().zip(paulis).find(|(w, _)| **w == wire).unwrap().1;
                        out.push(Gate::PauliRot {
                            wires: vec![0],
                            paulis: vec![*p],
                            angle: angle.clone(),
                        })?;
                    }
                    _ => out.push(g.remap_wires(|_| 0))?,
                }
            }
        }
        Ok(out)
    }

    fn check_inputs(&self, features: &[f64], params: &[f64]) -> Result<()> {
        check_len("circuit features", self.n_features, features.len())?;
        check_len("circuit parameters", self.n_params, params.len())
    }

    /// Runs the circuit on `initial` (which must match the register).
    pub fn run_on(
        &self,
        mut initial: StateVector,
        features: &[f64],
        params: &[f64],
    ) -> Result<StateVector> {
        self.check_inputs(features, params)?;
        check_len("initial state qubits", self.n_qubits, initial.n_qubits())?;
        for step in &self.steps {
            let phi = step.angle().map(|a| a.value(features, params)).unwrap_or(0.0);
            step.apply(&mut initial, phi);
        }
        Ok(initial)
    }

    /// Runs the circuit with the angle of rotation number `slot` (counting
    /// only rotation steps) offset by `delta`.
    pub(crate) fn run_with_shift(
        &self,
        initial: &StateVector,
        features: &[f64],
        params: &[f64],
        slot: usize,
        delta: f64,
    ) -> StateVector {
        let mut psi = initial.clone();
        let mut k = 0;
        for step in &self.steps {
            let phi = match step.angle() {
                Some(a) => {
                    let mut v = a.value(features, params);
                    if k == slot {
                        v += delta;
                    }
                    k += 1;
                    v
                }
                None => 0.0,
            };
            step.apply(&mut psi, phi);
        }
        psi
    }
}

/// Runs `circuit` from `|0...0>`.
pub fn apply_circuit(circuit: &Circuit, features: &[f64], params: &[f64]) -> Result<StateVector> {
    circuit.run_on(StateVector::zero(circuit.n_qubits())?, features, params)
}
