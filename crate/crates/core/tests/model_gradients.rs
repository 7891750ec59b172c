//! Circuit-model gradients: parameter shift, the reverse sweep and central
//! differences of the loss must agree.

use qmlbench_core::autodiff::{try_finite_diff_grad, GradMethod};
use qmlbench_core::models::{build_variational, HyperValue, ModelKind, ModelSpec, Variant, VariationalModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FD_STEP: f64 = 1e-5;

fn small_spec(kind: ModelKind, d: usize) -> ModelSpec {
    let mut s = ModelSpec::with_defaults(kind, d, 3);
    for (name, v) in [("n_layers", 2), ("repeats", 1), ("encoding_layers", 2)] {
        if s.hyperparams.contains_key(name) {
            s = s.set(name, HyperValue::Int(v));
        }
    }
    s
}

fn data(model: &VariationalModel, d: usize, n: usize, rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<f64>) {
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.5..1.5)).collect()).collect();
    let y = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    (model.encode(&x).unwrap(), y)
}

fn close(a: f64, b: f64) -> bool {
    let scale = a.abs().max(b.abs());
    if scale < 1e-2 {
        (a - b).abs() <= 1e-8
    } else {
        (a - b).abs() <= 1e-6 * scale
    }
}

fn check(spec: &ModelSpec, d: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let model = build_variational(spec, d).unwrap();
    let m = model.as_dyn();
    let (x, y) = data(&model, d, 6, &mut rng);
    let xs: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
    for trial in 0..3 {
        let p = m.init_params(&mut ChaCha8Rng::seed_from_u64(trial));
        let (l_shift, g_shift) = m.loss_grad(&p, &xs, &y, GradMethod::ParameterShift).unwrap();
        let (l_adj, g_adj) = m.loss_grad(&p, &xs, &y, GradMethod::Adjoint).unwrap();
        let loss = m.loss(&p, &xs, &y).unwrap();
        assert!((l_shift - loss).abs() < 1e-12 && (l_adj - loss).abs() < 1e-12);
        let fd = try_finite_diff_grad(|q| m.loss(q, &xs, &y), &p, FD_STEP).unwrap();
        for k in 0..p.len() {
            assert!(
                close(g_shift[k], fd[k]),
                "{} param {k}: shift {} vs fd {}",
                spec.kind,
                g_shift[k],
                fd[k]
            );
            assert!((g_adj[k] - g_shift[k]).abs() < 1e-9, "{} param {k}: adjoint {} vs shift {}", spec.kind, g_adj[k], g_shift[k]);
        }
    }
}

#[test]
fn every_gradient_model_matches_finite_differences() {
    for kind in ModelKind::ALL.into_iter().filter(|k| k.is_variational()) {
        let d = if kind == ModelKind::WeiNet { 16 } else { 2 };
        check(&small_spec(kind, d), d);
    }
}

#[test]
fn data_reuploading_ablations_match_finite_differences() {
    for v in Variant::ALL {
        let spec = small_spec(ModelKind::DataReuploading, 4)
            .set("observable_type", HyperValue::Text("full".into()))
            .with_variant(v)
            .unwrap();
        check(&spec, 4);
    }
}

#[test]
fn wider_models_match_finite_differences() {
    for kind in [
        ModelKind::CircuitCentric,
        ModelKind::DressedQuantumCircuit,
        ModelKind::IqpVariational,
        ModelKind::QuantumBoltzmannMachine,
        ModelKind::QuantumMetricLearner,
        ModelKind::TreeTensor,
    ] {
        let mut spec = small_spec(kind, 3);
        if kind == ModelKind::QuantumBoltzmannMachine {
            spec = spec.set("visible_qubits", HyperValue::Text("all".into()));
        }
        check(&spec, 3);
    }
}
