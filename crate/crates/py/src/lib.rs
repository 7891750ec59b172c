//! Python bindings: circuits, dataset generators, model training and the
//! benchmark analysis helpers.

use std::collections::HashMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyInt, PyString};

use qmlbench_core::autodiff::{adjoint_gradient, parameter_shift_grad};
use qmlbench_core::bench;
use qmlbench_core::datagen;
use qmlbench_core::models::{self, HyperValue, Hyperparams, ModelKind, ModelSpec, Variant};
use qmlbench_core::sim::{self, Observable, StateVector, TemplateKind};
use qmlbench_core::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn hyper_value(v: &Bound<'_, PyAny>) -> PyResult<HyperValue> {
    if v.is_instance_of::<PyString>() {
        return Ok(HyperValue::Text(v.extract()?));
    }
    if v.is_instance_of::<PyInt>() {
        return Ok(HyperValue::Int(v.extract()?));
    }
    if let Ok(x) = v.extract::<f64>() {
        return Ok(HyperValue::Float(x));
    }
    if let Ok(sizes) = v.extract::<Vec<usize>>() {
        return Ok(HyperValue::Sizes(sizes));
    }
    Err(PyValueError::new_err(format!("unsupported hyperparameter value {v}")))
}

fn hyper_to_py<'py>(py: Python<'py>, h: &Hyperparams) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for (k, v) in h {
        match v {
            HyperValue::Int(i) => d.set_item(k, i)?,
            HyperValue::Float(x) => d.set_item(k, x)?,
            HyperValue::Text(s) => d.set_item(k, s)?,
            HyperValue::Sizes(s) => d.set_item(k, s.clone())?,
        }
    }
    Ok(d)
}

fn parse_kind(name: &str) -> PyResult<ModelKind> {
    name.parse().map_err(py_err)
}

/// A labelled dataset with its train/test split.
#[pyclass(name = "Dataset", module = "qmlbench")]
struct PyDataset {
    inner: datagen::Dataset,
}

#[pymethods]
impl PyDataset {
    #[getter]
    fn benchmark(&self) -> String {
        self.inner.benchmark.clone()
    }

    #[getter]
    fn x_train(&self) -> Vec<Vec<f64>> {
        self.inner.x_train.clone()
    }

    #[getter]
    fn y_train(&self) -> Vec<f64> {
        self.inner.y_train.clone()
    }

    #[getter]
    fn x_test(&self) -> Vec<Vec<f64>> {
        self.inner.x_test.clone()
    }

    #[getter]
    fn y_test(&self) -> Vec<f64> {
        self.inner.y_test.clone()
    }

    #[getter]
    fn n_features(&self) -> usize {
        self.inner.n_features()
    }

    #[getter]
    fn image_side(&self) -> Option<usize> {
        self.inner.image_side
    }

    fn file_stem(&self) -> String {
        self.inner.file_stem()
    }

    /// Writes train/test CSVs and the JSON sidecar; returns the file stem.
    fn write(&self, dir: PathBuf) -> PyResult<String> {
        datagen::write_dataset(&self.inner, &dir).map_err(py_err)
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        datagen::read_dataset(&path).map(|inner| Self { inner }).map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.n_train() + self.inner.n_test()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset({}, d={}, train={}, test={})",
            self.inner.file_stem(),
            self.inner.n_features(),
            self.inner.n_train(),
            self.inner.n_test()
        )
    }
}

fn wrap(ds: qmlbench_core::Result<datagen::Dataset>) -> PyResult<PyDataset> {
    ds.map(|inner| PyDataset { inner }).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (d, n, seed=0))]
fn linearly_separable(d: usize, n: usize, seed: u64) -> PyResult<PyDataset> {
    wrap(datagen::gen_linearly_separable(d, n, seed))
}

#[pyfunction]
#[pyo3(signature = (width, n, noise=0.5, seed=0))]
fn bars_and_stripes(width: usize, n: usize, noise: f64, seed: u64) -> PyResult<PyDataset> {
    wrap(datagen::gen_bars_and_stripes(width, n, noise, seed))
}

#[pyfunction]
#[pyo3(signature = (d, n, m=6, seed=0))]
fn hidden_manifold(d: usize, n: usize, m: usize, seed: u64) -> PyResult<PyDataset> {
    wrap(datagen::gen_hidden_manifold(d, n, m, seed))
}

#[pyfunction]
#[pyo3(signature = (d, n, degree=5, offset=0.1, noise=0.01, seed=0))]
fn two_curves(d: usize, n: usize, degree: usize, offset: f64, noise: f64, seed: u64) -> PyResult<PyDataset> {
    wrap(datagen::gen_two_curves(d, n, degree, offset, noise, seed))
}

#[pyfunction]
#[pyo3(signature = (d, n, k=3, m=3, seed=0))]
fn hyperplanes_parity(d: usize, n: usize, k: usize, m: usize, seed: u64) -> PyResult<PyDataset> {
    wrap(datagen::gen_hyperplanes_parity(d, n, k, m, seed))
}

/// A trained classifier.
#[pyclass(name = "Model", module = "qmlbench")]
struct PyModel {
    inner: models::TrainedModel,
}

#[pymethods]
impl PyModel {
    /// Trains `kind` on `x`, `y` (labels ±1). Hyperparameters left out of
    /// `hyperparams` take the first value of the kind's grid.
    #[staticmethod]
    #[pyo3(signature = (kind, x, y, hyperparams=None, seed=42, variant=None, max_steps=None))]
    fn fit(
        kind: &str,
        x: Vec<Vec<f64>>,
        y: Vec<f64>,
        hyperparams: Option<HashMap<String, Bound<'_, PyAny>>>,
        seed: u64,
        variant: Option<&str>,
        max_steps: Option<usize>,
    ) -> PyResult<Self> {
        let kind = parse_kind(kind)?;
        let d = x.first().map(Vec::len).unwrap_or(0);
        let mut spec = ModelSpec::with_defaults(kind, d, seed);
        for (k, v) in hyperparams.unwrap_or_default() {
            spec = spec.set(&k, hyper_value(&v)?);
        }
        if let Some(v) = variant {
            let v: Variant = v.parse().map_err(py_err)?;
            spec = spec.with_variant(v).map_err(py_err)?;
        }
        if let Some(s) = max_steps {
            spec.max_steps = s;
        }
        models::fit(&spec, &x, &y).map(|inner| Self { inner }).map_err(py_err)
    }

    fn predict(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        self.inner.predict(&x).map_err(py_err)
    }

    fn decision_function(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        self.inner.decision_function(&x).map_err(py_err)
    }

    fn accuracy(&self, x: Vec<Vec<f64>>, y: Vec<f64>) -> PyResult<f64> {
        self.inner.accuracy(&x, &y).map_err(py_err)
    }

    /// Gram matrix of a kernel model on raw inputs.
    fn gram(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        bench::model_gram(&self.inner, &x).map_err(py_err)
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.spec.kind.name()
    }

    #[getter]
    fn hyperparams<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        hyper_to_py(py, &self.inner.spec.hyperparams)
    }

    #[getter]
    fn n_params(&self) -> usize {
        self.inner.n_params()
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn steps(&self) -> usize {
        self.inner.steps
    }

    #[getter]
    fn loss_history(&self) -> Vec<f64> {
        self.inner.loss_history.clone()
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(py_err)
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        models::TrainedModel::from_json(s).map(|inner| Self { inner }).map_err(py_err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(py_err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        models::TrainedModel::load(&path).map(|inner| Self { inner }).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Model({}, {})",
            self.inner.spec.kind.name(),
            models::format_hyperparams(&self.inner.spec.hyperparams)
        )
    }
}

/// Parameterised circuit built from one of the standard templates.
#[pyclass(name = "Circuit", module = "qmlbench")]
struct PyCircuit {
    inner: sim::Circuit,
}

fn observable(n: usize, terms: Vec<(f64, String)>) -> PyResult<Observable> {
    let words: Vec<(f64, &str)> = terms.iter().map(|(c, w)| (*c, w.as_str())).collect();
    let obs = Observable::from_words(&words).map_err(py_err)?;
    if obs.n_qubits() != n {
        return Err(PyValueError::new_err(format!(
            "observable acts on {} qubits, circuit has {n}",
            obs.n_qubits()
        )));
    }
    Ok(obs)
}

#[pymethods]
impl PyCircuit {
    #[staticmethod]
    #[pyo3(signature = (kind, width, n_layers=1, seed=0))]
    fn template(kind: &str, width: usize, n_layers: usize, seed: u64) -> PyResult<Self> {
        let kind: TemplateKind = kind.parse().map_err(py_err)?;
        sim::build_template(kind, width, n_layers, seed)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.inner.n_qubits()
    }

    #[getter]
    fn n_features(&self) -> usize {
        self.inner.n_features()
    }

    #[getter]
    fn n_params(&self) -> usize {
        self.inner.n_params()
    }

    /// Final amplitudes from `|0...0>`, wire 0 most significant.
    fn state(&self, features: Vec<f64>, params: Vec<f64>) -> PyResult<Vec<(f64, f64)>> {
        let s = sim::apply_circuit(&self.inner, &features, &params).map_err(py_err)?;
        Ok(s.amplitudes().iter().map(|a| (a.re, a.im)).collect())
    }

    fn probabilities(&self, features: Vec<f64>, params: Vec<f64>) -> PyResult<Vec<f64>> {
        let s = sim::apply_circuit(&self.inner, &features, &params).map_err(py_err)?;
        Ok(s.probabilities())
    }

    /// `<O>` for `O = sum_i c_i P_i`, given as `[(c_i, "XZI..."), ...]`.
    fn expectation(&self, features: Vec<f64>, params: Vec<f64>, terms: Vec<(f64, String)>) -> PyResult<f64> {
        let obs = observable(self.inner.n_qubits(), terms)?;
        let s = sim::apply_circuit(&self.inner, &features, &params).map_err(py_err)?;
        sim::expectation(&s, &obs).map_err(py_err)
    }

    /// `(value, d/dparams)` by the reverse sweep (`"adjoint"`) or the
    /// parameter-shift rule (`"parameter_shift"`).
    #[pyo3(signature = (features, params, terms, method="adjoint"))]
    fn gradient(
        &self,
        features: Vec<f64>,
        params: Vec<f64>,
        terms: Vec<(f64, String)>,
        method: &str,
    ) -> PyResult<(f64, Vec<f64>)> {
        let obs = observable(self.inner.n_qubits(), terms)?;
        match method {
            "adjoint" => {
                let zero = StateVector::zero(self.inner.n_qubits()).map_err(py_err)?;
                let g = adjoint_gradient(&self.inner, &zero, &features, &params, &obs).map_err(py_err)?;
                Ok((g.value, g.params))
            }
            "parameter_shift" => {
                let s = sim::apply_circuit(&self.inner, &features, &params).map_err(py_err)?;
                let value = sim::expectation(&s, &obs).map_err(py_err)?;
                let g = parameter_shift_grad(&self.inner, &obs, &features, &params).map_err(py_err)?;
                Ok((value, g.grad))
            }
            m => Err(PyValueError::new_err(format!("unknown gradient method {m:?}"))),
        }
    }
}

#[pyfunction]
fn model_names() -> Vec<&'static str> {
    ModelKind::ALL.iter().map(|k| k.name()).collect()
}

/// Hyperparameter grid of `kind` for `d` input features.
#[pyfunction]
fn grid<'py>(py: Python<'py>, kind: &str, d: usize) -> PyResult<Vec<Bound<'py, PyDict>>> {
    parse_kind(kind)?.grid(d).iter().map(|h| hyper_to_py(py, h)).collect()
}

/// Frobenius distance between two Gram matrices after rescaling each to
/// the unit interval.
#[pyfunction]
fn gram_difference(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> PyResult<f64> {
    bench::gram_difference(&a, &b).map_err(py_err)
}

/// Reported quantum (best of `n_candidates`) and classical scores per researcher.
#[pyfunction]
#[pyo3(signature = (n_researchers=100, n_candidates=20, seed=0))]
fn bias_sim(n_researchers: usize, n_candidates: usize, seed: u64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let p = bench::BiasParams {
        n_researchers,
        n_candidates,
        ..bench::BiasParams::default()
    };
    let out = bench::positivity_bias_sim(&p, seed).map_err(py_err)?;
    Ok((out.quantum, out.classical))
}

/// `(model, expected normalised rank)` from the records under `dir`,
/// best first.
#[pyfunction]
fn rank_records(dir: PathBuf) -> PyResult<Vec<(String, f64)>> {
    let records = bench::load_records(&dir).map_err(py_err)?;
    let table = bench::rank_models(&records).map_err(py_err)?;
    Ok(table
        .models
        .into_iter()
        .map(|m| (m.model, m.expected_normalised_rank))
        .collect())
}

#[pymodule]
fn qmlbench(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyCircuit>()?;
    m.add_function(wrap_pyfunction!(linearly_separable, m)?)?;
    m.add_function(wrap_pyfunction!(bars_and_stripes, m)?)?;
    m.add_function(wrap_pyfunction!(hidden_manifold, m)?)?;
    m.add_function(wrap_pyfunction!(two_curves, m)?)?;
    m.add_function(wrap_pyfunction!(hyperplanes_parity, m)?)?;
    m.add_function(wrap_pyfunction!(model_names, m)?)?;
    m.add_function(wrap_pyfunction!(grid, m)?)?;
    m.add_function(wrap_pyfunction!(gram_difference, m)?)?;
    m.add_function(wrap_pyfunction!(bias_sim, m)?)?;
    m.add_function(wrap_pyfunction!(rank_records, m)?)?;
    Ok(())
}
