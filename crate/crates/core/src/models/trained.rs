use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::TrainConfig;
use crate::classical::{cnn_fit, mlp_fit, sign, svm_fit_rbf, CnnConfig, CnnModel, MlpConfig, MlpModel, SvmModel};
use crate::error::{check_len, invalid, Result};
use crate::models::boltzmann::QuantumBoltzmann;
use crate::models::circuit_centric::CircuitCentric;
use crate::models::common::{train_variational, Variational};
use crate::models::data_reuploading::DataReuploading;
use crate::models::dressed::Dressed;
use crate::models::iqp_variational::IqpVariational;
use crate::models::kernels::{KernelClassifier, ProjectedKernel, QuantumKernel};
use crate::models::kitchen_sinks::{KitchenSinks, KitchenSinksClassifier};
use crate::models::metric_learner::MetricLearner;
use crate::models::preprocess::Preprocessor;
use crate::models::quanvolutional::{Quanvolution, QuanvolutionalNet};
use crate::models::separable_variational::SeparableVariational;
use crate::models::spec::{ModelKind, ModelSpec, Variant};
use crate::models::tree_tensor::TreeTensor;
use crate::models::weinet::WeiNet;

/// A gradient-trained model architecture (without parameters).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "architecture", rename_all = "snake_case")]
pub enum VariationalModel {
    CircuitCentric(CircuitCentric),
    DataReuploading(DataReuploading),
    Dressed(Dressed),
    IqpVariational(IqpVariational),
    Boltzmann(QuantumBoltzmann),
    MetricLearner(MetricLearner),
    TreeTensor(TreeTensor),
    WeiNet(WeiNet),
    SeparableVariational(SeparableVariational),
}

impl VariationalModel {
    pub fn as_dyn(&self) -> &dyn Variational {
        match self {
            VariationalModel::CircuitCentric(m) => m,
            VariationalModel::DataReuploading(m) => m,
            VariationalModel::Dressed(m) => m,
            VariationalModel::IqpVariational(m) => m,
            VariationalModel::Boltzmann(m) => m,
            VariationalModel::MetricLearner(m) => m,
            VariationalModel::TreeTensor(m) => m,
            VariationalModel::WeiNet(m) => m,
            VariationalModel::SeparableVariational(m) => m,
        }
    }

    pub fn as_dyn_mut(&mut self) -> &mut dyn Variational {
        match self {
            VariationalModel::CircuitCentric(m) => m,
            VariationalModel::DataReuploading(m) => m,
            VariationalModel::Dressed(m) => m,
            VariationalModel::IqpVariational(m) => m,
            VariationalModel::Boltzmann(m) => m,
            VariationalModel::MetricLearner(m) => m,
            VariationalModel::TreeTensor(m) => m,
            VariationalModel::WeiNet(m) => m,
            VariationalModel::SeparableVariational(m) => m,
        }
    }

    /// Maps preprocessed inputs to what [`Variational`] methods consume
    /// (WeiNet's fixed quantum features; the identity otherwise).
    pub fn encode(&self, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        match self {
            VariationalModel::WeiNet(w) => x.iter().map(|v| w.encode(v)).collect(),
            _ => Ok(x.to_vec()),
        }
    }
}

/// Builds the architecture of a gradient-trained kind for `d` input features.
pub fn build_variational(spec: &ModelSpec, d: usize) -> Result<VariationalModel> {
    let entangling = !spec.has(Variant::NoEntanglement);
    Ok(match spec.kind {
        ModelKind::CircuitCentric => {
            VariationalModel::CircuitCentric(CircuitCentric::new(d, spec.usize("n_layers")?, spec.usize("n_input_copies")?)?)
        }
        ModelKind::DataReuploading => VariationalModel::DataReuploading(DataReuploading::new(
            d,
            spec.usize("n_layers")?,
            spec.text("observable_type")?.parse()?,
            spec.variant,
        )?),
        ModelKind::DressedQuantumCircuit => VariationalModel::Dressed(Dressed::new(d, spec.usize("n_layers")?, entangling)?),
        ModelKind::IqpVariational => VariationalModel::IqpVariational(IqpVariational::new(
            d,
            spec.usize("n_layers")?,
            spec.usize("repeats")?,
            entangling,
        )?),
        ModelKind::QuantumBoltzmannMachine | ModelKind::QuantumBoltzmannMachineSeparable => {
            let separable = spec.kind == ModelKind::QuantumBoltzmannMachineSeparable || !entangling;
            VariationalModel::Boltzmann(QuantumBoltzmann::new(
                d,
                spec.f64("temperature")?,
                spec.text("visible_qubits")?.parse()?,
                separable,
            )?)
        }
        ModelKind::QuantumMetricLearner => {
            VariationalModel::MetricLearner(MetricLearner::new(d, spec.usize("n_layers")?, entangling)?)
        }
        ModelKind::TreeTensor => VariationalModel::TreeTensor(TreeTensor::new(d)?),
        ModelKind::WeiNet => VariationalModel::WeiNet(WeiNet::new(d, spec.text("filter_type")?.parse()?)?),
        ModelKind::SeparableVariational => {
            VariationalModel::SeparableVariational(SeparableVariational::new(d, spec.usize("encoding_layers")?)?)
        }
        k => return Err(invalid(format!("{k} is not trained by gradient descent"))),
    })
}

/// Learned state of a fitted model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FittedState {
    Variational { model: VariationalModel, params: Vec<f64> },
    Kernel(KernelClassifier),
    KitchenSinks(KitchenSinksClassifier),
    Quanvolutional(QuanvolutionalNet),
    Mlp(MlpModel),
    Svc(SvmModel),
    Cnn(CnnModel),
}

/// A trained classifier with its preprocessing and training record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub n_features: usize,
    pub preprocessor: Preprocessor,
    pub state: FittedState,
    pub loss_history: Vec<f64>,
    pub converged: bool,
    pub steps: usize,
}

fn check_data(x: &[Vec<f64>], y: &[f64]) -> Result<usize> {
    check_len("labels", x.len(), y.len())?;
    let Some(first) = x.first() else {
        return Err(invalid("no training data"));
    };
    let d = first.len();
    if d == 0 {
        return Err(invalid("inputs have no features"));
    }
    for row in x {
        check_len("input width", d, row.len())?;
    }
    if let Some(bad) = y.iter().find(|v| **v != 1.0 && **v != -1.0) {
        return Err(invalid(format!("labels must be +1 or -1, got {bad}")));
    }
    Ok(d)
}

/// Trains the model described by `spec` on labeled data (labels ±1).
pub fn fit(spec: &ModelSpec, x: &[Vec<f64>], y: &[f64]) -> Result<TrainedModel> {
    let d = check_data(x, y)?;
    spec.validate(d)?;
    if spec.max_steps == 0 {
        return Err(invalid("max_steps must be positive"));
    }
    let preprocessor = Preprocessor::fit(spec.kind.input_scaling(), x, spec.input_scale)?;
    let xt = preprocessor.transform(x)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let entangling = !spec.has(Variant::NoEntanglement);
    let lr = || spec.f64("learning_rate");
    let done = |state: FittedState, loss_history: Vec<f64>, converged: bool, steps: usize| TrainedModel {
        spec: spec.clone(),
        n_features: d,
        preprocessor: preprocessor.clone(),
        state,
        loss_history,
        converged,
        steps,
    };
    if spec.kind.is_variational() {
        let mut model = build_variational(spec, d)?;
        let inputs = model.encode(&xt)?;
        let cfg = TrainConfig {
            learning_rate: lr()?,
            max_steps: spec.max_steps,
            stop_on_convergence: true,
        };
        let out = train_variational(model.as_dyn_mut(), &inputs, y, &cfg, spec.grad_method, &mut rng)?;
        let state = FittedState::Variational {
            model,
            params: out.params,
        };
        return Ok(done(state, out.loss_history, out.converged, out.steps));
    }
    let seed = spec.seed;
    Ok(match spec.kind {
        ModelKind::IqpKernel | ModelKind::ProjectedQuantumKernel | ModelKind::SeparableKernel => {
            let kernel = match spec.kind {
                ModelKind::IqpKernel => QuantumKernel::iqp(d, spec.usize("repeats")?, entangling)?,
                ModelKind::ProjectedQuantumKernel => QuantumKernel::Projected(ProjectedKernel::fit(
                    &xt,
                    spec.usize("trotter_steps")?,
                    spec.f64("t")?,
                    spec.f64("gamma_factor")?,
                    seed,
                )?),
                _ => QuantumKernel::separable(d, spec.usize("encoding_layers")?)?,
            };
            let clf = KernelClassifier::fit(kernel, &xt, y, spec.f64("C")?)?;
            let (conv, it) = (clf.svm.converged, clf.svm.iterations);
            done(FittedState::Kernel(clf), Vec::new(), conv, it)
        }
        ModelKind::QuantumKitchenSinks => {
            let map = KitchenSinks::new(d, spec.usize("n_qfeatures")?.max(1), spec.usize("n_episodes")?, entangling, seed)?;
            let clf = KitchenSinksClassifier::fit(map, &xt, y)?;
            let hist = clf.readout.loss_history.clone();
            let (conv, steps) = (clf.readout.converged, hist.len());
            done(FittedState::KitchenSinks(clf), hist, conv, steps)
        }
        ModelKind::Quanvolutional => {
            let quanv = Quanvolution::fit(&xt, spec.usize("qkernel_shape")?, spec.usize("n_qchannels")?, entangling, seed)?;
            let mut cfg = CnnConfig::new(spec.usize("kernel_shape")?, lr()?, seed);
            cfg.max_steps = spec.max_steps;
            let net = QuanvolutionalNet::fit(quanv, &xt, y, &cfg)?;
            let hist = net.cnn.loss_history.clone();
            let (conv, steps) = (net.cnn.converged, hist.len());
            done(FittedState::Quanvolutional(net), hist, conv, steps)
        }
        ModelKind::Mlp => {
            let mut cfg = MlpConfig::new(spec.sizes("hidden_layer_sizes")?, lr()?, spec.f64("alpha")?, seed);
            cfg.max_steps = spec.max_steps;
            let m = mlp_fit(&xt, y, &cfg)?;
            let hist = m.loss_history.clone();
            let (conv, steps) = (m.converged, hist.len());
            done(FittedState::Mlp(m), hist, conv, steps)
        }
        ModelKind::Svc => {
            let m = svm_fit_rbf(&xt, y, spec.f64("gamma")?, spec.f64("C")?)?;
            let (conv, it) = (m.converged, m.iterations);
            done(FittedState::Svc(m), Vec::new(), conv, it)
        }
        ModelKind::Cnn => {
            let mut cfg = CnnConfig::new(spec.usize("kernel_shape")?, lr()?, seed);
            cfg.max_steps = spec.max_steps;
            let m = cnn_fit(&xt, y, 1, &cfg)?;
            let hist = m.loss_history.clone();
            let (conv, steps) = (m.converged, hist.len());
            done(FittedState::Cnn(m), hist, conv, steps)
        }
        k => unreachable!("{k} handled above"),
    })
}

impl TrainedModel {
    /// Real-valued scores; the predicted label is their sign.
    pub fn decision_function(&self, x: &[Vec<f64>]) -> Result<Vec<f64>> {
        for row in x {
            check_len("input width", self.n_features, row.len())?;
        }
        let xt = self.preprocessor.transform(x)?;
        match &self.state {
            FittedState::Variational { model, params } => {
                let inputs = model.encode(&xt)?;
                let refs: Vec<&[f64]> = inputs.iter().map(Vec::as_slice).collect();
                model.as_dyn().decisions(params, &refs)
            }
            FittedState::Kernel(k) => k.decisions(&xt),
            FittedState::KitchenSinks(k) => k.decisions(&xt),
            FittedState::Quanvolutional(q) => q.decisions(&xt),
            FittedState::Mlp(m) => xt.iter().map(|r| m.decision(r)).collect(),
            FittedState::Svc(m) => xt.iter().map(|r| m.decision(r)).collect(),
            FittedState::Cnn(m) => xt.iter().map(|r| m.decision(r)).collect(),
        }
    }

    /// Labels ±1; a zero score maps to +1.
    pub fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<f64>> {
        Ok(self.decision_function(x)?.into_iter().map(sign).collect())
    }

    /// Fraction of correctly predicted labels.
    pub fn accuracy(&self, x: &[Vec<f64>], y: &[f64]) -> Result<f64> {
        check_len("labels", x.len(), y.len())?;
        if x.is_empty() {
            return Err(invalid("accuracy of an empty set"));
        }
        let p = self.predict(x)?;
        Ok(p.iter().zip(y).filter(|(a, b)| a == b).count() as f64 / y.len() as f64)
    }

    /// Number of trained parameters (SVM duals count as parameters).
    pub fn n_params(&self) -> usize {
        match &self.state {
            FittedState::Variational { params, .. } => params.len(),
            FittedState::Kernel(k) => k.svm.dual_coef.len() + 1,
            FittedState::KitchenSinks(k) => k.readout.weights.len() + 1,
            FittedState::Quanvolutional(q) => q.cnn.params.len(),
            FittedState::Mlp(m) => m.params.len(),
            FittedState::Svc(m) => m.dual_coef.len() + 1,
            FittedState::Cnn(m) => m.params.len(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::spec::{HyperValue, ModelKind};

    fn blobs() -> (Vec<Vec<f64>>, Vec<f64>) {
        let x: Vec<Vec<f64>> = (0..24)
            .map(|k| {
                let s = if k % 2 == 0 { 1.0 } else { -1.0 };
                vec![s + 0.3 * (k as f64).sin(), s * 0.5 + 0.3 * (k as f64 * 1.7).cos()]
            })
            .collect();
        let y = (0..24).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect();
        (x, y)
    }

    #[test]
    fn json_round_trip_keeps_predictions() {
        let (x, y) = blobs();
        let dir = tempfile::tempdir().unwrap();
        for kind in [ModelKind::Svc, ModelKind::IqpKernel, ModelKind::SeparableKernel] {
            let m = fit(&ModelSpec::with_defaults(kind, 2, 0).set("C", HyperValue::Float(10.0)), &x, &y).unwrap();
            assert!(m.accuracy(&x, &y).unwrap() >= 0.9, "{kind}");
            let path = dir.path().join(format!("{kind}.json"));
            m.save(&path).unwrap();
            let back = TrainedModel::load(&path).unwrap();
            assert_eq!(back.decision_function(&x).unwrap(), m.decision_function(&x).unwrap());
        }
    }

    #[test]
    fn rejects_bad_training_data() {
        let (x, y) = blobs();
        let spec = ModelSpec::with_defaults(ModelKind::Svc, 2, 0);
        assert!(fit(&spec, &x, &y[1..]).is_err());
        assert!(fit(&spec, &[], &[]).is_err());
        let mut bad = y.clone();
        bad[0] = 0.0;
        assert!(fit(&spec, &x, &bad).is_err());
        let mut zero = spec.clone();
        zero.max_steps = 0;
        assert!(fit(&zero, &x, &y).is_err());
        let m = fit(&spec, &x, &y).unwrap();
        assert!(m.predict(&[vec![0.0; 3]]).is_err());
    }
}
