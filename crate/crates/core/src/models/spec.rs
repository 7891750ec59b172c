use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::autodiff::{GradMethod, DEFAULT_MAX_STEPS};
use crate::error::{invalid, Error, Result};

/// Every classifier in the suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    CircuitCentric,
    DataReuploading,
    DressedQuantumCircuit,
    IqpVariational,
    QuantumBoltzmannMachine,
    QuantumBoltzmannMachineSeparable,
    QuantumMetricLearner,
    TreeTensor,
    IqpKernel,
    ProjectedQuantumKernel,
    QuantumKitchenSinks,
    Quanvolutional,
    WeiNet,
    SeparableVariational,
    SeparableKernel,
    Mlp,
    Svc,
    Cnn,
}

/// How raw features are rescaled before they reach the model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputScaling {
    /// Min-max to `[-pi/2, pi/2]` for rotation-angle inputs.
    Angle,
    /// Zero mean, unit variance.
    Standard,
    /// Passed through unchanged (amplitude embeddings and images).
    Raw,
}

impl ModelKind {
    pub const ALL: [ModelKind; 18] = [
        ModelKind::CircuitCentric,
        ModelKind::DataReuploading,
        ModelKind::DressedQuantumCircuit,
        ModelKind::IqpVariational,
        ModelKind::QuantumBoltzmannMachine,
        ModelKind::QuantumBoltzmannMachineSeparable,
        ModelKind::QuantumMetricLearner,
        ModelKind::TreeTensor,
        ModelKind::IqpKernel,
        ModelKind::ProjectedQuantumKernel,
        ModelKind::QuantumKitchenSinks,
        ModelKind::Quanvolutional,
        ModelKind::WeiNet,
        ModelKind::SeparableVariational,
        ModelKind::SeparableKernel,
        ModelKind::Mlp,
        ModelKind::Svc,
        ModelKind::Cnn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::CircuitCentric => "circuit_centric",
            ModelKind::DataReuploading => "data_reuploading",
            ModelKind::DressedQuantumCircuit => "dressed_quantum_circuit",
            ModelKind::IqpVariational => "iqp_variational",
            ModelKind::QuantumBoltzmannMachine => "quantum_boltzmann_machine",
            ModelKind::QuantumBoltzmannMachineSeparable => "quantum_boltzmann_machine_separable",
            ModelKind::QuantumMetricLearner => "quantum_metric_learner",
            ModelKind::TreeTensor => "tree_tensor",
            ModelKind::IqpKernel => "iqp_kernel",
            ModelKind::ProjectedQuantumKernel => "projected_quantum_kernel",
            ModelKind::QuantumKitchenSinks => "quantum_kitchen_sinks",
            ModelKind::Quanvolutional => "quanvolutional",
            ModelKind::WeiNet => "weinet",
            ModelKind::SeparableVariational => "separable_variational",
            ModelKind::SeparableKernel => "separable_kernel",
            ModelKind::Mlp => "mlp",
            ModelKind::Svc => "svc",
            ModelKind::Cnn => "cnn",
        }
    }

    /// Class name used in the literature.
    pub fn class_name(self) -> &'static str {
        match self {
            ModelKind::CircuitCentric => "CircuitCentricClassifier",
            ModelKind::DataReuploading => "DataReuploadingClassifier",
            ModelKind::DressedQuantumCircuit => "DressedQuantumCircuitClassifier",
            ModelKind::IqpVariational => "IQPVariationalClassifier",
            ModelKind::QuantumBoltzmannMachine => "QuantumBoltzmannMachine",
            ModelKind::QuantumBoltzmannMachineSeparable => "QuantumBoltzmannMachineSeparable",
            ModelKind::QuantumMetricLearner => "QuantumMetricLearner",
            ModelKind::TreeTensor => "TreeTensorClassifier",
            ModelKind::IqpKernel => "IQPKernelClassifier",
            ModelKind::ProjectedQuantumKernel => "ProjectedQuantumKernel",
            ModelKind::QuantumKitchenSinks => "QuantumKitchenSinks",
            ModelKind::Quanvolutional => "QuanvolutionalNeuralNetwork",
            ModelKind::WeiNet => "WeiNet",
            ModelKind::SeparableVariational => "SeparableVariationalClassifier",
            ModelKind::SeparableKernel => "SeparableKernelClassifier",
            ModelKind::Mlp => "MLPClassifier",
            ModelKind::Svc => "SVC",
            ModelKind::Cnn => "ConvolutionalNeuralNetwork",
        }
    }

    pub fn is_quantum(self) -> bool {
        !matches!(self, ModelKind::Mlp | ModelKind::Svc | ModelKind::Cnn)
    }

    /// Models that consume square images.
    pub fn needs_images(self) -> bool {
        matches!(self, ModelKind::Quanvolutional | ModelKind::WeiNet | ModelKind::Cnn)
    }

    /// Models trained by gradient descent on a parameterized circuit or
    /// Gibbs state (the ones covered by gradient cross-checks).
    pub fn is_variational(self) -> bool {
        matches!(
            self,
            ModelKind::CircuitCentric
                | ModelKind::DataReuploading
                | ModelKind::DressedQuantumCircuit
                | ModelKind::IqpVariational
                | ModelKind::QuantumBoltzmannMachine
                | ModelKind::QuantumBoltzmannMachineSeparable
                | ModelKind::QuantumMetricLearner
                | ModelKind::TreeTensor
                | ModelKind::WeiNet
                | ModelKind::SeparableVariational
        )
    }

    pub fn is_kernel(self) -> bool {
        matches!(
            self,
            ModelKind::IqpKernel | ModelKind::ProjectedQuantumKernel | ModelKind::SeparableKernel
        )
    }

    pub fn input_scaling(self) -> InputScaling {
        match self {
            ModelKind::DataReuploading
            | ModelKind::IqpVariational
            | ModelKind::QuantumMetricLearner
            | ModelKind::IqpKernel
            | ModelKind::ProjectedQuantumKernel
            | ModelKind::SeparableVariational
            | ModelKind::SeparableKernel => InputScaling::Angle,
            ModelKind::DressedQuantumCircuit
            | ModelKind::QuantumBoltzmannMachine
            | ModelKind::QuantumBoltzmannMachineSeparable
            | ModelKind::QuantumKitchenSinks
            | ModelKind::Mlp
            | ModelKind::Svc => InputScaling::Standard,
            ModelKind::CircuitCentric
            | ModelKind::TreeTensor
            | ModelKind::WeiNet
            | ModelKind::Quanvolutional
            | ModelKind::Cnn => InputScaling::Raw,
        }
    }

    /// Whether `variant` can be applied to this kind.
    pub fn supports(self, variant: Variant) -> bool {
        match variant {
            Variant::NoEntanglement => matches!(
                self,
                ModelKind::DataReuploading
                    | ModelKind::DressedQuantumCircuit
                    | ModelKind::IqpVariational
                    | ModelKind::QuantumBoltzmannMachine
                    | ModelKind::QuantumMetricLearner
                    | ModelKind::IqpKernel
                    | ModelKind::QuantumKitchenSinks
                    | ModelKind::Quanvolutional
            ),
            Variant::NoCost | Variant::NoScaling | Variant::NoTrainableEmbedding => {
                self == ModelKind::DataReuploading
            }
        }
    }

    /// Hyperparameter grid in iteration order: the first listed name varies
    /// slowest. `d` is the input dimension (one grid depends on it).
    pub fn grid_axes(self, d: usize) -> Vec<(&'static str, Vec<HyperValue>)> {
        use HyperValue::{Float as F, Int as I};
        let lr = || ("learning_rate", vec![F(0.001), F(0.01), F(0.1)]);
        let lr_small = || ("learning_rate", vec![F(0.0001), F(0.001), F(0.01)]);
        let c = || ("C", vec![F(0.1), F(1.0), F(10.0), F(100.0)]);
        let ints = |name: &'static str, v: &[i64]| (name, v.iter().map(|&i| I(i)).collect::<Vec<_>>());
        let texts = |name: &'static str, v: &[&str]| {
            (name, v.iter().map(|s| HyperValue::Text(s.to_string())).collect::<Vec<_>>())
        };
        match self {
            ModelKind::CircuitCentric => vec![lr(), ints("n_layers", &[1, 5, 10]), ints("n_input_copies", &[1, 2, 3])],
            ModelKind::DataReuploading => vec![
                lr(),
                ints("n_layers", &[1, 5, 10, 15]),
                texts("observable_type", &["single", "half", "full"]),
            ],
            ModelKind::DressedQuantumCircuit => vec![lr(), ints("n_layers", &[1, 5, 10, 15])],
            ModelKind::IqpVariational => vec![lr(), ints("n_layers", &[1, 5, 10, 15]), ints("repeats", &[1, 5, 10])],
            ModelKind::QuantumBoltzmannMachine | ModelKind::QuantumBoltzmannMachineSeparable => vec![
                lr(),
                ("temperature", vec![F(1.0), F(10.0), F(100.0)]),
                texts("visible_qubits", &["single", "half", "all"]),
            ],
            ModelKind::QuantumMetricLearner => vec![lr(), ints("n_layers", &[1, 3, 4])],
            ModelKind::TreeTensor => vec![lr()],
            ModelKind::IqpKernel => vec![ints("repeats", &[1, 5, 10]), c()],
            ModelKind::ProjectedQuantumKernel => vec![
                ints("trotter_steps", &[1, 3, 5]),
                c(),
                ("t", vec![F(0.01), F(0.1), F(1.0)]),
                ("gamma_factor", vec![F(0.1), F(1.0), F(10.0)]),
            ],
            ModelKind::QuantumKitchenSinks => vec![
                ("n_qfeatures", vec![I(d.max(1) as i64), I((d / 2).max(1) as i64)]),
                ints("n_episodes", &[10, 100, 500, 2000]),
            ],
            ModelKind::Quanvolutional => vec![
                lr_small(),
                ints("n_qchannels", &[1, 5, 10]),
                ints("qkernel_shape", &[2, 3]),
                ints("kernel_shape", &[2, 3, 5]),
            ],
            ModelKind::WeiNet => vec![lr_small(), texts("filter_type", &["edge_detect", "smooth", "sharpen"])],
            ModelKind::SeparableVariational => vec![lr(), ints("encoding_layers", &[1, 3, 5, 10])],
            ModelKind::SeparableKernel => vec![ints("encoding_layers", &[1, 3, 5, 10]), c()],
            ModelKind::Mlp => vec![
                lr(),
                (
                    "hidden_layer_sizes",
                    vec![
                        HyperValue::Sizes(vec![100]),
                        HyperValue::Sizes(vec![10, 10, 10, 10]),
                        HyperValue::Sizes(vec![50, 10, 5]),
                    ],
                ),
                ("alpha", vec![F(0.01), F(0.001), F(0.0001)]),
            ],
            ModelKind::Svc => vec![c(), ("gamma", vec![F(0.001), F(0.01), F(0.1), F(1.0)])],
            ModelKind::Cnn => vec![lr_small(), ints("kernel_shape", &[2, 3, 5])],
        }
    }

    /// Cartesian product of [`ModelKind::grid_axes`].
    pub fn grid(self, d: usize) -> Vec<Hyperparams> {
        let axes = self.grid_axes(d);
        let mut out = vec![Hyperparams::new()];
        for (name, values) in axes {
            let mut next = Vec::with_capacity(out.len() * values.len());
            for base in &out {
                for v in &values {
                    let mut h = base.clone();
                    h.insert(name.to_string(), v.clone());
                    next.push(h);
                }
            }
            out = next;
        }
        out
    }

    /// First configuration of the grid.
    pub fn default_hyperparams(self, d: usize) -> Hyperparams {
        self.grid_axes(d)
            .into_iter()
            .map(|(n, v)| (n.to_string(), v[0].clone()))
            .collect()
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let norm = t.to_ascii_lowercase().replace('-', "_");
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == norm || k.class_name().eq_ignore_ascii_case(t))
            .ok_or_else(|| Error::Parse(format!("unknown model {s:?}")))
    }
}

/// A single hyperparameter value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HyperValue {
    Int(i64),
    Float(f64),
    Text(String),
    Sizes(Vec<usize>),
}

impl fmt::Display for HyperValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HyperValue::Int(i) => write!(f, "{i}"),
            HyperValue::Float(x) => write!(f, "{x}"),
            HyperValue::Text(s) => f.write_str(s),
            HyperValue::Sizes(v) => {
                let parts: Vec<String> = v.iter().map(usize::to_string).collect();
                write!(f, "({})", parts.join(" "))
            }
        }
    }
}

pub type Hyperparams = BTreeMap<String, HyperValue>;

/// Renders an assignment as `name=value;...` in key order.
pub fn format_hyperparams(h: &Hyperparams) -> String {
    h.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
}

fn lookup<'a>(h: &'a Hyperparams, name: &str) -> Result<&'a HyperValue> {
    h.get(name).ok_or_else(|| invalid(format!("missing hyperparameter {name}")))
}

pub(crate) fn hp_f64(h: &Hyperparams, name: &str) -> Result<f64> {
    match lookup(h, name)? {
        HyperValue::Float(x) => Ok(*x),
        HyperValue::Int(i) => Ok(*i as f64),
        v => Err(invalid(format!("hyperparameter {name}={v} is not a number"))),
    }
}

pub(crate) fn hp_usize(h: &Hyperparams, name: &str) -> Result<usize> {
    match lookup(h, name)? {
        HyperValue::Int(i) if *i >= 0 => Ok(*i as usize),
        HyperValue::Float(x) if *x >= 0.0 && x.fract() == 0.0 => Ok(*x as usize),
        v => Err(invalid(format!("hyperparameter {name}={v} is not a non-negative integer"))),
    }
}

pub(crate) fn hp_text<'a>(h: &'a Hyperparams, name: &str) -> Result<&'a str> {
    match lookup(h, name)? {
        HyperValue::Text(s) => Ok(s),
        v => Err(invalid(format!("hyperparameter {name}={v} is not a string"))),
    }
}

pub(crate) fn hp_sizes(h: &Hyperparams, name: &str) -> Result<Vec<usize>> {
    match lookup(h, name)? {
        HyperValue::Sizes(v) => Ok(v.clone()),
        HyperValue::Int(i) if *i > 0 => Ok(vec![*i as usize]),
        v => Err(invalid(format!("hyperparameter {name}={v} is not a list of sizes"))),
    }
}

/// Structural ablations. At most one applies to a model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Drop every entangling gate (or coupling term).
    NoEntanglement,
    /// Data reuploading with sigmoid cross entropy on the first qubit.
    NoCost,
    /// Data reuploading with the input scalings fixed to one.
    NoScaling,
    /// Data reuploading with all encoding gates before all variational gates.
    NoTrainableEmbedding,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::NoEntanglement,
        Variant::NoCost,
        Variant::NoScaling,
        Variant::NoTrainableEmbedding,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::NoEntanglement => "no_entanglement",
            Variant::NoCost => "no_cost",
            Variant::NoScaling => "no_scaling",
            Variant::NoTrainableEmbedding => "no_trainable_embedding",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == norm)
            .ok_or_else(|| Error::Parse(format!("unknown variant {s:?}")))
    }
}

/// Everything needed to train one model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub hyperparams: Hyperparams,
    pub variant: Option<Variant>,
    pub seed: u64,
    pub grad_method: GradMethod,
    pub max_steps: usize,
    /// Multiplies the inputs after preprocessing.
    pub input_scale: f64,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, hyperparams: Hyperparams, seed: u64) -> Self {
        Self {
            kind,
            hyperparams,
            variant: None,
            seed,
            grad_method: GradMethod::default(),
            max_steps: DEFAULT_MAX_STEPS,
            input_scale: 1.0,
        }
    }

    /// Spec with the first grid configuration.
    pub fn with_defaults(kind: ModelKind, d: usize, seed: u64) -> Self {
        Self::new(kind, kind.default_hyperparams(d), seed)
    }

    pub fn with_variant(mut self, variant: Variant) -> Result<Self> {
        if let Some(v) = self.variant {
            return Err(invalid(format!("variant {v} already set; variants are mutually exclusive")));
        }
        if !self.kind.supports(variant) {
            return Err(invalid(format!("{} does not support variant {variant}", self.kind)));
        }
        self.variant = Some(variant);
        Ok(self)
    }

    pub fn set(mut self, name: &str, value: HyperValue) -> Self {
        self.hyperparams.insert(name.to_string(), value);
        self
    }

    /// Checks hyperparameter names against the kind's grid and the variant
    /// against the kind.
    pub fn validate(&self, d: usize) -> Result<()> {
        let axes = self.kind.grid_axes(d);
        for (name, _) in &axes {
            if !self.hyperparams.contains_key(*name) {
                return Err(invalid(format!("{} needs hyperparameter {name}", self.kind)));
            }
        }
        for name in self.hyperparams.keys() {
            if !axes.iter().any(|(n, _)| n == name) {
                return Err(invalid(format!("{} has no hyperparameter {name}", self.kind)));
            }
        }
        if let Some(v) = self.variant {
            if !self.kind.supports(v) {
                return Err(invalid(format!("{} does not support variant {v}", self.kind)));
            }
        }
        if !(self.input_scale.is_finite()) {
            return Err(invalid("input scale must be finite"));
        }
        Ok(())
    }

    pub(crate) fn f64(&self, name: &str) -> Result<f64> {
        hp_f64(&self.hyperparams, name)
    }

    pub(crate) fn usize(&self, name: &str) -> Result<usize> {
        hp_usize(&self.hyperparams, name)
    }

    pub(crate) fn text(&self, name: &str) -> Result<&str> {
        hp_text(&self.hyperparams, name)
    }

    pub(crate) fn sizes(&self, name: &str) -> Result<Vec<usize>> {
        hp_sizes(&self.hyperparams, name)
    }

    pub(crate) fn has(&self, v: Variant) -> bool {
        self.variant == Some(v)
    }
}

/// Data-reuploading spec with one ablation applied. `None` returns the
/// spec unchanged.
pub fn ablate_data_reuploading(spec: &ModelSpec, variant: Option<Variant>) -> Result<ModelSpec> {
    if spec.kind != ModelKind::DataReuploading {
        return Err(invalid(format!("ablations apply to data_reuploading, not {}", spec.kind)));
    }
    match variant {
        None => Ok(spec.clone()),
        Some(v) => spec.clone().with_variant(v),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_parse_back() {
        for k in ModelKind::ALL {
            assert_eq!(k.name().parse::<ModelKind>().unwrap(), k);
            assert_eq!(k.class_name().parse::<ModelKind>().unwrap(), k);
        }
        assert_eq!("Data-Reuploading".parse::<ModelKind>().unwrap(), ModelKind::DataReuploading);
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("nope".parse::<ModelKind>().is_err());
    }

    #[test]
    fn grids_are_products_and_validate() {
        for k in ModelKind::ALL {
            let axes = k.grid_axes(4);
            let grid = k.grid(4);
            assert_eq!(grid.len(), axes.iter().map(|(_, v)| v.len()).product::<usize>());
            assert_eq!(grid[0], k.default_hyperparams(4));
            for h in &grid {
                ModelSpec::new(k, h.clone(), 0).validate(4).unwrap();
            }
        }
        // the first axis varies slowest
        let g = ModelKind::Svc.grid(2);
        assert_eq!(g[1]["C"], HyperValue::Float(0.1));
        assert_eq!(g[1]["gamma"], HyperValue::Float(0.01));
    }

    #[test]
    fn validation_catches_names_and_variants() {
        let s = ModelSpec::with_defaults(ModelKind::Svc, 2, 0);
        assert!(s.clone().set("bogus", HyperValue::Int(1)).validate(2).is_err());
        let mut missing = s.clone();
        missing.hyperparams.remove("C");
        assert!(missing.validate(2).is_err());
        assert!(s.clone().with_variant(Variant::NoEntanglement).is_err());
        let drc = ModelSpec::with_defaults(ModelKind::DataReuploading, 2, 0);
        let v = drc.clone().with_variant(Variant::NoCost).unwrap();
        assert!(v.with_variant(Variant::NoScaling).is_err());
        assert!(ablate_data_reuploading(&s, None).is_err());
        assert_eq!(ablate_data_reuploading(&drc, None).unwrap(), drc);
    }

    #[test]
    fn hyperparameter_access_and_formatting() {
        let h: Hyperparams = [
            ("a".to_string(), HyperValue::Int(3)),
            ("b".to_string(), HyperValue::Sizes(vec![10, 5])),
            ("c".to_string(), HyperValue::Float(0.5)),
        ]
        .into_iter()
        .collect();
        assert_eq!(format_hyperparams(&h), "a=3;b=(10 5);c=0.5");
        assert_eq!(hp_f64(&h, "a").unwrap(), 3.0);
        assert_eq!(hp_sizes(&h, "a").unwrap(), vec![3]);
        assert!(hp_usize(&h, "c").is_err());
        assert!(hp_text(&h, "a").is_err());
        let json = serde_json::to_string(&h).unwrap();
        assert_eq!(serde_json::from_str::<Hyperparams>(&json).unwrap(), h);
    }
}
