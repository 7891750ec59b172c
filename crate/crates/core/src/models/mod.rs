//! The classifier zoo: gradient-trained circuits, quantum kernels, fixed
//! quantum feature maps and the classical baselines, behind one
//! [`fit`] entry point.

pub mod boltzmann;
pub mod circuit_centric;
pub mod common;
pub mod data_reuploading;
pub mod dressed;
pub mod iqp_variational;
pub mod kernels;
pub mod kitchen_sinks;
pub mod metric_learner;
pub mod preprocess;
pub mod quanvolutional;
pub mod separable_variational;
pub mod spec;
pub mod trained;
pub mod tree_tensor;
pub mod weinet;

pub use boltzmann::{QuantumBoltzmann, VisibleQubits};
pub use circuit_centric::CircuitCentric;
pub use common::{train_variational, Variational, BATCH_SIZE};
pub use data_reuploading::{DataReuploading, ObservableType};
pub use dressed::Dressed;
pub use iqp_variational::IqpVariational;
pub use kernels::{Embedded, KernelClassifier, ProjectedKernel, QuantumKernel};
pub use kitchen_sinks::{KitchenSinks, KitchenSinksClassifier};
pub use metric_learner::MetricLearner;
pub use preprocess::{Preprocessor, Scaler};
pub use quanvolutional::{Quanvolution, QuanvolutionalNet};
pub use separable_variational::SeparableVariational;
pub use spec::{
    ablate_data_reuploading, format_hyperparams, HyperValue, Hyperparams, InputScaling, ModelKind, ModelSpec,
    Variant,
};
pub use trained::{build_variational, fit, FittedState, TrainedModel, VariationalModel};
pub use tree_tensor::TreeTensor;
pub use weinet::{FilterType, WeiNet};
