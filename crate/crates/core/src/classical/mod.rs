//! Classical learners and preprocessing written from scratch.

pub mod cnn;
pub mod kernel;
pub mod logistic;
pub mod mlp;
pub mod pca;
pub mod scaler;
pub mod svm;

pub use cnn::{cnn_fit, CnnConfig, CnnModel, CnnShape};
pub use kernel::{check_gram, cross_gram, gram, min_eigenvalue, rbf, rbf_gram, PSD_TOLERANCE};
pub use logistic::{logistic_fit, sigmoid, softplus, LogisticConfig, LogisticModel};
pub use mlp::{mlp_fit, MlpConfig, MlpModel};
pub use pca::{pca_fit, pca_transform, PcaProjector};
pub use scaler::{MinMaxScaler, StandardScaler};
pub use svm::{sign, svm_fit_precomputed, svm_fit_rbf, SvmKernel, SvmModel};
