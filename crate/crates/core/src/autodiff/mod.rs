//! Circuit gradients, the Adam optimizer and the loss-window stopping rule.

pub mod adam;
pub mod convergence;
pub mod gradient;
pub mod trainer;

pub use adam::{adam_step, AdamState};
pub use convergence::{has_converged, LossWindow};
pub use gradient::{
    adjoint_gradient, adjoint_vjp, finite_diff_grad, parameter_shift_grad,
    parameter_shift_grad_from, shift_jacobian, try_finite_diff_grad, CircuitGradient, GradMethod,
    ShiftGradient, ShiftJacobian,
};
pub use trainer::{train_adam, TrainConfig, TrainOutcome, DEFAULT_MAX_STEPS};
