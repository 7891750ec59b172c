use serde::{Deserialize, Serialize};

use crate::autodiff::adam::AdamState;
use crate::autodiff::convergence::{has_converged, LossWindow};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_STEPS: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_steps: usize,
    /// Stop as soon as the loss window reports convergence.
    pub stop_on_convergence: bool,
}

impl TrainConfig {
    pub fn new(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            max_steps: DEFAULT_MAX_STEPS,
            stop_on_convergence: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub params: Vec<f64>,
    pub loss_history: Vec<f64>,
    pub converged: bool,
    pub steps: usize,
}

/// Minimizes a stochastic objective with Adam.
///
/// `step_loss` returns the minibatch loss and gradient at the given
/// parameters; it owns batch sampling through the provided RNG. Training
/// stops once the loss window converges or after `max_steps` updates. A
/// non-finite loss or gradient aborts with an error naming the step.
pub fn train_adam<R>(
    params: Vec<f64>,
    cfg: &TrainConfig,
    rng: &mut R,
    mut step_loss: impl FnMut(&[f64], &mut R) -> Result<(f64, Vec<f64>)>,
) -> Result<TrainOutcome> {
    let mut params = params;
    let mut adam = AdamState::new(params.len(), cfg.learning_rate);
    let mut window = LossWindow::new();
    let mut history = Vec::new();
    let mut converged = false;
    for step in 0..cfg.max_steps {
        let (loss, grad) = step_loss(&params, rng)?;
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("training loss is {loss} at step {step}")));
        }
        adam.step(&mut params, &grad)?;
        history.push(loss);
        window.push(loss);
        if has_converged(&window) {
            converged = true;
            if cfg.stop_on_convergence {
                break;
            }
        }
    }
    Ok(TrainOutcome {
        params,
        steps: history.len(),
        loss_history: history,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn minimizes_a_quadratic() {
        let target = [1.5, -0.5];
        let cfg = TrainConfig::new(0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = train_adam(vec![0.0, 0.0], &cfg, &mut rng, |p, _| {
            let g: Vec<f64> = p.iter().zip(&target).map(|(a, b)| 2.0 * (a - b)).collect();
            let l = p.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum();
            Ok((l, g))
        })
        .unwrap();
        assert!(out.converged);
        assert!(out.steps < cfg.max_steps);
        assert_eq!(out.loss_history.len(), out.steps);
        for (p, t) in out.params.iter().zip(target) {
            assert!((p - t).abs() < 1e-2);
        }
    }

    #[test]
    fn step_cap_and_non_finite_loss() {
        let mut cfg = TrainConfig::new(0.1);
        cfg.max_steps = 5;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = train_adam(vec![0.0], &cfg, &mut rng, |p, _| Ok((-p[0], vec![-1.0]))).unwrap();
        assert_eq!(out.steps, 5);
        assert!(!out.converged);
        let err = train_adam(vec![0.0], &cfg, &mut rng, |_, _| Ok((f64::NAN, vec![0.0])));
        assert!(err.is_err());
    }
}
