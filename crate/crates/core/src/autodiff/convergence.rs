use std::collections::VecDeque;

/// Number of losses kept for the convergence test.
pub const WINDOW: usize = 400;
const HALF: usize = WINDOW / 2;

/// The most recent [`WINDOW`] training losses.
#[derive(Clone, Debug, Default)]
pub struct LossWindow {
    values: VecDeque<f64>,
    steps: usize,
}

impl LossWindow {
    pub fn new() -> Self {
        Self {
            values: VecDeque::with_capacity(WINDOW),
            steps: 0,
        }
    }

    pub fn push(&mut self, loss: f64) {
        if self.values.len() == WINDOW {
            self.values.pop_front();
        }
        self.values.push_back(loss);
        self.steps += 1;
    }

    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Self {
        let mut w = Self::new();
        for v in values {
            w.push(v);
        }
        w
    }

    pub fn is_full(&self) -> bool {
        self.values.len() == WINDOW
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Total number of losses pushed so far.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied()
    }
}

/// Compares the mean of the older and newer halves of a full window.
///
/// Converged when `|mu_old - mu_new| < sigma_new / (2 sqrt(200))`, where
/// `sigma_new` is the population standard deviation of the newer half, or
/// when the newer half is flat and both means agree.
pub fn has_converged(window: &LossWindow) -> bool {
    if !window.is_full() {
        return false;
    }
    // center on the newest value to limit cancellation for large offsets
    let pivot = window.values[WINDOW - 1];
    let centered: Vec<f64> = window.values.iter().map(|v| v - pivot).collect();
    let (old, new) = centered.split_at(HALF);
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let mu1 = mean(old);
    let mu2 = mean(new);
    let var = new.iter().map(|v| (v - mu2).powi(2)).sum::<f64>() / HALF as f64;
    let sigma = var.sqrt();
    if sigma == 0.0 {
        return mu1 == mu2;
    }
    (mu1 - mu2).abs() < sigma / (2.0 * (HALF as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn needs_a_full_window() {
        let w = LossWindow::from_values(std::iter::repeat(1.0).take(WINDOW - 1));
        assert!(!has_converged(&w));
        let w = LossWindow::from_values(std::iter::repeat(1.0).take(WINDOW));
        assert!(has_converged(&w));
    }

    #[test]
    fn window_keeps_latest_values() {
        let w = LossWindow::from_values((0..WINDOW + 10).map(|k| k as f64));
        assert_eq!(w.len(), WINDOW);
        assert_eq!(w.steps(), WINDOW + 10);
        assert_eq!(w.values().next(), Some(10.0));
    }

    #[test]
    fn oscillation_around_a_fixed_level_converges() {
        let w = LossWindow::from_values((0..WINDOW).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }));
        assert!(has_converged(&w));
    }

    proptest! {
        #[test]
        fn steady_descent_is_not_converged(start in -1e3f64..1e3, slope in 1e-4f64..1.0) {
            // half-window means differ by 200 * slope, sd of the newer half is about 58 * slope
            let w = LossWindow::from_values((0..WINDOW).map(|k| start - slope * k as f64));
            prop_assert!(!has_converged(&w));
        }

        #[test]
        fn invariant_to_offset(offset in -1e6f64..1e6, seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let base: Vec<f64> = (0..WINDOW).map(|_| rng.random_range(-1.0..1.0)).collect();
            let a = has_converged(&LossWindow::from_values(base.iter().copied()));
            let b = has_converged(&LossWindow::from_values(base.iter().map(|v| v * 1e-3 + offset)));
            let c = has_converged(&LossWindow::from_values(base.iter().map(|v| v * 1e-3)));
            prop_assert_eq!(a, c);
            if offset.abs() < 1e3 {
                prop_assert_eq!(b, c);
            }
        }
    }
}
