//! Soft-margin SVM trained by sequential minimal optimization.
//!
//! Solves `min 1/2 a^T Q a - e^T a` subject to `0 <= a_i <= C` and
//! `y^T a = 0`, where `Q_ij = y_i y_j K_ij`. Each iteration picks the
//! maximal violating pair and solves the two-variable subproblem in closed
//! form, clipping to the box.

use serde::{Deserialize, Serialize};

use crate::classical::kernel::{check_gram, rbf};
use crate::error::{check_len, invalid, Result};

/// KKT gap at which SMO stops.
pub const SMO_TOLERANCE: f64 = 1e-3;
/// Iteration cap, in multiples of the training-set size.
pub const SMO_MAX_PASSES: usize = 10_000;
const TAU: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SvmKernel {
    Rbf { gamma: f64 },
    /// Kernel values against the training set are supplied by the caller.
    Precomputed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: SvmKernel,
    pub c: f64,
    /// Training indices with nonzero multipliers.
    pub support: Vec<usize>,
    /// `a_i y_i` for each support index.
    pub dual_coef: Vec<f64>,
    /// Support vectors (RBF only).
    pub support_vectors: Vec<Vec<f64>>,
    pub bias: f64,
    pub n_train: usize,
    pub converged: bool,
    pub iterations: usize,
}

fn check_labels(y: &[f64]) -> Result<()> {
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(invalid("SVM labels must be +1 or -1"));
    }
    if y.iter().all(|&v| v == y[0]) {
        return Err(invalid("SVM training needs both classes"));
    }
    Ok(())
}

struct Solution {
    alpha: Vec<f64>,
    bias: f64,
    converged: bool,
    iterations: usize,
}

fn smo(k: &[Vec<f64>], y: &[f64], c: f64) -> Solution {
    let n = y.len();
    let q = |i: usize, j: usize| y[i] * y[j] * k[i][j];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let is_up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let is_low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);
    let max_iter = SMO_MAX_PASSES.saturating_mul(n.max(1));
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        let mut g_max = f64::NEG_INFINITY;
        let mut g_min = f64::INFINITY;
        let (mut i, mut j) = (usize::MAX, usize::MAX);
        for t in 0..n {
            let v = -y[t] * grad[t];
            if is_up(alpha[t], y[t]) && v > g_max {
                g_max = v;
                i = t;
            }
            if is_low(alpha[t], y[t]) && v < g_min {
                g_min = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || g_max - g_min < SMO_TOLERANCE {
            converged = true;
            break;
        }
        iterations += 1;
        let (ai, aj) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (q(i, i) + q(j, j) + 2.0 * q(i, j)).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (q(i, i) + q(j, j) - 2.0 * q(i, j)).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - ai, alpha[j] - aj);
        for t in 0..n {
            grad[t] += q(i, t) * di + q(j, t) * dj;
        }
    }
    // offset: average over free multipliers, else midpoint of the feasible interval
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut n_free = 0;
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        0.5 * (ub + lb)
    };
    Solution {
        alpha,
        bias: -rho,
        converged,
        iterations,
    }
}

fn build(kernel: SvmKernel, c: f64, y: &[f64], sol: Solution, x: Option<&[Vec<f64>]>) -> SvmModel {
    let mut support = Vec::new();
    let mut dual_coef = Vec::new();
    let mut support_vectors = Vec::new();
    for (i, &a) in sol.alpha.iter().enumerate() {
        if a > 0.0 {
            support.push(i);
            dual_coef.push(a * y[i]);
            if let Some(x) = x {
                support_vectors.push(x[i].clone());
            }
        }
    }
    SvmModel {
        kernel,
        c,
        support,
        dual_coef,
        support_vectors,
        bias: sol.bias,
        n_train: y.len(),
        converged: sol.converged,
        iterations: sol.iterations,
    }
}

fn check_c(c: f64) -> Result<()> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(invalid(format!("C must be positive, got {c}")));
    }
    Ok(())
}

/// Trains on a precomputed Gram matrix, which must be symmetric PSD.
pub fn svm_fit_precomputed(gram: &[Vec<f64>], y: &[f64], c: f64) -> Result<SvmModel> {
    check_c(c)?;
    check_len("Gram size", y.len(), gram.len())?;
    check_labels(y)?;
    check_gram(gram)?;
    let sol = smo(gram, y, c);
    Ok(build(SvmKernel::Precomputed, c, y, sol, None))
}

/// Trains with the Gaussian kernel `exp(-gamma ||x - x'||^2)`.
pub fn svm_fit_rbf(x: &[Vec<f64>], y: &[f64], gamma: f64, c: f64) -> Result<SvmModel> {
    check_c(c)?;
    check_len("SVM rows", y.len(), x.len())?;
    check_labels(y)?;
    if !(gamma > 0.0) {
        return Err(invalid(format!("gamma must be positive, got {gamma}")));
    }
    let gram = crate::classical::kernel::rbf_gram(x, gamma);
    let sol = smo(&gram, y, c);
    Ok(build(SvmKernel::Rbf { gamma }, c, y, sol, Some(x)))
}

impl SvmModel {
    /// Decision value from kernel values against all training points.
    pub fn decision_from_kernel_row(&self, k_row: &[f64]) -> Result<f64> {
        check_len("kernel row length", self.n_train, k_row.len())?;
        Ok(self
            .support
            .iter()
            .zip(&self.dual_coef)
            .map(|(&i, a)| a * k_row[i])
            .sum::<f64>()
            + self.bias)
    }

    /// Decision value for a raw input (RBF models only).
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        match self.kernel {
            SvmKernel::Rbf { gamma } => Ok(self
                .support_vectors
                .iter()
                .zip(&self.dual_coef)
                .map(|(sv, a)| a * rbf(sv, x, gamma))
                .sum::<f64>()
                + self.bias),
            SvmKernel::Precomputed => Err(invalid(
                "precomputed-kernel SVM needs kernel values; use decision_from_kernel_row",
            )),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(sign(self.decision(x)?))
    }

    pub fn predict_from_kernel_row(&self, k_row: &[f64]) -> Result<f64> {
        Ok(sign(self.decision_from_kernel_row(k_row)?))
    }
}

/// `+1` for non-negative values, `-1` otherwise.
pub fn sign(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}
