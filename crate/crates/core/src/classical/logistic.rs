//! L2-regularized logistic regression trained by L-BFGS with a backtracking
//! (Armijo) line search, so the training loss never increases.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::classical::svm::sign;
use crate::error::{check_len, invalid, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    /// Coefficient of `1/2 ||w||^2` added to the mean log-loss; `None` uses
    /// `1/N`. The intercept is not penalized.
    pub l2: Option<f64>,
    pub max_iter: usize,
    /// Stop when the largest gradient component falls below this.
    pub grad_tol: f64,
    pub memory: usize,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            l2: None,
            max_iter: 3000,
            grad_tol: 1e-6,
            memory: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Training loss after each accepted iteration (first entry at init).
    pub loss_history: Vec<f64>,
    pub converged: bool,
}

/// `log(1 + exp(z))` without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

struct Problem<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    l2: f64,
}

impl Problem<'_> {
    /// Loss and gradient at `p = (w, b)`.
    fn eval(&self, p: &[f64]) -> (f64, Vec<f64>) {
        let d = p.len() - 1;
        let n = self.x.len() as f64;
        let mut g = vec![0.0; d + 1];
        let mut loss = 0.0;
        for (row, &y) in self.x.iter().zip(self.y) {
            let z = row.iter().zip(p).map(|(a, b)| a * b).sum::<f64>() + p[d];
            // log-loss of label y in {-1,+1} is softplus(-y z)
            loss += softplus(-y * z);
            let r = -y * sigmoid(-y * z);
            for (gj, a) in g.iter_mut().zip(row) {
                *gj += r * a;
            }
            g[d] += r;
        }
        loss /= n;
        g.iter_mut().for_each(|v| *v /= n);
        for j in 0..d {
            loss += 0.5 * self.l2 * p[j] * p[j];
            g[j] += self.l2 * p[j];
        }
        (loss, g)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn logistic_fit(x: &[Vec<f64>], y: &[f64], cfg: &LogisticConfig) -> Result<LogisticModel> {
    check_len("logistic rows", x.len(), y.len())?;
    if x.is_empty() {
        return Err(invalid("logistic regression needs training data"));
    }
    let d = x[0].len();
    for row in x {
        check_len("logistic row width", d, row.len())?;
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(invalid("logistic labels must be +1 or -1"));
    }
    let prob = Problem {
        x,
        y,
        l2: cfg.l2.unwrap_or(1.0 / x.len() as f64),
    };
    let mut p = vec![0.0; d + 1];
    let (mut f, mut g) = prob.eval(&p);
    let mut history = vec![f];
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut converged = false;
    for _ in 0..cfg.max_iter {
        if g.iter().fold(0.0f64, |m, v| m.max(v.abs())) < cfg.grad_tol {
            converged = true;
            break;
        }
        // two-loop recursion
        let mut dir: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut coefs = Vec::with_capacity(mem.len());
        for (s, yv, rho) in mem.iter().rev() {
            let a = rho * dot(s, &dir);
            dir.iter_mut().zip(yv).for_each(|(q, yy)| *q -= a * yy);
            coefs.push(a);
        }
        if let Some((s, yv, _)) = mem.back() {
            let h0 = dot(s, yv) / dot(yv, yv);
            dir.iter_mut().for_each(|q| *q *= h0);
        }
        for ((s, yv, rho), a) in mem.iter().zip(coefs.into_iter().rev()) {
            let b = rho * dot(yv, &dir);
            dir.iter_mut().zip(s).for_each(|(q, ss)| *q += (a - b) * ss);
        }
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            dir = g.iter().map(|v| -v).collect();
            slope = dot(&g, &dir);
            mem.clear();
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = p.iter().zip(&dir).map(|(a, b)| a + step * b).collect();
            let (ft, gt) = prob.eval(&trial);
            if ft.is_finite() && ft <= f + 1e-4 * step * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((np, nf, ng)) = accepted else {
            // no decrease possible at machine precision
            converged = true;
            break;
        };
        let s: Vec<f64> = np.iter().zip(&p).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = ng.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-12 {
            if mem.len() == cfg.memory {
                mem.pop_front();
            }
            mem.push_back((s, yv, 1.0 / sy));
        }
        p = np;
        f = nf;
        g = ng;
        history.push(f);
    }
    let intercept = p.pop().unwrap_or(0.0);
    Ok(LogisticModel {
        weights: p,
        intercept,
        loss_history: history,
        converged,
    })
}

impl LogisticModel {
    pub fn decision(&self, z: &[f64]) -> Result<f64> {
        check_len("logistic input width", self.weights.len(), z.len())?;
        Ok(dot(&self.weights, z) + self.intercept)
    }

    pub fn predict(&self, z: &[f64]) -> Result<f64> {
        Ok(sign(self.decision(z)?))
    }

    pub fn probability(&self, z: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.decision(z)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn stable_link_functions() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0 && softplus(-1000.0) < 1e-300);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert!((sigmoid(3.0) + sigmoid(-3.0) - 1.0).abs() < 1e-15);
        assert!(sigmoid(-800.0) >= 0.0);
    }

    proptest! {
        #[test]
        fn loss_is_monotone_and_gradient_vanishes(
            rows in proptest::collection::vec(proptest::collection::vec(-3.0f64..3.0, 2), 6..30),
            w in proptest::collection::vec(-2.0f64..2.0, 2),
        ) {
            let y: Vec<f64> = rows.iter().map(|r| sign(r[0] * w[0] + r[1] * w[1] + 0.1 * r[0] * r[1])).collect();
            prop_assume!(y.iter().any(|&v| v > 0.0) && y.iter().any(|&v| v < 0.0));
            let m = logistic_fit(&rows, &y, &LogisticConfig::default()).unwrap();
            prop_assert!(m.loss_history.windows(2).all(|p| p[1] <= p[0] + 1e-15));
            if m.converged {
                // stationarity: numerical gradient of the objective near zero
                let l2 = 1.0 / rows.len() as f64;
                let prob = Problem { x: &rows, y: &y, l2 };
                let mut p = m.weights.clone();
                p.push(m.intercept);
                let (_, g) = prob.eval(&p);
                prop_assert!(g.iter().all(|v| v.abs() < 1e-5));
            }
        }
    }

    #[test]
    fn analytic_gradient_matches_differences() {
        let x = vec![vec![0.5, -1.0], vec![1.5, 0.2], vec![-0.3, 0.9]];
        let y = vec![1.0, -1.0, 1.0];
        let prob = Problem { x: &x, y: &y, l2: 0.3 };
        let p = [0.4, -0.7, 0.2];
        let (_, g) = prob.eval(&p);
        for k in 0..3 {
            let (mut a, mut b) = (p, p);
            a[k] += 1e-6;
            b[k] -= 1e-6;
            let fd = (prob.eval(&a).0 - prob.eval(&b).0) / 2e-6;
            assert!((fd - g[k]).abs() < 1e-8);
        }
    }
}
