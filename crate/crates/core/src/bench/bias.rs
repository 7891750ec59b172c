//! Simulation of how selective reporting inflates published scores.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasParams {
    pub n_researchers: usize,
    /// Quantum designs each researcher tries before reporting the best.
    pub n_candidates: usize,
    pub q_mean: f64,
    pub q_std: f64,
    pub c_mean: f64,
    pub c_std: f64,
}

impl Default for BiasParams {
    fn default() -> Self {
        Self {
            n_researchers: 100,
            n_candidates: 20,
            q_mean: 0.55,
            q_std: 0.1,
            c_mean: 0.65,
            c_std: 0.07,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasOutcome {
    /// Best of the candidates, per researcher.
    pub quantum: Vec<f64>,
    /// One classical score per researcher.
    pub classical: Vec<f64>,
}

impl BiasOutcome {
    pub fn quantum_mean(&self) -> f64 {
        self.quantum.iter().sum::<f64>() / self.quantum.len() as f64
    }

    pub fn classical_mean(&self) -> f64 {
        self.classical.iter().sum::<f64>() / self.classical.len() as f64
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("researcher,reported_quantum,reported_classical\n");
        for (i, (q, c)) in self.quantum.iter().zip(&self.classical).enumerate() {
            s.push_str(&format!("{i},{q},{c}\n"));
        }
        s
    }
}

/// Each researcher draws `n_candidates` quantum scores and reports the
/// largest, and draws a single classical score.
pub fn positivity_bias_sim(p: &BiasParams, seed: u64) -> Result<BiasOutcome> {
    if p.n_researchers == 0 || p.n_candidates == 0 {
        return Err(invalid("need at least one researcher and one candidate"));
    }
    if !(p.q_std >= 0.0 && p.c_std >= 0.0) {
        return Err(invalid("score standard deviations must be non-negative"));
    }
    let q = Normal::new(p.q_mean, p.q_std).map_err(|e| invalid(format!("quantum distribution: {e}")))?;
    let c = Normal::new(p.c_mean, p.c_std).map_err(|e| invalid(format!("classical distribution: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = BiasOutcome {
        quantum: Vec::with_capacity(p.n_researchers),
        classical: Vec::with_capacity(p.n_researchers),
    };
    for _ in 0..p.n_researchers {
        let best = (0..p.n_candidates).map(|_| q.sample(&mut rng)).fold(f64::NEG_INFINITY, f64::max);
        out.quantum.push(best);
        out.classical.push(c.sample(&mut rng));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `E[max of n standard normals]` by trapezoidal integration of
    /// `n x phi(x) Phi(x)^(n-1)`, with `Phi` accumulated on the same grid.
    fn expected_max_standard(n: usize) -> f64 {
        let h = 1e-4;
        let lo = -10.0;
        let steps = 200_000;
        let pdf = |x: f64| (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut cdf = 0.0;
        let mut total = 0.0;
        let mut prev = 0.0;
        for i in 0..=steps {
            let x = lo + i as f64 * h;
            if i > 0 {
                cdf += 0.5 * h * (pdf(x - h) + pdf(x));
            }
            let f = n as f64 * x * pdf(x) * cdf.powi(n as i32 - 1);
            if i > 0 {
                total += 0.5 * h * (prev + f);
            }
            prev = f;
        }
        total
    }

    #[test]
    fn reported_means_match_order_statistics() {
        let p = BiasParams {
            n_researchers: 20_000,
            ..BiasParams::default()
        };
        let out = positivity_bias_sim(&p, 5).unwrap();
        let want_q = p.q_mean + p.q_std * expected_max_standard(p.n_candidates);
        // the sd of a maximum of 20 normals is about 0.52 sigma
        let se_q = 0.52 * p.q_std / (p.n_researchers as f64).sqrt();
        let se_c = p.c_std / (p.n_researchers as f64).sqrt();
        assert!((out.quantum_mean() - want_q).abs() < 4.0 * se_q, "{} vs {want_q}", out.quantum_mean());
        assert!((out.classical_mean() - p.c_mean).abs() < 4.0 * se_c);
        assert_eq!(out.to_csv().lines().count(), p.n_researchers + 1);
    }

    #[test]
    fn single_candidate_has_no_selection_effect() {
        assert!((expected_max_standard(1)).abs() < 1e-9);
        let p = BiasParams { n_candidates: 0, ..BiasParams::default() };
        assert!(positivity_bias_sim(&p, 0).is_err());
        let p = BiasParams { q_std: -1.0, ..BiasParams::default() };
        assert!(positivity_bias_sim(&p, 0).is_err());
    }
}
