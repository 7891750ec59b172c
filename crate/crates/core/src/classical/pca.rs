use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Result};

/// Projection onto the leading principal components of the training data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaProjector {
    /// `d_out` rows of length `d_in`, orthonormal, by descending variance.
    pub components: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    /// Covariance eigenvalues of the kept components.
    pub explained_variance: Vec<f64>,
}

/// Fits PCA on `train` (rows are samples).
///
/// The sign of each component is fixed so that its largest-magnitude entry
/// is positive (the first such entry on exact ties).
pub fn pca_fit(train: &[Vec<f64>], d_out: usize) -> Result<PcaProjector> {
    let n = train.len();
    let d_in = train.first().map(Vec::len).unwrap_or(0);
    if n == 0 || d_in == 0 {
        return Err(invalid("PCA needs a non-empty training matrix"));
    }
    if d_out == 0 || d_out > n.min(d_in) {
        return Err(invalid(format!(
            "cannot keep {d_out} components from {n} samples of width {d_in}"
        )));
    }
    for row in train {
        check_len("PCA row width", d_in, row.len())?;
    }
    let mut mean = vec![0.0; d_in];
    for row in train {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered = DMatrix::from_fn(n, d_in, |i, j| train[i][j] - mean[j]);
    let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };
    let cov = (centered.transpose() * &centered) / denom;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d_in).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut components = Vec::with_capacity(d_out);
    let mut explained_variance = Vec::with_capacity(d_out);
    for &k in order.iter().take(d_out) {
        let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        let mut lead = 0;
        for (j, x) in v.iter().enumerate() {
            if x.abs() > v[lead].abs() + 1e-12 {
                lead = j;
            }
        }
        if v[lead] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(v);
        explained_variance.push(eig.eigenvalues[k]);
    }
    Ok(PcaProjector {
        components,
        mean,
        explained_variance,
    })
}

impl PcaProjector {
    pub fn d_in(&self) -> usize {
        self.mean.len()
    }

    pub fn d_out(&self) -> usize {
        self.components.len()
    }

    pub fn transform_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("PCA input width", self.d_in(), x.len())?;
        Ok(self
            .components
            .iter()
            .map(|c| c.iter().zip(x.iter().zip(&self.mean)).map(|(a, (v, m))| a * (v - m)).sum())
            .collect())
    }

    pub fn transform(&self, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        x.iter().map(|r| self.transform_row(r)).collect()
    }

    /// Maps projected coordinates back to the input space.
    pub fn inverse_row(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_len("PCA projection width", self.d_out(), z.len())?;
        let mut x = self.mean.clone();
        for (c, &zk) in self.components.iter().zip(z) {
            for (xi, ci) in x.iter_mut().zip(c) {
                *xi += zk * ci;
            }
        }
        Ok(x)
    }
}

/// Alias matching [`PcaProjector::transform_row`].
pub fn pca_transform(projector: &PcaProjector, x: &[f64]) -> Result<Vec<f64>> {
    projector.transform_row(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn finds_the_long_axis() {
        // points spread along (1, 1)/sqrt 2 with a little orthogonal noise
        let x: Vec<Vec<f64>> = (0..20)
            .map(|k| {
                let t = k as f64 - 9.5;
                // the +,-,-,+ pattern is uncorrelated with t
                let e = if k % 4 == 0 || k % 4 == 3 { 0.1 } else { -0.1 };
                vec![t + e + 5.0, t - e - 2.0]
            })
            .collect();
        let p = pca_fit(&x, 1).unwrap();
        let c = &p.components[0];
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((c[0] - h).abs() < 1e-12 && (c[1] - h).abs() < 1e-12);
        assert!((p.mean[0] - 5.0).abs() < 1e-12);
        assert!(pca_fit(&x, 3).is_err());
    }

    proptest! {
        #[test]
        fn full_rank_projection_round_trips(
            rows in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 3), 4..20),
        ) {
            let p = pca_fit(&rows, 3).unwrap();
            for (a, ca) in p.components.iter().enumerate() {
                for (b, cb) in p.components.iter().enumerate() {
                    let dot: f64 = ca.iter().zip(cb).map(|(u, v)| u * v).sum();
                    let want = if a == b { 1.0 } else { 0.0 };
                    prop_assert!((dot - want).abs() < 1e-9);
                }
            }
            prop_assert!(p.explained_variance.windows(2).all(|w| w[0] >= w[1] - 1e-12));
            for r in &rows {
                let back = p.inverse_row(&p.transform_row(r).unwrap()).unwrap();
                for (u, v) in back.iter().zip(r) {
                    prop_assert!((u - v).abs() < 1e-9);
                }
            }
        }
    }
}
