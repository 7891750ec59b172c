use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{check_len, invalid, Error, Result};

/// Eigenvalue floor below which a Gram matrix counts as indefinite.
pub const PSD_TOLERANCE: f64 = 1e-8;

/// `exp(-gamma ||a - b||^2)`.
pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

/// Rectangular kernel matrix `K[i][j] = k(a_i, b_j)`.
pub fn cross_gram(a: &[Vec<f64>], b: &[Vec<f64>], k: impl Fn(&[f64], &[f64]) -> f64) -> Vec<Vec<f64>> {
    a.iter().map(|x| b.iter().map(|y| k(x, y)).collect()).collect()
}

/// Symmetric Gram matrix, evaluating each unordered pair once.
pub fn gram(a: &[Vec<f64>], k: impl Fn(&[f64], &[f64]) -> f64) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut g = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = k(&a[i], &a[j]);
            g[i][j] = v;
            g[j][i] = v;
        }
    }
    g
}

pub fn rbf_gram(x: &[Vec<f64>], gamma: f64) -> Vec<Vec<f64>> {
    gram(x, |a, b| rbf(a, b, gamma))
}

pub fn min_eigenvalue(k: &[Vec<f64>]) -> f64 {
    let n = k.len();
    if n == 0 {
        return 0.0;
    }
    let m = DMatrix::from_fn(n, n, |i, j| k[i][j]);
    SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Checks that `k` is square, symmetric (to 1e-10) and PSD within
/// [`PSD_TOLERANCE`]; returns the smallest eigenvalue.
pub fn check_gram(k: &[Vec<f64>]) -> Result<f64> {
    let n = k.len();
    for row in k {
        check_len("Gram row length", n, row.len())?;
    }
    for i in 0..n {
        for j in 0..i {
            if (k[i][j] - k[j][i]).abs() > 1e-10 {
                return Err(invalid(format!("Gram matrix not symmetric at ({i}, {j})")));
            }
        }
        if !k[i].iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite(format!("Gram matrix row {i}")));
        }
    }
    let min = min_eigenvalue(k);
    if min < -PSD_TOLERANCE {
        return Err(Error::NotPositiveSemidefinite(min));
    }
    Ok(min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rbf_uses_squared_distance() {
        assert!((rbf(&[0.0, 0.0], &[3.0, 4.0], 0.1) - (-2.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn known_spectrum() {
        assert!((min_eigenvalue(&[vec![2.0, 1.0], vec![1.0, 2.0]]) - 1.0).abs() < 1e-12);
        assert!(matches!(
            check_gram(&[vec![1.0, 2.0], vec![2.0, 1.0]]),
            Err(Error::NotPositiveSemidefinite(_))
        ));
        assert!(check_gram(&[vec![1.0, 0.5], vec![0.4, 1.0]]).is_err());
        assert!(check_gram(&[vec![1.0, 0.5]]).is_err());
    }

    proptest! {
        #[test]
        fn rbf_gram_is_a_valid_kernel(
            pts in proptest::collection::vec(proptest::collection::vec(-2.0f64..2.0, 3), 1..12),
            gamma in 0.01f64..5.0,
        ) {
            let g = rbf_gram(&pts, gamma);
            prop_assert!(check_gram(&g).is_ok());
            for (i, row) in g.iter().enumerate() {
                prop_assert_eq!(row[i], 1.0);
            }
            prop_assert_eq!(cross_gram(&pts, &pts, |a, b| rbf(a, b, gamma)), g);
        }
    }
}
