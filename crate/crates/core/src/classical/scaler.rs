use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Result};

fn check_rows(x: &[Vec<f64>]) -> Result<usize> {
    let d = x.first().map(Vec::len).ok_or_else(|| invalid("cannot fit on an empty matrix"))?;
    for row in x {
        check_len("row width", d, row.len())?;
    }
    Ok(d)
}

/// Per-feature standardization fitted on training data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandardScaler {
    pub mean: Vec<f64>,
    /// Population standard deviations; zero-variance columns store 1.
    pub std: Vec<f64>,
}

impl StandardScaler {
    pub fn fit(x: &[Vec<f64>]) -> Result<Self> {
        let d = check_rows(x)?;
        let n = x.len() as f64;
        let mut mean = vec![0.0; d];
        for row in x {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for row in x {
            for j in 0..d {
                var[j] += (row[j] - mean[j]).powi(2);
            }
        }
        // a column whose spread is pure rounding noise counts as constant
        let std = var
            .into_iter()
            .zip(&mean)
            .map(|(v, m)| {
                let s = (v / n).sqrt();
                if s > 1e-12 * m.abs().max(1.0) {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        check_len("scaler input width", self.mean.len(), row.len())?;
        Ok(row
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }

    pub fn transform(&self, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        x.iter().map(|r| self.transform_row(r)).collect()
    }
}

/// Per-feature affine map of the training range onto `[lo, hi]`.
///
/// Constant columns map to the midpoint of the target range. Values outside
/// the training range are not clipped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
}

impl MinMaxScaler {
    pub fn fit(x: &[Vec<f64>], lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(invalid(format!("empty target range [{lo}, {hi}]")));
        }
        let d = check_rows(x)?;
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for row in x {
            for j in 0..d {
                min[j] = min[j].min(row[j]);
                max[j] = max[j].max(row[j]);
            }
        }
        Ok(Self { min, max, lo, hi })
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        check_len("scaler input width", self.min.len(), row.len())?;
        let mid = 0.5 * (self.lo + self.hi);
        Ok(row
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                let range = self.max[j] - self.min[j];
                if range > 0.0 {
                    self.lo + (v - self.min[j]) / range * (self.hi - self.lo)
                } else {
                    mid
                }
            })
            .collect())
    }

    pub fn transform(&self, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        x.iter().map(|r| self.transform_row(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_columns() {
        let x = vec![vec![3.0, 1.0], vec![3.0, 2.0]];
        let s = StandardScaler::fit(&x).unwrap();
        assert_eq!(s.transform_row(&[3.0, 1.0]).unwrap(), vec![0.0, -1.0]);
        let m = MinMaxScaler::fit(&x, -1.0, 1.0).unwrap();
        assert_eq!(m.transform_row(&[3.0, 2.0]).unwrap(), vec![0.0, 1.0]);
        assert_eq!(m.transform_row(&[3.0, 3.0]).unwrap(), vec![0.0, 3.0]);
        assert!(MinMaxScaler::fit(&x, 1.0, 1.0).is_err());
        assert!(StandardScaler::fit(&[]).is_err());
    }

    proptest! {
        #[test]
        fn standardized_columns(rows in proptest::collection::vec(proptest::collection::vec(-50.0f64..50.0, 2), 2..30)) {
            let s = StandardScaler::fit(&rows).unwrap();
            let z = s.transform(&rows).unwrap();
            let n = z.len() as f64;
            for j in 0..2 {
                let mean = z.iter().map(|r| r[j]).sum::<f64>() / n;
                let var = z.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
                prop_assert!(mean.abs() < 1e-9);
                prop_assert!((var - 1.0).abs() < 1e-9 || var == 0.0);
            }
        }

        #[test]
        fn min_max_hits_the_target_range(rows in proptest::collection::vec(proptest::collection::vec(-50.0f64..50.0, 3), 2..30)) {
            let m = MinMaxScaler::fit(&rows, 0.0, std::f64::consts::PI).unwrap();
            for r in m.transform(&rows).unwrap() {
                for v in r {
                    prop_assert!((-1e-12..=std::f64::consts::PI + 1e-12).contains(&v));
                }
            }
        }
    }
}
