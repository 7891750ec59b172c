use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::classical::{MinMaxScaler, StandardScaler};
use crate::error::Result;
use crate::models::spec::InputScaling;

/// Fitted input transform followed by a constant multiplier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    pub scaler: Scaler,
    pub input_scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Scaler {
    Identity,
    Standard(StandardScaler),
    MinMax(MinMaxScaler),
}

impl Preprocessor {
    pub fn fit(scaling: InputScaling, x: &[Vec<f64>], input_scale: f64) -> Result<Self> {
        let scaler = match scaling {
            InputScaling::Raw => Scaler::Identity,
            InputScaling::Standard => Scaler::Standard(StandardScaler::fit(x)?),
            InputScaling::Angle => Scaler::MinMax(MinMaxScaler::fit(x, -FRAC_PI_2, FRAC_PI_2)?),
        };
        Ok(Self { scaler, input_scale })
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        let mut out = match &self.scaler {
            Scaler::Identity => row.to_vec(),
            Scaler::Standard(s) => s.transform_row(row)?,
            Scaler::MinMax(s) => s.transform_row(row)?,
        };
        if self.input_scale != 1.0 {
            for v in &mut out {
                *v *= self.input_scale;
            }
        }
        Ok(out)
    }

    pub fn transform(&self, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        x.iter().map(|r| self.transform_row(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalings() {
        let x = vec![vec![0.0, 10.0], vec![4.0, 30.0]];
        let a = Preprocessor::fit(InputScaling::Angle, &x, 1.0).unwrap();
        assert_eq!(a.transform_row(&[0.0, 30.0]).unwrap(), vec![-FRAC_PI_2, FRAC_PI_2]);
        let s = Preprocessor::fit(InputScaling::Standard, &x, 2.0).unwrap();
        assert_eq!(s.transform_row(&[4.0, 10.0]).unwrap(), vec![2.0, -2.0]);
        let r = Preprocessor::fit(InputScaling::Raw, &x, 0.5).unwrap();
        assert_eq!(r.transform(&x).unwrap()[1], vec![2.0, 15.0]);
    }
}
