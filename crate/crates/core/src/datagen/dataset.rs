use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Result};

/// Generator name, parameters and seed of a dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum GeneratorConfig {
    LinearlySeparable {
        d: usize,
        n: usize,
        /// Margin half-width as a multiple of `d`.
        margin: f64,
        seed: u64,
    },
    BarsAndStripes {
        width: usize,
        n: usize,
        noise: f64,
        seed: u64,
    },
    HiddenManifold {
        d: usize,
        n: usize,
        m: usize,
        seed: u64,
    },
    TwoCurves {
        d: usize,
        n: usize,
        degree: usize,
        offset: f64,
        noise: f64,
        seed: u64,
    },
    HyperplanesParity {
        d: usize,
        n: usize,
        k: usize,
        m: usize,
        seed: u64,
    },
    MnistPca {
        d: usize,
        /// Rows kept per split (250 for the reduced variant).
        subsample: Option<usize>,
        seed: u64,
    },
    MnistCg {
        height: usize,
        seed: u64,
    },
}

impl GeneratorConfig {
    pub fn generator_name(&self) -> &'static str {
        match self {
            GeneratorConfig::LinearlySeparable { .. } => "linearly_separable",
            GeneratorConfig::BarsAndStripes { .. } => "bars_and_stripes",
            GeneratorConfig::HiddenManifold { .. } => "hidden_manifold",
            GeneratorConfig::TwoCurves { .. } => "two_curves",
            GeneratorConfig::HyperplanesParity { .. } => "hyperplanes_parity",
            GeneratorConfig::MnistPca { .. } => "mnist_pca",
            GeneratorConfig::MnistCg { .. } => "mnist_cg",
        }
    }

    pub fn seed(&self) -> u64 {
        match *self {
            GeneratorConfig::LinearlySeparable { seed, .. }
            | GeneratorConfig::BarsAndStripes { seed, .. }
            | GeneratorConfig::HiddenManifold { seed, .. }
            | GeneratorConfig::TwoCurves { seed, .. }
            | GeneratorConfig::HyperplanesParity { seed, .. }
            | GeneratorConfig::MnistPca { seed, .. }
            | GeneratorConfig::MnistCg { seed, .. } => seed,
        }
    }

    /// Short parameter tag used in file names, e.g. `d4_n300`.
    pub fn params_tag(&self) -> String {
        match self {
            GeneratorConfig::LinearlySeparable { d, n, .. } => format!("d{d}_n{n}"),
            GeneratorConfig::BarsAndStripes { width, n, .. } => format!("w{width}_n{n}"),
            GeneratorConfig::HiddenManifold { d, n, m, .. } => format!("d{d}_m{m}_n{n}"),
            GeneratorConfig::TwoCurves { d, degree, n, .. } => format!("d{d}_deg{degree}_n{n}"),
            GeneratorConfig::HyperplanesParity { d, k, m, n, .. } => format!("d{d}_k{k}_m{m}_n{n}"),
            GeneratorConfig::MnistPca { d, subsample, .. } => match subsample {
                Some(s) => format!("d{d}_sub{s}"),
                None => format!("d{d}"),
            },
            GeneratorConfig::MnistCg { height, .. } => format!("h{height}"),
        }
    }
}

/// Labelled inputs with a fixed train/test split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    /// Benchmark family the dataset belongs to (used in file names).
    pub benchmark: String,
    pub config: GeneratorConfig,
    pub x_train: Vec<Vec<f64>>,
    pub y_train: Vec<f64>,
    pub x_test: Vec<Vec<f64>>,
    pub y_test: Vec<f64>,
    /// Side length for square single-channel images stored row-major.
    pub image_side: Option<usize>,
}

impl Dataset {
    pub fn new(
        benchmark: impl Into<String>,
        config: GeneratorConfig,
        (x_train, y_train): (Vec<Vec<f64>>, Vec<f64>),
        (x_test, y_test): (Vec<Vec<f64>>, Vec<f64>),
        image_side: Option<usize>,
    ) -> Result<Self> {
        check_len("train labels", x_train.len(), y_train.len())?;
        check_len("test labels", x_test.len(), y_test.len())?;
        let d = x_train
            .first()
            .or(x_test.first())
            .map(Vec::len)
            .ok_or_else(|| invalid("dataset has no rows"))?;
        for row in x_train.iter().chain(&x_test) {
            check_len("feature width", d, row.len())?;
            if row.iter().any(|v| !v.is_finite()) {
                return Err(invalid("dataset contains non-finite features"));
            }
        }
        if y_train.iter().chain(&y_test).any(|&y| y != 1.0 && y != -1.0) {
            return Err(invalid("labels must be +1 or -1"));
        }
        if let Some(s) = image_side {
            check_len("image pixels", s * s, d)?;
        }
        Ok(Self {
            benchmark: benchmark.into(),
            config,
            x_train,
            y_train,
            x_test,
            y_test,
            image_side,
        })
    }

    pub fn n_features(&self) -> usize {
        self.x_train.first().or(self.x_test.first()).map(Vec::len).unwrap_or(0)
    }

    pub fn n_train(&self) -> usize {
        self.x_train.len()
    }

    pub fn n_test(&self) -> usize {
        self.x_test.len()
    }

    /// `<benchmark>_<params>`, the stem shared by the CSV and JSON files.
    pub fn file_stem(&self) -> String {
        format!("{}_{}", self.benchmark, self.config.params_tag())
    }
}

/// Default ratio `|test| / |train|`.
pub const TEST_TRAIN_RATIO: f64 = 0.2;

/// Shuffles `(x, y)` and splits so that `|test| / |train|` is `ratio`
/// (rounded to the nearest row).
pub fn split_train_test(
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    ratio: f64,
    rng: &mut impl Rng,
) -> ((Vec<Vec<f64>>, Vec<f64>), (Vec<Vec<f64>>, Vec<f64>)) {
    let n = x.len();
    let n_test = ((n as f64) * ratio / (1.0 + ratio)).round() as usize;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let (test_idx, train_idx) = idx.split_at(n_test);
    let take = |ids: &[usize]| -> (Vec<Vec<f64>>, Vec<f64>) {
        (ids.iter().map(|&i| x[i].clone()).collect(), ids.iter().map(|&i| y[i]).collect())
    };
    (take(train_idx), take(test_idx))
}

/// Labels `+1` where `value - median > 0`, `-1` elsewhere.
pub fn median_labels(values: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let med = if n == 0 {
        0.0
    } else if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    values.iter().map(|&v| if v - med > 0.0 { 1.0 } else { -1.0 }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;

    #[test]
    fn median_split() {
        assert_eq!(median_labels(&[3.0, 1.0, 2.0]), vec![1.0, -1.0, -1.0]);
        assert_eq!(median_labels(&[4.0, 1.0, 2.0, 3.0]), vec![1.0, -1.0, -1.0, 1.0]);
    }

    #[test]
    fn rejects_malformed_rows() {
        let cfg = GeneratorConfig::MnistCg { height: 2, seed: 0 };
        let ok = (vec![vec![0.0; 4]], vec![1.0]);
        assert!(Dataset::new("b", cfg.clone(), ok.clone(), ok.clone(), Some(2)).is_ok());
        assert!(Dataset::new("b", cfg.clone(), ok.clone(), ok.clone(), Some(3)).is_err());
        assert!(Dataset::new("b", cfg.clone(), (vec![vec![0.0; 4]], vec![0.0]), ok.clone(), None).is_err());
        assert!(Dataset::new("b", cfg.clone(), (vec![vec![f64::NAN; 4]], vec![1.0]), ok.clone(), None).is_err());
        assert!(Dataset::new("b", cfg, (vec![vec![0.0; 3]], vec![1.0]), ok, None).is_err());
    }

    proptest! {
        #[test]
        fn split_is_a_partition(n in 2usize..400, seed in 0u64..100) {
            let x: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
            let y = vec![1.0; n];
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let ((tr, _), (te, _)) = split_train_test(x, y, TEST_TRAIN_RATIO, &mut rng);
            prop_assert_eq!(te.len(), (n as f64 * 0.2 / 1.2).round() as usize);
            let mut all: Vec<f64> = tr.iter().chain(&te).map(|r| r[0]).collect();
            all.sort_by(f64::total_cmp);
            prop_assert_eq!(all, (0..n).map(|i| i as f64).collect::<Vec<_>>());
        }
    }
}
