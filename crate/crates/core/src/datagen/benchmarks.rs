use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::datagen::dataset::{Dataset, GeneratorConfig};
use crate::datagen::generators::{
    gen_bars_and_stripes, gen_hidden_manifold_as, gen_hyperplanes_parity,
    gen_linearly_separable_with_margin, gen_two_curves_as,
};
use crate::datagen::mnist::{gen_mnist_cg, gen_mnist_pca, load_mnist, MnistRaw};
use crate::error::{invalid, Error, Result};

/// The ten benchmark sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Benchmark {
    LinearlySeparable,
    BarsAndStripes,
    MnistPca,
    MnistPcaMinus,
    MnistCg,
    HiddenManifold,
    HiddenManifoldDiff,
    TwoCurves,
    TwoCurvesDiff,
    HyperplanesDiff,
}

impl Benchmark {
    pub const ALL: [Benchmark; 10] = [
        Benchmark::LinearlySeparable,
        Benchmark::BarsAndStripes,
        Benchmark::MnistPca,
        Benchmark::MnistPcaMinus,
        Benchmark::MnistCg,
        Benchmark::HiddenManifold,
        Benchmark::HiddenManifoldDiff,
        Benchmark::TwoCurves,
        Benchmark::TwoCurvesDiff,
        Benchmark::HyperplanesDiff,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::LinearlySeparable => "linearly_separable",
            Benchmark::BarsAndStripes => "bars_and_stripes",
            Benchmark::MnistPca => "mnist_pca",
            Benchmark::MnistPcaMinus => "mnist_pca_minus",
            Benchmark::MnistCg => "mnist_cg",
            Benchmark::HiddenManifold => "hidden_manifold",
            Benchmark::HiddenManifoldDiff => "hidden_manifold_diff",
            Benchmark::TwoCurves => "two_curves",
            Benchmark::TwoCurvesDiff => "two_curves_diff",
            Benchmark::HyperplanesDiff => "hyperplanes_diff",
        }
    }

    /// Image benchmarks feed the convolutional models.
    pub fn is_image(self) -> bool {
        matches!(self, Benchmark::BarsAndStripes | Benchmark::MnistCg)
    }

    pub fn needs_mnist(self) -> bool {
        matches!(self, Benchmark::MnistPca | Benchmark::MnistPcaMinus | Benchmark::MnistCg)
    }

    /// The full list of values of the swept variable (d, width, m, degree or k).
    pub fn default_values(self) -> Vec<usize> {
        match self {
            Benchmark::BarsAndStripes | Benchmark::MnistCg => vec![4, 8, 16, 32],
            _ => (2..=20).collect(),
        }
    }

    /// Dataset configurations of the sweep.
    pub fn configs(self, seed: u64, opts: &SweepOptions) -> Vec<GeneratorConfig> {
        let mut values = opts.values.clone().unwrap_or_else(|| self.default_values());
        if let Some(cap) = opts.max_value {
            values.retain(|&v| v <= cap);
        }
        values
            .into_iter()
            .map(|v| match self {
                Benchmark::LinearlySeparable => GeneratorConfig::LinearlySeparable {
                    d: v,
                    n: 300,
                    margin: 0.02,
                    seed,
                },
                Benchmark::BarsAndStripes => GeneratorConfig::BarsAndStripes {
                    width: v,
                    n: 1000,
                    noise: 0.5,
                    seed,
                },
                Benchmark::MnistPca => GeneratorConfig::MnistPca {
                    d: v,
                    subsample: None,
                    seed,
                },
                Benchmark::MnistPcaMinus => GeneratorConfig::MnistPca {
                    d: v,
                    subsample: Some(250),
                    seed,
                },
                Benchmark::MnistCg => GeneratorConfig::MnistCg { height: v, seed },
                Benchmark::HiddenManifold => GeneratorConfig::HiddenManifold {
                    d: v,
                    n: 300,
                    m: 6,
                    seed,
                },
                Benchmark::HiddenManifoldDiff => GeneratorConfig::HiddenManifold {
                    d: 10,
                    n: 300,
                    m: v,
                    seed,
                },
                Benchmark::TwoCurves => GeneratorConfig::TwoCurves {
                    d: v,
                    n: 300,
                    degree: 5,
                    offset: 0.1,
                    noise: 0.01,
                    seed,
                },
                Benchmark::TwoCurvesDiff => GeneratorConfig::TwoCurves {
                    d: 10,
                    n: 300,
                    degree: v,
                    offset: 1.0 / (2.0 * v as f64),
                    noise: 0.01,
                    seed,
                },
                Benchmark::HyperplanesDiff => GeneratorConfig::HyperplanesParity {
                    d: 10,
                    n: 1000,
                    k: v,
                    m: 3,
                    seed,
                },
            })
            .collect()
    }

    /// Generates every dataset of the sweep.
    pub fn datasets(self, seed: u64, opts: &SweepOptions) -> Result<Vec<Dataset>> {
        let raw = if self.needs_mnist() {
            let dir = opts.mnist_dir.as_ref().ok_or_else(|| {
                invalid(format!("benchmark {self} needs --mnist-dir with the raw IDX files"))
            })?;
            Some(load_mnist(dir)?)
        } else {
            None
        };
        self.configs(seed, opts)
            .iter()
            .map(|c| generate(self.name(), c, raw.as_ref()))
            .collect()
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Benchmark {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        Benchmark::ALL
            .into_iter()
            .find(|b| b.name() == norm)
            .ok_or_else(|| Error::Parse(format!("unknown benchmark {s:?}")))
    }
}

/// Desk-scale restrictions of a sweep.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Replaces the swept values entirely.
    pub values: Option<Vec<usize>>,
    /// Drops swept values above this cap.
    pub max_value: Option<usize>,
    pub mnist_dir: Option<PathBuf>,
}

/// Rebuilds a dataset from its configuration.
pub fn generate(benchmark: &str, config: &GeneratorConfig, mnist: Option<&MnistRaw>) -> Result<Dataset> {
    let need = || invalid("MNIST benchmarks need the raw IDX files");
    match *config {
        GeneratorConfig::LinearlySeparable { d, n, margin, seed } => {
            gen_linearly_separable_with_margin(d, n, margin, seed)
        }
        GeneratorConfig::BarsAndStripes { width, n, noise, seed } => gen_bars_and_stripes(width, n, noise, seed),
        GeneratorConfig::HiddenManifold { d, n, m, seed } => gen_hidden_manifold_as(benchmark, d, n, m, seed),
        GeneratorConfig::TwoCurves {
            d,
            n,
            degree,
            offset,
            noise,
            seed,
        } => gen_two_curves_as(benchmark, d, n, degree, offset, noise, seed),
        GeneratorConfig::HyperplanesParity { d, n, k, m, seed } => {
            let mut ds = gen_hyperplanes_parity(d, n, k, m, seed)?;
            ds.benchmark = benchmark.to_string();
            Ok(ds)
        }
        GeneratorConfig::MnistPca { d, subsample, seed } => gen_mnist_pca(mnist.ok_or_else(need)?, d, subsample, seed),
        GeneratorConfig::MnistCg { height, seed } => gen_mnist_cg(mnist.ok_or_else(need)?, height, seed),
    }
}
