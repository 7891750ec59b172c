//! Stratified k-fold grid search.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autodiff::{GradMethod, DEFAULT_MAX_STEPS};
use crate::error::{check_len, invalid, Result};
use crate::models::{fit, Hyperparams, ModelKind, ModelSpec, TrainedModel, Variant};

pub const DEFAULT_FOLDS: usize = 5;

/// Knobs shared by every fit in a search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub folds: usize,
    pub variant: Option<Variant>,
    pub grad_method: GradMethod,
    pub max_steps: usize,
    /// Count folds whose training did not converge instead of ignoring them.
    pub keep_unconverged: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            folds: DEFAULT_FOLDS,
            variant: None,
            grad_method: GradMethod::default(),
            max_steps: DEFAULT_MAX_STEPS,
            keep_unconverged: false,
        }
    }
}

/// Outcome of one training run on one fold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub accuracy: Option<f64>,
    pub converged: bool,
    /// Why the fold was excluded, if it was.
    pub excluded: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigResult {
    pub hyperparams: Hyperparams,
    pub folds: Vec<FoldResult>,
    /// Mean and standard deviation over the folds that count; `None` if none do.
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub kind: ModelKind,
    pub configs: Vec<ConfigResult>,
    /// Index into `configs` of the winner.
    pub winner: Option<usize>,
    pub train_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
    /// Whether the refit winner converged.
    pub refit_converged: Option<bool>,
    /// Set when no configuration produced a usable result.
    pub failure: Option<String>,
}

impl GridSearchResult {
    pub fn winner_config(&self) -> Option<&ConfigResult> {
        self.winner.map(|w| &self.configs[w])
    }
}

/// Validation index sets of `k` stratified folds; each class is shuffled
/// with the seed and dealt round-robin.
pub fn stratified_folds(y: &[f64], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(invalid(format!("need at least 2 folds, got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for label in [1.0, -1.0] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == label).collect();
        if idx.len() < k {
            return Err(invalid(format!(
                "class {label} has {} training points, fewer than {k} folds",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for i in idx {
            folds[next % k].push(i);
            next += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

fn spec_for(kind: ModelKind, h: &Hyperparams, seed: u64, opts: &SearchOptions) -> Result<ModelSpec> {
    let mut spec = ModelSpec::new(kind, h.clone(), seed);
    spec.grad_method = opts.grad_method;
    spec.max_steps = opts.max_steps;
    if let Some(v) = opts.variant {
        spec = spec.with_variant(v)?;
    }
    Ok(spec)
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, (v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / n).sqrt())
}

/// Full grid search with stratified k-fold cross-validation, then a refit of
/// the winner on all training data scored on the test split.
///
/// Runs whose training does not converge are ignored unless
/// `keep_unconverged`; a fit that errors is ignored as well, with its
/// message recorded. Ties go to the configuration listed first.
pub fn grid_search_cv(
    kind: ModelKind,
    grid: &[Hyperparams],
    x_train: &[Vec<f64>],
    y_train: &[f64],
    x_test: &[Vec<f64>],
    y_test: &[f64],
    seed: u64,
    opts: &SearchOptions,
) -> Result<GridSearchResult> {
    check_len("train labels", x_train.len(), y_train.len())?;
    check_len("test labels", x_test.len(), y_test.len())?;
    if grid.is_empty() {
        return Err(invalid("empty hyperparameter grid"));
    }
    let folds = stratified_folds(y_train, opts.folds, seed)?;
    let jobs: Vec<(usize, usize)> = (0..grid.len()).flat_map(|c| (0..folds.len()).map(move |f| (c, f))).collect();
    let results: Vec<FoldResult> = jobs
        .par_iter()
        .map(|&(c, f)| {
            let val = &folds[f];
            let mut in_val = vec![false; y_train.len()];
            for &i in val {
                in_val[i] = true;
            }
            let (mut xt, mut yt, mut xv, mut yv) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
            for i in 0..y_train.len() {
                if in_val[i] {
                    xv.push(x_train[i].clone());
                    yv.push(y_train[i]);
                } else {
                    xt.push(x_train[i].clone());
                    yt.push(y_train[i]);
                }
            }
            let run = || -> Result<(f64, bool)> {
                let spec = spec_for(kind, &grid[c], seed, opts)?;
                let m = fit(&spec, &xt, &yt)?;
                Ok((m.accuracy(&xv, &yv)?, m.converged))
            };
            match run() {
                Ok((acc, converged)) if converged || opts.keep_unconverged => FoldResult {
                    accuracy: Some(acc),
                    converged,
                    excluded: None,
                },
                Ok((acc, _)) => FoldResult {
                    accuracy: Some(acc),
                    converged: false,
                    excluded: Some("training did not converge".into()),
                },
                Err(e) => FoldResult {
                    accuracy: None,
                    converged: false,
                    excluded: Some(e.to_string()),
                },
            }
        })
        .collect();
    let mut configs = Vec::with_capacity(grid.len());
    let mut it = results.into_iter();
    for h in grid {
        let folds: Vec<FoldResult> = it.by_ref().take(opts.folds).collect();
        let counted: Vec<f64> = folds.iter().filter(|f| f.excluded.is_none()).filter_map(|f| f.accuracy).collect();
        let (mean, std) = if counted.is_empty() {
            (None, None)
        } else {
            let (m, s) = mean_std(&counted);
            (Some(m), Some(s))
        };
        configs.push(ConfigResult {
            hyperparams: h.clone(),
            folds,
            mean,
            std,
        });
    }
    let mut winner: Option<usize> = None;
    for (i, c) in configs.iter().enumerate() {
        if let Some(m) = c.mean {
            if winner.is_none_or(|w| m > configs[w].mean.unwrap_or(f64::NEG_INFINITY)) {
                winner = Some(i);
            }
        }
    }
    let mut result = GridSearchResult {
        kind,
        configs,
        winner,
        train_accuracy: None,
        test_accuracy: None,
        refit_converged: None,
        failure: None,
    };
    let Some(w) = winner else {
        result.failure = Some("no configuration produced a counted fold".into());
        return Ok(result);
    };
    let refit = || -> Result<TrainedModel> {
        let spec = spec_for(kind, &result.configs[w].hyperparams, seed, opts)?;
        fit(&spec, x_train, y_train)
    };
    match refit() {
        Ok(m) => {
            result.train_accuracy = Some(m.accuracy(x_train, y_train)?);
            result.test_accuracy = Some(m.accuracy(x_test, y_test)?);
            result.refit_converged = Some(m.converged);
        }
        Err(e) => result.failure = Some(format!("refit failed: {e}")),
    }
    Ok(result)
}
