//! Test accuracy as a function of a multiplier on the preprocessed inputs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::cv::SearchOptions;
use crate::bench::records::{BenchmarkRecord, CellStatus};
use crate::datagen::Dataset;
use crate::error::{invalid, Result};
use crate::models::{fit, Hyperparams, ModelKind, ModelSpec};

pub const SCALING_SEEDS: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRecord {
    pub model: ModelKind,
    pub dataset_stem: String,
    pub scale: f64,
    pub hyperparams: Hyperparams,
    pub seeds: Vec<u64>,
    /// Test accuracy per seed (`None` where training failed).
    pub test_accuracies: Vec<Option<f64>>,
    pub mean_test_accuracy: Option<f64>,
}

/// The winning hyperparameters of `kind` on the dataset `stem`.
pub fn winner_for<'a>(records: &'a [BenchmarkRecord], kind: ModelKind, stem: &str) -> Result<&'a Hyperparams> {
    records
        .iter()
        .filter(|r| r.model == kind && r.variant.is_none() && r.dataset_stem == stem && r.status == CellStatus::Ok)
        .find_map(|r| r.winner_hyperparams.as_ref())
        .ok_or_else(|| invalid(format!("no winner configuration for {kind} on {stem}")))
}

/// For each model and scale factor, retrains the winner configuration with
/// the inputs multiplied by the factor after preprocessing, once per seed
/// `seed..seed + SCALING_SEEDS`, and records the test accuracies.
pub fn scaling_sweep(
    models: &[(ModelKind, Hyperparams)],
    ds: &Dataset,
    scales: &[f64],
    seed: u64,
    opts: &SearchOptions,
) -> Result<Vec<ScalingRecord>> {
    if models.is_empty() || scales.is_empty() {
        return Err(invalid("scaling sweep needs models and scale factors"));
    }
    let seeds: Vec<u64> = (0..SCALING_SEEDS as u64).map(|i| seed + i).collect();
    let mut jobs = Vec::new();
    for (m, (kind, h)) in models.iter().enumerate() {
        for &scale in scales {
            for &s in &seeds {
                jobs.push((m, *kind, h, scale, s));
            }
        }
    }
    let accs: Vec<Option<f64>> = jobs
        .par_iter()
        .map(|&(_, kind, h, scale, s)| {
            let mut spec = ModelSpec::new(kind, h.clone(), s);
            spec.input_scale = scale;
            spec.grad_method = opts.grad_method;
            spec.max_steps = opts.max_steps;
            fit(&spec, &ds.x_train, &ds.y_train)
                .and_then(|m| m.accuracy(&ds.x_test, &ds.y_test))
                .ok()
        })
        .collect();
    let mut out = Vec::new();
    for (chunk, group) in accs.chunks(seeds.len()).zip(jobs.chunks(seeds.len())) {
        let (m, kind, _, scale, _) = group[0];
        let ok: Vec<f64> = chunk.iter().flatten().copied().collect();
        out.push(ScalingRecord {
            model: kind,
            dataset_stem: ds.file_stem(),
            scale,
            hyperparams: models[m].1.clone(),
            seeds: seeds.clone(),
            test_accuracies: chunk.to_vec(),
            mean_test_accuracy: (!ok.is_empty()).then(|| ok.iter().sum::<f64>() / ok.len() as f64),
        });
    }
    Ok(out)
}

pub fn scaling_csv(records: &[ScalingRecord]) -> String {
    let mut s = String::from("model,dataset,scale,mean_test_accuracy,n_runs\n");
    for r in records {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.model,
            r.dataset_stem,
            r.scale,
            r.mean_test_accuracy.map_or(String::new(), |a| format!("{a:.6}")),
            r.test_accuracies.iter().flatten().count()
        ));
    }
    s
}
