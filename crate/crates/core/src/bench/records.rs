//! Benchmark records, their on-disk layout, and the sweep runner.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::bench::cv::{grid_search_cv, SearchOptions};
use crate::datagen::{Benchmark, Dataset, GeneratorConfig, SweepOptions};
use crate::error::{invalid, Result};
use crate::models::{Hyperparams, ModelKind, Variant};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    /// The grid search ran but produced no usable configuration.
    Failed(String),
    /// The cell was not attempted (e.g. register cap, wrong input type).
    Skipped(String),
}

/// Result of one (dataset, model) cell of a benchmark sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub model: ModelKind,
    pub variant: Option<Variant>,
    pub benchmark: String,
    pub dataset: GeneratorConfig,
    pub dataset_stem: String,
    pub n_features: usize,
    pub status: CellStatus,
    pub winner_hyperparams: Option<Hyperparams>,
    /// Validation accuracy of the winner per fold (`None` for excluded folds).
    pub fold_accuracies: Vec<Option<f64>>,
    pub mean_validation_accuracy: Option<f64>,
    pub train_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub seed: u64,
    pub wall_time_s: f64,
    pub started_unix_s: u64,
    pub finished_unix_s: u64,
}

impl BenchmarkRecord {
    /// Name of the model column, including the variant.
    pub fn model_label(&self) -> String {
        match self.variant {
            Some(v) => format!("{}_{}", self.model, v),
            None => self.model.to_string(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// `<dir>/<benchmark>/<model label>/<dataset stem>.json`.
pub fn record_path(dir: &Path, benchmark: &str, model_label: &str, stem: &str) -> PathBuf {
    dir.join(benchmark).join(model_label).join(format!("{stem}.json"))
}

/// Reason a model cannot run on a dataset, checked before any training.
pub fn skip_reason(kind: ModelKind, ds: &Dataset, max_qubits: Option<usize>) -> Option<String> {
    let d = ds.n_features();
    if kind.needs_images() && ds.image_side.is_none() {
        return Some(format!("{kind} needs image inputs"));
    }
    let qubits = match kind {
        ModelKind::CircuitCentric | ModelKind::TreeTensor => Some(crate::sim::amplitude_register_size(d)),
        ModelKind::DataReuploading => Some(d.div_ceil(3)),
        ModelKind::QuantumMetricLearner | ModelKind::ProjectedQuantumKernel => Some(d + 1),
        ModelKind::WeiNet => Some(2 * ds.image_side.unwrap_or(1).trailing_zeros() as usize),
        ModelKind::Quanvolutional | ModelKind::Mlp | ModelKind::Svc | ModelKind::Cnn => None,
        ModelKind::SeparableVariational | ModelKind::SeparableKernel => None,
        ModelKind::QuantumKitchenSinks => Some(d.max(1)),
        _ => Some(d),
    };
    match (qubits, max_qubits) {
        (Some(q), Some(cap)) if q > cap => Some(format!("needs {q} qubits, cap is {cap}")),
        _ => None,
    }
}

/// Runs one cell: grid search of `kind` on `ds`.
pub fn run_cell(kind: ModelKind, ds: &Dataset, seed: u64, opts: &SearchOptions) -> Result<BenchmarkRecord> {
    let started = unix_now();
    let clock = Instant::now();
    let grid = kind.grid(ds.n_features());
    let res = grid_search_cv(kind, &grid, &ds.x_train, &ds.y_train, &ds.x_test, &ds.y_test, seed, opts);
    let mut rec = BenchmarkRecord {
        model: kind,
        variant: opts.variant,
        benchmark: ds.benchmark.clone(),
        dataset: ds.config.clone(),
        dataset_stem: ds.file_stem(),
        n_features: ds.n_features(),
        status: CellStatus::Ok,
        winner_hyperparams: None,
        fold_accuracies: Vec::new(),
        mean_validation_accuracy: None,
        train_accuracy: None,
        test_accuracy: None,
        seed,
        wall_time_s: 0.0,
        started_unix_s: started,
        finished_unix_s: 0,
    };
    match res {
        Ok(r) => {
            if let Some(w) = r.winner_config() {
                rec.winner_hyperparams = Some(w.hyperparams.clone());
                rec.fold_accuracies = w
                    .folds
                    .iter()
                    .map(|f| if f.excluded.is_none() { f.accuracy } else { None })
                    .collect();
                rec.mean_validation_accuracy = w.mean;
            }
            rec.train_accuracy = r.train_accuracy;
            rec.test_accuracy = r.test_accuracy;
            if let Some(f) = r.failure {
                rec.status = CellStatus::Failed(f);
            }
        }
        Err(e) => rec.status = CellStatus::Failed(e.to_string()),
    }
    rec.wall_time_s = clock.elapsed().as_secs_f64();
    rec.finished_unix_s = unix_now();
    Ok(rec)
}

/// Options of a benchmark sweep.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub search: SearchOptions,
    pub sweep: SweepOptions,
    pub max_qubits: Option<usize>,
}

/// Summary of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub records: Vec<BenchmarkRecord>,
    /// Cells loaded from disk instead of recomputed.
    pub resumed: usize,
}

impl RunSummary {
    /// Whether any cell was skipped or failed.
    pub fn is_partial(&self) -> bool {
        self.records.iter().any(|r| r.status != CellStatus::Ok)
    }
}

/// Runs every (dataset, model) cell of a benchmark, in dataset order then
/// model order. With `out`, each record is written as soon as it is done and
/// cells already on disk are loaded rather than recomputed; the aggregate
/// CSV is rewritten at the end.
pub fn run_benchmark(
    benchmark: Benchmark,
    models: &[ModelKind],
    seed: u64,
    opts: &RunOptions,
    out: Option<&Path>,
) -> Result<RunSummary> {
    if models.is_empty() {
        return Err(invalid("no models to run"));
    }
    let datasets = benchmark.datasets(seed, &opts.sweep)?;
    run_on_datasets(benchmark.name(), &datasets, models, seed, opts, out)
}

/// [`run_benchmark`] on already generated datasets.
pub fn run_on_datasets(
    benchmark: &str,
    datasets: &[Dataset],
    models: &[ModelKind],
    seed: u64,
    opts: &RunOptions,
    out: Option<&Path>,
) -> Result<RunSummary> {
    let mut records = Vec::new();
    let mut resumed = 0;
    for ds in datasets {
        for &kind in models {
            let label = match opts.search.variant {
                Some(v) => format!("{kind}_{v}"),
                None => kind.to_string(),
            };
            let path = out.map(|dir| record_path(dir, benchmark, &label, &ds.file_stem()));
            if let Some(p) = path.as_ref().filter(|p| p.exists()) {
                if let Ok(r) = BenchmarkRecord::from_json(&fs::read_to_string(p)?) {
                    if r.seed == seed {
                        records.push(r);
                        resumed += 1;
                        continue;
                    }
                }
            }
            let rec = match skip_reason(kind, ds, opts.max_qubits) {
                Some(reason) => BenchmarkRecord {
                    model: kind,
                    variant: opts.search.variant,
                    benchmark: benchmark.to_string(),
                    dataset: ds.config.clone(),
                    dataset_stem: ds.file_stem(),
                    n_features: ds.n_features(),
                    status: CellStatus::Skipped(reason),
                    winner_hyperparams: None,
                    fold_accuracies: Vec::new(),
                    mean_validation_accuracy: None,
                    train_accuracy: None,
                    test_accuracy: None,
                    seed,
                    wall_time_s: 0.0,
                    started_unix_s: unix_now(),
                    finished_unix_s: unix_now(),
                },
                None => {
                    let mut ds = ds.clone();
                    ds.benchmark = benchmark.to_string();
                    run_cell(kind, &ds, seed, &opts.search)?
                }
            };
            if let Some(p) = &path {
                if let Some(parent) = p.parent() {
                    fs::create_dir_all(parent)?;
                }
                // write then rename so an interrupted run never leaves a partial file
                let tmp = p.with_extension("json.tmp");
                fs::write(&tmp, rec.to_json()?)?;
                fs::rename(&tmp, p)?;
            }
            records.push(rec);
        }
    }
    if let Some(dir) = out {
        let all = load_records(&dir.join(benchmark))?;
        fs::write(dir.join(benchmark).join("results.csv"), records_csv(&all))?;
    }
    Ok(RunSummary { records, resumed })
}

/// Every record JSON under `dir`, recursively, sorted by path.
pub fn load_records(dir: &Path) -> Result<Vec<BenchmarkRecord>> {
    let mut paths = Vec::new();
    collect_json(dir, &mut paths)?;
    paths.sort();
    paths
        .iter()
        .map(|p| BenchmarkRecord::from_json(&fs::read_to_string(p)?))
        .collect()
}

fn collect_json(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    if !dir.is_dir() {
        return Ok(());
    }
    for entry in fs::read_dir(dir)? {
        let p = entry?.path();
        if p.is_dir() {
            collect_json(&p, out)?;
        } else if p.extension().is_some_and(|e| e == "json") {
            out.push(p);
        }
    }
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |a| format!("{a:.6}"))
}

/// One row per record.
pub fn records_csv(records: &[BenchmarkRecord]) -> String {
    let mut s = String::from(
        "benchmark,dataset,n_features,model,status,hyperparams,mean_validation_accuracy,train_accuracy,test_accuracy,wall_time_s,seed\n",
    );
    for r in records {
        let status = match &r.status {
            CellStatus::Ok => "ok",
            CellStatus::Failed(_) => "failed",
            CellStatus::Skipped(_) => "skipped",
        };
        let hp = r
            .winner_hyperparams
            .as_ref()
            .map(crate::models::format_hyperparams)
            .unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{},{},\"{}\",{},{},{},{:.3},{}\n",
            r.benchmark,
            r.dataset_stem,
            r.n_features,
            r.model_label(),
            status,
            hp,
            opt(r.mean_validation_accuracy),
            opt(r.train_accuracy),
            opt(r.test_accuracy),
            r.wall_time_s,
            r.seed
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skips_by_input_type_and_qubit_cap() {
        let ds = crate::datagen::gen_linearly_separable(6, 20, 0).unwrap();
        assert!(skip_reason(ModelKind::Cnn, &ds, None).is_some());
        assert!(skip_reason(ModelKind::IqpKernel, &ds, Some(5)).is_some());
        assert!(skip_reason(ModelKind::IqpKernel, &ds, Some(6)).is_none());
        // amplitude encoding of 6 features needs 3 qubits, reuploading 2
        assert!(skip_reason(ModelKind::TreeTensor, &ds, Some(3)).is_none());
        assert!(skip_reason(ModelKind::DataReuploading, &ds, Some(2)).is_none());
        assert!(skip_reason(ModelKind::ProjectedQuantumKernel, &ds, Some(6)).is_some());
        assert!(skip_reason(ModelKind::Svc, &ds, Some(1)).is_none());
    }

    #[test]
    fn paths_nest_benchmark_model_and_stem() {
        let p = record_path(Path::new("out"), "bench", "svc", "bench_d2_n10");
        assert_eq!(p, Path::new("out/bench/svc/bench_d2_n10.json"));
    }
}
