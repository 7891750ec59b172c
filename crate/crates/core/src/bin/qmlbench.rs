//! Command-line front end of the benchmark harness.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qmlbench_core::autodiff::GradMethod;
use qmlbench_core::bench::{
    data_bounds, decision_grid, gram_difference, kernel_landscape, load_records, model_gram, positivity_bias_sim,
    rank_models, run_benchmark, scaling_csv, scaling_sweep, winner_for, BiasParams, CellStatus, RunOptions,
    SearchOptions,
};
use qmlbench_core::datagen::{read_dataset, write_dataset, Benchmark, SweepOptions};
use qmlbench_core::models::{fit, HyperValue, ModelKind, ModelSpec, TrainedModel, Variant};
use qmlbench_core::{Error, Result};

#[derive(Parser)]
#[command(name = "qmlbench", version, about = "Benchmark quantum and classical binary classifiers")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Grad {
    Adjoint,
    ParameterShift,
}

#[derive(clap::Args)]
struct SweepArgs {
    /// Comma-separated swept values replacing the defaults.
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<usize>>,
    /// Drop swept values above this.
    #[arg(long)]
    max_value: Option<usize>,
    /// Directory holding the MNIST IDX files.
    #[arg(long)]
    mnist_dir: Option<PathBuf>,
}

impl SweepArgs {
    fn options(&self) -> SweepOptions {
        SweepOptions {
            values: self.values.clone(),
            max_value: self.max_value,
            mnist_dir: self.mnist_dir.clone(),
        }
    }
}

#[derive(clap::Args)]
struct TrainArgs {
    #[arg(long, value_enum, default_value = "adjoint")]
    grad: Grad,
    #[arg(long, default_value_t = qmlbench_core::autodiff::DEFAULT_MAX_STEPS)]
    max_steps: usize,
}

impl TrainArgs {
    fn method(&self) -> GradMethod {
        match self.grad {
            Grad::Adjoint => GradMethod::Adjoint,
            Grad::ParameterShift => GradMethod::ParameterShift,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate every dataset of a benchmark sweep as CSV plus JSON sidecar.
    GenData {
        benchmark: Benchmark,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Grid-search models over a benchmark sweep, one JSON record per cell.
    Run {
        benchmark: Benchmark,
        /// Comma-separated model names, or `all`, `quantum`, `classical`.
        #[arg(long, default_value = "all")]
        models: String,
        #[arg(long)]
        out: PathBuf,
        /// Skip cells whose model needs more qubits than this.
        #[arg(long)]
        max_qubits: Option<usize>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = qmlbench_core::bench::DEFAULT_FOLDS)]
        folds: usize,
        #[arg(long)]
        variant: Option<Variant>,
        /// Count folds whose training did not converge.
        #[arg(long)]
        keep_unconverged: bool,
        #[command(flatten)]
        train: TrainArgs,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Expected normalised rank of every model found under a results directory.
    Rank {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pairwise Gram-matrix differences of kernel models on a dataset's training split.
    GramDiff {
        #[arg(long)]
        models: String,
        /// Dataset sidecar JSON or one of its CSV files.
        #[arg(long)]
        dataset: PathBuf,
        /// Results directory to take winning hyperparameters from.
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Kernel values around (π/2, π/2) for a saved 2d kernel model.
    Landscape {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 51)]
        resolution: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predicted labels on a grid for a saved 2d model.
    DecisionGrid {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 100)]
        resolution: usize,
        /// `x_lo,x_hi,y_lo,y_hi`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        bounds: Option<Vec<f64>>,
        /// Take the bounds from this dataset's training inputs instead.
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Retrain winners with the preprocessed inputs multiplied by each factor.
    ScalingSweep {
        #[arg(long)]
        models: String,
        #[arg(long)]
        dataset: PathBuf,
        /// Results directory holding the grid-search winners.
        #[arg(long)]
        records: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.5,1,2")]
        scales: Vec<f64>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate how reporting the best of several designs inflates results.
    BiasSim {
        #[arg(long, default_value_t = 100)]
        researchers: usize,
        #[arg(long, default_value_t = 20)]
        candidates: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train one model on a dataset and save it as JSON.
    Fit {
        #[arg(long)]
        model: ModelKind,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// `name=value`, repeatable; unset names take the first grid value.
        #[arg(long = "set")]
        set: Vec<String>,
        #[arg(long)]
        variant: Option<Variant>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        train: TrainArgs,
    },
}

/// How a command ended, mapped to the process exit code.
enum Outcome {
    Done,
    Partial,
}

fn parse_models(list: &str) -> Result<Vec<ModelKind>> {
    let all = ModelKind::ALL;
    match list.trim() {
        "all" => Ok(all.to_vec()),
        "quantum" => Ok(all.into_iter().filter(|k| k.is_quantum()).collect()),
        "classical" => Ok(all.into_iter().filter(|k| !k.is_quantum()).collect()),
        s => s.split(',').filter(|t| !t.trim().is_empty()).map(str::parse).collect(),
    }
}

/// Parses `name=value` against the type of the grid's values for `name`.
fn parse_setting(kind: ModelKind, d: usize, s: &str) -> Result<(String, HyperValue)> {
    let (name, raw) = s
        .split_once('=')
        .ok_or_else(|| Error::Parse(format!("expected name=value, got {s:?}")))?;
    let axes = kind.grid_axes(d);
    let (_, values) = axes
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::Parse(format!("{kind} has no hyperparameter {name}")))?;
    let bad = |e: &dyn std::fmt::Display| Error::Parse(format!("{name}: {e}"));
    let v = match &values[0] {
        HyperValue::Int(_) => HyperValue::Int(raw.parse().map_err(|e| bad(&e))?),
        HyperValue::Float(_) => HyperValue::Float(raw.parse().map_err(|e| bad(&e))?),
        HyperValue::Text(_) => HyperValue::Text(raw.to_string()),
        HyperValue::Sizes(_) => HyperValue::Sizes(
            raw.trim_matches(['[', ']'])
                .split([',', ' '])
                .filter(|t| !t.is_empty())
                .map(|t| t.parse().map_err(|e| bad(&e)))
                .collect::<Result<_>>()?,
        ),
    };
    Ok((name.to_string(), v))
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, text)?;
            eprintln!("wrote {}", p.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.cmd {
        Cmd::GenData { benchmark, out, seed, sweep } => {
            for ds in benchmark.datasets(seed, &sweep.options())? {
                let stem = write_dataset(&ds, &out)?;
                println!("{stem}");
            }
        }
        Cmd::Run {
            benchmark,
            models,
            out,
            max_qubits,
            seed,
            folds,
            variant,
            keep_unconverged,
            train,
            sweep,
        } => {
            let models = parse_models(&models)?;
            let opts = RunOptions {
                search: SearchOptions {
                    folds,
                    variant,
                    grad_method: train.method(),
                    max_steps: train.max_steps,
                    keep_unconverged,
                },
                sweep: sweep.options(),
                max_qubits,
            };
            let summary = run_benchmark(benchmark, &models, seed, &opts, Some(&out))?;
            for r in &summary.records {
                let acc = r.test_accuracy.map_or("-".to_string(), |a| format!("{a:.3}"));
                let note = match &r.status {
                    CellStatus::Ok => String::new(),
                    CellStatus::Failed(m) => format!(" failed: {m}"),
                    CellStatus::Skipped(m) => format!(" skipped: {m}"),
                };
                println!("{} {} test={acc}{note}", r.dataset_stem, r.model_label());
            }
            eprintln!("{} cells, {} resumed", summary.records.len(), summary.resumed);
            if summary.is_partial() {
                return Ok(Outcome::Partial);
            }
        }
        Cmd::Rank { input, out } => {
            let table = rank_models(&load_records(&input)?)?;
            emit(&table.to_csv(), out.as_deref())?;
        }
        Cmd::GramDiff {
            models,
            dataset,
            records,
            seed,
        } => {
            let ds = read_dataset(&dataset)?;
            let kinds = parse_models(&models)?;
            let recs = match &records {
                Some(dir) => load_records(dir)?,
                None => Vec::new(),
            };
            let stem = ds.file_stem();
            let mut grams = Vec::new();
            for &k in &kinds {
                let h = if records.is_some() {
                    winner_for(&recs, k, &stem)?.clone()
                } else {
                    k.default_hyperparams(ds.n_features())
                };
                let m = fit(&ModelSpec::new(k, h, seed), &ds.x_train, &ds.y_train)?;
                grams.push((k, model_gram(&m, &ds.x_train)?));
            }
            println!("model_a,model_b,difference");
            for (i, (ka, ga)) in grams.iter().enumerate() {
                for (kb, gb) in &grams[i..] {
                    println!("{ka},{kb},{:.6}", gram_difference(ga, gb)?);
                }
            }
        }
        Cmd::Landscape { model, resolution, out } => {
            let m = TrainedModel::load(&model)?;
            emit(&kernel_landscape(&m, resolution)?.to_csv(), out.as_deref())?;
        }
        Cmd::DecisionGrid {
            model,
            resolution,
            bounds,
            dataset,
            out,
        } => {
            let m = TrainedModel::load(&model)?;
            let b = match (bounds, dataset) {
                (Some(b), _) => match b[..] {
                    [x0, x1, y0, y1] => [(x0, x1), (y0, y1)],
                    _ => return Err(Error::Parse(format!("--bounds needs 4 values, got {}", b.len()))),
                },
                (None, Some(p)) => data_bounds(&read_dataset(&p)?.x_train, 0.1)?,
                (None, None) => return Err(Error::Parse("give --bounds or --dataset".into())),
            };
            emit(&decision_grid(&m, b, resolution)?.to_csv(), out.as_deref())?;
        }
        Cmd::ScalingSweep {
            models,
            dataset,
            records,
            scales,
            seed,
            train,
            out,
        } => {
            let ds = read_dataset(&dataset)?;
            let recs = load_records(&records)?;
            let stem = ds.file_stem();
            let winners = parse_models(&models)?
                .into_iter()
                .map(|k| Ok((k, winner_for(&recs, k, &stem)?.clone())))
                .collect::<Result<Vec<_>>>()?;
            let opts = SearchOptions {
                grad_method: train.method(),
                max_steps: train.max_steps,
                ..SearchOptions::default()
            };
            let res = scaling_sweep(&winners, &ds, &scales, seed, &opts)?;
            emit(&scaling_csv(&res), out.as_deref())?;
        }
        Cmd::BiasSim {
            researchers,
            candidates,
            seed,
            out,
        } => {
            let p = BiasParams {
                n_researchers: researchers,
                n_candidates: candidates,
                ..BiasParams::default()
            };
            let res = positivity_bias_sim(&p, seed)?;
            println!(
                "reported quantum mean {:.4}, reported classical mean {:.4}",
                res.quantum_mean(),
                res.classical_mean()
            );
            if let Some(p) = out {
                emit(&res.to_csv(), Some(&p))?;
            }
        }
        Cmd::Fit {
            model,
            dataset,
            out,
            set,
            variant,
            seed,
            train,
        } => {
            let ds = read_dataset(&dataset)?;
            let d = ds.n_features();
            let mut spec = ModelSpec::with_defaults(model, d, seed);
            for s in &set {
                let (name, v) = parse_setting(model, d, s)?;
                spec = spec.set(&name, v);
            }
            if let Some(v) = variant {
                spec = spec.with_variant(v)?;
            }
            spec.grad_method = train.method();
            spec.max_steps = train.max_steps;
            let m = fit(&spec, &ds.x_train, &ds.y_train)?;
            println!(
                "train accuracy {:.4}, test accuracy {:.4}, converged {}, steps {}",
                m.accuracy(&ds.x_train, &ds.y_train)?,
                m.accuracy(&ds.x_test, &ds.y_test)?,
                m.converged,
                m.steps
            );
            m.save(&out)?;
        }
    }
    Ok(Outcome::Done)
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors, which would read as a partial run
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
