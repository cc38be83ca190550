//! Command-line interface: verification suites (`dim`, `kernel-check`,
//! `gradcheck`), the interaction-comparison experiment (`demo-compare`),
//! and training/evaluation (`train`, `eval`, `params`).
//!
//! Exit codes: 0 success, 1 failed check or failed run, 2 usage error.
//! `INFINET_PRECISION` (`f32`/`f64`) selects the element type for training
//! and evaluation runs (default `f32`); the check suites run in `f64`, the
//! only precision at which their tolerances are meaningful.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use infinet::checkpoint::{load_checkpoint, save_checkpoint};
use infinet::cifar::load_cifar10_dir;
use infinet::error::{AppError, Result};
use infinet::metrics::write_metrics_csv;
use infinet::runner::{
    demo_compare, demo_csv, median_by_kind, run_training, synth_split, DEMO_SIDE,
    DEMO_TRAIN_PER_CLASS, DEMO_VAL_PER_CLASS, SYNTH_CLASSES, SYNTH_SIDE,
};
use infinet_core::data::Sample;
use infinet_core::interaction::{enumerate_monomials, interaction_dim, InteractionKind};
use infinet_core::layers::ParamStore;
use infinet_core::model::{build_network, demo_config, ModelConfig, Variant};
use infinet_core::scalar::Scalar;
use infinet_core::train::{evaluate, TrainConfig};
use infinet_core::verify::{
    gradcheck_block_suite, gradcheck_interact_suite, gradcheck_layers_suite,
    gradcheck_model_suite, kernel_check_all, SuiteReport, DEFAULT_SEEDS,
    MODEL_COORDS_PER_TENSOR,
};

/// Synthetic dataset size for `train`/`eval`, per class.
const TRAIN_PER_CLASS: usize = 50;
const VAL_PER_CLASS: usize = 100;

#[derive(Parser)]
#[command(
    name = "infinet",
    version,
    about = "Kernel-based feature-interaction networks: checks, experiments, training"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the dimension of the degree-k interaction space of n features.
    Dim {
        /// Number of features (≥ 1).
        #[arg(long)]
        n: u64,
        /// Interaction degree (≥ 1).
        #[arg(long)]
        k: u64,
        /// Cross-check the closed form against brute-force enumeration.
        #[arg(long)]
        verify: bool,
    },
    /// Run the kernel identity and Gram-matrix suites.
    KernelCheck {
        /// Random pairs per suite.
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Largest vector norm drawn.
        #[arg(long = "max-norm", default_value_t = 2.0)]
        max_norm: f64,
        /// Truncation order of the series comparison.
        #[arg(long = "series-terms", default_value_t = 20)]
        series_terms: u32,
    },
    /// Run finite-difference gradient checks.
    Gradcheck {
        /// Granularity to check.
        #[arg(long, value_enum)]
        scope: Scope,
    },
    /// Train the five interaction variants and compare final accuracy.
    DemoCompare {
        /// "synth" or a CIFAR-10 binary directory.
        #[arg(long, default_value = "synth")]
        data: String,
        #[arg(long, default_value_t = 10)]
        epochs: usize,
        /// Number of seeds per variant.
        #[arg(long, default_value_t = 3)]
        seeds: u64,
        /// Output CSV path (kind,seed,final_val_acc).
        #[arg(long, default_value = "demo_compare.csv")]
        out: PathBuf,
    },
    /// Train one model and write metrics plus a checkpoint.
    Train {
        /// micro, tiny, small, base, large, xlarge, or demo.
        #[arg(long, default_value = "micro")]
        variant: String,
        /// "synth" or a CIFAR-10 binary directory.
        #[arg(long, default_value = "synth")]
        data: String,
        #[arg(long, default_value_t = 2)]
        epochs: usize,
        #[arg(long, default_value_t = 64)]
        batch: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Checkpoint output path; the config sidecar lands next to it.
        #[arg(long, default_value = "model.infn")]
        checkpoint: PathBuf,
        /// Metrics CSV output path.
        #[arg(long, default_value = "metrics.csv")]
        metrics: PathBuf,
    },
    /// Load a checkpoint and print validation accuracy.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// "synth" or a CIFAR-10 binary directory.
        #[arg(long, default_value = "synth")]
        data: String,
        #[arg(long, default_value_t = 64)]
        batch: usize,
    },
    /// Print the parameter count and per-stage breakdown of a variant.
    Params {
        /// micro, tiny, small, base, large, xlarge, or demo.
        #[arg(long, default_value = "tiny")]
        variant: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Scope {
    Layers,
    Interact,
    Block,
    Model,
}

#[derive(Clone, Copy, PartialEq)]
enum Precision {
    F32,
    F64,
}

/// Reads `INFINET_PRECISION`, falling back to the command-class default.
fn precision_from_env(default: Precision) -> Result<Precision> {
    match std::env::var("INFINET_PRECISION") {
        Err(_) => Ok(default),
        Ok(v) if v == "f32" => Ok(Precision::F32),
        Ok(v) if v == "f64" => Ok(Precision::F64),
        Ok(v) => Err(AppError::Usage(format!(
            "INFINET_PRECISION must be f32 or f64, got {v:?}"
        ))),
    }
}

fn require_f64_for_checks() -> Result<()> {
    if precision_from_env(Precision::F64)? == Precision::F32 {
        return Err(AppError::Usage(String::from(
            "check tolerances are defined in f64; unset INFINET_PRECISION or set it to f64",
        )));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Dim { n, k, verify } => cmd_dim(n, k, verify),
        Command::KernelCheck {
            trials,
            max_norm,
            series_terms,
        } => cmd_kernel_check(trials, max_norm, series_terms),
        Command::Gradcheck { scope } => cmd_gradcheck(scope),
        Command::DemoCompare {
            data,
            epochs,
            seeds,
            out,
        } => match precision_from_env(Precision::F32)? {
            Precision::F32 => cmd_demo_compare::<f32>(&data, epochs, seeds, &out),
            Precision::F64 => cmd_demo_compare::<f64>(&data, epochs, seeds, &out),
        },
        Command::Train {
            variant,
            data,
            epochs,
            batch,
            seed,
            checkpoint,
            metrics,
        } => match precision_from_env(Precision::F32)? {
            Precision::F32 => {
                cmd_train::<f32>(&variant, &data, epochs, batch, seed, &checkpoint, &metrics)
            }
            Precision::F64 => {
                cmd_train::<f64>(&variant, &data, epochs, batch, seed, &checkpoint, &metrics)
            }
        },
        Command::Eval {
            checkpoint,
            data,
            batch,
        } => match precision_from_env(Precision::F32)? {
            Precision::F32 => cmd_eval::<f32>(&checkpoint, &data, batch),
            Precision::F64 => cmd_eval::<f64>(&checkpoint, &data, batch),
        },
        Command::Params { variant } => cmd_params(&variant),
    }
}

fn cmd_dim(n: u64, k: u64, verify: bool) -> Result<ExitCode> {
    if n < 1 || k < 1 {
        return Err(AppError::Usage(format!("--n and --k must be ≥ 1, got n={n} k={k}")));
    }
    let dim = interaction_dim(n, k)?;
    if !verify {
        println!("{dim}");
        return Ok(ExitCode::SUCCESS);
    }
    let enumerated = enumerate_monomials(n as usize, k as u32)?.len() as u64;
    if enumerated == dim {
        println!("{dim} MATCH");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("{dim} MISMATCH (enumeration found {enumerated})");
        Ok(ExitCode::FAILURE)
    }
}

fn report_outcome(reports: &[SuiteReport]) -> ExitCode {
    let mut all_pass = true;
    for report in reports {
        println!("{report}");
        all_pass &= report.pass();
    }
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn cmd_kernel_check(trials: usize, max_norm: f64, series_terms: u32) -> Result<ExitCode> {
    require_f64_for_checks()?;
    if trials < 1 {
        return Err(AppError::Usage(String::from("--trials must be ≥ 1")));
    }
    if !(max_norm >= 0.0) {
        return Err(AppError::Usage(String::from("--max-norm must be ≥ 0")));
    }
    let reports = kernel_check_all(trials, max_norm, series_terms)?;
    Ok(report_outcome(&reports))
}

fn cmd_gradcheck(scope: Scope) -> Result<ExitCode> {
    require_f64_for_checks()?;
    let reports = match scope {
        Scope::Layers => gradcheck_layers_suite(&DEFAULT_SEEDS)?,
        Scope::Interact => gradcheck_interact_suite(&DEFAULT_SEEDS)?,
        Scope::Block => vec![gradcheck_block_suite(&DEFAULT_SEEDS)?],
        Scope::Model => vec![gradcheck_model_suite(&DEFAULT_SEEDS, MODEL_COORDS_PER_TENSOR)?],
    };
    Ok(report_outcome(&reports))
}

/// Resolves `--data` into train/validation sample lists.
fn load_split<T: Scalar>(
    data: &str,
    side: usize,
    train_per_class: usize,
    val_per_class: usize,
) -> Result<(Vec<Sample<T>>, Vec<Sample<T>>)> {
    if data == "synth" {
        Ok(synth_split(train_per_class, val_per_class, side))
    } else {
        let dir = Path::new(data);
        if !dir.is_dir() {
            return Err(AppError::Io {
                path: data.into(),
                source: std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    "not a CIFAR-10 directory (pass \"synth\" for generated data)",
                ),
            });
        }
        load_cifar10_dir(dir)
    }
}

fn variant_config(variant: &str, num_classes: usize) -> Result<ModelConfig> {
    if variant == "demo" {
        return Ok(demo_config(InteractionKind::default(), num_classes));
    }
    Variant::from_name(variant)
        .map(|v| v.config(num_classes, InteractionKind::default()))
        .ok_or_else(|| {
            AppError::Usage(format!(
                "unknown variant {variant:?} (expected micro, tiny, small, base, large, xlarge, or demo)"
            ))
        })
}

/// Input resolution a variant trains at: the isotropic demo network runs on
/// quarter-size synthetic images, everything else is CIFAR-sized.
fn side_for(config: &ModelConfig) -> usize {
    if config.variant == "demo" {
        DEMO_SIDE
    } else {
        SYNTH_SIDE
    }
}

fn cmd_train<T: Scalar>(
    variant: &str,
    data: &str,
    epochs: usize,
    batch: usize,
    seed: u64,
    checkpoint: &Path,
    metrics: &Path,
) -> Result<ExitCode> {
    let config = variant_config(variant, SYNTH_CLASSES)?;
    let (train, val) = load_split::<T>(data, side_for(&config), TRAIN_PER_CLASS, VAL_PER_CLASS)?;
    let mut store = ParamStore::<T>::new();
    let net = build_network(&config, &mut store, seed)?;
    println!(
        "training {} ({} parameters) on {} samples",
        config.variant,
        config.param_count(),
        train.len()
    );
    let train_config = TrainConfig::desk(epochs, batch, seed);
    let rows = run_training(&net, &mut store, &train, &val, &train_config, |row, secs| {
        println!(
            "epoch {}/{epochs}: lr {:.3e} loss {:.4} acc {:.4} val {:.4} ({secs:.1}s)",
            row.epoch, row.lr, row.train_loss, row.train_acc, row.val_acc
        );
    })?;
    write_metrics_csv(metrics, &rows)?;
    save_checkpoint(checkpoint, &store, &config)?;
    println!("wrote {} and {}", metrics.display(), checkpoint.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval<T: Scalar>(checkpoint: &Path, data: &str, batch: usize) -> Result<ExitCode> {
    let (net, store, config) = load_checkpoint::<T>(checkpoint)?;
    let (_, val) = load_split::<T>(data, side_for(&config), TRAIN_PER_CLASS, VAL_PER_CLASS)?;
    let acc = evaluate(&net, &store, &val, batch.max(1))?;
    println!("accuracy {acc}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_demo_compare<T: Scalar>(
    data: &str,
    epochs: usize,
    seeds: u64,
    out: &Path,
) -> Result<ExitCode> {
    if seeds < 1 {
        return Err(AppError::Usage(String::from("--seeds must be ≥ 1")));
    }
    let (train, val) =
        load_split::<T>(data, DEMO_SIDE, DEMO_TRAIN_PER_CLASS, DEMO_VAL_PER_CLASS)?;
    let rows = demo_compare::<T, _>(&train, &val, epochs, seeds, |row, secs| {
        println!(
            "{} seed {}: final val acc {:.4} ({secs:.1}s)",
            row.kind, row.seed, row.final_val_acc
        );
    })?;
    std::fs::write(out, demo_csv(&rows)).map_err(|e| AppError::io(out, e))?;
    let medians = median_by_kind(&rows);
    let summary: Vec<String> = medians
        .iter()
        .map(|(kind, median)| format!("{kind} {median:.4}"))
        .collect();
    println!("median final val acc: {}", summary.join(" | "));
    println!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_params(variant: &str) -> Result<ExitCode> {
    let num_classes = if variant == "demo" { SYNTH_CLASSES } else { 1000 };
    let config = variant_config(variant, num_classes)?;
    for (piece, count) in config.param_breakdown() {
        println!("{piece} {count}");
    }
    println!("total {}", config.param_count());
    Ok(ExitCode::SUCCESS)
}
