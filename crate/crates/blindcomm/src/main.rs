//! `blindcomm`: blind community detection from filtered graph signals.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use blindcomm::config::{ExperimentConfig, TaskKind};
use blindcomm::error::Error;
use blindcomm::experiment::{result_to_csv, run_experiment};
use blindcomm::io::{labeling_to_json, parse_labeling, parse_signal_csv};
use blindcomm::metrics::error_rate;
use blindcomm::order::{select_order_mdl, select_order_threshold, OrderMethod};
use blindcomm::partition::{kmeans_cost, recover_partition, KMeansConfig};
use blindcomm::rng::{stream, TAG_KMEANS};
use blindcomm::spectral::{
    eigendecompose, sample_covariance, sample_covariance_centered, top_k_eigenvectors,
};
use blindcomm::stocks::ingest_prices;
use blindcomm::theory::FilterConstants;

#[derive(Parser)]
#[command(
    name = "blindcomm",
    about = "Blind community detection from signals observed on unobserved graphs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print constants, spectrum, assumption status, and difficulty scores
    /// for a model + filter config.
    Theory {
        /// Experiment config JSON with "task": "theory".
        #[arg(long)]
        config: PathBuf,
        /// Master seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for theory.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate the model order from a signal-batch CSV.
    Order {
        /// CSV file, one signal per row.
        batch: PathBuf,
        /// mdl | threshold.
        #[arg(long, default_value = "mdl")]
        method: String,
        /// Constants JSON {c1, c2, c3, n, k} for the threshold method.
        #[arg(long)]
        constants: Option<PathBuf>,
        /// Subtract the batch mean before forming the covariance.
        #[arg(long)]
        mean_center: bool,
        /// Directory for order.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recover a partition from a signal-batch CSV.
    Detect {
        /// CSV file, one signal per row.
        batch: PathBuf,
        /// Number of groups, or "auto" to select it by MDL first.
        #[arg(long, default_value = "auto")]
        k: String,
        /// Seed for the k-means restarts.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Subtract the batch mean before forming the covariance.
        #[arg(long)]
        mean_center: bool,
        /// Directory for detect.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare two labeling files (JSON or CSV, 1-based group ids).
    Score {
        candidate: PathBuf,
        reference: PathBuf,
    },
    /// Run a configured experiment.
    Experiment {
        /// Experiment config JSON.
        #[arg(long)]
        config: PathBuf,
        /// Master seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for result.json and result.csv.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Force serial trial execution (results are identical either way).
        #[arg(long)]
        deterministic: bool,
    },
    /// Ingest a price CSV into normalized log-return signals.
    Ingest {
        /// CSV with a date column and one column per asset.
        prices: PathBuf,
        /// Directory for returns.csv and ingest.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

/// 2 for configuration problems, 3 for degenerate or unusable data.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::InvalidParameter(_) | Error::InvalidProbability(_) => 2,
        _ => 3,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Theory { config, seed, out } => {
            let cfg = load_config(&config, seed)?;
            if cfg.task != TaskKind::Theory {
                return Err(Error::Config("theory subcommand needs \"task\": \"theory\"".into()));
            }
            let result = run_experiment(&cfg, true)?;
            let theory = result.theory.expect("theory task produces a report");
            let json = to_pretty(&theory)?;
            if let Some(dir) = out {
                write_file(&dir, "theory.json", &json)?;
            }
            println!("{json}");
            Ok(())
        }
        Command::Order { batch, method, constants, mean_center, out } => {
            let summary = load_batch_summary(&batch, mean_center)?;
            let m = count_signals(&batch)?;
            let estimate = match method.as_str() {
                "mdl" => select_order_mdl(&summary.0, m)?,
                "threshold" => {
                    let path = constants.ok_or_else(|| {
                        Error::Config("threshold method needs --constants".into())
                    })?;
                    let c = load_constants(&path)?;
                    select_order_threshold(&summary.0, &c)?
                }
                other => return Err(Error::Config(format!("unknown method {other:?}"))),
            };
            let json = to_pretty(&estimate)?;
            if let Some(dir) = out {
                write_file(&dir, "order.json", &json)?;
            }
            println!("{json}");
            let _ = OrderMethod::Mdl; // method names documented on the type
            Ok(())
        }
        Command::Detect { batch, k, seed, mean_center, out } => {
            let (summary, _) = load_batch_summary(&batch, mean_center)?;
            let m = count_signals(&batch)?;
            let (k_value, k_star) = if k == "auto" {
                let est = select_order_mdl(&summary, m)?;
                (est.k_star, Some(est.k_star))
            } else {
                let parsed: usize = k
                    .parse()
                    .map_err(|_| Error::Config(format!("--k must be a number or \"auto\", got {k:?}")))?;
                (parsed, None)
            };
            let mut rng = stream(seed, &[TAG_KMEANS]);
            let labeling = recover_partition(&summary, k_value, &KMeansConfig::default(), &mut rng)?;
            let vk = top_k_eigenvectors(&summary, k_value)?;
            let cost = kmeans_cost(&labeling, &vk)?;
            let mut json = labeling_to_json(&labeling);
            json["cost"] = serde_json::json!(cost);
            if let Some(k_star) = k_star {
                json["kStarFromMdl"] = serde_json::json!(k_star);
            }
            let text = serde_json::to_string_pretty(&json).map_err(json_err)?;
            if let Some(dir) = out {
                write_file(&dir, "detect.json", &text)?;
            }
            println!("{text}");
            Ok(())
        }
        Command::Score { candidate, reference } => {
            let a = parse_labeling(&read_data(&candidate)?)?;
            let b = parse_labeling(&read_data(&reference)?)?;
            let report = error_rate(&a, &b)?;
            let json = serde_json::json!({
                "errorRate": report.error_rate,
                "overlap": report.overlap,
                "bestPermutation": report.best_permutation.iter().map(|&g| g + 1).collect::<Vec<usize>>(),
            });
            println!("{}", serde_json::to_string_pretty(&json).map_err(json_err)?);
            Ok(())
        }
        Command::Experiment { config, seed, out, deterministic } => {
            let cfg = load_config(&config, seed)?;
            let result = run_experiment(&cfg, deterministic)?;
            let json = to_pretty(&result)?;
            if let Some(dir) = out.as_ref() {
                write_file(dir, "result.json", &json)?;
                write_file(dir, "result.csv", &result_to_csv(&result))?;
            }
            println!("{json}");
            Ok(())
        }
        Command::Ingest { prices, out } => {
            let table = ingest_prices(&read_data(&prices)?)?;
            let returns_csv = {
                let mut text = table.assets.join(",");
                text.push('\n');
                for row in &table.values {
                    let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                    text.push_str(&cells.join(","));
                    text.push('\n');
                }
                text
            };
            let meta = serde_json::json!({
                "assets": table.assets,
                "rows": table.rows(),
                "logReturnsApplied": table.log_returns_applied,
                "normalized": table.normalized,
            });
            let meta_text = serde_json::to_string_pretty(&meta).map_err(json_err)?;
            if let Some(dir) = out {
                write_file(&dir, "returns.csv", &returns_csv)?;
                write_file(&dir, "ingest.json", &meta_text)?;
            }
            println!("{meta_text}");
            Ok(())
        }
    }
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Config(format!("serialization failed: {e}"))
}

fn to_pretty<T: serde::Serialize>(value: &T) -> Result<String, Error> {
    serde_json::to_string_pretty(value).map_err(json_err)
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn read_data(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Degenerate(format!("cannot read {}: {e}", path.display())))
}

fn count_signals(path: &Path) -> Result<usize, Error> {
    Ok(parse_signal_csv(&read_data(path)?)?.len())
}

fn load_batch_summary(
    path: &Path,
    mean_center: bool,
) -> Result<(blindcomm::spectral::SpectralSummary, usize), Error> {
    let batch = parse_signal_csv(&read_data(path)?)?;
    let covariance =
        if mean_center { sample_covariance_centered(&batch) } else { sample_covariance(&batch) };
    Ok((eigendecompose(&covariance)?, batch.dim()))
}

fn load_constants(path: &Path) -> Result<FilterConstants, Error> {
    #[derive(serde::Deserialize)]
    #[serde(deny_unknown_fields)]
    struct ConstantsFile {
        c1: f64,
        c2: f64,
        c3: f64,
        n: usize,
        k: usize,
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read constants {}: {e}", path.display())))?;
    let file: ConstantsFile =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("constants JSON: {e}")))?;
    FilterConstants::new(file.c1, file.c2, file.c3, file.n, file.k)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), Error> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}
