use std::fs;
use std::io::{self, BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qboost::boosting::{accuracy, fit_boosted};
use qboost::datasets::{
    generate, read_dataset_csv, split_and_scale, write_dataset_csv, DatasetKind, DatasetParams,
    SplitSizes,
};
use qboost::experiment::{
    aggregate, classical_svm_baseline, emit_report, read_records_csv, run_experiment,
    ExperimentConfig, ModelArtifact, ModelId,
};
use qboost::kernels::GramCache;

/// Like `println!`, but a closed stdout is not an error.
macro_rules! say {
    ($($arg:tt)*) => {
        let _ = writeln!(io::stdout(), $($arg)*);
    };
}

#[derive(Parser)]
#[command(
    name = "qboost",
    version,
    about = "Boosted quantum-kernel SVM experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset and write it as CSV.
    Generate {
        #[arg(long)]
        kind: DatasetKind,
        #[arg(long, default_value_t = 150)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Gaussian noise std (moons, circles).
        #[arg(long)]
        noise: Option<f64>,
        /// Inner radius ratio (circles).
        #[arg(long)]
        factor: Option<f64>,
        /// Excluded band |x1 x2| < margin (xor).
        #[arg(long)]
        margin: Option<f64>,
        /// Add a split column from a seeded train/val/test split.
        #[arg(long)]
        split_seed: Option<u64>,
        #[arg(long, value_parser = parse_sizes, default_value = "50,50,50")]
        sizes: SplitSizes,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit one model on one split dataset and write it as JSON.
    Fit {
        /// Dataset CSV with a split column.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "boosted_qsvm")]
        model: ModelId,
        /// Experiment config supplying grids, solver settings and max_rounds.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a full sweep and write records, models and summaries.
    Experiment {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory, overriding the config's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Use the full-scale dataset count per family.
        #[arg(long)]
        full: bool,
        #[arg(long)]
        master_seed: Option<u64>,
    },
    /// Aggregate a records CSV into summary and box-plot files.
    Report {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_sizes(s: &str) -> Result<SplitSizes, String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| format!("bad split size {p:?}"))
        })
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [train, val, test] => Ok(SplitSizes { train, val, test }),
        _ => Err("expected three comma-separated sizes".into()),
    }
}

enum Failure {
    Config(String),
    Runtime(String),
}

fn config_err(e: impl std::fmt::Display) -> Failure {
    Failure::Config(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn load_config(path: Option<&PathBuf>) -> Result<ExperimentConfig, Failure> {
    match path {
        Some(p) => ExperimentConfig::load(p).map_err(config_err),
        None => Ok(ExperimentConfig::default()),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Generate {
            kind,
            n,
            seed,
            noise,
            factor,
            margin,
            split_seed,
            sizes,
            out,
        } => {
            let mut params = DatasetParams::default();
            if let Some(v) = noise {
                params.moons_noise = v;
                params.circles_noise = v;
            }
            if let Some(v) = factor {
                params.circles_factor = v;
            }
            if let Some(v) = margin {
                params.xor_margin = v;
            }
            let data = generate(kind, n, &params, seed).map_err(config_err)?;
            let split = split_seed
                .map(|s| split_and_scale(&data, sizes, s))
                .transpose()
                .map_err(runtime_err)?;
            let mut buf = Vec::new();
            write_dataset_csv(&mut buf, &data, &params, split.as_ref()).map_err(runtime_err)?;
            match out {
                Some(p) => fs::write(p, buf).map_err(runtime_err)?,
                None => match io::stdout().write_all(&buf) {
                    Err(e) if e.kind() != io::ErrorKind::BrokenPipe => return Err(runtime_err(e)),
                    _ => {}
                },
            }
        }
        Command::Fit {
            data,
            model,
            config,
            out,
        } => {
            let cfg = load_config(config.as_ref())?;
            let file = fs::File::open(&data).map_err(config_err)?;
            let split = read_dataset_csv(BufReader::new(file))
                .and_then(|f| f.to_split())
                .map_err(config_err)?;
            let cache = GramCache::new();
            let artifact = match model {
                ModelId::SvmBaseline => {
                    let b = classical_svm_baseline(&split, &cfg.baseline, &cfg.solver)
                        .map_err(runtime_err)?;
                    ModelArtifact::SvmBaseline {
                        kernel: b.kernel,
                        c: b.c,
                        svm: b.model,
                        train_features: split.train.x.clone(),
                    }
                }
                ModelId::BoostedQsvm | ModelId::SingleQsvm => {
                    let ens = fit_boosted(
                        &split.train,
                        &split.val,
                        &cfg.grid,
                        &cfg.boost_config(),
                        &cache,
                    )
                    .map_err(runtime_err)?;
                    if model == ModelId::SingleQsvm {
                        ModelArtifact::single_from(&ens)
                    } else {
                        ModelArtifact::BoostedQsvm { ensemble: ens }
                    }
                }
            };
            let preds = artifact
                .predict(&split.test.x, &cache)
                .map_err(runtime_err)?;
            let json = artifact.to_json().map_err(runtime_err)?;
            fs::write(&out, json).map_err(runtime_err)?;
            say!(
                "{model}: test accuracy {:.4} -> {}",
                accuracy(&preds, &split.test.y),
                out.display()
            );
        }
        Command::Experiment {
            config,
            out,
            full,
            master_seed,
        } => {
            let mut cfg = load_config(config.as_ref())?;
            if full {
                cfg = cfg.full_scale();
            }
            if let Some(s) = master_seed {
                cfg.master_seed = s;
            }
            if let Some(dir) = out {
                cfg.output_dir = Some(dir);
            }
            let dir = cfg
                .output_dir
                .clone()
                .ok_or_else(|| config_err("experiment needs --out or output_dir in the config"))?;
            cfg.validate().map_err(config_err)?;
            let records = run_experiment(&cfg).map_err(runtime_err)?;
            let stats = aggregate(&records).map_err(runtime_err)?;
            emit_report(&stats, &records, &dir).map_err(runtime_err)?;
            fs::write(
                dir.join("config.json"),
                serde_json::to_string_pretty(&cfg).map_err(runtime_err)?,
            )
            .map_err(runtime_err)?;
            for e in &stats.ensemble_sizes {
                say!(
                    "{:<8} ensemble size mean {:.2} max {}",
                    e.family,
                    e.mean,
                    e.max
                );
            }
            for b in &stats.boxes {
                say!(
                    "{:<8} {:<13} median test accuracy {:.3} (q1 {:.3}, q3 {:.3})",
                    b.family.to_string(),
                    b.model.to_string(),
                    b.median,
                    b.q1,
                    b.q3
                );
            }
            if stats.failed_runs > 0 {
                eprintln!("{} run(s) failed; see records.csv", stats.failed_runs);
            }
        }
        Command::Report { records, out } => {
            let file = fs::File::open(&records).map_err(config_err)?;
            let recs = read_records_csv(file).map_err(config_err)?;
            let stats = aggregate(&recs).map_err(runtime_err)?;
            emit_report(&stats, &recs, &out).map_err(runtime_err)?;
            say!(
                "wrote report for {} records to {}",
                recs.len(),
                out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
