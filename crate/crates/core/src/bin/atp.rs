//! Command-line front end for the ATP detection pipeline.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on data errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use atp_core::dataset::ingest;
use atp_core::harness::{self, EvalReport, Timings};
use atp_core::pipeline::write_features_csv;
use atp_core::synth::SynthDataset;
use atp_core::{Error, ExperimentConfig, SvmModel, ThresholdTable};

#[derive(Parser)]
#[command(
    name = "atp",
    version,
    about = "Fingerprint forgery detection with adaptive thresholding patterns"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (JSON, schema_version 1)
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Override the master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Override the square working size images are resized to
    #[arg(long, value_name = "N")]
    working_size: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Resolve the threshold table and write thresholds.json
    DeriveThresholds(Common),
    /// Write train_features.csv and test_features.csv
    Extract(Common),
    /// Train on the clean training split and write thresholds.json and model.json
    Train(Common),
    /// Run the configured sweep against an existing model
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Trained model JSON
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
        /// Threshold table the model was trained with [default: thresholds.json next to the model]
        #[arg(long, value_name = "PATH")]
        thresholds: Option<PathBuf>,
    },
    /// Train and run the full sweep; writes report.json, report.csv, thresholds.json, model.json
    Sweep(Common),
    /// Write a synthetic dataset in the {train,test}/{real,fake} layout
    Synth {
        /// Optional synthetic-dataset parameters (JSON)
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Destination directory
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Side length of the generated images
        #[arg(long, value_name = "N")]
        working_size: Option<usize>,
        #[arg(long, value_name = "N")]
        train_per_class: Option<usize>,
        #[arg(long, value_name = "N")]
        test_per_class: Option<usize>,
    },
}

fn load_config(c: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::load(&c.config)?;
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &c.out {
        cfg.output_dir = out.clone();
    }
    if let Some(n) = c.working_size {
        cfg.working_size = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn create_dir(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::DeriveThresholds(c) => {
            let cfg = load_config(&c)?;
            let train = ingest(cfg.train_root(), cfg.working_size)?;
            let table = harness::resolve_thresholds(&cfg, &train)?;
            create_dir(&cfg.output_dir)?;
            let path = cfg.output_dir.join("thresholds.json");
            table.save(&path)?;
            println!("{}", path.display());
        }
        Command::Extract(c) => {
            let cfg = load_config(&c)?;
            let train = ingest(cfg.train_root(), cfg.working_size)?;
            let test = ingest(cfg.test_root(), cfg.working_size)?;
            let table = harness::resolve_thresholds(&cfg, &train)?;
            let extractor = harness::extractor_for(&cfg, table)?;
            create_dir(&cfg.output_dir)?;
            for (name, set) in [("train", &train), ("test", &test)] {
                let images: Vec<_> = set.iter().map(|s| s.image.clone()).collect();
                let rows: Vec<Vec<f64>> = extractor
                    .extract_batch(&images)?
                    .into_iter()
                    .map(|f| f.values)
                    .collect();
                let labels: Vec<i8> = set.iter().map(|s| s.label).collect();
                let path = cfg.output_dir.join(format!("{name}_features.csv"));
                write_features_csv(&path, &labels, &rows)?;
                println!("{}", path.display());
            }
        }
        Command::Train(c) => {
            let cfg = load_config(&c)?;
            let train = ingest(cfg.train_root(), cfg.working_size)?;
            let table = harness::resolve_thresholds(&cfg, &train)?;
            let extractor = harness::extractor_for(&cfg, table.clone())?;
            let model = harness::train_model(&extractor, &cfg, &train)?;
            create_dir(&cfg.output_dir)?;
            table.save(cfg.output_dir.join("thresholds.json"))?;
            let path = cfg.output_dir.join("model.json");
            model.save(&path)?;
            println!("{}", path.display());
        }
        Command::Evaluate {
            common,
            model,
            thresholds,
        } => {
            let cfg = load_config(&common)?;
            let start = std::time::Instant::now();
            let svm = SvmModel::load(&model)?;
            let thresholds = thresholds.unwrap_or_else(|| {
                model
                    .parent()
                    .unwrap_or(Path::new(""))
                    .join("thresholds.json")
            });
            let extractor = harness::extractor_for(&cfg, ThresholdTable::load(&thresholds)?)?;
            svm.check_layout(&extractor.layout_hash())?;
            let test = ingest(cfg.test_root(), cfg.working_size)?;
            let setup = start.elapsed().as_secs_f64();
            let (rows, summary) = harness::evaluate_conditions(&cfg, &svm, &extractor, &test)?;
            let report = EvalReport {
                library_version: env!("CARGO_PKG_VERSION").to_string(),
                config_hash: cfg.hash(),
                pipeline_config_hash: extractor.layout_hash(),
                train_samples: 0,
                test_samples: test.len(),
                rows,
                summary,
                timings: Timings {
                    setup_secs: setup,
                    train_secs: 0.0,
                    evaluate_secs: start.elapsed().as_secs_f64() - setup,
                    total_secs: start.elapsed().as_secs_f64(),
                },
                config: cfg.clone(),
            };
            report.write(&cfg.output_dir)?;
            print!("{}", report.to_csv());
        }
        Command::Sweep(c) => {
            let cfg = load_config(&c)?;
            let report = harness::run_experiment(&cfg)?;
            print!("{}", report.to_csv());
        }
        Command::Synth {
            config,
            seed,
            out,
            working_size,
            train_per_class,
            test_per_class,
        } => {
            let mut ds = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                    serde_json::from_str::<SynthDataset>(&text)
                        .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?
                }
                None => SynthDataset::default(),
            };
            if let Some(s) = seed {
                ds.seed = s;
            }
            if let Some(n) = working_size {
                ds.rows = n;
                ds.cols = n;
            }
            if let Some(n) = train_per_class {
                ds.train_per_class = n;
            }
            if let Some(n) = test_per_class {
                ds.test_per_class = n;
            }
            ds.write(&out)?;
            println!("{}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
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
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::LoadFailures(errs) = &e {
                for err in errs {
                    eprintln!("  {err}");
                }
            }
            ExitCode::from(2)
        }
    }
}
