//! Experiment orchestration: thresholds, training on clean data, and
//! evaluation of the test split under each configured distortion.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atp::{derive_thresholds, ThresholdTable};
use crate::config::{ExperimentConfig, ThresholdSource};
use crate::dataset::ingest;
use crate::distortions::Distortion;
use crate::error::{Error, Result};
use crate::image::{load_image, resize_to, GrayImage};
use crate::metrics::{confusion, scores, ConfusionMatrix, Score};
use crate::pipeline::FeatureExtractor;
use crate::svm::{train, SvmModel};
use crate::synth::{derive_seed, Sample, REAL};

pub const CSV_HEADER: &str = "kind,param,run,accuracy,precision,recall,f1,tp,tn,fp,fn";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub kind: String,
    pub param: String,
    pub run: usize,
    pub accuracy: Score,
    pub precision: Score,
    pub recall: Score,
    pub f1: Score,
    pub confusion: ConfusionMatrix,
}

impl EvalRow {
    fn new(kind: &str, param: String, run: usize, cm: ConfusionMatrix) -> Self {
        let s = scores(&cm);
        Self {
            kind: kind.to_string(),
            param,
            run,
            accuracy: s.accuracy,
            precision: s.precision,
            recall: s.recall,
            f1: s.f1,
            confusion: cm,
        }
    }

    pub fn csv_line(&self) -> String {
        let cm = &self.confusion;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.kind,
            self.param,
            self.run,
            self.accuracy,
            self.precision,
            self.recall,
            self.f1,
            cm.tp,
            cm.tn,
            cm.fp,
            cm.fn_
        )
    }
}

/// Per-condition means over Monte-Carlo runs. A mean is taken over the runs
/// where the score is defined and is undefined if it never is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub kind: String,
    pub param: String,
    pub runs: usize,
    pub accuracy: Score,
    pub precision: Score,
    pub recall: Score,
    pub f1: Score,
}

fn mean_score(xs: impl Iterator<Item = Score>) -> Score {
    let vals: Vec<f64> = xs.filter_map(|s| s.0).collect();
    Score((!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64))
}

fn summarize(rows: &[EvalRow]) -> ConditionSummary {
    ConditionSummary {
        kind: rows[0].kind.clone(),
        param: rows[0].param.clone(),
        runs: rows.len(),
        accuracy: mean_score(rows.iter().map(|r| r.accuracy)),
        precision: mean_score(rows.iter().map(|r| r.precision)),
        recall: mean_score(rows.iter().map(|r| r.recall)),
        f1: mean_score(rows.iter().map(|r| r.f1)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub setup_secs: f64,
    pub train_secs: f64,
    pub evaluate_secs: f64,
    pub total_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub library_version: String,
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub pipeline_config_hash: String,
    pub train_samples: usize,
    pub test_samples: usize,
    pub rows: Vec<EvalRow>,
    pub summary: Vec<ConditionSummary>,
    pub timings: Timings,
}

impl EvalReport {
    /// Rows as CSV; contains no timing data, so identical runs give identical bytes.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.csv_line());
        }
        out
    }

    pub fn summary_for(&self, kind: &str) -> Vec<&ConditionSummary> {
        self.summary.iter().filter(|s| s.kind == kind).collect()
    }

    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let json = dir.join("report.json");
        fs::write(&json, serde_json::to_string_pretty(self)? + "\n")
            .map_err(|e| Error::io(&json, e))?;
        let csv = dir.join("report.csv");
        fs::write(&csv, self.to_csv()).map_err(|e| Error::io(&csv, e))
    }
}

/// Resolves the configured threshold source. `train` supplies the default
/// reference (its first real sample) for `derive` without an explicit path.
pub fn resolve_thresholds(cfg: &ExperimentConfig, train: &[Sample]) -> Result<ThresholdTable> {
    let table = match &cfg.atp.source {
        ThresholdSource::Bundled => ThresholdTable::bundled(),
        ThresholdSource::File { path } => ThresholdTable::load(path)?,
        ThresholdSource::Derive { reference } => {
            let img: GrayImage = match reference {
                Some(path) => resize_to(&load_image(path)?, cfg.working_size, cfg.working_size)?,
                None => train
                    .iter()
                    .find(|s| s.label == REAL)
                    .map(|s| s.image.clone())
                    .ok_or_else(|| {
                        Error::InvalidConfig("no real training sample to use as reference".into())
                    })?,
            };
            derive_thresholds(&img, cfg.atp.beta, cfg.atp.k, &cfg.diffusion)?
        }
    };
    Ok(table)
}

pub fn extractor_for(cfg: &ExperimentConfig, table: ThresholdTable) -> Result<FeatureExtractor> {
    FeatureExtractor::new((cfg.working_size, cfg.working_size), cfg.diffusion, table)
}

fn features(extractor: &FeatureExtractor, samples: &[Sample]) -> Result<Vec<Vec<f64>>> {
    samples
        .par_iter()
        .map(|s| {
            extractor
                .extract(&s.image)
                .map(|f| f.values)
                .map_err(|e| e.context(format!("sample {}", s.name)))
        })
        .collect()
}

/// Trains on clean samples. No distortion ever reaches this path.
pub fn train_model(
    extractor: &FeatureExtractor,
    cfg: &ExperimentConfig,
    samples: &[Sample],
) -> Result<SvmModel> {
    let xs = features(extractor, samples)?;
    let ys: Vec<i8> = samples.iter().map(|s| s.label).collect();
    Ok(train(&xs, &ys, &cfg.svm)?.with_pipeline_hash(extractor.layout_hash()))
}

fn predict_all(
    model: &SvmModel,
    extractor: &FeatureExtractor,
    samples: &[Sample],
) -> Result<Vec<i8>> {
    model.check_layout(&extractor.layout_hash())?;
    features(extractor, samples)?
        .iter()
        .map(|x| model.predict(x).map(|(label, _)| label))
        .collect()
}

/// Scores `model` on `test`, optionally distorted. Image `i` uses seed `seed ^ i`.
pub fn evaluate(
    model: &SvmModel,
    extractor: &FeatureExtractor,
    test: &[Sample],
    distortion: Option<(&Distortion, u64)>,
) -> Result<ConfusionMatrix> {
    let distorted: Vec<Sample>;
    let samples = match distortion {
        None => test,
        Some((d, seed)) => {
            distorted = test
                .par_iter()
                .enumerate()
                .map(|(i, s)| {
                    Ok(Sample {
                        name: s.name.clone(),
                        label: s.label,
                        image: d.apply(&s.image, seed ^ i as u64)?,
                    })
                })
                .collect::<Result<_>>()?;
            &distorted
        }
    };
    let pred = predict_all(model, extractor, samples)?;
    let truth: Vec<i8> = samples.iter().map(|s| s.label).collect();
    confusion(&truth, &pred)
}

/// Seed for one (sweep entry, grid point, run) triple.
pub fn condition_seed(master: u64, entry: usize, point: usize, run: usize) -> u64 {
    derive_seed(
        derive_seed(derive_seed(master, entry as u64), point as u64),
        run as u64,
    )
}

/// Runs the sweep against an already trained model.
pub fn evaluate_conditions(
    cfg: &ExperimentConfig,
    model: &SvmModel,
    extractor: &FeatureExtractor,
    test: &[Sample],
) -> Result<(Vec<EvalRow>, Vec<ConditionSummary>)> {
    let clean = EvalRow::new(
        "clean",
        "-".into(),
        1,
        evaluate(model, extractor, test, None)?,
    );
    let mut summary = vec![summarize(std::slice::from_ref(&clean))];
    let mut rows = vec![clean];
    for (e, entry) in cfg.sweep.iter().enumerate() {
        for (p, cond) in entry.conditions().iter().enumerate() {
            let runs = if cond.is_seeded() {
                cfg.monte_carlo_runs
            } else {
                1
            };
            let mut cond_rows = Vec::with_capacity(runs);
            for run in 0..runs {
                let seed = condition_seed(cfg.seed, e, p, run);
                let cm = evaluate(model, extractor, test, Some((cond, seed))).map_err(|err| {
                    err.context(format!(
                        "{} {} run {}",
                        cond.kind_name(),
                        cond.param_label(),
                        run + 1
                    ))
                })?;
                log::info!(
                    "{} {} run {}: accuracy {}",
                    cond.kind_name(),
                    cond.param_label(),
                    run + 1,
                    scores(&cm).accuracy
                );
                cond_rows.push(EvalRow::new(
                    cond.kind_name(),
                    cond.param_label(),
                    run + 1,
                    cm,
                ));
            }
            summary.push(summarize(&cond_rows));
            rows.extend(cond_rows);
        }
    }
    Ok((rows, summary))
}

/// Full protocol over in-memory samples: thresholds, clean training, sweep.
pub fn run_with_samples(
    cfg: &ExperimentConfig,
    train_set: &[Sample],
    test_set: &[Sample],
) -> Result<(EvalReport, ThresholdTable, SvmModel)> {
    cfg.validate()?;
    let start = Instant::now();
    let table = resolve_thresholds(cfg, train_set)?;
    let extractor = extractor_for(cfg, table.clone())?;
    let setup = start.elapsed().as_secs_f64();

    let t = Instant::now();
    let model = train_model(&extractor, cfg, train_set)?;
    let train_secs = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let (rows, summary) = evaluate_conditions(cfg, &model, &extractor, test_set)?;
    let evaluate_secs = t.elapsed().as_secs_f64();

    let report = EvalReport {
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        config_hash: cfg.hash(),
        pipeline_config_hash: extractor.layout_hash(),
        train_samples: train_set.len(),
        test_samples: test_set.len(),
        rows,
        summary,
        timings: Timings {
            setup_secs: setup,
            train_secs,
            evaluate_secs,
            total_secs: start.elapsed().as_secs_f64(),
        },
    };
    Ok((report, table, model))
}

/// Ingests `dataset_root/{train,test}`, runs the protocol and writes
/// `report.json`, `report.csv`, `thresholds.json` and `model.json` into the
/// output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<EvalReport> {
    cfg.validate()?;
    let train_set = ingest(cfg.train_root(), cfg.working_size)?;
    let test_set = ingest(cfg.test_root(), cfg.working_size)?;
    let (report, table, model) = run_with_samples(cfg, &train_set, &test_set)?;
    report.write(&cfg.output_dir)?;
    table.save(cfg.output_dir.join("thresholds.json"))?;
    model.save(cfg.output_dir.join("model.json"))?;
    Ok(report)
}
