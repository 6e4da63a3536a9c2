//! Experiment configuration (a single JSON document).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::atp::ThresholdTable;
use crate::diffusion::DiffusionParams;
use crate::distortions::{Anchor, Distortion};
use crate::error::{Error, Result};
use crate::svm::SvmParams;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThresholdSource {
    /// Derive from a reference image; `None` uses the first real training sample.
    Derive {
        #[serde(default)]
        reference: Option<PathBuf>,
    },
    File {
        path: PathBuf,
    },
    /// The reference threshold table shipped with the library.
    Bundled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtpConfig {
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(rename = "K", default = "default_k")]
    pub k: usize,
    #[serde(default = "default_source")]
    pub source: ThresholdSource,
}

fn default_beta() -> f64 {
    2.2
}

fn default_k() -> usize {
    5
}

fn default_source() -> ThresholdSource {
    ThresholdSource::Bundled
}

impl Default for AtpConfig {
    fn default() -> Self {
        Self {
            beta: default_beta(),
            k: default_k(),
            source: default_source(),
        }
    }
}

/// One distortion kind with its parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepEntry {
    PixelMissing {
        rates: Vec<f64>,
    },
    BlockMissing {
        /// `[height, width]` pairs.
        sizes: Vec<[usize; 2]>,
        #[serde(default)]
        anchor: Anchor,
    },
    Awgn {
        snr_db: Vec<f64>,
    },
}

impl SweepEntry {
    pub fn conditions(&self) -> Vec<Distortion> {
        match self {
            SweepEntry::PixelMissing { rates } => rates
                .iter()
                .map(|&rate| Distortion::PixelMissing { rate })
                .collect(),
            SweepEntry::BlockMissing { sizes, anchor } => sizes
                .iter()
                .map(|&[height, width]| Distortion::BlockMissing {
                    height,
                    width,
                    anchor: *anchor,
                })
                .collect(),
            SweepEntry::Awgn { snr_db } => snr_db
                .iter()
                .map(|&snr_db| Distortion::Awgn { snr_db })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Holds `train/` and `test/`, each in the `{real,fake}` layout.
    pub dataset_root: PathBuf,
    #[serde(default = "default_working_size")]
    pub working_size: usize,
    #[serde(default)]
    pub diffusion: DiffusionParams,
    #[serde(default)]
    pub atp: AtpConfig,
    #[serde(default)]
    pub svm: SvmParams,
    #[serde(default)]
    pub sweep: Vec<SweepEntry>,
    /// Repetitions for seeded distortions; deterministic ones run once.
    #[serde(default = "default_runs")]
    pub monte_carlo_runs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

fn default_working_size() -> usize {
    96
}

fn default_runs() -> usize {
    4
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn new(dataset_root: impl Into<PathBuf>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            dataset_root: dataset_root.into(),
            working_size: default_working_size(),
            diffusion: DiffusionParams::default(),
            atp: AtpConfig::default(),
            svm: SvmParams::default(),
            sweep: Vec::new(),
            monte_carlo_runs: default_runs(),
            seed: 0,
            output_dir: default_output(),
        }
    }

    /// Reads a config; relative paths are resolved against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.dataset_root);
        fix(&mut self.output_dir);
        match &mut self.atp.source {
            ThresholdSource::Derive { reference: Some(p) } | ThresholdSource::File { path: p } => {
                fix(p)
            }
            _ => {}
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.working_size < 8 {
            return bad(format!("working_size {} is below 8", self.working_size));
        }
        self.diffusion.validate()?;
        if !(self.atp.beta > 0.0) || self.atp.k == 0 {
            return bad("atp.beta must be positive and atp.K at least 1".into());
        }
        if !(self.svm.c > 0.0) || !(self.svm.tol > 0.0) {
            return bad("svm.C and svm.tol must be positive".into());
        }
        if self.atp.source == ThresholdSource::Bundled {
            let table = ThresholdTable::bundled();
            if self.atp.k != table.k() || self.atp.beta != table.beta() {
                return bad(format!(
                    "bundled thresholds have beta {} and K {}, config asks for beta {} and K {}",
                    table.beta(),
                    table.k(),
                    self.atp.beta,
                    self.atp.k
                ));
            }
        }
        if self.monte_carlo_runs == 0 {
            return bad("monte_carlo_runs must be at least 1".into());
        }
        for entry in &self.sweep {
            let conditions = entry.conditions();
            if conditions.is_empty() {
                return bad(format!("sweep entry {entry:?} has an empty grid"));
            }
            for c in conditions {
                c.validate()?;
                if let Distortion::BlockMissing { height, width, .. } = c {
                    if height > self.working_size || width > self.working_size {
                        return bad(format!(
                            "block {height}x{width} exceeds working size {}",
                            self.working_size
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn train_root(&self) -> PathBuf {
        self.dataset_root.join("train")
    }

    pub fn test_root(&self) -> PathBuf {
        self.dataset_root.join("test")
    }
}
