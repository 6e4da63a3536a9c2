//! Soft-margin SVM trained by sequential minimal optimization.
//!
//! Inputs are z-scored with statistics from the training set. The dual is
//! solved with maximal-violating-pair working set selection, which stops once
//! the KKT gap `max_{I_up} -y G - min_{I_low} -y G` drops to `tol`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const STD_FLOOR: f64 = 1e-8;
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => dot(a, b),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvmParams {
    #[serde(rename = "C")]
    pub c: f64,
    pub tol: f64,
    /// Cap on pair updates; `None` means `100 * n`.
    #[serde(default)]
    pub max_passes: Option<usize>,
    #[serde(default = "default_kernel")]
    pub kernel: Kernel,
}

fn default_kernel() -> Kernel {
    Kernel::Linear
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-3,
            max_passes: None,
            kernel: Kernel::Linear,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportVector {
    pub coef: f64,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    #[serde(rename = "C")]
    pub c: f64,
    pub tol: f64,
    pub kernel: Kernel,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    /// Primal weights in standardized space (linear kernel only).
    pub weights: Vec<f64>,
    /// Standardized support vectors with `alpha * y` (non-linear kernels only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub support_vectors: Vec<SupportVector>,
    pub bias: f64,
    pub label_map: BTreeMap<String, String>,
    #[serde(default)]
    pub pipeline_config_hash: Option<String>,
}

fn default_label_map() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("+1".to_string(), "fake".to_string()),
        ("-1".to_string(), "real".to_string()),
    ])
}

/// Training result with solver diagnostics.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: SvmModel,
    pub alphas: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_rows(rows: &[Vec<f64>]) -> Result<usize> {
    let dim = rows.first().map(Vec::len).ok_or(Error::EmptyInput)?;
    for r in rows {
        if r.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "feature vectors of length {dim} and {}",
                r.len()
            )));
        }
    }
    Ok(dim)
}

pub fn train(features: &[Vec<f64>], labels: &[i8], params: &SvmParams) -> Result<SvmModel> {
    train_detailed(features, labels, params).map(|o| o.model)
}

pub fn train_detailed(
    features: &[Vec<f64>],
    labels: &[i8],
    params: &SvmParams,
) -> Result<TrainOutcome> {
    if features.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: features.len(),
            right: labels.len(),
        });
    }
    let dim = check_rows(features)?;
    if let Some(bad) = labels.iter().find(|&&l| l != 1 && l != -1) {
        return Err(Error::InvalidParameter(format!(
            "label {bad} is not +1 or -1"
        )));
    }
    if !labels.contains(&1) || !labels.contains(&-1) {
        return Err(Error::SingleClassData);
    }
    if !(params.c > 0.0) || !(params.tol > 0.0) {
        return Err(Error::InvalidParameter("C and tol must be positive".into()));
    }
    if let Kernel::Rbf { gamma } = params.kernel {
        if !(gamma > 0.0) {
            return Err(Error::InvalidParameter("RBF gamma must be positive".into()));
        }
    }

    let n = features.len();
    let mut mean = vec![0.0; dim];
    for row in features {
        mean.iter_mut().zip(row).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut scale = vec![0.0; dim];
    for row in features {
        for ((s, v), m) in scale.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    scale
        .iter_mut()
        .for_each(|s| *s = (*s / n as f64).sqrt().max(STD_FLOOR));

    let xs: Vec<Vec<f64>> = features
        .iter()
        .map(|r| standardize(r, &mean, &scale))
        .collect();
    let ys: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();

    let gram: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).map(|j| params.kernel.eval(&xs[i], &xs[j])).collect())
        .collect();

    let max_iter = params.max_passes.unwrap_or(100 * n);
    let solved = solve_dual(&gram, &ys, params.c, params.tol, max_iter);
    if !solved.converged {
        log::warn!(
            "SMO stopped after {} iterations without reaching tol {}",
            solved.iterations,
            params.tol
        );
    }

    let (weights, support_vectors) = match params.kernel {
        Kernel::Linear => {
            let mut w = vec![0.0; dim];
            for ((x, &y), &a) in xs.iter().zip(&ys).zip(&solved.alphas) {
                if a > 0.0 {
                    w.iter_mut().zip(x).for_each(|(w, v)| *w += a * y * v);
                }
            }
            (w, Vec::new())
        }
        Kernel::Rbf { .. } => {
            let svs = xs
                .iter()
                .zip(&ys)
                .zip(&solved.alphas)
                .filter(|(_, &a)| a > 0.0)
                .map(|((x, &y), &a)| SupportVector {
                    coef: a * y,
                    x: x.clone(),
                })
                .collect();
            (Vec::new(), svs)
        }
    };

    Ok(TrainOutcome {
        model: SvmModel {
            c: params.c,
            tol: params.tol,
            kernel: params.kernel,
            mean,
            scale,
            weights,
            support_vectors,
            bias: solved.bias,
            label_map: default_label_map(),
            pipeline_config_hash: None,
        },
        alphas: solved.alphas,
        iterations: solved.iterations,
        converged: solved.converged,
    })
}

fn standardize(x: &[f64], mean: &[f64], scale: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(mean)
        .zip(scale)
        .map(|((v, m), s)| (v - m) / s)
        .collect()
}

struct DualSolution {
    alphas: Vec<f64>,
    bias: f64,
    iterations: usize,
    converged: bool,
}

fn solve_dual(gram: &[Vec<f64>], y: &[f64], c: f64, tol: f64, max_iter: usize) -> DualSolution {
    let n = y.len();
    let mut alpha = vec![0.0; n];
    // G_t = sum_s Q_ts alpha_s - 1 with Q_ts = y_t y_s K_ts
    let mut grad = vec![-1.0; n];
    let in_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let in_low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);

    let mut iterations = 0;
    let mut converged = false;
    loop {
        let mut i = usize::MAX;
        let mut m = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut big_m = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_up(alpha[t], y[t]) && v > m {
                m = v;
                i = t;
            }
            if in_low(alpha[t], y[t]) && v < big_m {
                big_m = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || m - big_m <= tol {
            converged = true;
            break;
        }
        if iterations >= max_iter {
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let q_ij = y[i] * y[j] * gram[i][j];
        if y[i] != y[j] {
            let quad = (gram[i][i] + gram[j][j] + 2.0 * q_ij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (gram[i][i] + gram[j][j] - 2.0 * q_ij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * gram[t][i] * di + y[j] * gram[t][j] * dj);
        }
    }

    // Bias: average over free vectors, else midpoint of the feasible interval.
    let mut free_sum = 0.0;
    let mut free_n = 0usize;
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    for t in 0..n {
        let v = -y[t] * grad[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            free_sum += v;
            free_n += 1;
        } else {
            if in_up(alpha[t], y[t]) {
                lb = lb.max(v);
            }
            if in_low(alpha[t], y[t]) {
                ub = ub.min(v);
            }
        }
    }
    let bias = if free_n > 0 {
        free_sum / free_n as f64
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) / 2.0
    } else if ub.is_finite() {
        ub
    } else {
        lb
    };

    DualSolution {
        alphas: alpha,
        bias,
        iterations,
        converged,
    }
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn with_pipeline_hash(mut self, hash: impl Into<String>) -> Self {
        self.pipeline_config_hash = Some(hash.into());
        self
    }

    /// Raw decision value `f(x)`.
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "model expects {} features, got {}",
                self.dim(),
                x.len()
            )));
        }
        let z = standardize(x, &self.mean, &self.scale);
        let score = match self.kernel {
            Kernel::Linear => dot(&self.weights, &z),
            k @ Kernel::Rbf { .. } => self
                .support_vectors
                .iter()
                .map(|sv| sv.coef * k.eval(&sv.x, &z))
                .sum(),
        };
        Ok(score + self.bias)
    }

    /// Label and score; a score of exactly zero maps to +1.
    pub fn predict(&self, x: &[f64]) -> Result<(i8, f64)> {
        let score = self.decision(x)?;
        Ok((if score >= 0.0 { 1 } else { -1 }, score))
    }

    /// Like [`predict`](Self::predict) but refuses features built with a
    /// different pipeline configuration.
    pub fn predict_checked(&self, x: &[f64], layout_hash: &str) -> Result<(i8, f64)> {
        self.check_layout(layout_hash)?;
        self.predict(x)
    }

    pub fn check_layout(&self, layout_hash: &str) -> Result<()> {
        match &self.pipeline_config_hash {
            Some(h) if h == layout_hash => Ok(()),
            Some(h) => Err(Error::LayoutHashMismatch {
                expected: h.clone(),
                actual: layout_hash.to_string(),
            }),
            None => Err(Error::LayoutHashMismatch {
                expected: "<none>".into(),
                actual: layout_hash.to_string(),
            }),
        }
    }

    /// Per-example KKT violation for the dual solution `alphas`.
    pub fn kkt_residuals(
        &self,
        features: &[Vec<f64>],
        labels: &[i8],
        alphas: &[f64],
    ) -> Result<Vec<f64>> {
        features
            .iter()
            .zip(labels)
            .zip(alphas)
            .map(|((x, &y), &a)| {
                let margin = f64::from(y) * self.decision(x)?;
                Ok(if a <= 0.0 {
                    (1.0 - margin).max(0.0)
                } else if a >= self.c {
                    (margin - 1.0).max(0.0)
                } else {
                    (margin - 1.0).abs()
                })
            })
            .collect()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: SvmModel = serde_json::from_str(&text)?;
        if model.scale.len() != model.mean.len()
            || (matches!(model.kernel, Kernel::Linear) && model.weights.len() != model.mean.len())
        {
            return Err(Error::DimensionMismatch(format!(
                "model file {} has inconsistent vector lengths",
                path.display()
            )));
        }
        if model.scale.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::InvalidParameter(
                "model scale entries must be positive".into(),
            ));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}
