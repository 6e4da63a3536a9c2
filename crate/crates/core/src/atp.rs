//! Adaptive thresholding patterns.
//!
//! Each pixel of a subband is described by comparing its eight neighbors
//! against a decaying schedule of `K` thresholds. Per threshold the
//! comparisons form an 8-bit code with weights `2^1..2^8`; the pattern value
//! is the sum of the `K` codes, so it lies in `[0, 510 * K]`.
//!
//! Threshold schedules are derived from a reference image: for a pixel whose
//! 3x3 neighborhood has maximum `H` and minimum `L`, the schedule is
//! `beta * (H - L) * exp(-H / (H - L) * k)` for `k = 0..K`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::de::{self, Deserializer};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};

use crate::diffusion::{diffuse, DiffusionParams};
use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::wavelet::{decompose3, ATP_SUBBANDS};

/// Largest code a single threshold can contribute.
pub const MAX_CODE: u32 = 510;

const BUNDLED_TABLE: &str = include_str!("../data/bundled_thresholds.json");

/// Neighbor offsets in row-major order, center excluded.
const NEIGHBORS: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

/// Scalar threshold schedules for the ten ATP subbands.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdTable {
    beta: f64,
    /// Indexed like [`ATP_SUBBANDS`].
    thresholds: Vec<Vec<f64>>,
}

impl ThresholdTable {
    pub fn new(beta: f64, thresholds: Vec<Vec<f64>>) -> Result<Self> {
        let table = Self { beta, thresholds };
        table.validate()?;
        Ok(table)
    }

    /// Reference threshold values for beta 2.2, K 5.
    pub fn bundled() -> Self {
        serde_json::from_str(BUNDLED_TABLE).expect("bundled threshold table is valid")
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn k(&self) -> usize {
        self.thresholds.first().map_or(0, Vec::len)
    }

    pub fn subband_names(&self) -> &'static [&'static str; 10] {
        &ATP_SUBBANDS
    }

    pub fn get(&self, subband: &str) -> Option<&[f64]> {
        ATP_SUBBANDS
            .iter()
            .position(|&n| n == subband)
            .map(|i| self.thresholds[i].as_slice())
    }

    /// Schedules in [`ATP_SUBBANDS`] order.
    pub fn schedules(&self) -> &[Vec<f64>] {
        &self.thresholds
    }

    fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if self.thresholds.len() != ATP_SUBBANDS.len() {
            return Err(Error::InvalidParameter(format!(
                "threshold table needs {} subbands, got {}",
                ATP_SUBBANDS.len(),
                self.thresholds.len()
            )));
        }
        let k = self.k();
        if k == 0 {
            return Err(Error::EmptyThresholds);
        }
        for (name, seq) in ATP_SUBBANDS.iter().zip(&self.thresholds) {
            if seq.len() != k {
                return Err(Error::InvalidParameter(format!(
                    "subband {name} has {} thresholds, expected {k}",
                    seq.len()
                )));
            }
            if seq.iter().any(|t| !t.is_finite() || *t < 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "subband {name} has a negative or non-finite threshold"
                )));
            }
            if seq.windows(2).any(|w| w[1] > w[0]) {
                return Err(Error::InvalidParameter(format!(
                    "subband {name} thresholds must be non-increasing"
                )));
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::from(e).context(path.display().to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

impl Serialize for ThresholdTable {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        struct Ordered<'a>(&'a [Vec<f64>]);
        impl Serialize for Ordered<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                let mut map = s.serialize_map(Some(self.0.len()))?;
                for (name, seq) in ATP_SUBBANDS.iter().zip(self.0) {
                    map.serialize_entry(name, seq)?;
                }
                map.end()
            }
        }
        #[derive(Serialize)]
        struct Doc<'a> {
            beta: f64,
            #[serde(rename = "K")]
            k: usize,
            subbands: Ordered<'a>,
        }
        Doc {
            beta: self.beta,
            k: self.k(),
            subbands: Ordered(&self.thresholds),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ThresholdTable {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Doc {
            beta: f64,
            #[serde(rename = "K")]
            k: usize,
            subbands: BTreeMap<String, Vec<f64>>,
        }
        let mut doc = Doc::deserialize(deserializer)?;
        let mut thresholds = Vec::with_capacity(ATP_SUBBANDS.len());
        for name in ATP_SUBBANDS {
            let seq = doc
                .subbands
                .remove(name)
                .ok_or_else(|| de::Error::custom(format!("missing subband {name}")))?;
            if seq.len() != doc.k {
                return Err(de::Error::custom(format!(
                    "subband {name} has {} thresholds but K = {}",
                    seq.len(),
                    doc.k
                )));
            }
            thresholds.push(seq);
        }
        if let Some(extra) = doc.subbands.keys().next() {
            return Err(de::Error::custom(format!("unknown subband {extra}")));
        }
        ThresholdTable::new(doc.beta, thresholds).map_err(de::Error::custom)
    }
}

/// Per-pixel schedule `beta * T0 * exp(-alpha * k)` with `T0 = H - L` and
/// `alpha = H / T0`. `None` for flat neighborhoods (`T0 = 0`) and for
/// neighborhoods with `H < 0`, whose schedule would grow with `k`.
pub fn pixel_schedule(high: f64, low: f64, beta: f64, k: usize) -> Option<Vec<f64>> {
    let t0 = high - low;
    if !(t0 > 0.0) || high < 0.0 {
        return None;
    }
    let alpha = high / t0;
    Some(
        (0..k)
            .map(|i| beta * t0 * (-alpha * i as f64).exp())
            .collect(),
    )
}

/// Max over pixels of the per-pixel schedules of one subband.
pub fn subband_schedule(subband: &GrayImage, beta: f64, k: usize) -> Option<Vec<f64>> {
    let mut best: Option<Vec<f64>> = None;
    for r in 0..subband.rows() as isize {
        for c in 0..subband.cols() as isize {
            let mut high = f64::NEG_INFINITY;
            let mut low = f64::INFINITY;
            for dr in -1..=1 {
                for dc in -1..=1 {
                    let v = subband.get_clamped(r + dr, c + dc);
                    high = high.max(v);
                    low = low.min(v);
                }
            }
            if let Some(s) = pixel_schedule(high, low, beta, k) {
                match &mut best {
                    Some(b) => b.iter_mut().zip(&s).for_each(|(b, v)| *b = b.max(*v)),
                    None => best = Some(s),
                }
            }
        }
    }
    best
}

/// Derives a threshold table from the diffused wavelet subbands of `reference`.
pub fn derive_thresholds(
    reference: &GrayImage,
    beta: f64,
    k: usize,
    diffusion: &DiffusionParams,
) -> Result<ThresholdTable> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "beta must be positive, got {beta}"
        )));
    }
    if k == 0 {
        return Err(Error::EmptyThresholds);
    }
    let diffused = diffuse(reference, diffusion)?;
    let bands = decompose3(&diffused)?;
    let thresholds = ATP_SUBBANDS
        .iter()
        .zip(bands.atp_inputs())
        .map(|(name, band)| {
            subband_schedule(band, beta, k)
                .ok_or_else(|| Error::DegenerateReference(name.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    ThresholdTable::new(beta, thresholds)
}

/// Per-pixel ATP values, same dimensions as the source subband.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternImage {
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

impl PatternImage {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[u32] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.data[row * self.cols + col]
    }
}

pub fn atp_transform(subband: &GrayImage, thresholds: &[f64]) -> Result<PatternImage> {
    if thresholds.is_empty() {
        return Err(Error::EmptyThresholds);
    }
    let (rows, cols) = subband.dims();
    let mut data = Vec::with_capacity(rows * cols);
    let mut neigh = [0.0; 8];
    for r in 0..rows as isize {
        for c in 0..cols as isize {
            for (slot, (dr, dc)) in neigh.iter_mut().zip(NEIGHBORS) {
                *slot = subband.get_clamped(r + dr, c + dc);
            }
            let mut total = 0u32;
            for &t in thresholds {
                let mut code = 0u32;
                for (bit, &v) in neigh.iter().enumerate() {
                    if v > t {
                        code |= 2 << bit;
                    }
                }
                total += code;
            }
            data.push(total);
        }
    }
    Ok(PatternImage { rows, cols, data })
}
