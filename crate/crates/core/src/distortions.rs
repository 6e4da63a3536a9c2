//! Test-time distortions: random pixel loss, a missing block, and AWGN.
//!
//! Randomness comes from ChaCha8 seeded through `seed_from_u64`, which is
//! specified bit-for-bit and therefore reproducible across platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::GrayImage;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Where a missing block is placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Anchor {
    /// Top-left corner at `floor((dims - block) / 2)`.
    #[default]
    Centered,
    Explicit {
        row: usize,
        col: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distortion {
    PixelMissing {
        rate: f64,
    },
    BlockMissing {
        height: usize,
        width: usize,
        #[serde(default)]
        anchor: Anchor,
    },
    Awgn {
        snr_db: f64,
    },
}

impl Distortion {
    /// Whether the outcome depends on the seed.
    pub fn is_seeded(&self) -> bool {
        !matches!(self, Distortion::BlockMissing { .. })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Distortion::PixelMissing { .. } => "pixel_missing",
            Distortion::BlockMissing { .. } => "block_missing",
            Distortion::Awgn { .. } => "awgn",
        }
    }

    /// Human-readable parameter, as used in report rows.
    pub fn param_label(&self) -> String {
        match self {
            Distortion::PixelMissing { rate } => format!("{rate}"),
            Distortion::BlockMissing { height, width, .. } => format!("{height}x{width}"),
            Distortion::Awgn { snr_db } => format!("{snr_db}"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Distortion::PixelMissing { rate } if !(0.0..=1.0).contains(&rate) => {
                Err(Error::InvalidRate(rate))
            }
            Distortion::Awgn { snr_db } if !snr_db.is_finite() => Err(Error::InvalidParameter(
                format!("SNR must be finite, got {snr_db}"),
            )),
            Distortion::BlockMissing { height, width, .. } if height == 0 || width == 0 => Err(
                Error::InvalidParameter("block dimensions must be positive".into()),
            ),
            _ => Ok(()),
        }
    }

    pub fn apply(&self, img: &GrayImage, seed: u64) -> Result<GrayImage> {
        match *self {
            Distortion::PixelMissing { rate } => pixel_missing(img, rate, seed),
            Distortion::BlockMissing {
                height,
                width,
                anchor,
            } => block_missing(img, height, width, anchor),
            Distortion::Awgn { snr_db } => awgn(img, snr_db, seed),
        }
    }
}

/// A distortion together with the seed it runs under.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionSpec {
    #[serde(flatten)]
    pub distortion: Distortion,
    #[serde(default)]
    pub seed: u64,
}

impl DistortionSpec {
    pub fn apply(&self, img: &GrayImage) -> Result<GrayImage> {
        self.distortion.apply(img, self.seed)
    }
}

/// Zeroes each pixel independently with probability `rate`.
pub fn pixel_missing(img: &GrayImage, rate: f64, seed: u64) -> Result<GrayImage> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::InvalidRate(rate));
    }
    let mut rng = rng_from_seed(seed);
    let data = img
        .data()
        .iter()
        .map(|&v| {
            let keep = if rng.random::<f64>() < rate { 0.0 } else { 1.0 };
            v * keep
        })
        .collect();
    Ok(GrayImage::from_raw(img.rows(), img.cols(), data))
}

pub fn block_missing(
    img: &GrayImage,
    height: usize,
    width: usize,
    anchor: Anchor,
) -> Result<GrayImage> {
    let (rows, cols) = img.dims();
    let (row, col) = match anchor {
        Anchor::Centered => (
            rows.saturating_sub(height) / 2,
            cols.saturating_sub(width) / 2,
        ),
        Anchor::Explicit { row, col } => (row, col),
    };
    if height == 0 || width == 0 || row + height > rows || col + width > cols {
        return Err(Error::BlockTooLarge {
            block_rows: height,
            block_cols: width,
            row,
            col,
            rows,
            cols,
        });
    }
    let mut out = img.clone();
    for r in row..row + height {
        for c in col..col + width {
            out.set(r, c, 0.0);
        }
    }
    Ok(out)
}

/// Adds white Gaussian noise scaled so that mean-square signal power over
/// noise power equals `snr_db`. The result is not clipped.
pub fn awgn(img: &GrayImage, snr_db: f64, seed: u64) -> Result<GrayImage> {
    if !snr_db.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "SNR must be finite, got {snr_db}"
        )));
    }
    let signal = img.mean_square();
    if !(signal > 0.0) {
        return Err(Error::ZeroSignalPower);
    }
    let sigma = (signal / 10f64.powf(snr_db / 10.0)).sqrt();
    let mut rng = rng_from_seed(seed);
    let data = img
        .data()
        .iter()
        .map(|&v| v + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    GrayImage::new(img.rows(), img.cols(), data)
}
