//! Synthetic fingerprint-like fixtures.
//!
//! "Real" samples are oriented sinusoidal ridge patterns with a smoothly
//! varying orientation field and fine additive texture. "Fake" samples run
//! the same generator and are then Gaussian-blurred and contrast-compressed
//! toward mid-gray, so they carry less fine detail than the real class.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::distortions::rng_from_seed;
use crate::error::{Error, Result};
use crate::image::{save_image, GrayImage};

pub const REAL: i8 = -1;
pub const FAKE: i8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RealParams {
    /// Ridge frequency band in cycles per pixel.
    pub freq_min: f64,
    pub freq_max: f64,
    /// Wavelength in pixels of the orientation-field perturbation; larger is smoother.
    pub orientation_wavelength: f64,
    /// Peak orientation deviation in radians.
    pub orientation_amplitude: f64,
    pub ridge_amplitude: f64,
    /// Standard deviation of the additive fine texture.
    pub texture_std: f64,
}

impl Default for RealParams {
    fn default() -> Self {
        Self {
            freq_min: 0.09,
            freq_max: 0.14,
            orientation_wavelength: 80.0,
            orientation_amplitude: 0.6,
            ridge_amplitude: 100.0,
            texture_std: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FakeParams {
    /// Gaussian blur standard deviation in pixels; 0 disables the blur.
    pub blur_radius: f64,
    /// Multiplier on the deviation from mid-gray; 1 leaves contrast unchanged.
    pub contrast: f64,
}

impl Default for FakeParams {
    fn default() -> Self {
        Self {
            blur_radius: 1.5,
            contrast: 0.6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    pub count_per_class: usize,
    pub rows: usize,
    pub cols: usize,
    pub seed: u64,
    pub real: RealParams,
    pub fake: FakeParams,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            count_per_class: 60,
            rows: 96,
            cols: 96,
            seed: 0,
            real: RealParams::default(),
            fake: FakeParams::default(),
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.count_per_class == 0 {
            return bad("count per class must be at least 1".into());
        }
        if self.rows < 16 || self.cols < 16 {
            return bad(format!("size {}x{} is below 16x16", self.rows, self.cols));
        }
        let r = &self.real;
        if !(r.freq_min > 0.0 && r.freq_min <= r.freq_max && r.freq_max <= 0.5) {
            return bad(format!(
                "ridge frequency band [{}, {}] is invalid",
                r.freq_min, r.freq_max
            ));
        }
        if !(r.orientation_wavelength > 0.0)
            || !(r.ridge_amplitude >= 0.0)
            || !(r.texture_std >= 0.0)
        {
            return bad("real-class parameters must be non-negative".into());
        }
        if !(self.fake.blur_radius >= 0.0) {
            return bad(format!("blur radius {} is negative", self.fake.blur_radius));
        }
        if !(self.fake.contrast > 0.0 && self.fake.contrast <= 1.0) {
            return bad(format!(
                "contrast factor {} outside (0, 1]",
                self.fake.contrast
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub name: String,
    pub label: i8,
    pub image: GrayImage,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a base seed with a stream index into an independent seed.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    splitmix64(base ^ splitmix64(stream))
}

fn ridge_image(spec: &SynthSpec, seed: u64) -> GrayImage {
    let p = &spec.real;
    let mut rng = rng_from_seed(seed);
    let base_theta = rng.random::<f64>() * PI;
    let freq = p.freq_min + rng.random::<f64>() * (p.freq_max - p.freq_min);
    let phase = rng.random::<f64>() * 2.0 * PI;
    // two low-frequency waves perturb the orientation field
    let waves: Vec<(f64, f64, f64)> = (0..2)
        .map(|_| {
            let dir = rng.random::<f64>() * 2.0 * PI;
            (dir.cos(), dir.sin(), rng.random::<f64>() * 2.0 * PI)
        })
        .collect();
    let k = 2.0 * PI / p.orientation_wavelength;
    let (cy, cx) = (spec.rows as f64 / 2.0, spec.cols as f64 / 2.0);
    let mut data = Vec::with_capacity(spec.rows * spec.cols);
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            let (y, x) = (r as f64 - cy, c as f64 - cx);
            let wobble: f64 = waves
                .iter()
                .map(|(ux, uy, ph)| (k * (x * ux + y * uy) + ph).sin())
                .sum::<f64>()
                * 0.5
                * p.orientation_amplitude;
            let theta = base_theta + wobble;
            let t = 2.0 * PI * freq * (x * theta.cos() + y * theta.sin()) + phase;
            let texture: f64 = rng.sample::<f64, _>(StandardNormal) * p.texture_std;
            data.push((127.5 + p.ridge_amplitude * t.cos() + texture).clamp(0.0, 255.0));
        }
    }
    GrayImage::from_raw(spec.rows, spec.cols, data)
}

/// Separable Gaussian blur with replicate borders.
pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> GrayImage {
    if sigma <= 0.0 {
        return img.clone();
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let norm: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|w| *w /= norm);

    let (rows, cols) = img.dims();
    let mut tmp = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            tmp[r * cols + c] = kernel
                .iter()
                .enumerate()
                .map(|(i, w)| w * img.get_clamped(r as isize, c as isize + i as isize - radius))
                .sum();
        }
    }
    let horiz = GrayImage::from_raw(rows, cols, tmp);
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            out[r * cols + c] = kernel
                .iter()
                .enumerate()
                .map(|(i, w)| w * horiz.get_clamped(r as isize + i as isize - radius, c as isize))
                .sum();
        }
    }
    GrayImage::from_raw(rows, cols, out)
}

fn fake_image(spec: &SynthSpec, seed: u64) -> GrayImage {
    let blurred = gaussian_blur(&ridge_image(spec, seed), spec.fake.blur_radius);
    let c = spec.fake.contrast;
    blurred.map(|v| (127.5 + c * (v - 127.5)).clamp(0.0, 255.0))
}

/// Generates `count_per_class` real samples followed by as many fakes.
pub fn generate(spec: &SynthSpec) -> Result<Vec<Sample>> {
    spec.validate()?;
    let mut out = Vec::with_capacity(2 * spec.count_per_class);
    for i in 0..spec.count_per_class {
        out.push(Sample {
            name: format!("real_{i:04}"),
            label: REAL,
            image: ridge_image(spec, derive_seed(spec.seed, 2 * i as u64)),
        });
    }
    for i in 0..spec.count_per_class {
        out.push(Sample {
            name: format!("fake_{i:04}"),
            label: FAKE,
            image: fake_image(spec, derive_seed(spec.seed, 2 * i as u64 + 1)),
        });
    }
    Ok(out)
}

/// Train/test pair of synthetic sets written in the `{real,fake}` layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthDataset {
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub rows: usize,
    pub cols: usize,
    pub seed: u64,
    pub real: RealParams,
    pub fake: FakeParams,
}

impl Default for SynthDataset {
    fn default() -> Self {
        Self {
            train_per_class: 60,
            test_per_class: 100,
            rows: 96,
            cols: 96,
            seed: 0,
            real: RealParams::default(),
            fake: FakeParams::default(),
        }
    }
}

impl SynthDataset {
    pub fn split_spec(&self, test: bool) -> SynthSpec {
        SynthSpec {
            count_per_class: if test {
                self.test_per_class
            } else {
                self.train_per_class
            },
            rows: self.rows,
            cols: self.cols,
            seed: derive_seed(self.seed, if test { 0x7e57 } else { 0x7a1e }),
            real: self.real,
            fake: self.fake,
        }
    }

    pub fn generate(&self) -> Result<(Vec<Sample>, Vec<Sample>)> {
        Ok((
            generate(&self.split_spec(false))?,
            generate(&self.split_spec(true))?,
        ))
    }

    /// Writes `root/{train,test}/{real,fake}/*.pgm`.
    pub fn write(&self, root: impl AsRef<Path>) -> Result<()> {
        let root = root.as_ref();
        let (train, test) = self.generate()?;
        for (split, samples) in [("train", train), ("test", test)] {
            for class in ["real", "fake"] {
                let dir = root.join(split).join(class);
                fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            }
            for s in samples {
                let class = if s.label == FAKE { "fake" } else { "real" };
                save_image(
                    &s.image,
                    root.join(split).join(class).join(format!("{}.pgm", s.name)),
                )?;
            }
        }
        Ok(())
    }
}

/// Mean magnitude of forward differences.
pub fn mean_gradient(img: &GrayImage) -> f64 {
    let (rows, cols) = img.dims();
    let mut sum = 0.0;
    for r in 0..rows - 1 {
        for c in 0..cols - 1 {
            let gx = img.get(r, c + 1) - img.get(r, c);
            let gy = img.get(r + 1, c) - img.get(r, c);
            sum += (gx * gx + gy * gy).sqrt();
        }
    }
    sum / ((rows - 1) * (cols - 1)) as f64
}
