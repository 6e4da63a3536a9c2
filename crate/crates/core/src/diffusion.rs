//! Perona-Malik anisotropic diffusion with the exponential conduction function.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::GrayImage;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionParams {
    /// Diffusion rate in the conduction coefficient `exp(-(g / sigma)^2)`.
    pub sigma: f64,
    pub iterations: usize,
    /// Update scale applied to the summed directional fluxes.
    pub step: f64,
}

impl Default for DiffusionParams {
    fn default() -> Self {
        Self {
            sigma: 40.0,
            iterations: 15,
            step: 0.25,
        }
    }
}

impl DiffusionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "diffusion sigma must be positive, got {}",
                self.sigma
            )));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidParameter(
                "diffusion iterations must be at least 1".into(),
            ));
        }
        if !(self.step > 0.0 && self.step <= 0.25) {
            return Err(Error::InvalidParameter(format!(
                "diffusion step must lie in (0, 0.25], got {}",
                self.step
            )));
        }
        Ok(())
    }
}

#[inline]
fn conduction(gradient: f64, sigma: f64) -> f64 {
    let q = gradient / sigma;
    (-(q * q)).exp()
}

/// One explicit update: each pixel moves by `step` times the conduction-weighted
/// sum of its four directional differences. Borders replicate, so a difference
/// across the image edge is zero.
pub fn diffuse_step(img: &GrayImage, params: &DiffusionParams) -> Result<GrayImage> {
    params.validate()?;
    Ok(step_unchecked(img, params))
}

fn step_unchecked(img: &GrayImage, params: &DiffusionParams) -> GrayImage {
    let (rows, cols) = img.dims();
    let src = img.data();
    let sigma = params.sigma;
    let step = params.step;
    let mut out = vec![0.0; rows * cols];
    out.par_chunks_mut(cols)
        .enumerate()
        .for_each(|(r, row_out)| {
            let up = r.saturating_sub(1);
            let down = (r + 1).min(rows - 1);
            for (c, px) in row_out.iter_mut().enumerate() {
                let left = c.saturating_sub(1);
                let right = (c + 1).min(cols - 1);
                let center = src[r * cols + c];
                let north = src[up * cols + c] - center;
                let south = src[down * cols + c] - center;
                let east = src[r * cols + right] - center;
                let west = src[r * cols + left] - center;
                let flux = conduction(north, sigma) * north
                    + conduction(south, sigma) * south
                    + conduction(east, sigma) * east
                    + conduction(west, sigma) * west;
                *px = center + step * flux;
            }
        });
    GrayImage::from_raw(rows, cols, out)
}

/// Applies [`diffuse_step`] `params.iterations` times.
pub fn diffuse(img: &GrayImage, params: &DiffusionParams) -> Result<GrayImage> {
    params.validate()?;
    let mut cur = step_unchecked(img, params);
    for _ in 1..params.iterations {
        cur = step_unchecked(&cur, params);
    }
    Ok(cur)
}
