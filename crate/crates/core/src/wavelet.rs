//! Orthonormal 2-D Haar transform and the three-level approximation pyramid.
//!
//! Block convention for `[p00 p01; p10 p11]`:
//! `a = (p00+p01+p10+p11)/2`, `h = (p00+p01-p10-p11)/2`,
//! `v = (p00-p01+p10-p11)/2`, `d = (p00-p01-p10+p11)/2`.

use crate::error::{Error, Result};
use crate::image::GrayImage;

/// One level of subbands, all sharing the same dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Subbands {
    pub approx: GrayImage,
    pub horizontal: GrayImage,
    pub vertical: GrayImage,
    pub diagonal: GrayImage,
}

/// Names of the subbands that pass through the ATP transform, in feature order.
pub const ATP_SUBBANDS: [&str; 10] = ["h1", "v1", "d1", "h2", "v2", "d2", "a3", "h3", "v3", "d3"];

/// Three-level pyramid: each level decomposes the previous approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandSet {
    pub levels: [Subbands; 3],
}

impl SubbandSet {
    pub fn a1(&self) -> &GrayImage {
        &self.levels[0].approx
    }

    pub fn a2(&self) -> &GrayImage {
        &self.levels[1].approx
    }

    /// Looks a subband up by name (`a1`, `h2`, `d3`, ...).
    pub fn get(&self, name: &str) -> Option<&GrayImage> {
        let mut chars = name.chars();
        let kind = chars.next()?;
        let level: usize = chars.as_str().parse().ok()?;
        let lvl = self.levels.get(level.checked_sub(1)?)?;
        match kind {
            'a' => Some(&lvl.approx),
            'h' => Some(&lvl.horizontal),
            'v' => Some(&lvl.vertical),
            'd' => Some(&lvl.diagonal),
            _ => None,
        }
    }

    /// The ten ATP inputs in [`ATP_SUBBANDS`] order.
    pub fn atp_inputs(&self) -> [&GrayImage; 10] {
        let [l1, l2, l3] = &self.levels;
        [
            &l1.horizontal,
            &l1.vertical,
            &l1.diagonal,
            &l2.horizontal,
            &l2.vertical,
            &l2.diagonal,
            &l3.approx,
            &l3.horizontal,
            &l3.vertical,
            &l3.diagonal,
        ]
    }
}

/// Single-level Haar analysis. Odd dimensions replicate the last row/column.
pub fn haar_dwt2(img: &GrayImage) -> Result<Subbands> {
    let (rows, cols) = img.dims();
    if rows < 2 || cols < 2 {
        return Err(Error::DimensionTooSmall { rows, cols, min: 2 });
    }
    let out_r = rows.div_ceil(2);
    let out_c = cols.div_ceil(2);
    let n = out_r * out_c;
    let (mut a, mut h, mut v, mut d) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for br in 0..out_r {
        let r0 = 2 * br;
        let r1 = (r0 + 1).min(rows - 1);
        for bc in 0..out_c {
            let c0 = 2 * bc;
            let c1 = (c0 + 1).min(cols - 1);
            let p00 = img.get(r0, c0);
            let p01 = img.get(r0, c1);
            let p10 = img.get(r1, c0);
            let p11 = img.get(r1, c1);
            a.push((p00 + p01 + p10 + p11) * 0.5);
            h.push((p00 + p01 - p10 - p11) * 0.5);
            v.push((p00 - p01 + p10 - p11) * 0.5);
            d.push((p00 - p01 - p10 + p11) * 0.5);
        }
    }
    Ok(Subbands {
        approx: GrayImage::from_raw(out_r, out_c, a),
        horizontal: GrayImage::from_raw(out_r, out_c, h),
        vertical: GrayImage::from_raw(out_r, out_c, v),
        diagonal: GrayImage::from_raw(out_r, out_c, d),
    })
}

/// Inverse of [`haar_dwt2`] for even-dimension originals.
pub fn haar_idwt2(bands: &Subbands) -> Result<GrayImage> {
    let dims = bands.approx.dims();
    for (name, b) in [
        ("horizontal", &bands.horizontal),
        ("vertical", &bands.vertical),
        ("diagonal", &bands.diagonal),
    ] {
        if b.dims() != dims {
            return Err(Error::DimensionMismatch(format!(
                "{name} subband is {:?}, approximation is {:?}",
                b.dims(),
                dims
            )));
        }
    }
    let (rows, cols) = dims;
    let out_c = 2 * cols;
    let mut out = vec![0.0; 4 * rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            let a = bands.approx.get(r, c);
            let h = bands.horizontal.get(r, c);
            let v = bands.vertical.get(r, c);
            let d = bands.diagonal.get(r, c);
            let top = 2 * r * out_c + 2 * c;
            let bottom = top + out_c;
            out[top] = (a + h + v + d) * 0.5;
            out[top + 1] = (a + h - v - d) * 0.5;
            out[bottom] = (a - h + v - d) * 0.5;
            out[bottom + 1] = (a - h - v + d) * 0.5;
        }
    }
    Ok(GrayImage::from_raw(2 * rows, out_c, out))
}

pub fn decompose3(img: &GrayImage) -> Result<SubbandSet> {
    let (rows, cols) = img.dims();
    if rows < 8 || cols < 8 {
        return Err(Error::DimensionTooSmall { rows, cols, min: 8 });
    }
    let l1 = haar_dwt2(img)?;
    let l2 = haar_dwt2(&l1.approx)?;
    let l3 = haar_dwt2(&l2.approx)?;
    Ok(SubbandSet {
        levels: [l1, l2, l3],
    })
}

/// Reconstructs the input of [`decompose3`], exactly for any even-dimension input.
pub fn reconstruct3(set: &SubbandSet) -> Result<GrayImage> {
    let [l1, l2, l3] = &set.levels;
    // an odd approximation was padded before analysis; cropping undoes that
    let a2 = crop(&haar_idwt2(l3)?, l2.approx.dims());
    let a1 = crop(
        &haar_idwt2(&Subbands {
            approx: a2,
            ..l2.clone()
        })?,
        l1.approx.dims(),
    );
    haar_idwt2(&Subbands {
        approx: a1,
        ..l1.clone()
    })
}

fn crop(img: &GrayImage, (rows, cols): (usize, usize)) -> GrayImage {
    if img.dims() == (rows, cols) {
        return img.clone();
    }
    GrayImage::from_fn(rows, cols, |r, c| img.get(r, c)).expect("crop within bounds")
}
