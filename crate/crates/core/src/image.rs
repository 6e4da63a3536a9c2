//! Dense grayscale images and their file formats.
//!
//! Pixels are kept as `f64` from load onward so that diffusion and wavelet
//! arithmetic never quantizes; rounding to 8 bits only happens on export.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use image::{DynamicImage, ImageFormat, ImageReader};

use crate::error::{Error, Result};

/// Row-major grid of real-valued intensities, nominally in `[0, 255]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDimensions {
                rows,
                cols,
                reason: "dimensions must be positive".into(),
            });
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidDimensions {
                rows,
                cols,
                reason: format!("expected {} values, got {}", rows * cols, data.len()),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinitePixel(i));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Result<Self> {
        Self::new(rows, cols, vec![value; rows * cols])
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self::new(rows, cols, data)
    }

    /// Builds an image without re-validating; callers guarantee the invariants.
    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        debug_assert!(rows > 0 && cols > 0);
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    /// Pixel lookup with replicate-edge padding for out-of-range indices.
    #[inline]
    pub fn get_clamped(&self, row: isize, col: isize) -> f64 {
        let r = row.clamp(0, self.rows as isize - 1) as usize;
        let c = col.clamp(0, self.cols as isize - 1) as usize;
        self.data[r * self.cols + c]
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Mean of squared intensities.
    pub fn mean_square(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>() / self.data.len() as f64
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GrayImage {
        GrayImage::from_raw(
            self.rows,
            self.cols,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn transpose(&self) -> GrayImage {
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                data.push(self.get(r, c));
            }
        }
        GrayImage::from_raw(self.cols, self.rows, data)
    }

    pub fn flip_horizontal(&self) -> GrayImage {
        let mut out = self.clone();
        for row in out.data.chunks_mut(self.cols) {
            row.reverse();
        }
        out
    }

    pub fn flip_vertical(&self) -> GrayImage {
        let mut data = Vec::with_capacity(self.data.len());
        for row in self.data.chunks(self.cols).rev() {
            data.extend_from_slice(row);
        }
        GrayImage::from_raw(self.rows, self.cols, data)
    }

    /// Total variation: sum of absolute horizontal and vertical neighbor differences.
    pub fn total_variation(&self) -> f64 {
        let mut tv = 0.0;
        for r in 0..self.rows {
            for c in 0..self.cols {
                let v = self.get(r, c);
                if c + 1 < self.cols {
                    tv += (self.get(r, c + 1) - v).abs();
                }
                if r + 1 < self.rows {
                    tv += (self.get(r + 1, c) - v).abs();
                }
            }
        }
        tv
    }

    /// Quantizes to 8 bits by rounding and clamping to `[0, 255]`.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|v| v.round().clamp(0.0, 255.0) as u8)
            .collect()
    }
}

/// ITU-R BT.601 luma.
#[inline]
pub fn luma(r: u8, g: u8, b: u8) -> f64 {
    if r == g && g == b {
        return r as f64;
    }
    0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64
}

pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes, path)
}

/// Decodes BMP, PNG or PGM bytes; `path` is only used in error messages.
pub fn decode_image(bytes: &[u8], path: &Path) -> Result<GrayImage> {
    let format = image::guess_format(bytes)
        .ok()
        .or_else(|| ImageFormat::from_path(path).ok())
        .ok_or_else(|| Error::UnsupportedFormat(path.to_path_buf()))?;
    if !matches!(
        format,
        ImageFormat::Bmp | ImageFormat::Png | ImageFormat::Pnm
    ) {
        return Err(Error::UnsupportedFormat(path.to_path_buf()));
    }
    let reader = ImageReader::with_format(std::io::Cursor::new(bytes), format);
    let decoded = reader.decode().map_err(|e| match e {
        image::ImageError::Unsupported(_) => Error::UnsupportedFormat(path.to_path_buf()),
        other => Error::CorruptImage {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    })?;
    let (cols, rows) = (decoded.width() as usize, decoded.height() as usize);
    let data: Vec<f64> = match decoded {
        DynamicImage::ImageLuma8(buf) => buf.into_raw().into_iter().map(f64::from).collect(),
        DynamicImage::ImageLumaA8(buf) => buf.pixels().map(|p| f64::from(p.0[0])).collect(),
        DynamicImage::ImageRgb8(buf) => {
            buf.pixels().map(|p| luma(p.0[0], p.0[1], p.0[2])).collect()
        }
        DynamicImage::ImageRgba8(buf) => {
            buf.pixels().map(|p| luma(p.0[0], p.0[1], p.0[2])).collect()
        }
        _ => return Err(Error::UnsupportedFormat(path.to_path_buf())),
    };
    GrayImage::new(rows, cols, data).map_err(|e| Error::CorruptImage {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Binary PGM (P5, maxval 255).
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.cols(), img.rows()).into_bytes();
    out.extend(img.to_u8());
    out
}

/// Writes the image quantized to 8 bits; the format follows the extension
/// (`pgm`, `png` or `bmp`).
pub fn save_image(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    match ext.as_deref() {
        Some("pgm") => {
            let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
            let mut w = BufWriter::new(file);
            w.write_all(&encode_pgm(img))
                .and_then(|_| w.flush())
                .map_err(|e| Error::io(path, e))
        }
        Some("png") | Some("bmp") => {
            let buf = image::GrayImage::from_raw(img.cols() as u32, img.rows() as u32, img.to_u8())
                .expect("buffer length matches dimensions");
            let format = if ext.as_deref() == Some("png") {
                ImageFormat::Png
            } else {
                ImageFormat::Bmp
            };
            buf.save_with_format(path, format).map_err(|e| match e {
                image::ImageError::IoError(io) => Error::io(path, io),
                other => Error::CorruptImage {
                    path: path.to_path_buf(),
                    reason: other.to_string(),
                },
            })
        }
        _ => Err(Error::UnsupportedFormat(path.to_path_buf())),
    }
}

/// Bilinear resize with pixel-center alignment. Identity when the size is unchanged.
pub fn resize_to(img: &GrayImage, rows: usize, cols: usize) -> Result<GrayImage> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidDimensions {
            rows,
            cols,
            reason: "target dimensions must be positive".into(),
        });
    }
    if img.dims() == (rows, cols) {
        return Ok(img.clone());
    }
    let sy = img.rows() as f64 / rows as f64;
    let sx = img.cols() as f64 / cols as f64;
    let max_r = (img.rows() - 1) as f64;
    let max_c = (img.cols() - 1) as f64;

    // Source coordinates and weights along each axis.
    let axis = |n: usize, scale: f64, max: f64| -> Vec<(usize, usize, f64)> {
        (0..n)
            .map(|i| {
                let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, max);
                let lo = s.floor() as usize;
                let hi = (lo + 1).min(max as usize);
                (lo, hi, s - lo as f64)
            })
            .collect()
    };
    let ys = axis(rows, sy, max_r);
    let xs = axis(cols, sx, max_c);

    let mut data = Vec::with_capacity(rows * cols);
    for &(r0, r1, fy) in &ys {
        for &(c0, c1, fx) in &xs {
            let top = img.get(r0, c0) * (1.0 - fx) + img.get(r0, c1) * fx;
            let bottom = img.get(r1, c0) * (1.0 - fx) + img.get(r1, c1) * fx;
            let v = top * (1.0 - fy) + bottom * fy;
            data.push(v);
        }
    }
    Ok(GrayImage::from_raw(rows, cols, data))
}
