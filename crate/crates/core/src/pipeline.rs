//! Feature assembly: diffused image, raw `a1`/`a2`, and the ten ATP patterns,
//! each flattened row-major and concatenated in a fixed order.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::atp::{atp_transform, ThresholdTable};
use crate::diffusion::{diffuse, DiffusionParams};
use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::wavelet::decompose3;

/// Segment names in concatenation order.
pub const SEGMENT_NAMES: [&str; 13] = [
    "AD", "a1", "a2", "P1", "P2", "P3", "P4", "P5", "P6", "P7", "P8", "P9", "P10",
];

const BINARY_MAGIC: &[u8; 8] = b"ATPFEAT1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub layout: Vec<Segment>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn segment(&self, name: &str) -> Option<&[f64]> {
        self.layout
            .iter()
            .find(|s| s.name == name)
            .map(|s| &self.values[s.offset..s.offset + s.len])
    }
}

fn halve(n: usize) -> usize {
    n.div_ceil(2)
}

/// Segment layout for a working size of `rows x cols`.
pub fn layout_for(rows: usize, cols: usize) -> Vec<Segment> {
    let l1 = halve(rows) * halve(cols);
    let l2 = halve(halve(rows)) * halve(halve(cols));
    let l3 = halve(halve(halve(rows))) * halve(halve(halve(cols)));
    let lens = [rows * cols, l1, l2, l1, l1, l1, l2, l2, l2, l3, l3, l3, l3];
    let mut offset = 0;
    SEGMENT_NAMES
        .iter()
        .zip(lens)
        .map(|(name, len)| {
            let s = Segment {
                name: name.to_string(),
                offset,
                len,
            };
            offset += len;
            s
        })
        .collect()
}

/// Everything that determines the feature layout and values.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureExtractor {
    rows: usize,
    cols: usize,
    diffusion: DiffusionParams,
    table: ThresholdTable,
}

impl FeatureExtractor {
    pub fn new(
        working_size: (usize, usize),
        diffusion: DiffusionParams,
        table: ThresholdTable,
    ) -> Result<Self> {
        let (rows, cols) = working_size;
        if rows < 8 || cols < 8 {
            return Err(Error::DimensionTooSmall { rows, cols, min: 8 });
        }
        diffusion.validate()?;
        Ok(Self {
            rows,
            cols,
            diffusion,
            table,
        })
    }

    pub fn working_size(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn diffusion(&self) -> &DiffusionParams {
        &self.diffusion
    }

    pub fn table(&self) -> &ThresholdTable {
        &self.table
    }

    pub fn feature_len(&self) -> usize {
        layout_for(self.rows, self.cols)
            .last()
            .map_or(0, |s| s.offset + s.len)
    }

    /// SHA-256 over the configuration that fixes the meaning of every feature.
    pub fn layout_hash(&self) -> String {
        #[derive(Serialize)]
        struct Canonical<'a> {
            working_size: [usize; 2],
            diffusion: &'a DiffusionParams,
            thresholds: &'a ThresholdTable,
            layout: Vec<Segment>,
        }
        let canonical = Canonical {
            working_size: [self.rows, self.cols],
            diffusion: &self.diffusion,
            thresholds: &self.table,
            layout: layout_for(self.rows, self.cols),
        };
        let bytes = serde_json::to_vec(&canonical).expect("canonical config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn extract(&self, img: &GrayImage) -> Result<FeatureVector> {
        if img.dims() != (self.rows, self.cols) {
            return Err(Error::LayoutMismatch(format!(
                "image is {}x{}, working size is {}x{}",
                img.rows(),
                img.cols(),
                self.rows,
                self.cols
            )));
        }
        let layout = layout_for(self.rows, self.cols);
        let diffused = diffuse(img, &self.diffusion)?;
        let bands = decompose3(&diffused)?;
        let patterns = bands
            .atp_inputs()
            .into_par_iter()
            .zip(self.table.schedules().par_iter())
            .map(|(band, ts)| atp_transform(band, ts))
            .collect::<Result<Vec<_>>>()?;

        let total = layout.last().map_or(0, |s| s.offset + s.len);
        let mut values = Vec::with_capacity(total);
        values.extend_from_slice(diffused.data());
        values.extend_from_slice(bands.a1().data());
        values.extend_from_slice(bands.a2().data());
        for p in &patterns {
            values.extend(p.data().iter().map(|&v| f64::from(v)));
        }
        if values.len() != total {
            return Err(Error::LayoutMismatch(format!(
                "assembled {} values, layout expects {total}",
                values.len()
            )));
        }
        Ok(FeatureVector { values, layout })
    }

    /// Extracts a batch in parallel; output order follows input order.
    pub fn extract_batch(&self, imgs: &[GrayImage]) -> Result<Vec<FeatureVector>> {
        imgs.par_iter().map(|img| self.extract(img)).collect()
    }
}

/// CSV with one row per sample, label column first.
pub fn write_features_csv(path: impl AsRef<Path>, labels: &[i8], rows: &[Vec<f64>]) -> Result<()> {
    let path = path.as_ref();
    if labels.len() != rows.len() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: rows.len(),
        });
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let width = rows.first().map_or(0, Vec::len);
    let mut header = String::from("label");
    for i in 0..width {
        header.push_str(&format!(",f{i}"));
    }
    let mut write = || -> std::io::Result<()> {
        writeln!(w, "{header}")?;
        for (label, row) in labels.iter().zip(rows) {
            write!(w, "{label}")?;
            for v in row {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        w.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

/// Binary matrix: magic `ATPFEAT1`, `u64` row count, `u64` column count, then
/// per row an `f64` label followed by the features. All little-endian.
pub fn encode_features_binary(labels: &[i8], rows: &[Vec<f64>]) -> Result<Vec<u8>> {
    if labels.len() != rows.len() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: rows.len(),
        });
    }
    let width = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != width) {
        return Err(Error::LengthMismatch {
            left: width,
            right: bad.len(),
        });
    }
    let mut out = Vec::with_capacity(24 + rows.len() * (width + 1) * 8);
    out.extend_from_slice(BINARY_MAGIC);
    out.extend_from_slice(&(rows.len() as u64).to_le_bytes());
    out.extend_from_slice(&(width as u64).to_le_bytes());
    for (label, row) in labels.iter().zip(rows) {
        out.extend_from_slice(&f64::from(*label).to_le_bytes());
        for v in row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_features_binary(bytes: &[u8]) -> Result<(Vec<i8>, Vec<Vec<f64>>)> {
    let bad = |why: &str| Error::LayoutMismatch(format!("feature file: {why}"));
    if bytes.len() < 24 || &bytes[..8] != BINARY_MAGIC {
        return Err(bad("missing magic header"));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let width = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
    let expected = n
        .checked_mul(width + 1)
        .and_then(|c| c.checked_mul(8))
        .and_then(|c| c.checked_add(24))
        .ok_or_else(|| bad("size overflow"))?;
    if bytes.len() != expected {
        return Err(bad("truncated or oversized payload"));
    }
    let mut doubles = bytes[24..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let mut labels = Vec::with_capacity(n);
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        labels.push(doubles.next().unwrap() as i8);
        rows.push(doubles.by_ref().take(width).collect());
    }
    Ok((labels, rows))
}

pub fn write_features_binary(
    path: impl AsRef<Path>,
    labels: &[i8],
    rows: &[Vec<f64>],
) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_features_binary(labels, rows)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_features_binary(path: impl AsRef<Path>) -> Result<(Vec<i8>, Vec<Vec<f64>>)> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_features_binary(&bytes)
}
