//! Dataset ingestion from the `root/{real,fake}/*.{pgm,bmp,png}` layout.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{load_image, resize_to};
use crate::synth::{Sample, FAKE, REAL};

const EXTENSIONS: [&str; 3] = ["pgm", "bmp", "png"];

fn image_files(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(Error::MissingClassDirectory(dir.to_path_buf()));
    }
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let supported = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()));
        if supported && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::NoImagesFound(dir.to_path_buf()));
    }
    Ok(files)
}

/// Loads `root/real` then `root/fake`, each in lexicographic order, resizing
/// every image to `working_size x working_size`.
pub fn ingest(root: impl AsRef<Path>, working_size: usize) -> Result<Vec<Sample>> {
    let root = root.as_ref();
    let real = image_files(&root.join("real"))?;
    let fake = image_files(&root.join("fake"))?;
    let labeled: Vec<(PathBuf, i8)> = real
        .into_iter()
        .map(|p| (p, REAL))
        .chain(fake.into_iter().map(|p| (p, FAKE)))
        .collect();

    let loaded: Vec<Result<Sample>> = labeled
        .par_iter()
        .map(|(path, label)| {
            let img = load_image(path)?;
            let image = resize_to(&img, working_size, working_size)?;
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok(Sample {
                name,
                label: *label,
                image,
            })
        })
        .collect();

    let mut samples = Vec::with_capacity(loaded.len());
    let mut failures = Vec::new();
    for r in loaded {
        match r {
            Ok(s) => samples.push(s),
            Err(e) => failures.push(e),
        }
    }
    if !failures.is_empty() {
        return Err(Error::LoadFailures(failures));
    }
    Ok(samples)
}
