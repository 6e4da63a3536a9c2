//! C ABI over `atp-core`.
//!
//! Every fallible function returns an [`AtpStatus`]; on failure the message
//! is available from [`atp_last_error`] on the same thread. Handles are
//! opaque, created by `*_new`/`*_load` and released with the matching
//! `*_free`. Images cross the boundary as row-major `double` buffers.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use atp_core::metrics::{scores, ConfusionMatrix};
use atp_core::{
    atp_transform, awgn, block_missing, diffuse, pixel_missing, Anchor, DiffusionParams, Error,
    FeatureExtractor, GrayImage, SvmModel, ThresholdTable,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Dimension = 5,
    Threshold = 6,
    Model = 7,
    LayoutMismatch = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Feature extractor bound to a working size, diffusion settings and a threshold table.
pub struct AtpExtractor {
    inner: FeatureExtractor,
}

/// Trained classifier.
pub struct AtpModel {
    inner: SvmModel,
}

/// Detection scores; undefined values (zero denominators) are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct AtpScores {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> AtpStatus {
    match err.root() {
        Error::FileNotFound(_) | Error::Io { .. } => AtpStatus::Io,
        Error::UnsupportedFormat(_) | Error::CorruptImage { .. } | Error::Json(_) => {
            AtpStatus::Format
        }
        Error::InvalidDimensions { .. }
        | Error::DimensionTooSmall { .. }
        | Error::DimensionMismatch(_)
        | Error::BlockTooLarge { .. }
        | Error::LengthMismatch { .. } => AtpStatus::Dimension,
        Error::DegenerateReference(_) | Error::EmptyThresholds => AtpStatus::Threshold,
        Error::SingleClassData => AtpStatus::Model,
        Error::LayoutMismatch(_) | Error::LayoutHashMismatch { .. } => AtpStatus::LayoutMismatch,
        _ => AtpStatus::InvalidArgument,
    }
}

/// Runs `f`, recording errors and panics for [`atp_last_error`].
fn guard(f: impl FnOnce() -> Result<(), (AtpStatus, String)>) -> AtpStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AtpStatus::Ok,
        Ok(Err((status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            AtpStatus::Panic
        }
    }
}

fn lib(err: Error) -> (AtpStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (AtpStatus, String) {
    (AtpStatus::NullPointer, format!("{what} is null"))
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, (AtpStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map(PathBuf::from).map_err(|_| {
        (
            AtpStatus::InvalidArgument,
            format!("{what} is not valid UTF-8"),
        )
    })
}

unsafe fn image_arg(
    pixels: *const f64,
    rows: usize,
    cols: usize,
) -> Result<GrayImage, (AtpStatus, String)> {
    if pixels.is_null() {
        return Err(null("pixels"));
    }
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| (AtpStatus::Dimension, "rows * cols overflows".to_string()))?;
    GrayImage::new(rows, cols, std::slice::from_raw_parts(pixels, len).to_vec()).map_err(lib)
}

unsafe fn write_out<T: Copy>(
    out: *mut T,
    out_len: usize,
    values: &[T],
) -> Result<(), (AtpStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    if out_len < values.len() {
        return Err((
            AtpStatus::BufferTooSmall,
            format!(
                "output buffer holds {out_len} values, need {}",
                values.len()
            ),
        ));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    Ok(())
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next `atp_*` call on the same thread.
#[no_mangle]
pub extern "C" fn atp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn atp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

unsafe fn store_extractor(
    out: *mut *mut AtpExtractor,
    build: impl FnOnce() -> Result<FeatureExtractor, (AtpStatus, String)>,
) -> AtpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let inner = build()?;
        *out = Box::into_raw(Box::new(AtpExtractor { inner }));
        Ok(())
    })
}

/// Extractor for `rows x cols` images with default diffusion and the bundled thresholds.
#[no_mangle]
pub unsafe extern "C" fn atp_extractor_new_bundled(
    rows: usize,
    cols: usize,
    out: *mut *mut AtpExtractor,
) -> AtpStatus {
    store_extractor(out, || {
        FeatureExtractor::new(
            (rows, cols),
            DiffusionParams::default(),
            ThresholdTable::bundled(),
        )
        .map_err(lib)
    })
}

/// Extractor using a threshold table JSON file and explicit diffusion settings.
#[no_mangle]
pub unsafe extern "C" fn atp_extractor_new(
    rows: usize,
    cols: usize,
    thresholds_path: *const c_char,
    sigma: f64,
    iterations: usize,
    step: f64,
    out: *mut *mut AtpExtractor,
) -> AtpStatus {
    store_extractor(out, || {
        let table =
            ThresholdTable::load(path_arg(thresholds_path, "thresholds_path")?).map_err(lib)?;
        let diffusion = DiffusionParams {
            sigma,
            iterations,
            step,
        };
        FeatureExtractor::new((rows, cols), diffusion, table).map_err(lib)
    })
}

/// Number of features produced per image, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn atp_extractor_feature_len(extractor: *const AtpExtractor) -> usize {
    extractor.as_ref().map_or(0, |e| e.inner.feature_len())
}

/// Extracts the feature vector of a working-size image into `out`.
#[no_mangle]
pub unsafe extern "C" fn atp_extractor_extract(
    extractor: *const AtpExtractor,
    pixels: *const f64,
    rows: usize,
    cols: usize,
    out: *mut f64,
    out_len: usize,
) -> AtpStatus {
    guard(|| {
        let ex = extractor.as_ref().ok_or_else(|| null("extractor"))?;
        let img = image_arg(pixels, rows, cols)?;
        let features = ex.inner.extract(&img).map_err(lib)?;
        write_out(out, out_len, &features.values)
    })
}

#[no_mangle]
pub unsafe extern "C" fn atp_extractor_free(extractor: *mut AtpExtractor) {
    if !extractor.is_null() {
        drop(Box::from_raw(extractor));
    }
}

/// Loads a model JSON file.
#[no_mangle]
pub unsafe extern "C" fn atp_model_load(path: *const c_char, out: *mut *mut AtpModel) -> AtpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let inner = SvmModel::load(path_arg(path, "path")?).map_err(lib)?;
        *out = Box::into_raw(Box::new(AtpModel { inner }));
        Ok(())
    })
}

/// Feature dimension the model expects, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn atp_model_dim(model: *const AtpModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.dim())
}

/// Fails with the layout-mismatch status unless the model was trained on this extractor's layout.
#[no_mangle]
pub unsafe extern "C" fn atp_model_check_extractor(
    model: *const AtpModel,
    extractor: *const AtpExtractor,
) -> AtpStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let ex = extractor.as_ref().ok_or_else(|| null("extractor"))?;
        m.inner.check_layout(&ex.inner.layout_hash()).map_err(lib)
    })
}

/// Classifies one feature vector: `label` is +1 (fake) or -1 (real), `score` the raw decision value.
#[no_mangle]
pub unsafe extern "C" fn atp_model_predict(
    model: *const AtpModel,
    features: *const f64,
    len: usize,
    label: *mut i32,
    score: *mut f64,
) -> AtpStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if features.is_null() {
            return Err(null("features"));
        }
        let (l, s) = m
            .inner
            .predict(std::slice::from_raw_parts(features, len))
            .map_err(lib)?;
        if !label.is_null() {
            *label = l as i32;
        }
        if !score.is_null() {
            *score = s;
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn atp_model_free(model: *mut AtpModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Perona-Malik diffusion of a `rows x cols` image into `out` (same size).
#[no_mangle]
pub unsafe extern "C" fn atp_diffuse(
    pixels: *const f64,
    rows: usize,
    cols: usize,
    sigma: f64,
    iterations: usize,
    step: f64,
    out: *mut f64,
    out_len: usize,
) -> AtpStatus {
    guard(|| {
        let img = image_arg(pixels, rows, cols)?;
        let res = diffuse(
            &img,
            &DiffusionParams {
                sigma,
                iterations,
                step,
            },
        )
        .map_err(lib)?;
        write_out(out, out_len, res.data())
    })
}

/// ATP code image of one subband for `k` thresholds.
#[no_mangle]
pub unsafe extern "C" fn atp_pattern(
    pixels: *const f64,
    rows: usize,
    cols: usize,
    thresholds: *const f64,
    k: usize,
    out: *mut u32,
    out_len: usize,
) -> AtpStatus {
    guard(|| {
        let img = image_arg(pixels, rows, cols)?;
        let ts: &[f64] = if k == 0 {
            &[]
        } else if thresholds.is_null() {
            return Err(null("thresholds"));
        } else {
            std::slice::from_raw_parts(thresholds, k)
        };
        let p = atp_transform(&img, ts).map_err(lib)?;
        write_out(out, out_len, p.data())
    })
}

/// Zeroes each pixel independently with probability `rate`.
#[no_mangle]
pub unsafe extern "C" fn atp_pixel_missing(
    pixels: *const f64,
    rows: usize,
    cols: usize,
    rate: f64,
    seed: u64,
    out: *mut f64,
    out_len: usize,
) -> AtpStatus {
    guard(|| {
        let img = image_arg(pixels, rows, cols)?;
        let res = pixel_missing(&img, rate, seed).map_err(lib)?;
        write_out(out, out_len, res.data())
    })
}

/// Zeroes a centered `height x width` block.
#[no_mangle]
pub unsafe extern "C" fn atp_block_missing(
    pixels: *const f64,
    rows: usize,
    cols: usize,
    height: usize,
    width: usize,
    out: *mut f64,
    out_len: usize,
) -> AtpStatus {
    guard(|| {
        let img = image_arg(pixels, rows, cols)?;
        let res = block_missing(&img, height, width, Anchor::Centered).map_err(lib)?;
        write_out(out, out_len, res.data())
    })
}

/// Adds white Gaussian noise at `snr_db` relative to the mean-square signal power.
#[no_mangle]
pub unsafe extern "C" fn atp_awgn(
    pixels: *const f64,
    rows: usize,
    cols: usize,
    snr_db: f64,
    seed: u64,
    out: *mut f64,
    out_len: usize,
) -> AtpStatus {
    guard(|| {
        let img = image_arg(pixels, rows, cols)?;
        let res = awgn(&img, snr_db, seed).map_err(lib)?;
        write_out(out, out_len, res.data())
    })
}

/// Accuracy, precision, recall and F1 from confusion counts (positive class: fake).
#[no_mangle]
pub unsafe extern "C" fn atp_scores(
    tp: u64,
    tn: u64,
    fp: u64,
    fneg: u64,
    out: *mut AtpScores,
) -> AtpStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let s = scores(&ConfusionMatrix {
            tp,
            tn,
            fp,
            fn_: fneg,
        });
        let v = |x: atp_core::Score| x.value().unwrap_or(f64::NAN);
        *out = AtpScores {
            accuracy: v(s.accuracy),
            precision: v(s.precision),
            recall: v(s.recall),
            f1: v(s.f1),
        };
        Ok(())
    })
}
