//! Fingerprint forgery detection with adaptive thresholding patterns.
//!
//! The feature pipeline runs anisotropic diffusion, a three-level Haar
//! pyramid and the ATP descriptor over the resulting subbands; a linear SVM
//! classifies the concatenated vector. The [`harness`] module evaluates the
//! classifier on test images with pixel loss, block loss or additive noise.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atp;
pub mod config;
pub mod dataset;
pub mod diffusion;
pub mod distortions;
pub mod error;
pub mod harness;
pub mod image;
pub mod metrics;
pub mod pipeline;
pub mod svm;
pub mod synth;
pub mod wavelet;

pub use atp::{atp_transform, derive_thresholds, PatternImage, ThresholdTable};
pub use config::{ExperimentConfig, SweepEntry, ThresholdSource};
pub use diffusion::{diffuse, diffuse_step, DiffusionParams};
pub use distortions::{awgn, block_missing, pixel_missing, Anchor, Distortion, DistortionSpec};
pub use error::{Error, Result};
pub use harness::{run_experiment, EvalReport, EvalRow};
pub use image::{load_image, resize_to, save_image, GrayImage};
pub use metrics::{confusion, scores, ConfusionMatrix, Score, Scores};
pub use pipeline::{FeatureExtractor, FeatureVector};
pub use svm::{train, Kernel, SvmModel, SvmParams};
pub use synth::Sample;
pub use wavelet::{decompose3, haar_dwt2, haar_idwt2, SubbandSet, Subbands};
