//! Synthetic CT lesion generation and evaluation toolkit.
//!
//! The crate covers the full pipeline for producing procedurally generated
//! lesion datasets from healthy template CT scans:
//!
//! - [`volume`]: canonical 3D volumes, reorientation, 1 mm resampling,
//!   sliding-window tilings, and spacing-aware binary morphology.
//! - [`io`]: NIfTI-1 reading and writing (`.nii` / `.nii.gz`).
//! - [`curation`]: template-scan selection rules (scan range, contrast
//!   class, healthy-organ filtering, per-lesion modality pools).
//! - [`lesion`]: the structured 8-attribute lesion schema, per-type
//!   attribute sampling, and report rendering/label encoding.
//! - [`synth`]: turns a sampled lesion spec plus a template volume into an
//!   image / label-map / report triple.
//! - [`refine`]: diffusion-style partial denoising orchestration with a
//!   pluggable noise predictor.
//! - [`stats`]: evaluation metrics (Dice, AUC, macro-F1), bootstrap CIs,
//!   exact/approximate one-sided Wilcoxon, paired permutation tests, and
//!   k-fold splitting.

pub mod curation;
pub mod error;
pub mod field;
pub mod io;
pub mod lesion;
pub mod refine;
pub mod seed;
pub mod stats;
pub mod synth;
pub mod volume;

pub use error::{Error, Result};
