//! Semi-supervised semantic segmentation at desk scale.
//!
//! The crate implements a mean-teacher training loop for low-contrast
//! segmentation: a teacher network (EMA of the student) produces pseudo-labels
//! on weakly perturbed unlabeled images, a confidence-based dynamic filter
//! (CDF) keeps only reliable pixels with per-class adaptive thresholds, and a
//! low-contrast contrastive loss (LCC) sharpens the embedding space using
//! inter-class (ICE) and boundary (BCE) pixel selection.
//!
//! Modules map onto the pipeline stages:
//!
//! - [`data`]: shared tensor types and validation.
//! - [`augment`]: weak (geometric) and strong (intensity + CutMix) views.
//! - [`net`]: the reference encoder-decoder and EMA/checkpoint plumbing.
//! - [`pseudo`]: dynamic-threshold pseudo-label filtering and utilization.
//! - [`lcc`]: projection head, pixel selection, and the contrastive loss.
//! - [`trainer`]: losses, the training step, and full runs.
//! - [`datasets`]: synthetic low-contrast data, folder ingestion, splits.
//! - [`metrics`]: IoU / DSC / NSD evaluation.
//! - [`cli`]: the `loco` command-line interface.

pub mod augment;
pub mod cli;
pub mod data;
pub mod datasets;
pub mod error;
pub mod lcc;
pub mod metrics;
pub mod net;
pub mod pseudo;
pub mod trainer;

pub use error::{Error, Result};
