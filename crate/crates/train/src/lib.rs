// SPDX-License-Identifier: Apache-2.0

//! Multistage conversion of small dense networks into LUT networks.
//!
//! Dense layers are substituted with LUT layers whose codebooks come from
//! k-means on calibration activations. Training then runs a centroid-only
//! stage followed by a joint stage, using straight-through gradients and a
//! reconstruction penalty that is the only gradient source for centroids.

pub mod checkpoint;
pub mod convert;
pub mod data;
pub mod error;
mod linalg;
pub mod net;
pub mod stage;

pub use convert::{multistage, random_codebooks, single_stage, substitute, CodebookInit, Conversion, Pipeline};
pub use data::{digits, two_moons, Dataset};
pub use error::{Result, TrainError};
pub use linalg::checksum;
pub use net::{backward_ste, reconstruction_loss, Gradients, Layer, LayerGrad, LossHead, Targets, TinyNet};
pub use stage::{quick_accuracy_probe, train_stage, Stage, StageReport, TrainConfig, DEFAULT_LAMBDA_RE};
