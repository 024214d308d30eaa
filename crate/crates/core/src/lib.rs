//! Hybrid clonal-selection / ant-foraging classifier for multiband raster pixels.
//!
//! The crate is `no_std` and only needs `alloc`. It carries every algorithmic
//! piece of the classifier:
//!
//! * [`features`]: per-pixel feature vectors (band value, neighborhood mean and
//!   standard deviation) and their fixed-width binary encoding.
//! * [`clonalg`]: a clonal-selection engine over bit-string antibodies with
//!   Hamming affinity.
//! * [`api`]: a continuous minimizer modelled on the foraging of
//!   *Pachycondyla apicalis* ants (hunting sites, patience, nest relocation).
//! * [`gngu`]: growing neural gas with a utility factor, used to place hidden
//!   units.
//! * [`rbf`]: the Gaussian RBF classifier with an "unknown" rejection
//!   threshold.
//! * [`pipeline`]: the end-to-end training and raster classification flow.
//! * [`evaluation`]: classification rate and confusion matrices.
//!
//! File formats, the CLI and the synthetic scene generator live in the
//! companion `antimuclass` crate.
#![no_std]
#![forbid(unsafe_code)]
// NaN must fail the range checks, so `!(x > 0.0)` is intended
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod api;
pub mod clonalg;
mod error;
pub mod evaluation;
pub mod features;
pub mod gngu;
mod linalg;
mod math;
pub mod pipeline;
pub mod rbf;
pub mod rng;

pub use error::{Error, Result};
pub use evaluation::{ConfusionMatrix, LabelMap, UNKNOWN, UNLABELED};
pub use features::{BitString, FeatureVector, Raster};
pub use pipeline::{RunConfig, TrainedModel, TrainingSet};
pub use rbf::{Prediction, RbfModel};
