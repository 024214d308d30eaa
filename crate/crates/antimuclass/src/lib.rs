//! File formats, scene synthesis, parameter sweeps and the command line for
//! the [`antimuclass_core`] classifier.

pub mod bundle;
pub mod config;
mod error;
pub mod model_io;
pub mod palette;
pub mod pnm;
pub mod report;
pub mod sweep;
pub mod synth;

pub use antimuclass_core as core;
pub use error::{Error, Result};
