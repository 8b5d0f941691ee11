pub mod color;
pub mod colornet;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod metrics;
pub mod scaling;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
