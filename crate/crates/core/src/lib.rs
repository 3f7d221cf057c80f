pub mod eigen;
pub mod experiment;
pub mod error;
pub mod graphops;
pub mod isotonic;
pub mod metrics;
pub mod selfcheck;
pub mod sga;
pub mod sgl;
pub mod sgla;
pub mod solver;
pub mod synth;

pub use error::{Error, Result};
