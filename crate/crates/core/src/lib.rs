pub mod error;
pub mod experiment;
pub mod meter;
pub mod photonics;
pub mod selftest;
pub mod statekit;
pub mod weakval;

pub use error::{Error, Result};
