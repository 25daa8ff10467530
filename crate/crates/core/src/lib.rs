pub mod error;
pub mod gaussian;
pub mod kernel;
pub mod operators;
pub mod par;
pub mod quad;
pub mod rng;
pub mod solver;
pub mod stats;

pub use error::{Error, Result};
