//! Adaptive vertex-centered finite volume method for 2D diffusion-convection-reaction problems.

pub mod adaptivity;
pub mod cli;
pub mod error;
pub mod estimator;
pub mod fvm;
pub mod mesh;
pub mod problem;

pub use error::{Error, Result};
