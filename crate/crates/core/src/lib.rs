//! Random Cantor-series measures whose supports avoid 3-term arithmetic
//! progressions, with exact Fourier, regularity and progression checks.

pub mod ap_verifier;
pub mod cantor_tree;
pub mod cli;
pub mod discrete_ap;
pub mod error;
pub mod exponent;
pub mod fourier;
pub mod regularity;
pub mod svg;

pub use error::{Error, Result};
