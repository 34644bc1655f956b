//! Threshold resonances of the Dirichlet Laplacian in slightly twisted
//! three-dimensional waveguides.

pub mod cross_section;
pub mod error;
pub mod kernels1d;
pub mod oracle;
pub mod resonance_solver;
mod quadrature;
pub mod threshold_asymptotics;
pub mod twist_profile;
pub mod validation;

pub use error::{Error, Result};
