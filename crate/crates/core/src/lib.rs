//! Hydrodynamic interaction graph neural network: a learned many-body mobility
//! for overdamped suspensions of identical spheres, with an analytic oracle for
//! training data and checks.

pub mod dynamics;
pub mod error;
pub mod graph;
pub mod oracle;
pub mod surrogate;
pub mod training;

pub use error::{Error, Result};
