//! Nonconvex low-rank matrix recovery: problem generators, spectral
//! initializers, gradient and alternating solvers, and landscape tools.

pub mod direct;
pub mod error;
pub mod gd;
pub mod landscape;
pub mod linalg;
pub mod metrics;
pub mod point;
pub mod problems;
pub mod rng;
pub mod serial;
pub mod spectral;

pub use error::{Error, Result};
pub use linalg::{CMat, CVector, Mat, SubspaceEstimate, Vector};
pub use point::FactorPoint;
pub use problems::{Family, ProblemInstance};
pub use rng::Rng;
