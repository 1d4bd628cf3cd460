//! Design and characterization toolkit for 1D nanobeam optomechanical
//! devices hosting solid-state spins: reduced-order phononic and photonic
//! models, a genetic design search, a spin-ensemble simulator, trace
//! fitting, and a coupling/cooling budget.

pub mod budget;
pub mod characterize;
pub mod consts;
pub mod device;
pub mod error;
pub mod fitting;
pub mod optimizer;
pub mod phononics;
pub mod photonics;
pub mod scalar;
pub mod seeding;
pub mod spinsim;
pub mod trace;

/// Concrete scalar used by the f64 pipeline.
pub type Scalar = f64;

pub use error::{Error, Result};
pub use scalar::Real;
