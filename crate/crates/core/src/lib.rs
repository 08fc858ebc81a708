//! Five-compartment tuberculosis transmission model with optimal intervention
//! control, PRCC sensitivity analysis and cost-effectiveness reporting.
//!
//! Compartments are uninfected `U`, latent `T_l`, diseased `T_d`, under
//! treatment `T_t` and recovered `R`. Time is measured in months.

pub mod cli;
pub mod control;
pub mod econ;
pub mod error;
pub mod integrator;
pub mod model;
pub mod sensitivity;

pub use error::{Error, Result};
pub use integrator::{TimeGrid, Trajectory};
pub use model::{ModelParams, ParamId, StateVec};
