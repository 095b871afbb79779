//! Numerical laboratory for `u_t + (-Δ)^s u = f(u)` with ignition and
//! monostable reactions: fractional operators, explicit barriers, residual
//! certification, a pseudospectral solver and level-set tracking.

pub mod barriers_ignition;
pub mod barriers_monostable;
pub mod error;
pub mod fractional_operator;
pub mod front_tracking;
pub mod reactions;
pub mod residual_verifier;
pub mod solver;

pub use error::{LabError, Result};
