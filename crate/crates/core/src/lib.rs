//! Simulation of finite-range interacting particle systems on `Z^d` through
//! per-site Poisson event streams, with continuum deposition models embedded
//! into unit cubes and Monte Carlo drivers for spatial limit theorems.

pub mod engine;
pub mod error;
pub mod functionals;
pub mod lattice;
pub mod stats;
pub mod zoo;

pub use error::{Error, Result};
