//! Concrete jump models: lattice growth models and continuum models embedded
//! into unit cubes.

pub mod continuum;
pub mod lattice;
pub mod points;

pub use continuum::{
    spaced_initial, ContinuumExclusion, MonolayerBdRolling1d, MultilayerBdStick, Rsa, UniformBall,
    VoterContinuum, VoterVariant, ZeroRange, ZeroRangeRates, CONTACT_TOL,
};
pub use lattice::{LatticeBd, LatticeBdRelaxed, SpinFlip};
pub use points::{embed, packing_cap, unembed, Mark, MarkedPoint, MarkedPointSet, PointCloud};
