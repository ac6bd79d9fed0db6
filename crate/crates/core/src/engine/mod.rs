//! Graphical-representation engine: event streams, thinning, windowed
//! dynamics, influence clusters and the exact generator oracle.

pub mod cluster;
pub mod config;
pub mod generator;
pub mod model;
pub mod simulate;
pub mod streams;

pub use cluster::{influence_cluster, reverse_reach, InfluenceCluster, Region};
pub use config::{Configuration, Patch, PatchLayout, PatchMut};
pub use generator::{generator_matrix, GeneratorMatrix, DEFAULT_STATE_CAP};
pub use model::{EnumerableModel, Initial, JumpModel, LabelRng, RunSeeds};
pub use simulate::{
    apply_event, coupled_windows, final_state, simulate_window, CoupledRun, EventKind, EventRecord,
    ProbeAgreement, Step, Trajectory, WindowSim,
};
pub use streams::{make_streams, Arrival, EventStream, RealizedStreams, StreamFamily};
