//! Exact stochastic simulation of the N-individual system.

pub mod engine;
pub mod ensemble;
pub mod martingale;
pub mod stream;

pub use engine::{
    empirical_force, empirical_measure, simulate, simulate_with_stream, Event, Histogram,
    InitMode, PopulationState, SimConfig, SimError, Trajectory,
};
pub use ensemble::run_replicas;
pub use martingale::{
    martingale_residual, trajectory_weak_residual, z_path, MartingaleEstimate, TestFn,
};
pub use stream::{ChaChaStream, PermutedPicks, ProposalStream};
