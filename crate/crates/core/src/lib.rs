//! Age- and trait-structured epidemic dynamics with memory of the last
//! infection.
//!
//! The population is described by pairs `(a, θ)` where `a` is the age of
//! infection (time since the last infection) and `θ` is a trait drawn at each
//! infection from a memory kernel `K(θ_old, ·)`. Individuals carry
//! deterministic infectivity `λ(a, θ)` and susceptibility `γ(a, θ)` curves
//! between infections and interact through the population force of infection.
//!
//! The crate provides:
//!
//! - [`model`]: discretized model objects (trait space, curves, kernel,
//!   initial density) and validation of the standing assumptions;
//! - [`sim`]: exact event-driven simulation of the N-individual system by
//!   Poisson thinning, plus martingale diagnostics;
//! - [`pde`]: a conservative method-of-characteristics solver for the
//!   large-population transport equation;
//! - [`equilibrium`]: the trait operator eigenproblem, the endemicity
//!   function `H`, endemic roots, and the stationary density;
//! - [`stability`]: the memory-free characteristic equation and an
//!   argument-principle root scan;
//! - [`scenarios`]: builders for SIS-type and vaccination models with
//!   closed-form cross-checks;
//! - [`io`]: the model-file format and plain-text exports;
//! - [`metrics`]: measure distances used by convergence diagnostics.

pub mod equilibrium;
pub mod io;
pub mod math;
pub mod metrics;
pub mod model;
pub mod pde;
pub mod scenarios;
pub mod sim;
pub mod stability;

pub use model::{
    AgeGrid, AssumptionReport, Curve, InitialDensity, MemoryKernel, ModelSpec, TraitSpace,
};
