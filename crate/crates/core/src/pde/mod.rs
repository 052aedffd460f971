//! Deterministic solver for the large-population limit PDE.

pub mod reconstruct;
pub mod residual;
pub mod solver;

pub use reconstruct::reconstruct_density;
pub use residual::{mass_identity_residual, weak_form_residual, TestFunction};
pub use solver::{
    solve_pde, solve_pde_with, DensityState, PdeConfig, PdeError, PdeSolution, StepView,
};
