//! Endemic equilibria: the trait operator eigenproblem, the endemicity
//! function `H`, root finding, and stationary densities.

pub mod find;
pub mod h_function;
pub mod operator;
pub mod quad;
pub mod stationary;

pub use find::{
    find_equilibria, uniqueness_condition, EquilibriumError, EquilibriumReport,
    EquilibriumVerdict, RootInfo,
};
pub use h_function::{HError, HFunction};
pub use operator::{solve_s_star, KernelOperator, OperatorError, SStarSolution};
pub use quad::{DecayKernel, QuadError};
pub use stationary::StationaryDensity;
