//! Discretized model objects and validation of the standing assumptions.
//!
//! The trait space is a finite weighted atom set; ages live on a uniform
//! grid shared by the simulator, the PDE solver, and the equilibrium
//! quadratures. Continuous trait spaces are supported only through
//! user-provided finite discretizations (quadrature nodes plus weights).

pub mod curve;
pub mod density;
pub mod grid;
pub mod kernel;
pub mod spec;
pub mod traits;
pub mod validate;

pub use curve::{eval_curve, Curve, CurveError, CurveForm, Segment, StepCurve};
pub use density::InitialDensity;
pub use grid::AgeGrid;
pub use kernel::MemoryKernel;
pub use spec::ModelSpec;
pub use traits::TraitSpace;
pub use validate::{
    gamma_star, validate_model, AssumptionReport, CheckOutcome, GammaStarError, GammaStarOptions,
};

use thiserror::Error;

/// Structural errors raised while assembling model objects.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("trait weights must be strictly positive and sum to 1 (|sum-1| = {0:.3e})")]
    BadWeights(f64),
    #[error("trait identifiers must be unique (duplicate: {0})")]
    DuplicateAtom(String),
    #[error("trait space must contain at least one atom")]
    EmptyTraitSpace,
    #[error("age grid: {0}")]
    BadGrid(String),
    #[error("kernel shape {rows}x{cols} does not match {atoms} atoms")]
    KernelShape {
        rows: usize,
        cols: usize,
        atoms: usize,
    },
    #[error("kernel entries must be finite and nonnegative (row {row}, col {col})")]
    KernelEntry { row: usize, col: usize },
    #[error("{what} needs one curve per trait atom ({got} for {want} atoms)")]
    CurveCount {
        what: &'static str,
        got: usize,
        want: usize,
    },
    #[error("lambda_star must be positive and finite, got {0}")]
    BadLambdaStar(f64),
    #[error("initial density shape {rows}x{cols} does not match grid {want_rows} x atoms {want_cols}")]
    DensityShape {
        rows: usize,
        cols: usize,
        want_rows: usize,
        want_cols: usize,
    },
    #[error("initial density must be nonnegative and finite (cell {cell}, atom {atom})")]
    DensityEntry { cell: usize, atom: usize },
    #[error("initial density mass {0} is not 1 within 1e-8")]
    DensityMass(f64),
}
