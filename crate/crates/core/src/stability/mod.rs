//! Local-stability analysis for memory-free models: the characteristic
//! equation, an argument-principle root scan, and the explicit SIS-type
//! criterion.

pub mod characteristic;
pub mod quadrature;
pub mod scan;
pub mod sis;
pub mod winding;

pub use characteristic::CharacteristicFn;
pub use quadrature::{AtomQuadrature, StabilityError};
pub use scan::{
    scan_roots, w_ess_bound, RootFinding, StabilityReport, StabilityVerdict, ROOT_ABS_TOL,
};
pub use sis::{sis_parameter_check, sis_reduced_characteristic, sis_v_real, SisParamCheck};
pub use winding::{newton_polish, winding_number, Region, WindingOutcome};
