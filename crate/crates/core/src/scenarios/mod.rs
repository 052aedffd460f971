//! Builders and closed-form oracles for the vaccination and SIS-type
//! models, emitting specs consumable by every other module.

pub mod one_shot;
pub mod renewal;
pub mod sis;

pub use one_shot::{
    build_one_shot, one_shot_regime, BuiltOneShot, OneShotAtom, OneShotClosedForm, OneShotError,
    OneShotParams, OneShotRegime, RegimeReport,
};
pub use renewal::{build_renewal, BuiltRenewal, InfectionAtom, RenewalError, RenewalParams};
pub use sis::{build_sis, BuiltSis, SisScenario};
