//! Weighted survival-curve estimation, contrasts and bootstrap bands.

mod bootstrap;
mod km;
mod step_curve;
pub mod svg;

pub use bootstrap::{bootstrap_bands, resample, thin_grid, BootstrapError, ContrastBand};
pub use km::{contrast, cumulative_incidence, weighted_kaplan_meier, KmError, KmOutput};
pub use step_curve::StepCurve;
