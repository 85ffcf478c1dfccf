//! Continuous-time likelihood-ratio weights and the estimators feeding them.
//!
//! Exact weights come from a known base intensity and a predictable ratio
//! process; data-driven weights come from the windowed ratio of two
//! Nelson–Aalen estimators and an exact jump recursion. Both produce
//! [`WeightTrajectory`] paths with the left limits that product-limit
//! estimators consume.

mod ahw;
mod likelihood;
mod nelson_aalen;
mod theta;
mod weight_set;
mod weights;

pub use ahw::{estimate_weights_ahw, AhwDiagnostics, AhwError, AhwWeights};
pub use likelihood::{likelihood_contribution, LikelihoodError};
pub use nelson_aalen::{nelson_aalen, CumulativeHazard, NelsonAalenError};
pub use theta::{default_bandwidth, ThetaRatio};
pub use weight_set::WeightSet;
pub use weights::{
    combined_weights, exact_weights, ConstantRho, FnRho, Interpolation, RatioProcess,
    WeightError, WeightTrajectory,
};
