//! Counting-process simulation.
//!
//! A [`SystemSpec`] couples a validated local independence graph with
//! baseline samplers and one bounded intensity per process. Data generation
//! is by thinning with a global candidate queue, so evaluators always see
//! the true strict past; interventions swap exactly one local characteristic.

mod builtin;
mod dataset;
mod hazard;
mod intensity;
pub mod rng;
mod spec;
mod spec_file;
mod thinning;

pub use builtin::{
    example_4_3, example_4_3_graph, example_4_3_intervened_hazard, example_4_3_lambda1,
    example_4_3_marginal_hazard, hpv_graph, hpv_scenario, hpv_test_intensity, BuiltinError,
    HpvParams, EXAMPLE_4_3_N1, EXAMPLE_4_3_N2, EXAMPLE_4_3_U, HPV_CYTOLOGY, HPV_DISEASE, HPV_NC,
    HPV_NX, HPV_NY, HPV_PROGRESSION, HPV_RESULT, HPV_TYPE,
};
pub use dataset::{DatasetIoError, DatasetMeta, EventDataset, SubjectPath};
pub use hazard::{estimate_marginal_hazard, HazardError, KernelHazard};
pub use intensity::{
    DynIntensity, FamilyError, FamilyIntensity, Feature, FnIntensity, History, Intensity,
    IntensityFamily, LogLinearTerm, ZeroIntensity,
};
pub use spec::{intervene, scaled_intensity, BaselineSampler, InterveneError, SpecError, SystemSpec};
pub use spec_file::{BaselineEntry, IntensityEntry, SpecFile, SpecFileError};
pub use thinning::{simulate_system, SimError};
