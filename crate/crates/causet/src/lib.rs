//! Causal analysis of continuous-time event histories.
//!
//! The crate is organised around one workflow: describe a system of counting
//! processes and baseline variables as a local independence graph, decide
//! graphically whether the effect of an intensity intervention is identified
//! from observable (possibly censored) data, and then estimate that effect by
//! continuous-time re-weighting.
//!
//! - [`graph`] — local independence graphs and structural validation.
//! - [`separation`] — δ-separation, eliminability, independent censoring and
//!   the combined identifiability check.
//! - [`simulation`] — counting-process simulation by thinning, interventions,
//!   and built-in benchmark systems with closed-form behaviour.
//! - [`weighting`] — likelihood contributions, exact and data-driven
//!   likelihood-ratio weights, Nelson–Aalen estimation.
//! - [`estimation`] — weighted Kaplan–Meier curves, contrasts and bootstrap
//!   confidence bands.
//! - [`pipeline`] — the end-to-end analysis used by the CLI.

pub mod estimation;
pub mod graph;
pub mod numeric;
pub mod pipeline;
pub mod separation;
pub mod simulation;
pub mod weighting;
