//! Two-locus Moran model with selection, recurrent mutation, and recombination.
//!
//! The population holds `N` chromosomes. Each carries one `a`/`A` allele and
//! one `b`/`B` allele, so every individual is one of four types:
//!
//! | type | alleles |
//! |------|---------|
//! | 0    | `ab`    |
//! | 1    | `Ab`    |
//! | 2    | `aB`    |
//! | 3    | `AB`    |
//!
//! Individuals with 0, 1, 2 beneficial alleles die at rates `1`, `1-s`,
//! `1-2s`; each death triggers an instant replacement drawn from the current
//! population, with probability `r` by recombination (the two loci come from
//! two independently chosen parents). Each `a` and each `b` allele mutates to
//! its beneficial form at rate `mu`.
//!
//! Crate layout:
//! - [`model`] — pure state types and transition/drift/growth rate functions,
//! - [`simulator`] — exact event-driven simulation to fixation,
//! - [`analytics`] — closed-form fixation-time prediction, regime
//!   classification, constant chain and phase schedule,
//! - [`stochastic`] — auxiliary closed forms (birth-death survival, biased
//!   ruin, logistic curves),
//! - [`fluid`] — deterministic fluid-limit integration and path comparison,
//! - [`rng`] — the splittable PRNG used by the simulator.

// Validation guards are written as negated comparisons (`!(x > 0.0)`) so
// that NaN inputs fall on the rejecting side.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod fluid;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod simulator;
pub mod stochastic;

pub use model::{ChannelRates, Parameters, PopulationState, SimplexPoint, SubtypeLedger};
pub use simulator::{ReplicateSummary, SimConfig, Termination};
