// SPDX-License-Identifier: MIT
//! Causal requirements toolkit.
//!
//! Declared domain knowledge is written down as a causal DAG (see [`dsl`]).
//! From it the toolkit derives:
//!
//! * graph checks: acyclicity, observability of the variables needed to block
//!   biasing paths ([`graph`], [`analysis`]);
//! * testable conditional-independence implications ([`implications`]);
//! * data, model, test-case and runtime-monitor requirements ([`derivation`]);
//! * synthetic data from attached structural equations, and statistical
//!   checks of the implications against data ([`scm`]);
//! * streaming context-shift monitors ([`monitor`]).
//!
//! The `causal-spec` binary exposes all of it on the command line and as a
//! local JSON-over-HTTP service ([`service`]).

pub mod analysis;
pub mod api;
pub mod derivation;
pub mod dsl;
mod error;
pub mod graph;
pub mod implications;
pub mod monitor;
pub mod scm;
pub mod service;

pub use error::Error;

pub use analysis::{
    backdoor_sets, classify_exposure_paths, d_separated, enumerate_paths, find_instruments,
    observability_gaps, AdjustmentSet, ExposurePaths, PathReport, SeparationQuery,
};
pub use dsl::{parse, serialize, Format, ModelDocument};
pub use graph::{CausalDag, NodeSet};
pub use implications::{
    implied_independencies, local_markov_basis, verify, CiStatement, Provenance,
};

/// The bundled motor-diagnostics model.
pub const MOTOR_FIXTURE: &str = include_str!("../../../fixtures/motor.cdag");
