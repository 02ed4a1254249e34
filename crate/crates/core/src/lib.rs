//! Survey Propagation toolkit for random 3-SAT / MAX-E-3-SAT.
//!
//! Everything in this crate is pure computation over in-memory data and runs
//! under `no_std` with `alloc`. File formats, the experiment harness and the
//! command line live in the `deepsp` crate.
//!
//! The pipeline pieces:
//!
//! * [`formula`]: CNF model, random ensemble generator, assignment evaluation.
//! * [`graph`]: factor-graph adjacency with signed edges.
//! * [`sp`]: Survey Propagation messages, sweeps, marginals, convergence error.
//! * [`walksat`]: MaxWalkSat local search.
//! * [`sid`]: survey-inspired decimation.
//! * [`mlp`]: the 4-40-40-40-1 sigmoid classifier, trained with Adam.
//! * [`pipeline`]: one-shot DeepSP assignment from SP features.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

pub mod error;
pub mod formula;
pub mod graph;
pub mod mlp;
pub mod pipeline;
mod prefetch;
pub mod rng;
pub mod sid;
pub mod sp;
pub mod stats;
pub mod walksat;

pub use error::{Error, Result};
pub use formula::{Assignment, CnfFormula, Evaluation, Literal};
pub use graph::FactorGraph;
pub use mlp::{MlpModel, Sample, TrainConfig};
pub use pipeline::{DeepSpConfig, DeepSpResult, FeatureVector};
pub use sid::{SidConfig, SidOutcome, SidStatus};
pub use sp::{SpMarginals, SpParams, SpRunOutcome, SurveyState};
pub use walksat::{WalkSatConfig, WalkSatResult};
