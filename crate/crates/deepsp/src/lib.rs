//! File formats, experiment harness and command-line plumbing around
//! [`deepsp_core`].

pub mod config;
pub mod dimacs;
pub mod harness;
pub mod model_file;
pub mod output;

pub use deepsp_core as core;
pub use output::BUILD_ID;
