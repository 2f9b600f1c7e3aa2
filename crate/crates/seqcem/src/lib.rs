//! Input/output and command-line layer over [`seqcem_core`]: schema and CSV
//! loading, score and report files, SVG figures, run configuration.

pub mod cli;
pub mod commands;
pub mod config;
pub mod csvio;
mod error;
pub mod output;
pub mod schema;
pub mod svg;

pub use error::{Error, Result};
pub use seqcem_core;
