//! Batch driver for the adversarial clustering library: CSV ingestion, TOML
//! configuration, JSON reports, SVG plots and parameter sweeps.

pub mod config;
pub mod error;
pub mod ingest;
pub mod pipeline;
pub mod report;
pub mod svg;

pub use config::{Job, RunConfig, SweepKind};
pub use error::{CliError, Result};
pub use ingest::{ingest_csv, write_csv, IngestOptions, Ingested};
pub use pipeline::execute;
