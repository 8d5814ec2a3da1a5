//! Command-line driver for `fourier-debias`: configuration layering, the
//! rayon trial executor, CSV and SVG artifacts, and the four subcommands.

// `!(a > b)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod executor;
pub mod files;
pub mod manifest;
pub mod options;
pub mod report;
pub mod svg;

pub use error::{CliError, CliResult};
pub use executor::RayonExecutor;
