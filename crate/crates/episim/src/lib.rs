//! File formats, configuration and command line for `episim-core`.
//!
//! - [`config`]: the flat `key = value` experiment configuration.
//! - [`formats`]: CSV reports, network model files and model directories.
//! - [`output`]: writes every artifact of an end-to-end experiment.

pub mod config;
pub mod formats;
pub mod output;
