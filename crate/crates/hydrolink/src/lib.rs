//! Configuration, experiments, file formats and the command line for the
//! `hydrolink-core` simulator.

pub mod cli;
pub mod config;
mod error;
pub mod experiment;
pub mod io;

pub use config::Config;
pub use error::{Error, Result};
