//! File formats, experiment suites and the command-line front end for
//! [`prdkit_core`].

pub mod cli;
pub mod embeddings;
pub mod error;
pub mod experiments;
pub mod formats;
pub mod plot;
pub mod surrogate;

pub use error::{Error, Result};
pub use prdkit_core as core;
