//! File formats, run configuration and pipeline stages around
//! [`evimpact_core`], plus the `evimpact` command-line tool.

pub mod config;
mod error;
pub mod formats;
pub mod pipeline;

pub use config::RunConfig;
pub use error::{FormatError, Result};
