//! File formats, annotation store, HTTP API and command implementations
//! around `qaleak-core`.

pub mod commands;
pub mod embeddings;
pub mod error;
pub mod io;
pub mod predictions;
pub mod report;
pub mod server;
pub mod store;

pub use error::{Error, Result};
