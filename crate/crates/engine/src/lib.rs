//! File formats, the `recall` command line and the HTTP study-session
//! service built on [`recall_core`].

pub mod cli;
pub mod error;
pub mod files;
pub mod plot;
pub mod report;
pub mod service;

pub use error::{EngineError, Result};
pub use recall_core;
