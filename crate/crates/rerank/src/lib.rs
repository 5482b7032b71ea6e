//! File formats, a rayon executor, throughput measurement and the `rerank`
//! command-line tool built on [`rerank_core`].

pub use rerank_core as core;

mod config;
mod error;

pub mod cli;
pub mod exec;
pub mod formats;
pub mod manifest;
pub mod throughput;

pub use error::{Error, ExitStatus, Result};
