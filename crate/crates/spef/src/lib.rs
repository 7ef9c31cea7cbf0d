//! Simulation harness, file formats and command-line plumbing around
//! [`spef_core`].
//!
//! [`sim`] generates the three simulation designs and summarizes the
//! estimators over replications, [`tables`] lists the configurations
//! behind each `table*` and `figure*` subcommand, [`config`] reads `key = value`
//! experiment files and [`output`] writes CSV tables with their JSON run
//! manifests.

mod error;

pub mod config;
pub mod input;
pub mod output;
pub mod sim;
pub mod tables;

pub use error::{Error, Result};
pub use spef_core as core;

/// Runs `f` on a dedicated rayon pool with `threads` workers, or on the
/// global pool when `threads` is `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Some(t) => Ok(rayon::ThreadPoolBuilder::new().num_threads(t).build()?.install(f)),
        None => Ok(f()),
    }
}
