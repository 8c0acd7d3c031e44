//! Command-line harness for the tensor noise-filtration experiments.
//!
//! Commands run sweeps and checks from `tensor-denoise-core`, write
//! line-delimited JSON record files, a `summary.json` report and optional
//! SVG plots to the output directory.

pub mod config;
pub mod error;
pub mod plot;
pub mod records;
pub mod run;

pub use tensor_denoise_core as core;

pub use config::{resolve, Command, RunConfig};
pub use error::{CliError, Result};
pub use records::{content_hash, Header, RecordFile};
pub use run::{run, Outcome};

pub const THREADS_ENV: &str = "TENSOR_DENOISE_THREADS";

/// Runs `f` on a pool capped by [`THREADS_ENV`] when it is set, otherwise
/// on the global rayon pool.
pub fn with_thread_cap<T: Send>(f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
                CliError::Config(format!("{THREADS_ENV}={v:?} is not a positive integer"))
            })?;
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("thread pool: {e}")))?
                .install(f)
        }
        Err(_) => f(),
    }
}
