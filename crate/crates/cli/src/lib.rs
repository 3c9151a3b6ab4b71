//! Job runner, file formats and table reproduction on top of
//! `entanglelink-core`.

pub mod error;
pub mod fixtures;
pub mod formats;
pub mod job;
pub mod tables;

use entanglelink_core::partitions;
use entanglelink_core::{EntropyData, EntropyOracle};
use rayon::prelude::*;

pub use error::{CliError, Result};

/// Thread-count override for the entropy evaluation pool.
pub const THREADS_VAR: &str = "ENTANGLELINK_THREADS";

/// Size the global rayon pool from [`THREADS_VAR`] if it is set. Must run
/// before any parallel work; later calls are no-ops.
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Validation(format!("{THREADS_VAR}={raw} is not a positive integer")))?;
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Entropies of every canonical bipartition, evaluated in parallel. Each
/// value lands in its own slot, so the result does not depend on scheduling.
pub fn par_entropy_data<O: EntropyOracle + Sync + ?Sized>(oracle: &O) -> Result<EntropyData> {
    let n = oracle.n_sites();
    let values = partitions::canonical_subsystems(n)?
        .par_iter()
        .map(|p| oracle.entropy(p))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(EntropyData::new(n, values)?)
}
