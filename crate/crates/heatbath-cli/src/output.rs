//! Artifact writing and the deterministic Monte Carlo layout.

use std::fs::File;
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::manifest::Check;
use crate::CliError;

/// Number of independent RNG streams a CLI-side Monte Carlo is split into.
/// The split is by stream index, not by thread, so results are identical
/// for any `--threads` value (and for the sequential library build).
pub const MC_CHUNKS: u64 = 256;

/// Runs `per_chunk(stream, draws_in_chunk)` over a fixed 256-way split of
/// `n_total` draws and returns the partials in stream order, ready for a
/// sequential (deterministic) reduction by the caller.
pub fn chunk_partials<T, F>(n_total: usize, per_chunk: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, usize) -> T + Send + Sync,
{
    let n_chunks = MC_CHUNKS.min(n_total.max(1) as u64);
    let base = n_total / n_chunks as usize;
    let rem = n_total % n_chunks as usize;
    (0..n_chunks)
        .into_par_iter()
        .map(|c| per_chunk(c, base + usize::from((c as usize) < rem)))
        .collect()
}

/// RNG for one stream of a CLI-side Monte Carlo; `offset` separates the
/// streams of different phases within one run.
pub fn mc_rng(seed: u64, offset: u64, chunk: u64) -> ChaCha8Rng {
    heatbath::clock::stream_rng(seed, offset + chunk)
}

/// CSV writer with the artifact conventions: header row written by the
/// caller, `.` decimal separator, `\n` record terminator (the csv crate
/// default), floats in shortest round-trip form.
pub fn csv_writer(path: &Path) -> Result<csv::Writer<File>, CliError> {
    csv::Writer::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Prints one line, swallowing broken-pipe errors so `heatbath ... | head`
/// exits by its checks rather than by a panic.
pub fn say(line: std::fmt::Arguments<'_>) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout(), "{line}");
}

pub fn print_checks(checks: &[Check]) {
    for c in checks {
        let tag = if c.pass { "PASS" } else { "FAIL" };
        say(format_args!(
            "[{tag}] {}: {:.6e} (threshold {:e})",
            c.name, c.value, c.threshold
        ));
    }
}
