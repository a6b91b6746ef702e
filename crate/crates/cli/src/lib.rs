//! Subcommand implementations for the `blockwht` binary. Every command
//! writes to a caller-supplied sink so tests can capture the output.

pub mod bench;
pub mod quant;
pub mod simulate;
pub mod transform;
pub mod verify;

use std::io::{self, Write};

/// Bumped whenever a CSV column is added, removed or reordered.
pub const SCHEMA_VERSION: u32 = 1;

/// Invalid command configuration, reported before any work starts.
#[derive(Debug, thiserror::Error)]
#[error("config error: {0}")]
pub struct ConfigError(pub String);

pub(crate) fn config_err<T>(msg: impl Into<String>) -> anyhow::Result<T> {
    Err(ConfigError(msg.into()).into())
}

/// Worker count actually used for a run: the explicit value or the pool size.
pub fn resolve_workers(workers: Option<usize>) -> usize {
    workers
        .unwrap_or_else(blockwht::par::available_workers)
        .max(1)
}

/// `# blockwht <command> schema=<v> seed=<s> workers=<w>`
pub fn write_header(
    out: &mut dyn Write,
    command: &str,
    seed: u64,
    workers: usize,
) -> io::Result<()> {
    writeln!(
        out,
        "# blockwht {command} schema={SCHEMA_VERSION} seed={seed} workers={workers}"
    )
}
