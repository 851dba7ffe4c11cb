//! Synthetic dataset generation, transaction files and horizontal
//! partitioning.
//!
//! Everything is held in memory. Counting goes through
//! [`crate::itemsets::count_supports`] over whole partitions; a block-wise
//! scan for out-of-core data would slot in there.

mod format;
mod generate;
mod partition;

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub use format::{format_db, parse_db, read_db, write_db};
pub use generate::{generate, GenParams};
pub use partition::{
    apportion, partition, write_partitions, PartEntry, PartitionManifest, PartitionSpec,
};

/// Writes to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
