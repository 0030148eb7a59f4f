//! Output directory resolution and atomic file writes.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::CliError;

pub const OUT_ENV: &str = "SIAFLOW_OUT";

/// `--out` if given, else `$SIAFLOW_OUT`.
pub fn resolve_out_dir(arg: Option<PathBuf>) -> Result<PathBuf, CliError> {
    arg.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .ok_or_else(|| CliError::Usage(format!("no output directory: pass --out or set {OUT_ENV}")))
}

/// Writes `contents` to `dir/name` through a temporary file in the same
/// directory and a rename.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(dir.join(name)).map_err(|e| e.error)?;
    Ok(())
}
