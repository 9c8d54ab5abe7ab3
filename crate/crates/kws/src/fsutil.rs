use std::io::Write;
use std::path::Path;

use crate::error::{KwsError, Result};

/// Writes `bytes` to a temporary file next to `path`, then renames it into
/// place, so readers never see a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| KwsError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| KwsError::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| KwsError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| KwsError::io(path, e.error))?;
    Ok(())
}
