//! Files on disk: histogram tables, run manifests and atomic writes.

mod histogram_file;
mod manifest;

use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

pub use histogram_file::{parse_histogram, read_histogram, render_histogram, HistogramFile};
pub use manifest::{FileDigest, RunManifest, MANIFEST_FILE};

use crate::error::Result;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// File name for a group's histogram: the group name with anything outside
/// `[A-Za-z0-9_-]` replaced by `_`.
pub fn histogram_file_name(group: &str) -> String {
    let stem: String = group
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    format!("hist_{stem}.csv")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/out.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn file_names_are_sanitized() {
        assert_eq!(histogram_file_name("X1-X0"), "hist_X1-X0.csv");
        assert_eq!(histogram_file_name("a b/c"), "hist_a_b_c.csv");
    }

    #[test]
    fn sha256_known_value() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
