//! Output plumbing: atomic file writes, CSV formatting, hashing, and the
//! manifest/summary structures.
//!
//! Everything written here is deterministic in the run's `(seed, config)`:
//! floats are formatted with Rust's shortest round-trip notation (always a
//! `.` decimal separator, locale-independent), line endings are `\n`, and
//! the manifest lists files in a fixed construction order with their sizes
//! and SHA-256 digests. Wall-clock time appears only on the printed summary
//! line, never inside an output file.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{io_fail, CliError, Result};

/// Lowercase hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Write `bytes` to `path` atomically: a sibling temp file is written,
/// flushed, and renamed over the destination, so readers never observe a
/// torn file and an interrupted run leaves the previous version intact.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let tmp = dir.join(format!(".tmp.{}", name.to_string_lossy()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

/// Format a float with shortest round-trip notation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Simple CSV builder: header once, then rows; `\n` endings throughout.
pub struct Csv {
    buf: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Csv {
        let mut buf = String::new();
        buf.push_str(&header.join(","));
        buf.push('\n');
        Csv {
            buf,
            columns: header.len(),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        assert_eq!(fields.len(), self.columns, "CSV row width mismatch");
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }

    pub fn into_string(self) -> String {
        self.buf
    }
}

/// Parse a CSV produced by [`Csv`]: returns (header, rows). Rejects rows
/// whose width differs from the header's.
pub fn parse_csv(text: &str, path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| CliError::Failure(format!("{}: empty CSV", path.display())))?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row: Vec<String> = line.split(',').map(str::to_string).collect();
        if row.len() != header.len() {
            return Err(CliError::Failure(format!(
                "{}: row {} has {} fields, header has {}",
                path.display(),
                i + 2,
                row.len(),
                header.len()
            )));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

/// One output file's identity in the manifest.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Persisted run manifest (`manifest.json`). Deterministic in
/// `(seed, config)`; its presence marks a completed run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub run_id: String,
    pub scenario: String,
    pub files: Vec<FileEntry>,
}

pub const MANIFEST_NAME: &str = "manifest.json";
pub const CONFIG_SNAPSHOT_NAME: &str = "config.snapshot";
pub const CHECKPOINT_NAME: &str = "checkpoint.bin";

/// Collects output files for one run directory and assembles the manifest.
pub struct OutputSet {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

impl OutputSet {
    pub fn new(dir: &Path) -> OutputSet {
        OutputSet {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Atomically write one output file and record it in the manifest.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        atomic_write(&path, bytes).map_err(|e| io_fail(&path, e))?;
        self.files.push(FileEntry {
            path: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    /// Record a file that already exists on disk (from a pre-halt phase of
    /// a resumed run), hashing its current content.
    pub fn record_existing(&mut self, name: &str) -> Result<()> {
        let path = self.dir.join(name);
        let bytes = fs::read(&path).map_err(|e| io_fail(&path, e))?;
        self.files.push(FileEntry {
            path: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    /// Write `manifest.json` and return the full file list (manifest last,
    /// listing itself without a digest would be circular, so it lists only
    /// the other files).
    pub fn finish(mut self, run_id: &str, scenario: &str) -> Result<(Manifest, Vec<FileEntry>)> {
        self.files.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest {
            run_id: run_id.to_string(),
            scenario: scenario.to_string(),
            files: self.files.clone(),
        };
        let mut bytes = serde_json::to_vec(&manifest)
            .map_err(|e| CliError::Failure(format!("manifest serialization: {e}")))?;
        bytes.push(b'\n');
        let path = self.dir.join(MANIFEST_NAME);
        atomic_write(&path, &bytes).map_err(|e| io_fail(&path, e))?;
        let files = manifest.files.clone();
        Ok((manifest, files))
    }
}

/// Read a run directory's manifest, if present.
pub fn read_manifest(dir: &Path) -> Result<Option<Manifest>> {
    let path = dir.join(MANIFEST_NAME);
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(io_fail(&path, e)),
    };
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| CliError::Failure(format!("{}: {e}", path.display())))?;
    Ok(Some(manifest))
}

/// The machine-readable summary printed as one JSON line on stdout.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub run_id: String,
    pub scenario: String,
    /// "complete" or "halted".
    pub status: String,
    /// Strobe reached (equals `n_periods` when complete).
    pub strobe: u32,
    pub wall_time_s: f64,
    pub out_dir: String,
    pub files: Vec<FileEntry>,
}

impl RunSummary {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("summary serialization cannot fail")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_matches_a_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn csv_rows_join_with_newlines_and_dots() {
        let mut csv = Csv::new(&["a", "b"]);
        csv.row(&[fmt_f64(1.5), fmt_f64(-0.25)]);
        csv.row(&[fmt_f64(1e-9), fmt_f64(3.0)]);
        // Rust's shortest-roundtrip Display stays decimal (no exponent form),
        // and the value still parses back bit-exactly.
        assert_eq!(csv.into_string(), "a,b\n1.5,-0.25\n0.000000001,3\n");
        assert_eq!("0.000000001".parse::<f64>().unwrap(), 1e-9);
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = std::env::temp_dir().join(format!("qpend-out-test-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("x.csv");
        atomic_write(&path, b"one").unwrap();
        atomic_write(&path, b"two").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"two");
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn parse_csv_rejects_ragged_rows() {
        let err = parse_csv("a,b\n1\n", Path::new("t.csv")).unwrap_err();
        assert!(err.to_string().contains("row 2"));
        let (h, rows) = parse_csv("a,b\n1,2\n", Path::new("t.csv")).unwrap();
        assert_eq!(h, vec!["a", "b"]);
        assert_eq!(rows, vec![vec!["1".to_string(), "2".to_string()]]);
    }
}
