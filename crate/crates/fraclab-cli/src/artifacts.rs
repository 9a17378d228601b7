//! Artifact writing: CSV tables and JSON reports, plus content hashing for
//! the run manifest. Floats in CSV use Rust's shortest round-trip form, so
//! identical runs produce byte-identical files.

use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};

pub struct ArtifactSink {
    dir: PathBuf,
    written: Vec<(String, String, u64)>, // (name, sha256, bytes)
}

impl ArtifactSink {
    pub fn new(dir: &Path) -> std::io::Result<ArtifactSink> {
        std::fs::create_dir_all(dir)?;
        Ok(ArtifactSink { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        let path = self.dir.join(name);
        let mut f = std::fs::File::create(&path)?;
        f.write_all(bytes)?;
        let mut hasher = Sha256::new();
        hasher.update(bytes);
        let digest = format!("{:x}", hasher.finalize());
        self.written.push((name.to_string(), digest, bytes.len() as u64));
        Ok(())
    }

    pub fn write_csv(&mut self, name: &str, header: &str, rows: &[Vec<CsvCell>]) -> std::io::Result<()> {
        let mut out = String::new();
        out.push_str(header);
        out.push('\n');
        for row in rows {
            let mut first = true;
            for cell in row {
                if !first {
                    out.push(',');
                }
                first = false;
                match cell {
                    CsvCell::F(v) => out.push_str(&format_float(*v)),
                    CsvCell::I(v) => out.push_str(&v.to_string()),
                    CsvCell::S(v) => out.push_str(v),
                    CsvCell::B(v) => out.push_str(if *v { "true" } else { "false" }),
                }
            }
            out.push('\n');
        }
        self.write_bytes(name, out.as_bytes())
    }

    pub fn write_json<T: serde::Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(value).expect("serializable artifact");
        self.write_bytes(name, text.as_bytes())
    }

    pub fn manifest_entries(&self) -> &[(String, String, u64)] {
        &self.written
    }
}

pub enum CsvCell {
    F(f64),
    I(i64),
    S(String),
    B(bool),
}

/// Shortest round-trip decimal form; `inf`/`nan` never reach artifacts.
pub fn format_float(v: f64) -> String {
    format!("{v}")
}
