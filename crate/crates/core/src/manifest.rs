//! CSV tables and the JSON manifest written next to each.

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// A rectangular result: header plus string cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// UTF-8, comma separated, `.` decimals, LF line endings.
    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// Subcommand words, e.g. `["quorum", "simulate"]`.
    pub command: Vec<String>,
    pub config_digest: String,
    /// Effective configuration after overrides.
    pub config: String,
    pub seed: u64,
    pub runs: usize,
    pub time_unit: String,
    pub events: Vec<u64>,
    pub wall_time_s: f64,
    pub output: String,
    pub output_digest: String,
    #[serde(default)]
    pub summary: BTreeMap<String, serde_json::Value>,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

pub fn write_outputs(out: &Path, csv: &[u8], manifest: &RunManifest) -> io::Result<PathBuf> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(out, csv)?;
    let path = manifest_path(out);
    let json = serde_json::to_string_pretty(manifest).map_err(io::Error::other)?;
    std::fs::write(&path, json + "\n")?;
    Ok(path)
}

pub fn read_manifest(path: &Path) -> io::Result<RunManifest> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_uses_lf_and_plain_decimals() {
        let mut t = Table::new(["t", "x"]);
        t.push(vec![0.5.to_string(), 3.to_string()]);
        t.push(vec![1e-7.to_string(), "a,b".into()]);
        assert_eq!(t.to_csv(), b"t,x\n0.5,3\n0.0000001,\"a,b\"\n");
    }

    #[test]
    fn manifest_sits_next_to_output() {
        assert_eq!(
            manifest_path(Path::new("out/run.csv")),
            Path::new("out/run.csv.manifest.json")
        );
    }

    #[test]
    fn digest_is_stable() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
