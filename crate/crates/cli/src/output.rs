use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::{Format, SCHEMA_VERSION};
use crate::tasks::{Artifacts, Tagged};

/// Writes `bytes` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

#[derive(Debug, Serialize)]
pub struct Summary<'a> {
    pub schema_version: &'static str,
    pub task: &'a str,
    pub results: &'a [Tagged],
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub schema_version: &'static str,
    pub library: &'static str,
    pub library_version: &'static str,
    pub cli_version: &'static str,
    pub config_path: String,
    pub inputs: Value,
    pub seed: u64,
    pub wall_time_seconds: f64,
    pub status: &'a str,
    pub error: Option<String>,
    pub outputs: Vec<String>,
}

impl<'a> Manifest<'a> {
    pub fn new(config_path: &Path, inputs: Value, seed: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            library: "formres",
            library_version: formres::VERSION,
            cli_version: env!("CARGO_PKG_VERSION"),
            config_path: config_path.display().to_string(),
            inputs,
            seed,
            wall_time_seconds: 0.0,
            status: "ok",
            error: None,
            outputs: Vec::new(),
        }
    }
}

fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(v).expect("outputs serialize");
    s.push(b'\n');
    s
}

/// Tables and summary; returns the file names written.
pub fn write_artifacts(dir: &Path, task: &str, art: &Artifacts, formats: &[Format]) -> std::io::Result<Vec<String>> {
    let mut written = Vec::new();
    if formats.contains(&Format::Csv) {
        for t in &art.tables {
            write_atomic(&dir.join(&t.name), t.csv.as_bytes())?;
            written.push(t.name.clone());
        }
    }
    if formats.contains(&Format::Json) {
        let summary = Summary { schema_version: SCHEMA_VERSION, task, results: &art.results };
        write_atomic(&dir.join("summary.json"), &json_bytes(&summary))?;
        written.push("summary.json".into());
    }
    Ok(written)
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> std::io::Result<PathBuf> {
    let path = dir.join("manifest.json");
    write_atomic(&path, &json_bytes(manifest))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_leaves_no_temp_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        write_atomic(&p, b"x\n1\n").unwrap();
        write_atomic(&p, b"x\n2\n").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "x\n2\n");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
