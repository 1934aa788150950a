//! Buffered run outputs and the run manifest.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";

/// Collects output files in memory; nothing touches the disk until
/// [`RunContext::commit`], so a failed run leaves no partial outputs.
#[derive(Debug)]
pub struct RunContext {
    pub seed: u64,
    files: Vec<(String, Vec<u8>)>,
    flags: Vec<String>,
}

impl RunContext {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            files: Vec::new(),
            flags: Vec::new(),
        }
    }

    pub fn stream(&self, id: u64) -> stochlab::GaussianStream {
        stochlab::GaussianStream::new(self.seed, id)
    }

    /// Records a non-convergence or failed self-check; the run still writes
    /// its outputs but exits with a non-zero status.
    pub fn flag(&mut self, message: impl Into<String>) {
        self.flags.push(message.into());
    }

    pub fn flags(&self) -> &[String] {
        &self.flags
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.bytes(name, bytes);
        Ok(())
    }

    /// CSV with a header row and numeric rows.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            anyhow::ensure!(row.len() == header.len(), "{name}: row width differs from header");
            w.write_record(row.iter().map(|v| format!("{v:?}")))?;
        }
        self.bytes(name, w.into_inner().context("flushing CSV")?);
        Ok(())
    }

    pub fn bytes(&mut self, name: &str, data: Vec<u8>) {
        self.files.retain(|(n, _)| n != name);
        self.files.push((name.to_string(), data));
    }

    pub fn file_names(&self) -> Vec<&str> {
        self.files.iter().map(|(n, _)| n.as_str()).collect()
    }

    /// Writes every buffered file plus the manifest into `dir`.
    pub fn commit(self, dir: &Path, mut manifest: RunManifest) -> Result<RunManifest> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (name, data) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, data).with_context(|| format!("writing {}", path.display()))?;
            manifest.outputs.push(OutputRecord {
                file: name.clone(),
                bytes: data.len() as u64,
                sha256: sha256_hex(data),
            });
        }
        manifest.flags = self.flags;
        manifest.status = if manifest.flags.is_empty() { "ok" } else { "flagged" }.into();
        manifest.finished = now();
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        std::fs::write(dir.join(MANIFEST), bytes)?;
        Ok(manifest)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    /// SHA-256 of the resolved configuration (defaults filled in, seed
    /// override applied) serialised as JSON.
    pub config_sha256: String,
    pub config: serde_json::Value,
    pub artifact_version: String,
    pub seed: u64,
    pub started: String,
    pub finished: String,
    pub status: String,
    pub flags: Vec<String>,
    pub outputs: Vec<OutputRecord>,
}

impl RunManifest {
    pub fn start(experiment: &str, config: serde_json::Value, seed: u64) -> Self {
        let canonical = serde_json::to_vec(&config).expect("JSON values serialise");
        Self {
            experiment: experiment.to_string(),
            config_sha256: sha256_hex(&canonical),
            config,
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            started: now(),
            finished: String::new(),
            status: String::new(),
            flags: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

pub fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data).iter().map(|b| format!("{b:02x}")).collect()
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Output directory: explicit flag, then the config, then
/// `$STOCHLAB_OUT/<experiment>`, then `runs/<experiment>`.
pub fn resolve_out_dir(flag: Option<&Path>, config: Option<&Path>, experiment: &str) -> PathBuf {
    if let Some(p) = flag.or(config) {
        return p.to_path_buf();
    }
    match std::env::var_os("STOCHLAB_OUT") {
        Some(root) if !root.is_empty() => PathBuf::from(root).join(experiment),
        _ => PathBuf::from("runs").join(experiment),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn csv_formatting() {
        let mut ctx = RunContext::new(1);
        ctx.csv("a.csv", &["x", "y"], vec![vec![0.5, 1e-20], vec![2.0, -3.0]])
            .unwrap();
        assert_eq!(ctx.files[0].1, b"x,y\n0.5,1e-20\n2.0,-3.0\n");
        assert!(ctx.csv("b.csv", &["x"], vec![vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn out_dir_precedence() {
        let p = resolve_out_dir(Some(Path::new("a")), Some(Path::new("b")), "e");
        assert_eq!(p, PathBuf::from("a"));
        let p = resolve_out_dir(None, Some(Path::new("b")), "e");
        assert_eq!(p, PathBuf::from("b"));
    }
}
