//! Deterministic file outputs: CSV with a header row and shortest
//! round-trip float formatting, JSON reports, and the run manifest.

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};

pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)
            .with_context(|| format!("cannot create output dir {}", root.display()))?;
        Ok(OutputDir { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn csv(&mut self, name: &str, header: &str, rows: &[Vec<f64>]) -> Result<()> {
        let path = self.root.join(name);
        let mut buf = String::with_capacity(rows.len() * 32 + header.len() + 1);
        buf.push_str(header);
        buf.push('\n');
        for row in rows {
            let mut first = true;
            for v in row {
                if !first {
                    buf.push(',');
                }
                first = false;
                buf.push_str(&format!("{v}"));
            }
            buf.push('\n');
        }
        std::fs::write(&path, buf).with_context(|| format!("write {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.root.join(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        std::fs::write(&path, text).with_context(|| format!("write {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Manifest with the configuration hash; wall time is informational
    /// and excluded from the determinism contract on the data files.
    pub fn manifest(
        &mut self,
        command: &str,
        preset: Option<&str>,
        canonical_config: &str,
        wall_time_s: f64,
    ) -> Result<()> {
        let mut hasher = Sha256::new();
        hasher.update(canonical_config.as_bytes());
        let digest = hasher.finalize();
        let hash: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        #[derive(Serialize)]
        struct Manifest<'a> {
            command: &'a str,
            preset: Option<&'a str>,
            config_sha256: String,
            version: &'a str,
            wall_time_s: f64,
            outputs: &'a [String],
        }
        let m = Manifest {
            command,
            preset,
            config_sha256: hash,
            version: env!("CARGO_PKG_VERSION"),
            wall_time_s,
            outputs: &self.written,
        };
        let path = self.root.join("manifest.json");
        let mut f = std::fs::File::create(&path)?;
        writeln!(f, "{}", serde_json::to_string_pretty(&m)?)?;
        Ok(())
    }
}
