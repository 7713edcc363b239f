//! Deterministic artifact emission: every file carries a provenance
//! header (config hash, seed, tool version, schema) and float formatting
//! uses shortest round-trip notation, so identical config + seed gives
//! byte-identical output.

use std::path::PathBuf;

use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

#[derive(Debug, Clone)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: u64,
    pub version: &'static str,
}

impl Provenance {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        let mut h = Sha256::new();
        h.update(cfg.canonical_toml().as_bytes());
        Provenance {
            config_sha256: format!("{:x}", h.finalize()),
            seed: cfg.seed,
            version: env!("CARGO_PKG_VERSION"),
        }
    }

    fn csv_header(&self) -> String {
        format!(
            "# config_sha256 = {}\n# seed = {}\n# version = {}\n",
            self.config_sha256, self.seed, self.version
        )
    }

    fn json_value(&self) -> serde_json::Value {
        serde_json::json!({
            "config_sha256": self.config_sha256,
            "seed": self.seed,
            "version": self.version,
        })
    }
}

pub struct Emitter {
    pub dir: PathBuf,
    pub prov: Provenance,
}

impl Emitter {
    pub fn write_csv(&self, name: &str, header: &str, rows: &[String]) -> anyhow::Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        let mut text = self.prov.csv_header();
        text.push_str(header);
        text.push('\n');
        for r in rows {
            text.push_str(r);
            text.push('\n');
        }
        std::fs::write(self.dir.join(name), text)?;
        Ok(())
    }

    pub fn write_json(&self, name: &str, value: &serde_json::Value) -> anyhow::Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        let mut wrapped = value.clone();
        if let Some(obj) = wrapped.as_object_mut() {
            obj.insert("provenance".into(), self.prov.json_value());
        }
        let mut text = serde_json::to_string_pretty(&wrapped)?;
        text.push('\n');
        std::fs::write(self.dir.join(name), text)?;
        Ok(())
    }
}

/// Shortest round-trip float formatting; empty string for NaN so CSV
/// consumers see a missing value rather than a sentinel.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x}")
    }
}

/// Machine-readable one-line error record for stderr.
pub fn error_record(stage: &str, message: &str) -> String {
    serde_json::json!({ "error": { "stage": stage, "message": message } }).to_string()
}
