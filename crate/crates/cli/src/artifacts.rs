//! Output files. Every artifact carries the schema version and config hash.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, SCHEMA_VERSION};
use crate::CliError;

/// SHA-256 of the effective config with `output_dir` cleared, so a rerun into
/// a different directory produces the same hash.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut canonical = cfg.clone();
    canonical.output_dir = None;
    let text = serde_json::to_string(&canonical).expect("config serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub struct Writer {
    dir: PathBuf,
    hash: String,
}

impl Writer {
    pub fn create(dir: &Path, hash: String) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), hash })
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(())
    }

    /// JSON document `{schema_version, config_sha256, <key>: value}`.
    pub fn json<T: Serialize>(&mut self, name: &str, key: &str, value: &T) -> Result<(), CliError> {
        let mut doc = serde_json::Map::new();
        doc.insert("schema_version".into(), SCHEMA_VERSION.into());
        doc.insert("config_sha256".into(), self.hash.clone().into());
        let inner = serde_json::to_value(value).map_err(|e| CliError::Io(format!("{name}: {e}")))?;
        doc.insert(key.into(), inner);
        let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(format!("{name}: {e}")))?;
        text.push('\n');
        self.put(name, text.as_bytes())
    }

    /// CSV body behind a `#` comment line with the schema version and hash.
    pub fn csv(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let text = format!("# fraclab schema_version={SCHEMA_VERSION} config_sha256={}\n{body}", self.hash);
        self.put(name, text.as_bytes())
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let text = format!("# fraclab schema_version={SCHEMA_VERSION} config_sha256={}\n{body}", self.hash);
        self.put(name, text.as_bytes())
    }

    /// Raw field dump: one JSON header line, then the values as little-endian f64.
    pub fn snapshot<T: Serialize>(&mut self, name: &str, header: &T, values: &[f64]) -> Result<(), CliError> {
        let mut doc = serde_json::Map::new();
        doc.insert("schema_version".into(), SCHEMA_VERSION.into());
        doc.insert("config_sha256".into(), self.hash.clone().into());
        doc.insert("field".into(), serde_json::to_value(header).map_err(|e| CliError::Io(e.to_string()))?);
        let mut bytes = serde_json::to_vec(&doc).map_err(|e| CliError::Io(e.to_string()))?;
        bytes.push(b'\n');
        bytes.reserve(8 * values.len());
        for v in values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        self.put(name, &bytes)
    }
}

pub fn series_file(lambda: f64) -> String {
    format!("series_lambda_{lambda}.csv")
}

/// Gnuplot script drawing both level positions of every series on log axes.
pub fn series_plot(files: &[(f64, String)], title: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "set datafile separator ','");
    let _ = writeln!(out, "set datafile missing ''");
    let _ = writeln!(out, "set key autotitle columnhead left top");
    let _ = writeln!(out, "set logscale xy");
    let _ = writeln!(out, "set xlabel 't'");
    let _ = writeln!(out, "set ylabel 'level position'");
    let _ = writeln!(out, "set title '{title}'");
    let curves: Vec<String> = files
        .iter()
        .flat_map(|(lambda, file)| {
            [
                format!("'{file}' using 1:2 with linespoints title 'under {lambda}'"),
                format!("'{file}' using 1:3 with linespoints title 'over {lambda}'"),
            ]
        })
        .collect();
    let _ = writeln!(out, "plot {}", curves.join(", \\\n     "));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn hash_ignores_output_dir_only() {
        let text = r#"{"schema_version": 1, "kind": "bump", "output_dir": "a"}"#;
        let a = parse_config(text).unwrap();
        let mut b = a.clone();
        b.output_dir = Some("elsewhere".into());
        assert_eq!(config_hash(&a), config_hash(&b));
        b.seed = 7;
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
    }

    #[test]
    fn plot_names_every_series() {
        let p = series_plot(&[(0.5, series_file(0.5)), (0.1, series_file(0.1))], "x");
        assert!(p.contains("series_lambda_0.5.csv") && p.contains("series_lambda_0.1.csv"));
    }
}
