//! Run directories and machine-readable outputs.
//!
//! Every run writes into `<output_dir>/<command>-<hash>`, where `hash` is
//! the first 12 hex digits of SHA-256 over the command name and the resolved
//! configuration without its output location. CSV files start with `#` comment lines carrying the hash,
//! the seed lineage and the full configuration, followed by a header row.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::harness::config::RunConfig;
use crate::seed::RNG_NAME;

/// Hex SHA-256 of `command` and the serialized configuration.
pub fn config_hash(command: &str, config_toml: &str) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update([0u8]);
    h.update(config_toml.as_bytes());
    hex::encode(h.finalize())
}

/// A run directory with its shared file preamble.
#[derive(Debug, Clone)]
pub struct RunOutput {
    dir: PathBuf,
    command: String,
    hash: String,
    config_toml: String,
    seed: u64,
}

impl RunOutput {
    pub fn create(command: &str, config: &RunConfig) -> Result<Self> {
        Self::create_keyed(command, config, "")
    }

    /// Like [`RunOutput::create`], with command options outside the
    /// configuration folded into the hash.
    pub fn create_keyed(command: &str, config: &RunConfig, key: &str) -> Result<Self> {
        let config_toml: String = config
            .to_toml()?
            .lines()
            .filter(|l| !l.starts_with("output_dir ="))
            .map(|l| format!("{l}\n"))
            .collect();
        let hash = if key.is_empty() {
            config_hash(command, &config_toml)
        } else {
            config_hash(&format!("{command}\0{key}"), &config_toml)
        };
        let dir = config.output_dir.join(format!("{command}-{}", &hash[..12]));
        fs::create_dir_all(&dir)?;
        fs::write(dir.join("config.toml"), &config_toml)?;
        Ok(Self {
            dir,
            command: command.to_string(),
            hash,
            config_toml,
            seed: config.seed,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    fn preamble(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# command: {}\n", self.command));
        out.push_str(&format!("# config_hash: {}\n", self.hash));
        out.push_str(&format!(
            "# seed_lineage: master={} rng={} derive=sha256(master, tag, indices)\n",
            self.seed, RNG_NAME
        ));
        out.push_str("# config:\n");
        for line in self.config_toml.lines() {
            if line.is_empty() {
                out.push_str("#\n");
            } else {
                out.push_str("#   ");
                out.push_str(line);
                out.push('\n');
            }
        }
        out
    }

    /// Writes a CSV file with the preamble, `header`, then `rows`.
    pub fn write_csv<I, R>(&self, name: &str, header: &[&str], rows: I) -> Result<PathBuf>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator,
        R::Item: AsRef<[u8]>,
    {
        let path = self.dir.join(name);
        let mut buf = self.preamble().into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(header)?;
            for row in rows {
                w.write_record(row)?;
            }
            w.flush()?;
        }
        fs::write(&path, buf)?;
        Ok(path)
    }

    /// Writes `value` as pretty JSON.
    pub fn write_json(&self, name: &str, value: &impl Serialize) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }

    /// `metadata.json`: provenance plus a command summary. `created_unix` is
    /// the only field that changes between identical runs.
    pub fn write_metadata(&self, summary: &impl Serialize) -> Result<PathBuf> {
        let created = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let meta = serde_json::json!({
            "command": self.command,
            "config_hash": self.hash,
            "master_seed": self.seed,
            "rng": RNG_NAME,
            "version": env!("CARGO_PKG_VERSION"),
            "created_unix": created,
            "summary": summary,
        });
        self.write_json("metadata.json", &meta)
    }
}

/// Shortest round-trip decimal form.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_preamble_and_header() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            output_dir: tmp.path().to_path_buf(),
            ..RunConfig::default()
        };
        let out = RunOutput::create("test", &cfg).unwrap();
        assert!(out.dir().ends_with(format!("test-{}", &out.hash()[..12])));
        let path = out
            .write_csv("x.csv", &["a", "b"], vec![vec![num(0.1), num(2.0)]])
            .unwrap();
        let text = fs::read_to_string(path).unwrap();
        assert!(text.starts_with("# command: test\n"));
        assert!(text.contains("#   modes = 6"));
        let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body, vec!["a,b", "0.1,2.0"]);
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_path(out.dir().join("x.csv"))
            .unwrap();
        assert_eq!(rdr.records().count(), 1);
    }

    #[test]
    fn hash_depends_on_command_and_config() {
        assert_ne!(config_hash("a", "x"), config_hash("b", "x"));
        assert_ne!(config_hash("a", "x"), config_hash("a", "y"));
        assert_eq!(config_hash("a", "x").len(), 64);
    }
}
