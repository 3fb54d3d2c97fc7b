//! CSV emission. Every file starts with a provenance comment so a stray
//! table can always be traced back to the exact config and seed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub struct OutputDir {
    dir: PathBuf,
    version: &'static str,
    config_hash: String,
    seed: u64,
}

impl OutputDir {
    pub fn new(dir: &Path, config_hash: &str, seed: u64) -> std::io::Result<OutputDir> {
        fs::create_dir_all(dir)?;
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            version: env!("CARGO_PKG_VERSION"),
            config_hash: config_hash.to_string(),
            seed,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Create `name` with the provenance comment already written.
    pub fn create(&self, name: &str) -> std::io::Result<fs::File> {
        let mut f = fs::File::create(self.dir.join(name))?;
        writeln!(
            f,
            "# regsde {} config_sha256={} seed={}",
            self.version, self.config_hash, self.seed
        )?;
        Ok(f)
    }
}

/// Full-precision float formatting shared by all tables: round-trips
/// exactly and is byte-stable across runs.
pub fn fmt(v: f64) -> String {
    format!("{v:.17e}")
}
