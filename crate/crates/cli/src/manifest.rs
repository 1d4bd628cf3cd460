//! Run manifest: what ran, with which inputs, producing which files.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};
use strainforge_core::Result;

#[derive(Debug, Serialize)]
struct ConfigHash {
    path: String,
    sha256: String,
}

/// Written to `manifest.json` after a successful run. The wall time is
/// metadata; the reproducibility guarantee covers the data outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    subcommand: String,
    tool_version: String,
    seed: u64,
    config_hashes: Vec<ConfigHash>,
    outputs: Vec<String>,
    wall_time_s: f64,
    #[serde(skip)]
    started: Instant,
    #[serde(skip)]
    out_dir: PathBuf,
}

impl RunManifest {
    pub fn start(subcommand: &str, seed: u64, out_dir: &Path) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config_hashes: Vec::new(),
            outputs: Vec::new(),
            wall_time_s: 0.0,
            started: Instant::now(),
            out_dir: out_dir.to_path_buf(),
        }
    }

    /// Record an input config by content hash.
    pub fn add_config(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path)?;
        let mut h = Sha256::new();
        h.update(&bytes);
        self.config_hashes.push(ConfigHash {
            path: path.display().to_string(),
            sha256: format!("{:x}", h.finalize()),
        });
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) {
        self.outputs.push(
            path.file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string()),
        );
    }

    /// Serialize atomically (write then rename) into the output directory.
    pub fn finish(mut self) -> Result<()> {
        self.wall_time_s = self.started.elapsed().as_secs_f64();
        let text = serde_json::to_string_pretty(&self)
            .map_err(|e| strainforge_core::Error::Data(format!("manifest serialization: {e}")))?
            + "\n";
        let tmp = self.out_dir.join("manifest.json.tmp");
        let target = self.out_dir.join("manifest.json");
        std::fs::write(&tmp, text)?;
        std::fs::rename(&tmp, &target)?;
        Ok(())
    }
}
