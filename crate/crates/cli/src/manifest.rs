use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thinc_core::{Error, Result};

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

fn digest(path: &Path) -> Result<FileDigest> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

/// Provenance record written next to every artifact a command produces.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub engine_version: &'static str,
    pub seed: Option<u64>,
    /// Config files or built-in config names the command resolved.
    pub configs: Vec<String>,
    pub settings: Option<serde_json::Value>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub wall_time_seconds: f64,
}

/// Collects a command's inputs and outputs while it runs.
pub struct Recorder {
    command: String,
    started: Instant,
    pub seed: Option<u64>,
    pub configs: Vec<String>,
    pub settings: Option<serde_json::Value>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl Recorder {
    pub fn new(command: &str, seed: Option<u64>) -> Self {
        Self {
            command: command.to_string(),
            started: Instant::now(),
            seed,
            configs: Vec::new(),
            settings: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    pub fn settings<T: Serialize>(&mut self, value: &T) -> Result<()> {
        self.settings =
            Some(serde_json::to_value(value).map_err(|e| Error::Serialize(e.to_string()))?);
        Ok(())
    }

    /// Hashes every recorded file and writes the manifest to `path`, or next
    /// to the first output as `<output>.manifest.json`.
    pub fn finish(self, path: Option<&Path>) -> Result<PathBuf> {
        let target = match path {
            Some(p) => p.to_path_buf(),
            None => {
                let first = self
                    .outputs
                    .first()
                    .ok_or_else(|| Error::invalid("manifest", "command produced no output"))?;
                let mut name = first.as_os_str().to_owned();
                name.push(".manifest.json");
                PathBuf::from(name)
            }
        };
        let manifest = RunManifest {
            command: self.command,
            engine_version: env!("CARGO_PKG_VERSION"),
            seed: self.seed,
            configs: self.configs,
            settings: self.settings,
            inputs: self
                .inputs
                .iter()
                .map(|p| digest(p))
                .collect::<Result<_>>()?,
            outputs: self
                .outputs
                .iter()
                .map(|p| digest(p))
                .collect::<Result<_>>()?,
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
        };
        let text =
            serde_json::to_string_pretty(&manifest).map_err(|e| Error::Serialize(e.to_string()))?;
        fs::write(&target, text + "\n").map_err(|e| Error::io(&target, e))?;
        Ok(target)
    }
}
