use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use fieldcal::data::EngineConfig;
use fieldcal::Error;
use serde::Serialize;

/// Provenance record written next to every command's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub config: Option<EngineConfig>,
    pub inputs: BTreeMap<String, PathBuf>,
    pub outputs: BTreeMap<String, PathBuf>,
    pub timestamp_unix: u64,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: Option<&EngineConfig>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            config: config.cloned(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        }
    }

    pub fn input(mut self, name: &str, path: &Path) -> Self {
        self.inputs.insert(name.to_string(), path.to_path_buf());
        self
    }

    pub fn input_opt(self, name: &str, path: Option<&Path>) -> Self {
        match path {
            Some(p) => self.input(name, p),
            None => self,
        }
    }

    pub fn output(mut self, name: &str, path: &Path) -> Self {
        self.outputs.insert(name.to_string(), path.to_path_buf());
        self
    }

    pub fn output_opt(self, name: &str, path: Option<&Path>) -> Self {
        match path {
            Some(p) => self.output(name, p),
            None => self,
        }
    }

    /// Writes to `path`, conventionally `<primary output>.manifest.json`.
    pub fn write(&self, path: &Path) -> fieldcal::Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }
}

pub fn manifest_path(primary: &Path) -> PathBuf {
    let mut name = primary.as_os_str().to_os_string();
    name.push(".manifest.json");
    PathBuf::from(name)
}
