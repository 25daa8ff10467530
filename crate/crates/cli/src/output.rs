use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Resolved;
use crate::error::{CliError, Result};

/// Output directory writer. Each file is rendered in memory and written once.
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|source| CliError::Output {
            path: root.display().to_string(),
            source,
        })?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.path(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|source| CliError::Output {
                path: dir.display().to_string(),
                source,
            })?;
        }
        fs::write(&path, bytes).map_err(|source| CliError::Output {
            path: path.display().to_string(),
            source,
        })?;
        Ok(path)
    }

    /// JSON report with the resolved configuration under `"resolved"`.
    pub fn write_report<T: Serialize>(&self, name: &str, resolved: &Resolved, body: &T) -> Result<PathBuf> {
        let doc = serde_json::json!({
            "resolved": resolved.json(),
            "report": body,
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
        text.push('\n');
        self.write(name, text.as_bytes())
    }
}
