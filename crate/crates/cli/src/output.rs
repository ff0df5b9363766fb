use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use plate_hom::BASIS_TAG;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::Failure;

fn sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
struct Entry {
    path: String,
    sha256: String,
}

/// Output directory plus the record of what was read and written.
pub struct Run {
    dir: PathBuf,
    inputs: Vec<Entry>,
    artifacts: Vec<Entry>,
}

impl Run {
    pub fn new(dir: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), inputs: Vec::new(), artifacts: Vec::new() })
    }

    /// Reads an input file and records its hash.
    pub fn read(&mut self, path: &Path) -> Result<String, Failure> {
        let text =
            fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
        self.inputs.push(Entry { path: path.display().to_string(), sha256: sha256(text.as_bytes()) });
        Ok(text)
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), Failure> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)
                .map_err(|e| Failure::Usage(format!("cannot create {}: {e}", parent.display())))?;
        }
        fs::write(&path, contents).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
        self.artifacts.push(Entry { path: name.to_string(), sha256: sha256(contents.as_bytes()) });
        log::info!("wrote {}", path.display());
        Ok(())
    }

    /// Writes `value` as pretty JSON with the basis tag added at top level.
    pub fn write_json(&mut self, name: &str, value: Value) -> Result<(), Failure> {
        let mut value = value;
        if let Value::Object(map) = &mut value {
            map.entry("basis").or_insert_with(|| json!(BASIS_TAG));
        }
        let text = serde_json::to_string_pretty(&value).expect("json value serializes") + "\n";
        self.write(name, &text)
    }

    pub fn finish(self, command: &str, parameters: Value, checks: Option<bool>) -> Result<(), Failure> {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let manifest = json!({
            "tool": "plate-hom",
            "version": env!("CARGO_PKG_VERSION"),
            "basis": BASIS_TAG,
            "command": command,
            "parameters": parameters,
            "inputs": self.inputs,
            "artifacts": self.artifacts,
            "checks_passed": checks,
            "timestamp_unix": timestamp,
        });
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        fs::write(&path, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
    }
}
