//! Run manifests: config echo, versions, content hashes and timing.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

/// Content hash in the style of a git blob id: SHA-256 of
/// `"blob <len>\0"` followed by the bytes.
pub fn blob_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

pub struct Manifest {
    dir: PathBuf,
    command: String,
    config_text: String,
    started: f64,
    entries: Vec<(String, String)>,
    inputs: Vec<(String, String)>,
    outputs: Vec<PathBuf>,
}

impl Manifest {
    pub fn new(dir: &Path, command: &str, config_text: String) -> Self {
        Self {
            dir: dir.to_path_buf(),
            command: command.into(),
            config_text,
            started: unix_now(),
            entries: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// `manifest_<command>.txt` in the output directory.
    pub fn path(&self) -> PathBuf {
        self.dir.join(format!("manifest_{}.txt", self.command))
    }

    pub fn entry(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn input(&mut self, name: impl Into<String>, bytes: &[u8]) {
        self.inputs.push((name.into(), blob_hash(bytes)));
    }

    pub fn output(&mut self, path: PathBuf) {
        self.outputs.push(path);
    }

    /// Writes `manifest.txt` with the given status and returns its path.
    pub fn write(&self, status: &str) -> std::io::Result<PathBuf> {
        let mut s = String::new();
        let _ = writeln!(s, "# pushmap run manifest");
        let _ = writeln!(s, "command = {}", self.command);
        let _ = writeln!(s, "status = {status}");
        let _ = writeln!(s, "pushmap_version = {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "started_unix = {:.3}", self.started);
        let _ = writeln!(s, "finished_unix = {:.3}", unix_now());
        let _ = writeln!(s, "config_hash = {}", blob_hash(self.config_text.as_bytes()));
        for (k, v) in &self.inputs {
            let _ = writeln!(s, "input_hash.{k} = {v}");
        }
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k} = {v}");
        }
        for p in &self.outputs {
            if let Ok(bytes) = std::fs::read(p) {
                let name = p.strip_prefix(&self.dir).unwrap_or(p);
                let _ = writeln!(s, "output_hash.{} = {}", name.display(), blob_hash(&bytes));
            }
        }
        let _ = writeln!(s, "\n# config");
        s.push_str(&self.config_text);
        let path = self.path();
        std::fs::write(&path, s)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_hash_of_empty_input() {
        // sha256 of "blob 0\0"
        assert_eq!(blob_hash(b""), "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813");
    }

    #[test]
    fn hash_depends_on_content() {
        assert_ne!(blob_hash(b"a"), blob_hash(b"b"));
        assert_eq!(blob_hash(b"abc").len(), 64);
    }
}
