//! Run directories, manifests and checkpoint files.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use spacearm::assembly::{decode_checkpoint, encode_checkpoint, Checkpoint};

use crate::error::{usage, IoContext, Result};
use crate::model::sha256_hex;

/// Environment variable naming the root of automatically named run directories.
pub const OUT_ENV: &str = "SPACEARM_OUT";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn output_root() -> PathBuf {
    std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"))
}

/// Creates a fresh run directory. An explicit directory must not hold a
/// run already; automatic names get a numeric suffix instead.
pub fn new_run_dir(explicit: Option<&Path>, name: &str) -> Result<PathBuf> {
    if let Some(dir) = explicit {
        if dir.join(MANIFEST_FILE).exists() {
            return Err(usage(format!("{} already holds a run; choose another --out", dir.display())));
        }
        std::fs::create_dir_all(dir).at(dir)?;
        return Ok(dir.to_path_buf());
    }
    let root = output_root();
    std::fs::create_dir_all(&root).at(&root)?;
    for k in 1u32.. {
        let dir = if k == 1 { root.join(name) } else { root.join(format!("{name}-{k}")) };
        match std::fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e).at(&dir),
        }
    }
    unreachable!()
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    /// Relative to the run directory.
    pub path: String,
    pub sha256: String,
}

/// One per run directory; lists every file the run wrote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    /// Robot preset or model file, and the digest of its description.
    pub robot: String,
    pub robot_hash: String,
    pub output_dir: String,
    pub started_unix: u64,
    #[serde(default)]
    pub resumed_unix: Vec<u64>,
    pub finished_unix: Option<u64>,
    /// `running`, `completed` or `diverged`.
    pub status: String,
    pub outputs: Vec<OutputFile>,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, seeds: Vec<u64>, robot: &str, robot_hash: &str, dir: &Path) -> Self {
        Self {
            command: command.into(),
            argv: std::env::args().collect(),
            config,
            seeds,
            robot: robot.into(),
            robot_hash: robot_hash.into(),
            output_dir: dir.display().to_string(),
            started_unix: unix_now(),
            resumed_unix: Vec::new(),
            finished_unix: None,
            status: "running".into(),
            outputs: Vec::new(),
        }
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        Ok(serde_json::from_str(&std::fs::read_to_string(&path).at(&path)?)?)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, serde_json::to_string_pretty(self)? + "\n").at(&path)
    }

    /// Records (or refreshes) the digest of an output file.
    pub fn record(&mut self, dir: &Path, rel: &str) -> Result<()> {
        let path = dir.join(rel);
        let sha256 = sha256_hex(&std::fs::read(&path).at(&path)?);
        match self.outputs.iter_mut().find(|o| o.path == rel) {
            Some(o) => o.sha256 = sha256,
            None => self.outputs.push(OutputFile { path: rel.into(), sha256 }),
        }
        Ok(())
    }

    pub fn finish(&mut self, dir: &Path, status: &str) -> Result<()> {
        self.status = status.into();
        self.finished_unix = Some(unix_now());
        self.write(dir)
    }
}

pub fn save_checkpoint(path: &Path, ck: &Checkpoint) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).at(parent)?;
    }
    std::fs::write(path, encode_checkpoint(ck)).at(path)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    Ok(decode_checkpoint(&std::fs::read(path).at(path)?)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n").at(path)
}
