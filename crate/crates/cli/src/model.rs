//! Robot model files and content hashes.

use std::path::Path;

use sha2::{Digest, Sha256};
use spacearm::robot::RobotConfig;

use crate::error::{usage, IoContext, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Resolves a preset name (`desk2`, `desk4`, `full4`) or a TOML model file.
pub fn load_robot(spec: &str) -> Result<RobotConfig> {
    if let Some(robot) = RobotConfig::preset(spec) {
        return Ok(robot);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(usage(format!("`{spec}` is neither a robot preset nor a model file")));
    }
    let text = std::fs::read_to_string(path).at(path)?;
    let robot: RobotConfig = toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    robot.validate()?;
    Ok(robot)
}

pub fn robot_to_toml(robot: &RobotConfig) -> String {
    toml::to_string_pretty(robot).expect("robot configs serialize to TOML")
}

/// Digest of the canonical JSON form of a robot description.
pub fn robot_hash(robot: &RobotConfig) -> String {
    sha256_hex(&serde_json::to_vec(robot).expect("robot configs serialize to JSON"))
}
