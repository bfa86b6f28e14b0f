//! Training run configuration (TOML).
//!
//! ```toml
//! robot = "desk2"          # preset name or model file
//! task = "trajectory"      # trajectory | reorientation
//! algo = "mappo"           # mappo | ppo-central
//! seed = 1
//! workers = 1
//! checkpoint_every = 50    # iterations
//! episode_length = 50      # control steps
//!
//! [train]                  # overrides of the task's hyperparameter preset
//! max_env_steps = 200000
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use spacearm::env::TaskSpec;
use spacearm::marl::TrainConfig;

use crate::error::{usage, IoContext, Result};
use crate::model::sha256_hex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TaskName {
    Trajectory,
    Reorientation,
}

impl TaskName {
    pub fn spec(self, episode_length: usize) -> TaskSpec {
        match self {
            TaskName::Trajectory => TaskSpec::trajectory(),
            TaskName::Reorientation => TaskSpec::reorientation(),
        }
        .with_episode_length(episode_length)
    }

    pub fn preset(self) -> TrainConfig {
        match self {
            TaskName::Trajectory => TrainConfig::trajectory(),
            TaskName::Reorientation => TrainConfig::reorientation(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    Mappo,
    PpoCentral,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Mappo => "mappo",
            Algo::PpoCentral => "ppo-central",
        }
    }
}

/// Fully resolved training configuration; the snapshot stored with a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub robot: String,
    pub task: TaskName,
    pub algo: Algo,
    pub seed: u64,
    pub workers: usize,
    pub checkpoint_every: u64,
    pub episode_length: usize,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            robot: "desk2".into(),
            task: TaskName::Trajectory,
            algo: Algo::Mappo,
            seed: 0,
            workers: 1,
            checkpoint_every: 50,
            episode_length: spacearm::env::DEFAULT_EPISODE_LENGTH,
            train: TrainConfig::trajectory(),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunFile {
    robot: Option<String>,
    task: Option<TaskName>,
    algo: Option<Algo>,
    seed: Option<u64>,
    workers: Option<usize>,
    checkpoint_every: Option<u64>,
    episode_length: Option<usize>,
    train: Option<toml::Table>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub robot: Option<String>,
    pub task: Option<TaskName>,
    pub algo: Option<Algo>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub max_env_steps: Option<u64>,
}

fn bad(path: &str, e: impl std::fmt::Display) -> crate::CliError {
    usage(format!("{path}: {e}"))
}

impl RunConfig {
    /// Parses a config file; `[train]` keys override the chosen task's preset.
    pub fn parse(text: &str, origin: &str, over: &Overrides) -> Result<Self> {
        let file: RunFile = toml::from_str(text).map_err(|e| bad(origin, e))?;
        let d = Self::default();
        let task = over.task.or(file.task).unwrap_or(d.task);
        let mut train = task.preset();
        if let Some(table) = file.train {
            let mut merged = toml::Table::try_from(&train).map_err(|e| bad(origin, e))?;
            merged.extend(table);
            train = merged.try_into().map_err(|e| bad(&format!("{origin} [train]"), e))?;
        }
        if let Some(steps) = over.max_env_steps {
            train.max_env_steps = steps;
        }
        let cfg = Self {
            robot: over.robot.clone().or(file.robot).unwrap_or(d.robot),
            task,
            algo: over.algo.or(file.algo).unwrap_or(d.algo),
            seed: over.seed.or(file.seed).unwrap_or(d.seed),
            workers: over.workers.or(file.workers).unwrap_or(d.workers),
            checkpoint_every: file.checkpoint_every.unwrap_or(d.checkpoint_every),
            episode_length: file.episode_length.unwrap_or(d.episode_length),
            train,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, over: &Overrides) -> Result<Self> {
        match path {
            Some(p) => Self::parse(&std::fs::read_to_string(p).at(p)?, &p.display().to_string(), over),
            None => Self::parse("", "defaults", over),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(usage("workers must be at least 1"));
        }
        if self.checkpoint_every == 0 {
            return Err(usage("checkpoint_every must be at least 1"));
        }
        if self.episode_length == 0 {
            return Err(usage("episode_length must be at least 1"));
        }
        self.train.validate()?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("run configs serialize to TOML")
    }

    /// Digest of the snapshot, excluding the worker count, which does not
    /// change what is learned.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.workers = 1;
        sha256_hex(canonical.to_toml().as_bytes())
    }
}
