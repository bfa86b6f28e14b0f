//! Subcommand implementations.

pub mod evaluate;
pub mod reassemble;
pub mod train;

use std::path::{Path, PathBuf};

use serde::Serialize;
use spacearm::assembly::{Checkpoint, PolicySet};
use spacearm::env::{DisturbanceMode, DisturbanceSpec, EnvConfig, SpaceRobotEnv, StepInfo, TaskSpec, WrenchPulse};
use spacearm::env::{ACTION_DIM, DEFAULT_EPISODE_LENGTH, OBS_DIM};
use spacearm::eval::{EpisodeTrace, EvalReport, SUCCESS_THRESHOLD};
use spacearm::marl::{summarize_errors, ErrorSummary};
use spacearm::nn::GaussianPolicy;
use spacearm::robot::{build_space_robot, RobotConfig};
use spacearm::Error;

use crate::cli::{Mode, ScenarioArgs};
use crate::error::{usage, CliError, Result};
use crate::model::{load_robot, robot_hash};
use crate::runs::load_checkpoint;

type Vec3 = spacearm::Vector3<f64>;

/// Actors of a checkpoint, decentralized or centralized.
#[derive(Debug, Clone)]
pub enum Policy {
    Agents(Vec<GaussianPolicy>),
    /// One actor on the global state commanding every joint.
    Central(GaussianPolicy),
}

impl Policy {
    /// Checks the set against `env` and extracts its actors.
    pub fn for_env(set: &PolicySet, env: &SpaceRobotEnv) -> Result<Self> {
        if set.provenance.algorithm == "ppo-central" {
            let actor = match set.agents.as_slice() {
                [a] => a.actor.clone(),
                _ => return Err(Error::Composition("a centralized set holds exactly one actor".into()).into()),
            };
            let joints = env.tree().joint_count();
            if actor.obs_dim() != env.state_dim() || actor.action_dim() != joints {
                return Err(Error::Composition(format!(
                    "centralized actor maps {} -> {}, environment needs {} -> {joints}",
                    actor.obs_dim(),
                    actor.action_dim(),
                    env.state_dim()
                ))
                .into());
            }
            return Ok(Policy::Central(actor));
        }
        set.check_against(env.agents(), OBS_DIM, ACTION_DIM)?;
        Ok(Policy::Agents(set.actors()))
    }

    fn actions(&self, obs: &[Vec<f64>], state: &[f64]) -> spacearm::Result<Vec<Vec<f64>>> {
        match self {
            Policy::Agents(actors) => actors.iter().zip(obs).map(|(a, o)| a.deterministic(o)).collect(),
            Policy::Central(actor) => {
                let u = actor.deterministic(state)?;
                Ok(u.chunks(ACTION_DIM).map(<[f64]>::to_vec).collect())
            }
        }
    }
}

/// One control step of an evaluated episode.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub rewards: Vec<f64>,
    pub info: StepInfo,
    pub summary: ErrorSummary,
}

/// Runs one episode with deterministic actions and keeps every step.
pub fn record_episode(env: &SpaceRobotEnv, policy: &Policy, seed: u64) -> Result<Vec<StepRecord>> {
    let mut env = env.clone();
    let reset = env.reset(seed)?;
    let (mut obs, mut state) = (reset.observations, reset.global_state);
    let mut out = Vec::with_capacity(env.task().episode_length);
    loop {
        let actions = policy.actions(&obs, &state)?;
        let t = env.step(&actions)?;
        let summary = summarize_errors(&env, &t.info);
        let rewards = match policy {
            Policy::Agents(_) => t.rewards,
            Policy::Central(_) => vec![t.rewards.iter().sum()],
        };
        out.push(StepRecord { rewards, info: t.info, summary });
        obs = t.observations;
        state = t.global_state;
        if t.done {
            return Ok(out);
        }
    }
}

pub fn to_trace(seed: u64, steps: &[StepRecord]) -> EpisodeTrace {
    EpisodeTrace {
        seed,
        rewards: steps.iter().map(|s| s.rewards.clone()).collect(),
        errors: steps.iter().map(|s| s.summary).collect(),
        collisions: steps.iter().map(|s| s.info.collision.is_some()).collect(),
        times: steps.iter().map(|s| s.info.time).collect(),
    }
}

/// A checkpoint with the robot it runs on.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub path: PathBuf,
    pub checkpoint: Checkpoint,
    /// Preset name or model file.
    pub robot_spec: String,
    pub robot: RobotConfig,
}

/// Loads a checkpoint and its robot. A robot model version other than the
/// one trained on is a version error; a different description only warns.
pub fn open_checkpoint(path: &Path, robot_override: Option<&str>) -> Result<Loaded> {
    let checkpoint = load_checkpoint(path)?;
    let prov = &checkpoint.policies.provenance;
    let robot_spec = robot_override.unwrap_or(&prov.robot).to_string();
    let robot = load_robot(&robot_spec)?;
    if robot.model_version != prov.model_version {
        return Err(Error::Version(format!(
            "{} was trained on robot model version {}, `{robot_spec}` is version {}",
            path.display(),
            prov.model_version,
            robot.model_version
        ))
        .into());
    }
    if robot_hash(&robot) != prov.robot_hash {
        eprintln!("warning: {} was trained on a different description of `{robot_spec}`", path.display());
    }
    Ok(Loaded { path: path.to_path_buf(), checkpoint, robot_spec, robot })
}

fn vec3(v: Option<[f64; 3]>) -> Vec3 {
    let v = v.unwrap_or([0.0; 3]);
    Vec3::new(v[0], v[1], v[2])
}

/// Builds the evaluation environment of a checkpoint under a scenario.
pub fn scenario_env(loaded: &Loaded, s: &ScenarioArgs) -> Result<SpaceRobotEnv> {
    if !(s.mass_scale > 0.0 && s.mass_scale.is_finite()) {
        return Err(usage(format!("mass scale must be positive, got {}", s.mass_scale)));
    }
    let mut robot = loaded.robot.clone();
    robot.base_mass *= s.mass_scale;
    let tree = build_space_robot(&robot)?;
    let mut cfg = EnvConfig::for_robot(&robot);
    let pulse = if s.force.is_some() || s.torque.is_some() {
        let mut p = WrenchPulse::on_arm_tip(&tree, s.disturb_arm, vec3(s.force), vec3(s.torque), s.duration)?;
        p.onset = s.onset;
        p.mode = match s.mode {
            Mode::Joint => DisturbanceMode::Joint,
            Mode::External => DisturbanceMode::External,
        };
        Some(p)
    } else {
        None
    };
    let horizon = match (s.horizon, &pulse) {
        (Some(0), _) => return Err(usage("horizon must be at least one step")),
        (Some(h), _) => h,
        (None, Some(p)) => (2.0 * p.onset / cfg.control_period()).ceil() as usize,
        (None, None) => DEFAULT_EPISODE_LENGTH,
    };
    cfg.disturbance = DisturbanceSpec { pulse, failed_arm: s.failed_arm };
    let task = TaskSpec { kind: loaded.checkpoint.policies.task.clone(), episode_length: horizon };
    Ok(SpaceRobotEnv::new(tree, task, cfg)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub max: f64,
}

fn stat(xs: impl Iterator<Item = Option<f64>>) -> Option<Stat> {
    let xs: Vec<f64> = xs.flatten().collect();
    if xs.is_empty() {
        return None;
    }
    Some(Stat { mean: xs.iter().sum::<f64>() / xs.len() as f64, max: xs.iter().copied().fold(f64::MIN, f64::max) })
}

/// Aggregate of deterministic evaluation episodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalSummary {
    pub episodes: usize,
    pub mean_reward: f64,
    pub mean_total_reward: f64,
    pub position_error_m: Option<Stat>,
    pub orientation_error_rad: Option<Stat>,
    pub base_error_rad: Option<Stat>,
    pub success_threshold_rad: f64,
    pub success_rate: Option<f64>,
    pub collision_rate: f64,
}

impl EvalSummary {
    pub fn from_traces(traces: &[EpisodeTrace]) -> Self {
        let r = EvalReport::from_traces(traces);
        let finals: Vec<ErrorSummary> = traces.iter().map(EpisodeTrace::final_errors).collect();
        Self {
            episodes: r.episodes,
            mean_reward: r.mean_reward,
            mean_total_reward: r.mean_total_reward,
            position_error_m: stat(finals.iter().map(|e| e.position)),
            orientation_error_rad: stat(finals.iter().map(|e| e.orientation)),
            base_error_rad: stat(finals.iter().map(|e| e.base)),
            success_threshold_rad: SUCCESS_THRESHOLD,
            success_rate: r.success_rate,
            collision_rate: r.collision_rate,
        }
    }
}

pub fn write_episodes_csv(path: &Path, traces: &[EpisodeTrace]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "episode",
        "seed",
        "mean_agent_return",
        "total_return",
        "position_error_m",
        "orientation_error_rad",
        "base_error_rad",
        "success",
        "collided",
    ])?;
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for (i, t) in traces.iter().enumerate() {
        let e = t.final_errors();
        let success = e.base.map(|b| (b < SUCCESS_THRESHOLD).to_string()).unwrap_or_default();
        w.write_record([
            i.to_string(),
            t.seed.to_string(),
            t.mean_agent_return().to_string(),
            t.total_return().to_string(),
            opt(e.position),
            opt(e.orientation),
            opt(e.base),
            success,
            t.collided().to_string(),
        ])?;
    }
    w.flush().map_err(|e| CliError::Format(e.to_string()))
}

pub(crate) fn check_episodes(n: usize) -> Result<()> {
    if n == 0 {
        return Err(usage("--episodes must be at least 1"));
    }
    Ok(())
}
