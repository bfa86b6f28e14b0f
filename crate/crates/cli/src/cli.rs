//! Command-line definitions.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{Algo, TaskName};

const TRAIN_AFTER: &str = "\
Outputs (in the run directory):
  config.toml             resolved configuration
  metrics.csv             one row per iteration
  checkpoints/iter-N.octo periodic checkpoints (resumable)
  policy.octo             final checkpoint
  diverged.octo           last finite state, written on divergence
  manifest.json           command, config, seeds, model hash, output digests

metrics.csv columns (append-only):
  iteration, env_steps, reward_agent_1..reward_agent_N (mean per-step reward),
  position_error_m, orientation_error_rad, base_error_rad (final errors, empty
  when the task has none), collision_rate, mean_return, actor_objective,
  critic_loss, entropy

Run directories default to $SPACEARM_OUT/<name> (SPACEARM_OUT defaults to
./runs); an existing run is never overwritten.
Exit codes: 0 ok, 2 usage, 3 divergence, 4 composition or version error.";

const EVAL_AFTER: &str = "\
Outputs: summary.json and episodes.csv with columns
  episode, seed, mean_agent_return, total_return, position_error_m,
  orientation_error_rad, base_error_rad, success, collided
Errors are final-step values; success means base error < 0.05 rad.";

const SWEEP_AFTER: &str = "\
Outputs: summary.json and sweep.csv with columns
  mass_scale, base_mass_kg, episodes, success_rate, base_error_rad,
  position_error_m, orientation_error_rad, collision_rate";

const DISTURB_AFTER: &str = "\
Outputs: summary.json and timeseries.csv with columns
  step, time_s, nominal_position_error_m, disturbed_position_error_m,
  nominal_orientation_error_rad, disturbed_orientation_error_rad,
  nominal_base_error_rad, disturbed_base_error_rad
Values are means over episodes; a failed arm is excluded from both series.";

const REASSEMBLE_AFTER: &str = "\
Outputs: report.json, mixed.octo and episodes.csv (as for eval).";

const TRACE_AFTER: &str = "\
Outputs: trace.csv with columns
  step, time_s, reward_agent_1..N, position_error_arm_1..M_m,
  orientation_error_arm_1..M_rad, base_error_rad, collision";

#[derive(Debug, Parser)]
#[command(name = "spacearm", version, about = "Train and evaluate decentralized controllers for a free-floating multi-arm space robot")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train MAPPO or the centralized PPO baseline
    #[command(after_long_help = TRAIN_AFTER)]
    Train(TrainArgs),
    /// Evaluate a checkpoint with deterministic actions
    #[command(after_long_help = EVAL_AFTER)]
    Eval(EvalArgs),
    /// Evaluate a checkpoint across base mass scales
    #[command(after_long_help = SWEEP_AFTER)]
    SweepMass(SweepArgs),
    /// Compare disturbed and nominal error time series
    #[command(after_long_help = DISTURB_AFTER)]
    Disturb(DisturbArgs),
    /// Compose frozen trajectory and reorientation policies and evaluate the mixed task
    #[command(after_long_help = REASSEMBLE_AFTER)]
    ReassembleEval(ReassembleArgs),
    /// Write the per-step record of one episode
    #[command(after_long_help = TRACE_AFTER)]
    ExportTrace(TraceArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// TOML run configuration
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Robot preset (desk2, desk4, full4) or model file
    #[arg(long, alias = "robot")]
    pub preset: Option<String>,
    #[arg(long, value_enum)]
    pub task: Option<TaskName>,
    #[arg(long, value_enum)]
    pub algo: Option<Algo>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Rollout threads
    #[arg(long)]
    pub workers: Option<usize>,
    /// Environment step budget
    #[arg(long)]
    pub max_steps: Option<u64>,
    /// Run directory (must not hold a run)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Continue the run in this directory from its latest checkpoint
    #[arg(long, conflicts_with_all = ["config", "preset", "task", "algo", "seed", "out"])]
    pub resume: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Reacted at the joint by the parent body; momentum is unchanged
    Joint,
    /// Applied to the body alone
    External,
}

/// Scenario changes shared by the evaluation commands.
#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// Robot preset or model file; defaults to the checkpoint's robot
    #[arg(long)]
    pub robot: Option<String>,
    /// Base mass multiplier
    #[arg(long, default_value_t = 1.0)]
    pub mass_scale: f64,
    /// Arm whose joints stay locked for the whole episode
    #[arg(long)]
    pub failed_arm: Option<usize>,
    /// Disturbance force x,y,z in N (world frame) on the tip link of --disturb-arm
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    pub force: Option<[f64; 3]>,
    /// Disturbance torque x,y,z in N m
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    pub torque: Option<[f64; 3]>,
    #[arg(long, default_value_t = 0)]
    pub disturb_arm: usize,
    /// Disturbance onset in s
    #[arg(long, default_value_t = spacearm::env::DEFAULT_ONSET)]
    pub onset: f64,
    /// Disturbance duration in s
    #[arg(long, default_value_t = 0.2)]
    pub duration: f64,
    #[arg(long, value_enum, default_value_t = Mode::Joint)]
    pub mode: Mode,
    /// Control steps per episode; defaults to the training length, or twice
    /// the onset when a disturbance is given
    #[arg(long)]
    pub horizon: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value_t = 30)]
    pub episodes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value_t = 30)]
    pub episodes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Base mass multipliers
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.75,1.0,1.25,1.5")]
    pub grid: Vec<f64>,
    #[arg(long)]
    pub robot: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DisturbArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value_t = 30)]
    pub episodes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Length in s of the windows averaged for steady errors
    #[arg(long, default_value_t = 2.5)]
    pub window: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReassembleArgs {
    /// Donor trained on trajectory planning
    #[arg(long)]
    pub trajectory: PathBuf,
    /// Donor trained on base reorientation
    #[arg(long)]
    pub reorientation: PathBuf,
    /// Per-arm tasks, e.g. T,R,R,R; defaults to arm 1 reaching, the rest reorienting
    #[arg(long, value_delimiter = ',')]
    pub assign: Option<Vec<String>>,
    #[arg(long, default_value_t = 30)]
    pub episodes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Index of the evaluation episode to record
    #[arg(long, default_value_t = 0)]
    pub episode: usize,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_vec3(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected x,y,z, got `{s}`"));
    }
    let mut v = [0.0; 3];
    for (d, p) in v.iter_mut().zip(parts) {
        *d = p.parse().map_err(|_| format!("`{p}` is not a number"))?;
    }
    Ok(v)
}
