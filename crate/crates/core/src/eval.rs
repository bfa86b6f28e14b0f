//! Deterministic policy evaluation.

use alloc::vec::Vec;

use crate::error::{config_err, Result};
use crate::marl::{derive_seed, ErrorSummary, MultiAgentEnv};
use crate::nn::GaussianPolicy;

/// Base attitude error (rad) under which a reorientation episode succeeds.
pub const SUCCESS_THRESHOLD: f64 = 0.05;

const STREAM_EVAL: u64 = 5;

/// Goal seeds of an evaluation run.
pub fn eval_seeds(seed: u64, episodes: usize) -> Vec<u64> {
    (0..episodes as u64).map(|e| derive_seed(seed, u64::MAX, e, STREAM_EVAL)).collect()
}

/// Per-step record of one evaluated episode.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeTrace {
    pub seed: u64,
    /// `[t][agent]`.
    pub rewards: Vec<Vec<f64>>,
    pub errors: Vec<ErrorSummary>,
    pub collisions: Vec<bool>,
    pub times: Vec<f64>,
}

impl EpisodeTrace {
    /// Sum over steps of the mean reward over agents.
    pub fn mean_agent_return(&self) -> f64 {
        self.rewards.iter().map(|r| r.iter().sum::<f64>() / r.len().max(1) as f64).sum()
    }
    /// Sum over steps and agents.
    pub fn total_return(&self) -> f64 {
        self.rewards.iter().flatten().sum()
    }
    pub fn final_errors(&self) -> ErrorSummary {
        self.errors.last().copied().unwrap_or_default()
    }
    pub fn collided(&self) -> bool {
        self.collisions.iter().any(|&c| c)
    }
}

/// Runs one episode with the policies' mean actions.
pub fn run_episode<E: MultiAgentEnv>(env: &E, actors: &[GaussianPolicy], seed: u64) -> Result<EpisodeTrace> {
    if actors.len() != env.agent_count() {
        return Err(config_err!("{} policies for {} agents", actors.len(), env.agent_count()));
    }
    let mut env = env.clone();
    let mut obs = env.reset(seed)?.observations;
    let mut trace = EpisodeTrace { seed, ..Default::default() };
    loop {
        let actions = actors.iter().zip(&obs).map(|(a, o)| a.deterministic(o)).collect::<Result<Vec<_>>>()?;
        let out = env.step(&actions)?;
        if let Some(info) = &out.info {
            trace.errors.push(env.summarize(info));
            trace.collisions.push(info.collision.is_some());
            trace.times.push(info.time);
        }
        trace.rewards.push(out.rewards);
        obs = out.observations;
        if out.done {
            return Ok(trace);
        }
    }
}

/// Aggregate of several deterministic episodes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub episodes: usize,
    /// Mean over episodes of the summed per-agent-mean reward.
    pub mean_reward: f64,
    /// Mean over episodes of the reward summed over agents and steps.
    pub mean_total_reward: f64,
    pub position_error: Option<f64>,
    pub orientation_error: Option<f64>,
    pub base_error: Option<f64>,
    /// Fraction of episodes ending with base error below [`SUCCESS_THRESHOLD`].
    pub success_rate: Option<f64>,
    pub collision_rate: f64,
}

impl EvalReport {
    pub fn from_traces(traces: &[EpisodeTrace]) -> Self {
        let n = traces.len().max(1) as f64;
        let mean_opt = |f: &dyn Fn(&ErrorSummary) -> Option<f64>| {
            let xs: Vec<f64> = traces.iter().filter_map(|t| f(&t.final_errors())).collect();
            if xs.is_empty() {
                None
            } else {
                Some(xs.iter().sum::<f64>() / xs.len() as f64)
            }
        };
        let base = mean_opt(&|e| e.base);
        Self {
            episodes: traces.len(),
            mean_reward: traces.iter().map(EpisodeTrace::mean_agent_return).sum::<f64>() / n,
            mean_total_reward: traces.iter().map(EpisodeTrace::total_return).sum::<f64>() / n,
            position_error: mean_opt(&|e| e.position),
            orientation_error: mean_opt(&|e| e.orientation),
            base_error: base,
            success_rate: base.map(|_| {
                traces.iter().filter(|t| t.final_errors().base.is_some_and(|b| b < SUCCESS_THRESHOLD)).count() as f64 / n
            }),
            collision_rate: traces.iter().filter(|t| t.collided()).count() as f64 / n,
        }
    }
}

/// Evaluates `actors` on one episode per seed.
pub fn evaluate<E: MultiAgentEnv>(env: &E, actors: &[GaussianPolicy], seeds: &[u64]) -> Result<EvalReport> {
    let traces = seeds.iter().map(|&s| run_episode(env, actors, s)).collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::from_traces(&traces))
}

/// Mean of `xs[from..]`, the steady part of an error series.
pub fn steady_mean(xs: &[f64], from: usize) -> Option<f64> {
    let tail = xs.get(from..)?;
    if tail.is_empty() {
        None
    } else {
        Some(tail.iter().sum::<f64>() / tail.len() as f64)
    }
}
