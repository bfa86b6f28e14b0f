use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::TrainConfig;
use super::gae::{compute_gae, normalize};
use super::ppo::{actor_optimizer, critic_update, ppo_actor_update, ActorSample, ValueFunction};
use crate::env::{Reset, SpaceRobotEnv, StepInfo};
use crate::error::{config_err, Error, Result};
use crate::nn::{Adam, GaussianPolicy, RunningNorm};

/// Errors of interest at the end of an episode, averaged over the arms the
/// task scores on. `None` when the task has no such arms.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorSummary {
    pub position: Option<f64>,
    pub orientation: Option<f64>,
    pub base: Option<f64>,
}

/// Result of one environment step as seen by the trainer.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observations: Vec<Vec<f64>>,
    pub global_state: Vec<f64>,
    pub rewards: Vec<f64>,
    pub done: bool,
    pub info: Option<StepInfo>,
}

/// Cooperative environment with per-agent observations and a global state.
pub trait MultiAgentEnv: Clone + Send + Sync {
    fn agent_count(&self) -> usize;
    fn obs_dim(&self, agent: usize) -> usize;
    fn action_dim(&self, agent: usize) -> usize;
    fn state_dim(&self) -> usize;
    fn reset(&mut self, seed: u64) -> Result<Reset>;
    fn step(&mut self, actions: &[Vec<f64>]) -> Result<StepOutcome>;
    fn summarize(&self, _info: &StepInfo) -> ErrorSummary {
        ErrorSummary::default()
    }
}

impl MultiAgentEnv for SpaceRobotEnv {
    fn agent_count(&self) -> usize {
        self.agents().len()
    }
    fn obs_dim(&self, _agent: usize) -> usize {
        SpaceRobotEnv::obs_dim(self)
    }
    fn action_dim(&self, _agent: usize) -> usize {
        crate::env::ACTION_DIM
    }
    fn state_dim(&self) -> usize {
        SpaceRobotEnv::state_dim(self)
    }
    fn reset(&mut self, seed: u64) -> Result<Reset> {
        SpaceRobotEnv::reset(self, seed)
    }
    fn step(&mut self, actions: &[Vec<f64>]) -> Result<StepOutcome> {
        let t = SpaceRobotEnv::step(self, actions)?;
        Ok(StepOutcome {
            observations: t.observations,
            global_state: t.global_state,
            rewards: t.rewards,
            done: t.done,
            info: Some(t.info),
        })
    }
    fn summarize(&self, info: &StepInfo) -> ErrorSummary {
        summarize_errors(self, info)
    }
}

/// Position errors over trajectory arms, orientation errors over trajectory
/// arms with wrist agents, base error when any arm reorients the base. A
/// failed arm is not scored.
pub fn summarize_errors(env: &SpaceRobotEnv, info: &StepInfo) -> ErrorSummary {
    use crate::assembly::AgentRole;
    let mean = |xs: Vec<f64>| if xs.is_empty() { None } else { Some(xs.iter().sum::<f64>() / xs.len() as f64) };
    let failed = env.failed_arm();
    let arms_with = |role: AgentRole| -> Vec<usize> {
        let mut arms: Vec<usize> =
            env.agents().iter().filter(|a| a.role == role && Some(a.arm) != failed).map(|a| a.arm).collect();
        arms.dedup();
        arms
    };
    ErrorSummary {
        position: mean(arms_with(AgentRole::PositionReacher).iter().map(|&a| info.position_errors[a]).collect()),
        orientation: mean(
            arms_with(AgentRole::OrientationReacher).iter().map(|&a| info.orientation_errors[a]).collect(),
        ),
        base: if arms_with(AgentRole::BaseAdjuster).is_empty() { None } else { Some(info.base_error_norm()) },
    }
}

/// Mixes a run seed with stream coordinates (splitmix64 finalizer).
pub fn derive_seed(seed: u64, a: u64, b: u64, stream: u64) -> u64 {
    let mut z = seed;
    for v in [a, b, stream] {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(v.wrapping_mul(0xD1B5_4A32_D192_ED03));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

const STREAM_INIT: u64 = 1;
const STREAM_GOALS: u64 = 2;
const STREAM_NOISE: u64 = 3;
const STREAM_SHUFFLE: u64 = 4;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeMetrics {
    /// Undiscounted return per agent.
    pub returns: Vec<f64>,
    pub steps: usize,
    pub final_errors: ErrorSummary,
    pub collided: bool,
}

/// One episode of experience for every agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub seed: u64,
    /// `[agent][t]`.
    pub obs: Vec<Vec<Vec<f64>>>,
    pub pre_tanh: Vec<Vec<Vec<f64>>>,
    pub noise: Vec<Vec<Vec<f64>>>,
    pub log_probs: Vec<Vec<f64>>,
    pub rewards: Vec<Vec<f64>>,
    pub values: Vec<Vec<f64>>,
    /// Global state before each step.
    pub states: Vec<Vec<f64>>,
    pub dones: Vec<bool>,
    /// Value of the state after the last step, zero when it is terminal.
    pub bootstrap: Vec<f64>,
    pub metrics: EpisodeMetrics,
}

impl Episode {
    pub fn len(&self) -> usize {
        self.states.len()
    }
    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Actor, critic, target critic, their optimizers and the running input
/// statistics for one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentLearner {
    pub actor: GaussianPolicy,
    pub critic: ValueFunction,
    pub target_critic: ValueFunction,
    pub actor_opt: Adam,
    pub critic_opt: Adam,
    pub obs_stats: RunningNorm,
    pub state_stats: RunningNorm,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IterationMetrics {
    pub iteration: u64,
    pub env_steps: u64,
    /// Mean per-step reward of each agent.
    pub mean_reward: Vec<f64>,
    pub mean_return: f64,
    pub position_error: Option<f64>,
    pub orientation_error: Option<f64>,
    pub base_error: Option<f64>,
    pub collision_rate: f64,
    pub actor_objective: f64,
    pub critic_loss: f64,
    pub entropy: f64,
}

/// Per-agent PPO with centralized critics.
#[derive(Debug, Clone)]
pub struct Trainer<E: MultiAgentEnv> {
    env: E,
    cfg: TrainConfig,
    seed: u64,
    learners: Vec<AgentLearner>,
    iteration: u64,
    env_steps: u64,
}

impl<E: MultiAgentEnv> Trainer<E> {
    pub fn new(env: E, cfg: TrainConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0, 0, STREAM_INIT));
        let mut learners = Vec::with_capacity(env.agent_count());
        for k in 0..env.agent_count() {
            let mut sizes = vec![env.obs_dim(k)];
            sizes.extend_from_slice(&cfg.hidden);
            sizes.push(env.action_dim(k));
            let actor = GaussianPolicy::init(&sizes, cfg.initial_log_std, &mut rng)?;
            let critic = ValueFunction::init(env.state_dim(), &cfg.hidden, cfg.value_scale, &mut rng)?;
            learners.push(AgentLearner {
                actor_opt: actor_optimizer(&actor, cfg.actor_lr),
                critic_opt: Adam::new(critic.net.params().len(), cfg.critic_lr),
                target_critic: critic.clone(),
                obs_stats: RunningNorm::new(env.obs_dim(k)),
                state_stats: RunningNorm::new(env.state_dim()),
                actor,
                critic,
            });
        }
        Ok(Self { env, cfg, seed, learners, iteration: 0, env_steps: 0 })
    }

    /// Rebuilds a trainer from saved state.
    pub fn from_parts(
        env: E,
        cfg: TrainConfig,
        seed: u64,
        learners: Vec<AgentLearner>,
        iteration: u64,
        env_steps: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        if learners.len() != env.agent_count() {
            return Err(config_err!("{} learners for {} agents", learners.len(), env.agent_count()));
        }
        for (k, l) in learners.iter().enumerate() {
            if l.actor.obs_dim() != env.obs_dim(k) || l.actor.action_dim() != env.action_dim(k) {
                return Err(config_err!("learner {k} does not match the environment's dimensions"));
            }
            if l.critic.net.input_dim() != env.state_dim() {
                return Err(config_err!("critic {k} expects {} state entries", l.critic.net.input_dim()));
            }
        }
        Ok(Self { env, cfg, seed, learners, iteration, env_steps })
    }

    pub fn env(&self) -> &E {
        &self.env
    }
    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn learners(&self) -> &[AgentLearner] {
        &self.learners
    }
    pub fn iteration(&self) -> u64 {
        self.iteration
    }
    pub fn env_steps(&self) -> u64 {
        self.env_steps
    }
    pub fn finished(&self) -> bool {
        self.env_steps >= self.cfg.max_env_steps
    }

    /// Episode seeds of the next iteration, one per rollout environment.
    pub fn rollout_seeds(&self) -> Vec<u64> {
        (0..self.cfg.rollout_envs as u64).map(|e| derive_seed(self.seed, self.iteration, e, STREAM_GOALS)).collect()
    }

    /// Runs one episode with stochastic actions. Read-only, so episodes of one
    /// iteration may be collected concurrently.
    pub fn collect_episode(&self, seed: u64) -> Result<Episode> {
        let mut env = self.env.clone();
        let n = self.learners.len();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0, 0, STREAM_NOISE));
        let reset = env.reset(seed)?;
        let mut obs = reset.observations;
        let mut state = reset.global_state;
        let mut ep = Episode {
            seed,
            obs: vec![Vec::new(); n],
            pre_tanh: vec![Vec::new(); n],
            noise: vec![Vec::new(); n],
            log_probs: vec![Vec::new(); n],
            rewards: vec![Vec::new(); n],
            values: vec![Vec::new(); n],
            states: Vec::new(),
            dones: Vec::new(),
            bootstrap: vec![0.0; n],
            metrics: EpisodeMetrics { returns: vec![0.0; n], ..Default::default() },
        };
        loop {
            let mut actions = Vec::with_capacity(n);
            for (k, l) in self.learners.iter().enumerate() {
                let s = l.actor.sample(&obs[k], &mut rng)?;
                ep.values[k].push(l.target_critic.value(&state)?);
                ep.log_probs[k].push(s.log_prob);
                ep.pre_tanh[k].push(s.pre_tanh);
                ep.noise[k].push(s.noise);
                actions.push(s.action);
            }
            let out = env.step(&actions)?;
            for k in 0..n {
                ep.obs[k].push(core::mem::take(&mut obs[k]));
                ep.rewards[k].push(out.rewards[k]);
                ep.metrics.returns[k] += out.rewards[k];
            }
            ep.states.push(core::mem::replace(&mut state, out.global_state));
            ep.dones.push(out.done);
            if let Some(info) = &out.info {
                ep.metrics.collided |= info.collision.is_some();
                if out.done {
                    ep.metrics.final_errors = env.summarize(info);
                }
            }
            obs = out.observations;
            if out.done {
                break;
            }
        }
        ep.metrics.steps = ep.states.len();
        Ok(ep)
    }

    /// Sequential rollout plus update.
    pub fn iterate(&mut self) -> Result<IterationMetrics> {
        let episodes = self.rollout_seeds().into_iter().map(|s| self.collect_episode(s)).collect::<Result<Vec<_>>>()?;
        self.update(episodes)
    }

    /// PPO update from the episodes of the current iteration.
    pub fn update(&mut self, episodes: Vec<Episode>) -> Result<IterationMetrics> {
        if episodes.is_empty() {
            return Err(config_err!("no episodes to learn from"));
        }
        let n = self.learners.len();
        let cfg = &self.cfg;
        let total: usize = episodes.iter().map(|e| e.len()).sum();
        // Flattened views, shared by all agents.
        let mut index = Vec::with_capacity(total);
        for (e, ep) in episodes.iter().enumerate() {
            for t in 0..ep.len() {
                index.push((e, t));
            }
        }
        let mut advantages = vec![Vec::with_capacity(total); n];
        let mut returns = vec![Vec::with_capacity(total); n];
        for k in 0..n {
            for ep in &episodes {
                let (a, r) =
                    compute_gae(&ep.rewards[k], &ep.values[k], &ep.dones, ep.bootstrap[k], cfg.gamma, cfg.gae_lambda)?;
                advantages[k].extend(a);
                returns[k].extend(r);
            }
            normalize(&mut advantages[k]);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, self.iteration, 0, STREAM_SHUFFLE));
        let mut order: Vec<usize> = (0..total).collect();
        let (mut objective, mut loss, mut entropy, mut batches) = (0.0, 0.0, 0.0, 0usize);
        for _ in 0..cfg.ppo_epochs {
            order.shuffle(&mut rng);
            for chunk in order.chunks(cfg.minibatch_size) {
                for k in 0..n {
                    let l = &mut self.learners[k];
                    let samples: Vec<ActorSample<'_>> = chunk
                        .iter()
                        .map(|&i| {
                            let (e, t) = index[i];
                            let ep = &episodes[e];
                            ActorSample {
                                obs: &ep.obs[k][t],
                                pre_tanh: &ep.pre_tanh[k][t],
                                noise: &ep.noise[k][t],
                                old_log_prob: ep.log_probs[k][t],
                                advantage: advantages[k][i],
                            }
                        })
                        .collect();
                    let stats = ppo_actor_update(
                        &mut l.actor,
                        &mut l.actor_opt,
                        &samples,
                        cfg.clip_epsilon,
                        cfg.entropy_coef,
                        cfg.max_grad_norm,
                    )?;
                    let targets: Vec<(&[f64], f64)> = chunk
                        .iter()
                        .map(|&i| {
                            let (e, t) = index[i];
                            (episodes[e].states[t].as_slice(), returns[k][i])
                        })
                        .collect();
                    loss += critic_update(&mut l.critic, &mut l.critic_opt, &targets, cfg.max_grad_norm)?;
                    objective += stats.objective;
                    entropy += stats.entropy;
                    batches += 1;
                }
            }
        }
        // Input statistics change only between iterations, so collection and
        // update of one iteration see the same networks.
        for (k, l) in self.learners.iter_mut().enumerate() {
            l.obs_stats.update(episodes.iter().flat_map(|e| e.obs[k].iter().map(|o| o.as_slice())));
            l.state_stats.update(episodes.iter().flat_map(|e| e.states.iter().map(|s| s.as_slice())));
            let (shift, scale) = l.obs_stats.shift_scale();
            l.actor.mean_net_mut().set_input_normalization(shift, scale)?;
            let (shift, scale) = l.state_stats.shift_scale();
            l.critic.net.set_input_normalization(shift, scale)?;
        }
        self.iteration += 1;
        self.env_steps += total as u64;
        if self.iteration % cfg.target_sync_period as u64 == 0 {
            for l in &mut self.learners {
                l.target_critic = l.critic.clone();
            }
        }
        for l in &self.learners {
            if !l.actor.mean_net().params().iter().chain(l.critic.net.params()).all(|p| p.is_finite()) {
                return Err(Error::Training(alloc::format!("non-finite parameters after iteration {}", self.iteration)));
            }
        }

        let m = episodes.len() as f64;
        let mean_opt = |f: &dyn Fn(&EpisodeMetrics) -> Option<f64>| -> Option<f64> {
            let xs: Vec<f64> = episodes.iter().filter_map(|e| f(&e.metrics)).collect();
            if xs.is_empty() {
                None
            } else {
                Some(xs.iter().sum::<f64>() / xs.len() as f64)
            }
        };
        let mean_reward: Vec<f64> =
            (0..n).map(|k| episodes.iter().map(|e| e.rewards[k].iter().sum::<f64>()).sum::<f64>() / total as f64).collect();
        let b = batches.max(1) as f64;
        Ok(IterationMetrics {
            iteration: self.iteration,
            env_steps: self.env_steps,
            mean_return: episodes.iter().map(|e| e.metrics.returns.iter().sum::<f64>() / n as f64).sum::<f64>() / m,
            mean_reward,
            position_error: mean_opt(&|x| x.final_errors.position),
            orientation_error: mean_opt(&|x| x.final_errors.orientation),
            base_error: mean_opt(&|x| x.final_errors.base),
            collision_rate: episodes.iter().filter(|e| e.metrics.collided).count() as f64 / m,
            actor_objective: objective / b,
            critic_loss: loss / b,
            entropy: entropy / b,
        })
    }

    /// Actors of every agent, in agent order.
    pub fn actors(&self) -> Vec<GaussianPolicy> {
        self.learners.iter().map(|l| l.actor.clone()).collect()
    }

    pub fn into_learners(self) -> Vec<AgentLearner> {
        self.learners
    }
}
