//! Binary policy checkpoints.
//!
//! All integers are little-endian, floats are IEEE-754 `f64` bit patterns,
//! strings are a `u32` byte length followed by UTF-8. Layout:
//!
//! ```text
//! magic            8 bytes  "OCTOPSET"
//! format version   u32
//! model version    u32      robot model the set was trained on
//! robot hash       string
//! task kind        u8 (0 trajectory, 1 reorientation, 2 mixed)
//!                  mixed only: u32 arm count, one u8 per arm (0 T, 1 R)
//! agent count      u32
//! provenance       task string, algorithm string, robot string, config hash string,
//!                  seed u64, env steps u64
//! agents           agent count blocks:
//!                    id u32, arm u32, joints 3 x u32, role u8
//!                    actor network, log_std (action dim f64)
//!                    critic flag u8; if 1: value scale f64, critic network
//! training flag    u8; if 1: iteration u64, env steps u64, then per agent:
//!                    target value scale f64, target network,
//!                    actor Adam, critic Adam, observation stats, state stats
//! ```
//!
//! A centralized baseline set holds one agent over all joints; its spec is a
//! placeholder (id 1, arm 0, the first joint triple).
//!
//! A network block is the layer count `u32`, the sizes (`u32` each), the
//! activation `u8` (0 tanh, 1 identity), the parameters (per layer the
//! `out x in` weights row-major, then the biases), then the input shift and
//! scale. An Adam block is `lr, beta1, beta2, eps` (`f64`), `t` (`u64`), the
//! parameter count `u32` and the two moment vectors. Statistics are the
//! count `f64`, the dimension `u32`, then mean and variance.

use alloc::string::String;
use alloc::vec::Vec;

use super::division::{AgentRole, AgentSpec};
use super::policy::{AgentPolicy, PolicySet, Provenance};
use crate::env::{ArmTask, TaskKind};
use crate::error::{input_err, Error, Result};
use crate::marl::{AgentLearner, MultiAgentEnv, TrainConfig, Trainer, ValueFunction};
use crate::nn::{Activation, Adam, GaussianPolicy, Mlp, RunningNorm};

pub const MAGIC: &[u8; 8] = b"OCTOPSET";
pub const FORMAT_VERSION: u32 = 1;

/// Optimizer and normalization state needed to resume training.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    pub target_critic: ValueFunction,
    pub actor_opt: Adam,
    pub critic_opt: Adam,
    pub obs_stats: RunningNorm,
    pub state_stats: RunningNorm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingState {
    pub iteration: u64,
    pub env_steps: u64,
    /// One entry per agent, in agent order.
    pub learners: Vec<LearnerState>,
}

/// Contents of a checkpoint file.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub policies: PolicySet,
    pub training: Option<TrainingState>,
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: usize) {
        self.0.extend_from_slice(&(v as u32).to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_bits().to_le_bytes());
    }
    fn f64s(&mut self, v: &[f64]) {
        for &x in v {
            self.f64(x);
        }
    }
    fn str(&mut self, s: &str) {
        self.u32(s.len());
        self.0.extend_from_slice(s.as_bytes());
    }
    fn mlp(&mut self, net: &Mlp) {
        self.u32(net.sizes().len());
        for &s in net.sizes() {
            self.u32(s);
        }
        self.u8(match net.activation() {
            Activation::Tanh => 0,
            Activation::Identity => 1,
        });
        self.f64s(net.params());
        let (shift, scale) = net.input_normalization();
        self.f64s(shift);
        self.f64s(scale);
    }
    fn adam(&mut self, a: &Adam) {
        self.f64s(&[a.lr, a.beta1, a.beta2, a.eps]);
        self.u64(a.t);
        self.u32(a.m.len());
        self.f64s(&a.m);
        self.f64s(&a.v);
    }
    fn stats(&mut self, s: &RunningNorm) {
        self.f64(s.count);
        self.u32(s.dim());
        self.f64s(&s.mean);
        self.f64s(&s.var);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

fn corrupt(what: &str) -> Error {
    input_err!("corrupt checkpoint: {what}")
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| corrupt("truncated"))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        if n > self.buf.len() / 8 {
            return Err(corrupt("vector longer than the file"));
        }
        (0..n).map(|_| self.f64()).collect()
    }
    fn str(&mut self) -> Result<String> {
        let n = self.u32()?;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| corrupt("string is not UTF-8"))
    }
    fn mlp(&mut self) -> Result<Mlp> {
        let layers = self.u32()?;
        if !(2..=64).contains(&layers) {
            return Err(corrupt("layer count"));
        }
        let sizes = (0..layers).map(|_| self.u32()).collect::<Result<Vec<_>>>()?;
        let activation = match self.u8()? {
            0 => Activation::Tanh,
            1 => Activation::Identity,
            _ => return Err(corrupt("activation tag")),
        };
        let count = sizes.windows(2).try_fold(0usize, |acc, w| {
            w[0].checked_mul(w[1]).and_then(|p| p.checked_add(w[1])).and_then(|p| p.checked_add(acc))
        });
        let params = self.f64s(count.ok_or_else(|| corrupt("layer sizes"))?)?;
        let mut net = Mlp::from_params(&sizes, activation, params).map_err(|e| corrupt(&alloc::format!("{e}")))?;
        let shift = self.f64s(sizes[0])?;
        let scale = self.f64s(sizes[0])?;
        net.set_input_normalization(shift, scale).map_err(|e| corrupt(&alloc::format!("{e}")))?;
        Ok(net)
    }
    fn adam(&mut self) -> Result<Adam> {
        let h = self.f64s(4)?;
        let t = self.u64()?;
        let n = self.u32()?;
        let m = self.f64s(n)?;
        let v = self.f64s(n)?;
        Ok(Adam { lr: h[0], beta1: h[1], beta2: h[2], eps: h[3], m, v, t })
    }
    fn stats(&mut self) -> Result<RunningNorm> {
        let count = self.f64()?;
        let d = self.u32()?;
        let mean = self.f64s(d)?;
        let var = self.f64s(d)?;
        Ok(RunningNorm { count, mean, var })
    }
    fn value(&mut self) -> Result<ValueFunction> {
        let scale = self.f64()?;
        Ok(ValueFunction { net: self.mlp()?, scale })
    }
}

fn task_code(task: ArmTask) -> u8 {
    match task {
        ArmTask::Trajectory => 0,
        ArmTask::Reorientation => 1,
    }
}

/// Serializes a checkpoint. Equal checkpoints give identical bytes.
pub fn encode_checkpoint(ck: &Checkpoint) -> Vec<u8> {
    let set = &ck.policies;
    let p = &set.provenance;
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.0.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    w.0.extend_from_slice(&p.model_version.to_le_bytes());
    w.str(&p.robot_hash);
    match &set.task {
        TaskKind::TrajectoryPlanning => w.u8(0),
        TaskKind::BaseReorientation => w.u8(1),
        TaskKind::Mixed(arms) => {
            w.u8(2);
            w.u32(arms.len());
            for &a in arms {
                w.u8(task_code(a));
            }
        }
    }
    w.u32(set.agents.len());
    w.str(&p.task);
    w.str(&p.algorithm);
    w.str(&p.robot);
    w.str(&p.config_hash);
    w.u64(p.seed);
    w.u64(p.env_steps);
    for a in &set.agents {
        w.u32(a.spec.id);
        w.u32(a.spec.arm);
        for &j in &a.spec.joints {
            w.u32(j);
        }
        w.u8(a.spec.role.tag());
        w.mlp(a.actor.mean_net());
        w.f64s(a.actor.log_std());
        match &a.critic {
            Some(c) => {
                w.u8(1);
                w.f64(c.scale);
                w.mlp(&c.net);
            }
            None => w.u8(0),
        }
    }
    match &ck.training {
        Some(t) => {
            w.u8(1);
            w.u64(t.iteration);
            w.u64(t.env_steps);
            for l in &t.learners {
                w.f64(l.target_critic.scale);
                w.mlp(&l.target_critic.net);
                w.adam(&l.actor_opt);
                w.adam(&l.critic_opt);
                w.stats(&l.obs_stats);
                w.stats(&l.state_stats);
            }
        }
        None => w.u8(0),
    }
    w.0
}

/// Parses a checkpoint written by [`encode_checkpoint`].
///
/// A foreign file or an unknown format version is a [`Error::Version`]
/// error; truncation or malformed content is an input error.
pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8).ok() != Some(&MAGIC[..]) {
        return Err(Error::Version("not a policy checkpoint (bad magic)".into()));
    }
    let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::Version(alloc::format!(
            "checkpoint format version {version}, this build reads version {FORMAT_VERSION}"
        )));
    }
    let model_version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
    let robot_hash = r.str()?;
    let task = match r.u8()? {
        0 => TaskKind::TrajectoryPlanning,
        1 => TaskKind::BaseReorientation,
        2 => {
            let n = r.u32()?;
            let arms = (0..n)
                .map(|_| match r.u8()? {
                    0 => Ok(ArmTask::Trajectory),
                    1 => Ok(ArmTask::Reorientation),
                    _ => Err(corrupt("arm task tag")),
                })
                .collect::<Result<Vec<_>>>()?;
            TaskKind::Mixed(arms)
        }
        _ => return Err(corrupt("task tag")),
    };
    let count = r.u32()?;
    let provenance = Provenance {
        task: r.str()?,
        algorithm: r.str()?,
        robot: r.str()?,
        model_version,
        robot_hash,
        config_hash: r.str()?,
        seed: r.u64()?,
        env_steps: r.u64()?,
    };
    let mut agents = Vec::new();
    for _ in 0..count {
        let id = r.u32()?;
        let arm = r.u32()?;
        let joints = [r.u32()?, r.u32()?, r.u32()?];
        let role = AgentRole::from_tag(r.u8()?).ok_or_else(|| corrupt("role tag"))?;
        let mean = r.mlp()?;
        let log_std = r.f64s(mean.output_dim())?;
        let actor = GaussianPolicy::new(mean, log_std).map_err(|e| corrupt(&alloc::format!("{e}")))?;
        let critic = match r.u8()? {
            0 => None,
            1 => Some(r.value()?),
            _ => return Err(corrupt("critic flag")),
        };
        agents.push(AgentPolicy { spec: AgentSpec { id, arm, joints, role }, actor, critic });
    }
    let training = match r.u8()? {
        0 => None,
        1 => {
            let iteration = r.u64()?;
            let env_steps = r.u64()?;
            let learners = (0..count)
                .map(|_| {
                    Ok(LearnerState {
                        target_critic: r.value()?,
                        actor_opt: r.adam()?,
                        critic_opt: r.adam()?,
                        obs_stats: r.stats()?,
                        state_stats: r.stats()?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Some(TrainingState { iteration, env_steps, learners })
        }
        _ => return Err(corrupt("training flag")),
    };
    if r.pos != bytes.len() {
        return Err(corrupt("trailing bytes"));
    }
    Ok(Checkpoint { policies: PolicySet { provenance, task, agents }, training })
}

impl Checkpoint {
    /// Full trainer snapshot, enough to resume training exactly.
    pub fn from_trainer<E: MultiAgentEnv>(
        trainer: &Trainer<E>,
        specs: &[AgentSpec],
        task: TaskKind,
        provenance: Provenance,
    ) -> Result<Self> {
        let policies = PolicySet::from_trainer(trainer, specs, task, provenance)?;
        let learners = trainer
            .learners()
            .iter()
            .map(|l| LearnerState {
                target_critic: l.target_critic.clone(),
                actor_opt: l.actor_opt.clone(),
                critic_opt: l.critic_opt.clone(),
                obs_stats: l.obs_stats.clone(),
                state_stats: l.state_stats.clone(),
            })
            .collect();
        Ok(Self {
            policies,
            training: Some(TrainingState { iteration: trainer.iteration(), env_steps: trainer.env_steps(), learners }),
        })
    }

    /// Rebuilds a trainer from a snapshot taken by [`Checkpoint::from_trainer`].
    pub fn resume<E: MultiAgentEnv>(self, env: E, cfg: TrainConfig, seed: u64) -> Result<Trainer<E>> {
        let training = self.training.ok_or_else(|| input_err!("checkpoint holds no training state"))?;
        if training.learners.len() != self.policies.agents.len() {
            return Err(corrupt("learner count"));
        }
        let learners = self
            .policies
            .agents
            .into_iter()
            .zip(training.learners)
            .map(|(a, l)| {
                let critic = a.critic.ok_or_else(|| input_err!("agent {} has no critic", a.spec.id))?;
                Ok(AgentLearner {
                    actor: a.actor,
                    critic,
                    target_critic: l.target_critic,
                    actor_opt: l.actor_opt,
                    critic_opt: l.critic_opt,
                    obs_stats: l.obs_stats,
                    state_stats: l.state_stats,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Trainer::from_parts(env, cfg, seed, learners, training.iteration, training.env_steps)
    }
}
