use std::path::{Path, PathBuf};

use serde_json::json;
use spacearm::assembly::{AgentRole, AgentSpec, Checkpoint, Provenance};
use spacearm::env::SpaceRobotEnv;
use spacearm::marl::{Centralized, IterationMetrics, MultiAgentEnv, Trainer};
use spacearm::robot::RobotConfig;
use spacearm::Error;

use crate::cli::TrainArgs;
use crate::config::{Algo, Overrides, RunConfig};
use crate::error::{usage, IoContext, Result};
use crate::metrics::{MetricsWriter, METRICS_FILE};
use crate::model::{load_robot, robot_hash};
use crate::runs::{load_checkpoint, new_run_dir, save_checkpoint, RunManifest};
use crate::workers;

pub const CONFIG_FILE: &str = "config.toml";
pub const FINAL_CHECKPOINT: &str = "policy.octo";
pub const DIVERGED_CHECKPOINT: &str = "diverged.octo";
const CHECKPOINT_DIR: &str = "checkpoints";

struct Session {
    dir: PathBuf,
    cfg: RunConfig,
    robot: RobotConfig,
    robot_hash: String,
    manifest: RunManifest,
    metrics: MetricsWriter,
}

impl Session {
    fn provenance(&self, env_steps: u64) -> Provenance {
        Provenance {
            task: self.cfg.task.spec(1).name().into(),
            algorithm: self.cfg.algo.name().into(),
            robot: self.cfg.robot.clone(),
            model_version: self.robot.model_version,
            robot_hash: self.robot_hash.clone(),
            config_hash: self.cfg.hash(),
            seed: self.cfg.seed,
            env_steps,
        }
    }

    fn save<E: MultiAgentEnv>(&mut self, rel: &str, trainer: &Trainer<E>, specs: &[AgentSpec]) -> Result<()> {
        let task = self.cfg.task.spec(self.cfg.episode_length).kind;
        let ck = Checkpoint::from_trainer(trainer, specs, task, self.provenance(trainer.env_steps()))?;
        save_checkpoint(&self.dir.join(rel), &ck)?;
        self.manifest.record(&self.dir, rel)
    }
}

fn checkpoint_name(iteration: u64) -> String {
    format!("{CHECKPOINT_DIR}/iter-{iteration:06}.octo")
}

/// Placeholder spec of the single centralized actor.
fn central_spec() -> AgentSpec {
    AgentSpec { id: 1, arm: 0, joints: [0, 1, 2], role: AgentRole::PositionReacher }
}

fn drive<E: MultiAgentEnv>(mut trainer: Trainer<E>, specs: &[AgentSpec], s: &mut Session) -> Result<Option<IterationMetrics>> {
    let mut last = None;
    while !trainer.finished() {
        let episodes = workers::collect(&trainer, s.cfg.workers)?;
        let backup = trainer.clone();
        match trainer.update(episodes) {
            Ok(m) => {
                s.metrics.write(&m)?;
                if m.iteration % s.cfg.checkpoint_every == 0 {
                    s.save(&checkpoint_name(m.iteration), &trainer, specs)?;
                }
                last = Some(m);
            }
            Err(e @ Error::Training(_)) => {
                s.save(DIVERGED_CHECKPOINT, &backup, specs)?;
                s.manifest.record(&s.dir, METRICS_FILE)?;
                s.manifest.finish(&s.dir, "diverged")?;
                return Err(e.into());
            }
            Err(e) => return Err(e.into()),
        }
    }
    s.save(FINAL_CHECKPOINT, &trainer, specs)?;
    Ok(last)
}

fn latest_checkpoint(dir: &Path) -> Result<Checkpoint> {
    let mut candidates = vec![dir.join(FINAL_CHECKPOINT)];
    if let Ok(entries) = std::fs::read_dir(dir.join(CHECKPOINT_DIR)) {
        candidates.extend(entries.filter_map(|e| e.ok()).map(|e| e.path()));
    }
    let mut best: Option<Checkpoint> = None;
    for path in candidates.into_iter().filter(|p| p.extension().is_some_and(|x| x == "octo") && p.exists()) {
        let ck = load_checkpoint(&path)?;
        let it = |c: &Checkpoint| c.training.as_ref().map_or(0, |t| t.iteration);
        if ck.training.is_some() && best.as_ref().is_none_or(|b| it(&ck) > it(b)) {
            best = Some(ck);
        }
    }
    best.ok_or_else(|| usage(format!("{} holds no resumable checkpoint", dir.display())))
}

pub fn run(args: &TrainArgs) -> Result<serde_json::Value> {
    let over = Overrides {
        robot: args.preset.clone(),
        task: args.task,
        algo: args.algo,
        seed: args.seed,
        workers: args.workers,
        max_env_steps: args.max_steps,
    };
    let (mut session, resume_from) = match &args.resume {
        Some(dir) => {
            let path = dir.join(CONFIG_FILE);
            let text = std::fs::read_to_string(&path).at(&path)?;
            let cfg = RunConfig::parse(&text, &path.display().to_string(), &over)?;
            let ck = latest_checkpoint(dir)?;
            let robot = load_robot(&cfg.robot)?;
            let hash = robot_hash(&robot);
            if ck.policies.provenance.robot_hash != hash {
                return Err(Error::Composition(format!("{} was trained on a different robot description", dir.display())).into());
            }
            let iteration = ck.training.as_ref().map_or(0, |t| t.iteration);
            let mut manifest = RunManifest::read(dir)?;
            manifest.resumed_unix.push(crate::runs::unix_now());
            manifest.status = "running".into();
            manifest.config = serde_json::to_value(&cfg)?;
            std::fs::write(&path, cfg.to_toml()).at(&path)?;
            let metrics = MetricsWriter::resume(&dir.join(METRICS_FILE), iteration)?;
            (Session { dir: dir.clone(), cfg, robot, robot_hash: hash, manifest, metrics }, Some(ck))
        }
        None => {
            let cfg = RunConfig::load(args.config.as_deref(), &over)?;
            let robot = load_robot(&cfg.robot)?;
            let hash = robot_hash(&robot);
            let name = format!("train-{}-{}-{}-s{}", robot.name, cfg.task.spec(1).name(), cfg.algo.name(), cfg.seed);
            let dir = new_run_dir(args.out.as_deref(), &name)?;
            let manifest = RunManifest::new("train", serde_json::to_value(&cfg)?, vec![cfg.seed], &cfg.robot, &hash, &dir);
            std::fs::write(dir.join(CONFIG_FILE), cfg.to_toml()).at(&dir.join(CONFIG_FILE))?;
            manifest.write(&dir)?;
            let agents = match cfg.algo {
                Algo::Mappo => SpaceRobotEnv::from_robot(&robot, cfg.task.spec(cfg.episode_length))?.agent_count(),
                Algo::PpoCentral => 1,
            };
            let metrics = MetricsWriter::create(&dir.join(METRICS_FILE), agents)?;
            (Session { dir, cfg, robot, robot_hash: hash, manifest, metrics }, None)
        }
    };
    let s = &mut session;
    let env = SpaceRobotEnv::from_robot(&s.robot, s.cfg.task.spec(s.cfg.episode_length))?;
    let (train, seed) = (s.cfg.train.clone(), s.cfg.seed);
    let last = match s.cfg.algo {
        Algo::Mappo => {
            let specs = env.agents().to_vec();
            let trainer = match resume_from {
                Some(ck) => ck.resume(env, train, seed)?,
                None => Trainer::new(env, train, seed)?,
            };
            drive(trainer, &specs, s)?
        }
        Algo::PpoCentral => {
            let env = Centralized::new(env);
            let trainer = match resume_from {
                Some(ck) => ck.resume(env, train, seed)?,
                None => Trainer::new(env, train, seed)?,
            };
            drive(trainer, &[central_spec()], s)?
        }
    };
    for rel in [CONFIG_FILE, METRICS_FILE] {
        s.manifest.record(&s.dir, rel)?;
    }
    s.manifest.finish(&s.dir, "completed")?;
    let final_ck = load_checkpoint(&s.dir.join(FINAL_CHECKPOINT))?;
    let training = final_ck.training.as_ref();
    Ok(json!({
        "command": "train",
        "run_dir": s.dir.display().to_string(),
        "status": "completed",
        "algorithm": s.cfg.algo.name(),
        "iterations": training.map_or(0, |t| t.iteration),
        "env_steps": training.map_or(0, |t| t.env_steps),
        "checkpoint": s.dir.join(FINAL_CHECKPOINT).display().to_string(),
        "last_iteration": last.map(|m| json!({
            "mean_reward": m.mean_reward,
            "position_error_m": m.position_error,
            "orientation_error_rad": m.orientation_error,
            "base_error_rad": m.base_error,
            "collision_rate": m.collision_rate,
        })),
    }))
}
