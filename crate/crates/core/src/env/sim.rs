use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::disturbance::DisturbanceSpec;
use super::driver::pd_driver;
use super::reward::{euler_error, reward_base, reward_trajectory, RewardConfig};
use super::task::{ArmTask, TaskSpec};
use crate::assembly::{divide_agents, AgentRole, AgentSpec};
use crate::dynamics::{
    first_collision, step_constrained, total_momentum, CollisionPair, KinematicTree, Kinematics, Momentum,
    SystemState, Wrench, DEFAULT_DT,
};
use crate::error::{config_err, input_err, Error, Result};
use crate::math::{euler_xyz, euler_xyz_from_matrix, wrap_angle};
use crate::robot::{default_targets_volume, DriveGains, RobotConfig, TargetVolume};

/// Length of every agent observation:
/// `p_b, phi_b, v_b, omega_b, q^a, qdot^a` followed by the role's goal pair.
pub const OBS_DIM: usize = 24;
/// Joints per agent.
pub const ACTION_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnvConfig {
    pub reward: RewardConfig,
    /// Dynamics step, s.
    pub dt: f64,
    /// Dynamics steps per control step.
    pub substeps: usize,
    /// Base attitude goals are drawn from `+-base_goal_range` per axis, rad.
    pub base_goal_range: f64,
    /// End-effector orientation goals: home orientation `+-` this per axis, rad.
    pub orientation_goal_range: f64,
    pub target_box_edge: f64,
    pub kp: Vec<f64>,
    pub kd: Vec<f64>,
    pub disturbance: DisturbanceSpec,
}

impl EnvConfig {
    pub fn for_robot(robot: &RobotConfig) -> Self {
        let DriveGains { kp, kd } = robot.drive_gains();
        Self {
            reward: RewardConfig::default(),
            dt: DEFAULT_DT,
            substeps: 20,
            base_goal_range: 0.2,
            orientation_goal_range: 0.2,
            target_box_edge: robot.target_box_edge,
            kp,
            kd,
            disturbance: DisturbanceSpec::default(),
        }
    }

    pub fn control_period(&self) -> f64 {
        self.dt * self.substeps as f64
    }
}

/// Goals of one episode, world frame.
#[derive(Debug, Clone, PartialEq)]
pub struct GoalSet {
    pub positions: Vec<Vector3<f64>>,
    /// Intrinsic XYZ Euler angles, rad.
    pub orientations: Vec<[f64; 3]>,
    pub base: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    /// Time at the end of the step, s.
    pub time: f64,
    /// `|p_d - p_e|` per arm, m.
    pub position_errors: Vec<f64>,
    /// Norm of the wrapped Euler error per arm, rad.
    pub orientation_errors: Vec<f64>,
    /// Wrapped base attitude error `phi_d^b - phi_b`, rad.
    pub base_error: [f64; 3],
    pub collision: Option<CollisionPair>,
    pub momentum: Momentum,
    /// Disturbance wrench (force, torque) if it acted during this step.
    pub external_wrench: Option<(Vector3<f64>, Vector3<f64>)>,
}

impl StepInfo {
    pub fn base_error_norm(&self) -> f64 {
        libm::sqrt(self.base_error.iter().map(|x| x * x).sum())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reset {
    pub observations: Vec<Vec<f64>>,
    pub global_state: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observations: Vec<Vec<f64>>,
    pub global_state: Vec<f64>,
    pub rewards: Vec<f64>,
    pub done: bool,
    pub info: StepInfo,
}

struct Snapshot {
    kin: Kinematics,
    p_e: Vec<Vector3<f64>>,
    phi_e: Vec<[f64; 3]>,
    phi_b: [f64; 3],
}

/// Multi-agent environment over a free-floating robot.
#[derive(Debug, Clone)]
pub struct SpaceRobotEnv {
    tree: KinematicTree,
    task: TaskSpec,
    arm_tasks: Vec<ArmTask>,
    agents: Vec<AgentSpec>,
    cfg: EnvConfig,
    targets: Vec<TargetVolume>,
    home_euler: Vec<[f64; 3]>,
    locked: Vec<bool>,
    state: SystemState,
    goals: GoalSet,
    steps: usize,
    substep: u64,
    prev_actions: Vec<Vec<f64>>,
}

impl SpaceRobotEnv {
    pub fn new(tree: KinematicTree, task: TaskSpec, cfg: EnvConfig) -> Result<Self> {
        let agents = divide_agents(&tree, &task)?;
        let arm_tasks = task.arm_tasks(tree.arm_count())?;
        cfg.reward.validate()?;
        let n = tree.joint_count();
        if cfg.kp.len() != n || cfg.kd.len() != n {
            return Err(config_err!("drive gains given for {} joints, robot has {n}", cfg.kp.len()));
        }
        if cfg.kp.iter().chain(&cfg.kd).any(|g| !(*g >= 0.0)) {
            return Err(config_err!("drive gains must be non-negative"));
        }
        if !(cfg.dt > 0.0) || cfg.substeps == 0 {
            return Err(config_err!("dt and substeps must be positive"));
        }
        if !(cfg.base_goal_range >= 0.0) || !(cfg.orientation_goal_range >= 0.0) {
            return Err(config_err!("goal ranges must be non-negative"));
        }
        let horizon = cfg.control_period() * task.episode_length as f64;
        cfg.disturbance.validate(&tree, horizon)?;
        let targets = (0..tree.arm_count())
            .map(|a| default_targets_volume(&tree, a, cfg.target_box_edge))
            .collect::<Result<Vec<_>>>()?;
        let home = SystemState::at_rest(n);
        let kin = Kinematics::new(&tree, &home);
        let home_euler = (0..tree.arm_count()).map(|a| euler_xyz_from_matrix(&kin.end_effector(&tree, a).1)).collect();
        let mut locked = vec![false; n];
        if let Some(arm) = cfg.disturbance.failed_arm {
            for j in tree.arm_joints(arm) {
                locked[j] = true;
            }
        }
        let goals = GoalSet {
            positions: targets.iter().map(|t| t.center).collect(),
            orientations: Vec::clone(&home_euler),
            base: [0.0; 3],
        };
        let prev_actions = vec![vec![0.0; ACTION_DIM]; agents.len()];
        Ok(Self {
            tree,
            task,
            arm_tasks,
            agents,
            cfg,
            targets,
            home_euler,
            locked,
            state: home,
            goals,
            steps: 0,
            substep: 0,
            prev_actions,
        })
    }

    /// Convenience constructor from a robot description.
    pub fn from_robot(robot: &RobotConfig, task: TaskSpec) -> Result<Self> {
        let tree = crate::robot::build_space_robot(robot)?;
        Self::new(tree, task, EnvConfig::for_robot(robot))
    }

    pub fn tree(&self) -> &KinematicTree {
        &self.tree
    }
    pub fn task(&self) -> &TaskSpec {
        &self.task
    }
    pub fn arm_tasks(&self) -> &[ArmTask] {
        &self.arm_tasks
    }
    pub fn agents(&self) -> &[AgentSpec] {
        &self.agents
    }
    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }
    pub fn state(&self) -> &SystemState {
        &self.state
    }
    pub fn goals(&self) -> &GoalSet {
        &self.goals
    }
    pub fn target_volume(&self, arm: usize) -> &TargetVolume {
        &self.targets[arm]
    }
    pub fn steps_taken(&self) -> usize {
        self.steps
    }
    pub fn done(&self) -> bool {
        self.steps >= self.task.episode_length
    }
    pub fn obs_dim(&self) -> usize {
        OBS_DIM
    }
    /// Length of the global state vector fed to the critics.
    pub fn state_dim(&self) -> usize {
        let n = self.tree.joint_count();
        12 + 2 * n + 12 * self.tree.arm_count() + 6 + 1
    }

    /// Draws goals in a fixed order (per arm: position then orientation;
    /// then the base attitude) so that the result depends only on the seed.
    pub fn sample_goals(&self, seed: u64) -> GoalSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let arms = self.tree.arm_count();
        let mut positions = Vec::with_capacity(arms);
        let mut orientations = Vec::with_capacity(arms);
        let r = self.cfg.orientation_goal_range;
        for a in 0..arms {
            let t = &self.targets[a];
            let h = 0.5 * t.edge;
            let off = Vector3::new(rng.random_range(-h..=h), rng.random_range(-h..=h), rng.random_range(-h..=h));
            positions.push(t.center + off);
            let home = self.home_euler[a];
            orientations.push([
                wrap_angle(home[0] + uniform(&mut rng, r)),
                wrap_angle(home[1] + uniform(&mut rng, r)),
                wrap_angle(home[2] + uniform(&mut rng, r)),
            ]);
        }
        let b = self.cfg.base_goal_range;
        let base = [uniform(&mut rng, b), uniform(&mut rng, b), uniform(&mut rng, b)];
        GoalSet { positions, orientations, base }
    }

    /// Home configuration at rest with freshly sampled goals.
    pub fn reset(&mut self, seed: u64) -> Result<Reset> {
        let goals = self.sample_goals(seed);
        self.reset_with_goals(goals)
    }

    pub fn failed_arm(&self) -> Option<usize> {
        self.cfg.disturbance.failed_arm
    }

    pub fn reset_with_goals(&mut self, goals: GoalSet) -> Result<Reset> {
        let arms = self.tree.arm_count();
        if goals.positions.len() != arms || goals.orientations.len() != arms {
            return Err(config_err!("goal set covers {} arms, robot has {arms}", goals.positions.len()));
        }
        self.goals = goals;
        self.state = SystemState::at_rest(self.tree.joint_count());
        self.steps = 0;
        self.substep = 0;
        for a in &mut self.prev_actions {
            a.fill(0.0);
        }
        let snap = self.snapshot();
        Ok(Reset { observations: self.observations_from(&snap), global_state: self.global_state_from(&snap) })
    }

    /// Replaces the goals mid-episode.
    pub fn set_goals(&mut self, goals: GoalSet) {
        self.goals = goals;
    }

    fn snapshot(&self) -> Snapshot {
        let kin = Kinematics::new(&self.tree, &self.state);
        let arms = self.tree.arm_count();
        let mut p_e = Vec::with_capacity(arms);
        let mut phi_e = Vec::with_capacity(arms);
        for a in 0..arms {
            let (p, r) = kin.end_effector(&self.tree, a);
            p_e.push(p);
            phi_e.push(euler_xyz_from_matrix(&r));
        }
        let phi_b = euler_xyz(&self.state.base_orientation);
        Snapshot { kin, p_e, phi_e, phi_b }
    }

    pub fn observations(&self) -> Vec<Vec<f64>> {
        self.observations_from(&self.snapshot())
    }

    pub fn global_state(&self) -> Vec<f64> {
        self.global_state_from(&self.snapshot())
    }

    fn observations_from(&self, snap: &Snapshot) -> Vec<Vec<f64>> {
        let s = &self.state;
        self.agents
            .iter()
            .map(|agent| {
                let mut o = Vec::with_capacity(OBS_DIM);
                o.extend_from_slice(s.base_position.as_slice());
                o.extend_from_slice(&snap.phi_b);
                o.extend_from_slice(s.base_linear_velocity.as_slice());
                o.extend_from_slice(s.base_angular_velocity.as_slice());
                o.extend(agent.joints.iter().map(|&j| wrap_angle(s.q[j])));
                o.extend(agent.joints.iter().map(|&j| s.qdot[j]));
                match agent.role {
                    AgentRole::PositionReacher => {
                        o.extend_from_slice(snap.p_e[agent.arm].as_slice());
                        o.extend_from_slice(self.goals.positions[agent.arm].as_slice());
                    }
                    AgentRole::OrientationReacher => {
                        o.extend_from_slice(&snap.phi_e[agent.arm]);
                        o.extend_from_slice(&self.goals.orientations[agent.arm]);
                    }
                    AgentRole::BaseAdjuster => {
                        o.extend_from_slice(&snap.phi_b);
                        o.extend_from_slice(&self.goals.base);
                    }
                }
                o
            })
            .collect()
    }

    /// `p_b, phi_b, v_b, omega_b, q, qdot`, then per arm
    /// `p_e, p_d - p_e, phi_e, phi_d - phi_e`, then `phi_d^b, phi_d^b - phi_b`
    /// and the elapsed fraction of the episode.
    fn global_state_from(&self, snap: &Snapshot) -> Vec<f64> {
        let s = &self.state;
        let mut g = Vec::with_capacity(self.state_dim());
        g.extend_from_slice(s.base_position.as_slice());
        g.extend_from_slice(&snap.phi_b);
        g.extend_from_slice(s.base_linear_velocity.as_slice());
        g.extend_from_slice(s.base_angular_velocity.as_slice());
        g.extend(s.q.iter().map(|&q| wrap_angle(q)));
        g.extend_from_slice(&s.qdot);
        for a in 0..self.tree.arm_count() {
            g.extend_from_slice(snap.p_e[a].as_slice());
            g.extend_from_slice((self.goals.positions[a] - snap.p_e[a]).as_slice());
            g.extend_from_slice(&snap.phi_e[a]);
            g.extend_from_slice(&euler_error(self.goals.orientations[a], snap.phi_e[a]));
        }
        g.extend_from_slice(&self.goals.base);
        g.extend_from_slice(&euler_error(self.goals.base, snap.phi_b));
        g.push(self.steps as f64 / self.task.episode_length as f64);
        g
    }

    /// Advances one control step. `actions[k]` holds agent `k`'s three
    /// normalized joint-rate commands in `[-1, 1]` (clamped).
    pub fn step(&mut self, actions: &[Vec<f64>]) -> Result<Transition> {
        if self.done() {
            return Err(input_err!("episode finished after {} steps; reset first", self.steps));
        }
        if actions.len() != self.agents.len() {
            return Err(config_err!("{} action vectors for {} agents", actions.len(), self.agents.len()));
        }
        let n = self.tree.joint_count();
        let mut desired = vec![0.0; n];
        let mut clamped = Vec::with_capacity(actions.len());
        for (agent, a) in self.agents.iter().zip(actions) {
            if a.len() != ACTION_DIM {
                return Err(config_err!("agent {} expects {ACTION_DIM} actions, got {}", agent.id, a.len()));
            }
            if a.iter().any(|x| !x.is_finite()) {
                return Err(input_err!("non-finite action for agent {}", agent.id));
            }
            let u: Vec<f64> = a.iter().map(|x| x.clamp(-1.0, 1.0)).collect();
            for (k, &j) in agent.joints.iter().enumerate() {
                desired[j] = if self.locked[j] { 0.0 } else { u[k] * self.tree.limits().qdot_max[j] };
            }
            clamped.push(u);
        }

        let pulse = self.cfg.disturbance.pulse;
        let window = pulse.map(|p| p.substep_window(self.cfg.dt));
        let mut applied = None;
        let mut prev_qdot = self.state.qdot.clone();
        let limits = self.tree.limits();
        for _ in 0..self.cfg.substeps {
            let qddot: Vec<f64> = self.state.qdot.iter().zip(&prev_qdot).map(|(a, b)| (a - b) / self.cfg.dt).collect();
            let mut tau =
                pd_driver(&desired, &self.state.qdot, &qddot, &self.cfg.kp, &self.cfg.kd, &limits.qdot_max, &limits.tau_max)?;
            for j in 0..n {
                if self.locked[j] {
                    tau[j] = 0.0;
                }
            }
            let wrenches: Vec<Wrench> = match (pulse, window) {
                (Some(p), Some((start, end))) if self.substep >= start && self.substep < end => {
                    applied = Some((p.force, p.torque));
                    p.wrenches(&self.tree, &Kinematics::new(&self.tree, &self.state))
                }
                _ => Vec::new(),
            };
            prev_qdot.clone_from(&self.state.qdot);
            self.state = step_constrained(&self.tree, &self.state, &tau, &wrenches, &self.locked, self.cfg.dt)?;
            self.substep += 1;
        }
        self.state.time = self.substep as f64 * self.cfg.dt;
        self.steps += 1;

        let snap = self.snapshot();
        let collision = first_collision(&self.tree, &snap.kin);
        let rewards = self.rewards(&snap, &clamped, collision.is_some());
        self.prev_actions = clamped;

        let arms = self.tree.arm_count();
        let info = StepInfo {
            time: self.state.time,
            position_errors: (0..arms).map(|a| (self.goals.positions[a] - snap.p_e[a]).norm()).collect(),
            orientation_errors: (0..arms)
                .map(|a| {
                    let e = euler_error(self.goals.orientations[a], snap.phi_e[a]);
                    libm::sqrt(e.iter().map(|x| x * x).sum())
                })
                .collect(),
            base_error: euler_error(self.goals.base, snap.phi_b),
            collision,
            momentum: total_momentum(&self.tree, &self.state)?,
            external_wrench: applied,
        };
        if !rewards.iter().all(|r| r.is_finite()) {
            return Err(Error::Internal("non-finite reward".into()));
        }
        Ok(Transition {
            observations: self.observations_from(&snap),
            global_state: self.global_state_from(&snap),
            rewards,
            done: self.done(),
            info,
        })
    }

    fn rewards(&self, snap: &Snapshot, actions: &[Vec<f64>], collided: bool) -> Vec<f64> {
        let cfg = &self.cfg.reward;
        let base_group: Vec<usize> =
            (0..self.agents.len()).filter(|&k| self.agents[k].role == AgentRole::BaseAdjuster).collect();
        let shared = if base_group.is_empty() {
            0.0
        } else {
            let e_b = euler_error(self.goals.base, snap.phi_b);
            let u: Vec<f64> = base_group.iter().flat_map(|&k| actions[k].iter().copied()).collect();
            let u_prev: Vec<f64> = base_group.iter().flat_map(|&k| self.prev_actions[k].iter().copied()).collect();
            reward_base(&e_b, &u, &u_prev, collided, cfg)
        };
        self.agents
            .iter()
            .enumerate()
            .map(|(k, agent)| match agent.role {
                AgentRole::PositionReacher => {
                    let e = self.goals.positions[agent.arm] - snap.p_e[agent.arm];
                    reward_trajectory(e.as_slice(), &actions[k], &self.prev_actions[k], cfg)
                }
                AgentRole::OrientationReacher => {
                    let e = euler_error(self.goals.orientations[agent.arm], snap.phi_e[agent.arm]);
                    reward_trajectory(&e, &actions[k], &self.prev_actions[k], cfg)
                }
                AgentRole::BaseAdjuster => shared,
            })
            .collect()
    }

    /// World-frame end-effector position and orientation of every arm.
    pub fn end_effectors(&self) -> Vec<(Vector3<f64>, Matrix3<f64>)> {
        let kin = Kinematics::new(&self.tree, &self.state);
        (0..self.tree.arm_count()).map(|a| kin.end_effector(&self.tree, a)).collect()
    }
}

fn uniform(rng: &mut ChaCha8Rng, r: f64) -> f64 {
    if r > 0.0 {
        rng.random_range(-r..=r)
    } else {
        0.0
    }
}
