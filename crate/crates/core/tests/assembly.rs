use proptest::prelude::*;
use spacearm::assembly::*;
use spacearm::env::{ArmTask, SpaceRobotEnv, TaskKind, TaskSpec};
use spacearm::eval::{eval_seeds, evaluate, run_episode};
use spacearm::marl::{TrainConfig, Trainer};
use spacearm::robot::{build_space_robot, RobotConfig};
use spacearm::Error;

fn small_config() -> TrainConfig {
    TrainConfig { hidden: vec![16, 16], rollout_envs: 2, minibatch_size: 25, ..TrainConfig::trajectory() }
}

fn provenance(robot: &RobotConfig, task: &TaskSpec) -> Provenance {
    Provenance {
        task: task.name().into(),
        algorithm: "mappo".into(),
        robot: robot.name.clone(),
        model_version: robot.model_version,
        robot_hash: format!("{}-hash", robot.name),
        config_hash: "cfg".into(),
        seed: 3,
        env_steps: 0,
    }
}

fn trained(robot: &RobotConfig, task: TaskSpec, iterations: usize) -> (Trainer<SpaceRobotEnv>, PolicySet) {
    let env = SpaceRobotEnv::from_robot(robot, task.clone()).unwrap();
    let mut trainer = Trainer::new(env.clone(), small_config(), 3).unwrap();
    for _ in 0..iterations {
        trainer.iterate().unwrap();
    }
    let set = PolicySet::from_trainer(&trainer, env.agents(), task.kind.clone(), provenance(robot, &task)).unwrap();
    (trainer, set)
}

#[test]
fn full4_trajectory_division() {
    let tree = build_space_robot(&RobotConfig::full4()).unwrap();
    let agents = divide_agents(&tree, &TaskSpec::trajectory()).unwrap();
    assert_eq!(agents.len(), 8);
    for (i, a) in agents.iter().enumerate() {
        assert_eq!(a.id, i + 1);
        assert_eq!(a.arm, i / 2);
        let first = 6 * a.arm + 3 * (i % 2);
        assert_eq!(a.joints, [first, first + 1, first + 2]);
        let expected = if a.id % 2 == 1 { AgentRole::PositionReacher } else { AgentRole::OrientationReacher };
        assert_eq!(a.role, expected);
    }
}

#[test]
fn full4_reorientation_division_shares_reward() {
    let tree = build_space_robot(&RobotConfig::full4()).unwrap();
    let task = TaskSpec::reorientation();
    let agents = divide_agents(&tree, &task).unwrap();
    assert_eq!(agents.len(), 8);
    assert!(agents.iter().all(|a| a.role == AgentRole::BaseAdjuster));
    assert!((0..4).all(|arm| task.share_reward(arm)));
}

#[test]
fn desk_robots_get_one_agent_per_arm() {
    for (robot, arms) in [(RobotConfig::desk2(), 2), (RobotConfig::desk4(), 4)] {
        let tree = build_space_robot(&robot).unwrap();
        let agents = divide_agents(&tree, &TaskSpec::trajectory()).unwrap();
        assert_eq!(agents.len(), arms);
        for (a, spec) in agents.iter().enumerate() {
            assert_eq!(spec.arm, a);
            assert_eq!(spec.joints, [3 * a, 3 * a + 1, 3 * a + 2]);
            assert_eq!(spec.role, AgentRole::PositionReacher);
        }
    }
}

#[test]
fn partition_violations_are_rejected() {
    let spec = |id, joints| AgentSpec { id, arm: 0, joints, role: AgentRole::PositionReacher };
    assert!(check_partition(&[spec(1, [0, 1, 2]), spec(2, [3, 4, 5])], 6).is_ok());
    assert!(matches!(check_partition(&[spec(1, [0, 1, 2]), spec(2, [2, 3, 4])], 6), Err(Error::Config(_))));
    assert!(matches!(check_partition(&[spec(1, [0, 1, 2])], 6), Err(Error::Config(_))));
    assert!(matches!(check_partition(&[spec(1, [0, 1, 9])], 6), Err(Error::Config(_))));
}

#[test]
fn joint_count_not_divisible_by_three_is_config_error() {
    let mut robot = RobotConfig::full4();
    robot.joints_per_arm = 4;
    robot.links.truncate(4);
    let err = build_space_robot(&robot).and_then(|tree| divide_agents(&tree, &TaskSpec::trajectory()));
    assert!(matches!(err, Err(Error::Config(_))), "{err:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mixed_divisions_partition_the_joints(mask in 0u8..16, full in any::<bool>()) {
        let robot = if full { RobotConfig::full4() } else { RobotConfig::desk4() };
        let tree = build_space_robot(&robot).unwrap();
        let arms = (0..4)
            .map(|a| if mask >> a & 1 == 1 { ArmTask::Reorientation } else { ArmTask::Trajectory })
            .collect::<Vec<_>>();
        let agents = divide_agents(&tree, &TaskSpec::mixed(arms.clone())).unwrap();
        prop_assert!(check_partition(&agents, tree.joint_count()).is_ok());
        for a in &agents {
            let reo = arms[a.arm] == ArmTask::Reorientation;
            prop_assert_eq!(a.role == AgentRole::BaseAdjuster, reo);
        }
    }
}

#[test]
fn identity_reassembly_is_bit_identical() {
    let robot = RobotConfig::desk2();
    let (_, set) = trained(&robot, TaskSpec::trajectory(), 2);
    let tree = build_space_robot(&robot).unwrap();
    let sources = vec![ArmSource { set: &set, task: ArmTask::Trajectory }; 2];
    let (composite, task) = reassemble(&tree, &sources, 50).unwrap();
    for (a, b) in composite.agents.iter().zip(&set.agents) {
        assert_eq!(a.spec, b.spec);
        assert_eq!(a.actor, b.actor);
        assert!(a.critic.is_none());
    }
    let donor_env = SpaceRobotEnv::from_robot(&robot, TaskSpec::trajectory()).unwrap();
    let mixed_env = SpaceRobotEnv::from_robot(&robot, task).unwrap();
    for seed in eval_seeds(1, 3) {
        let x = run_episode(&donor_env, &set.actors(), seed).unwrap();
        let y = run_episode(&mixed_env, &composite.actors(), seed).unwrap();
        assert_eq!(x, y);
    }
}

#[test]
fn mixed_reassembly_runs_end_to_end() {
    let robot = RobotConfig::desk4();
    let (_, traj) = trained(&robot, TaskSpec::trajectory(), 0);
    let (_, reo) = trained(&robot, TaskSpec::reorientation(), 0);
    let tree = build_space_robot(&robot).unwrap();
    let mut sources = vec![ArmSource { set: &reo, task: ArmTask::Reorientation }; 4];
    sources[0] = ArmSource { set: &traj, task: ArmTask::Trajectory };
    let (composite, task) = reassemble(&tree, &sources, 10).unwrap();
    assert_eq!(
        composite.task,
        TaskKind::Mixed(vec![ArmTask::Trajectory, ArmTask::Reorientation, ArmTask::Reorientation, ArmTask::Reorientation])
    );
    assert_eq!(composite.agents[0].actor, traj.agents[0].actor);
    for k in 1..4 {
        assert_eq!(composite.agents[k].actor, reo.agents[k].actor);
    }
    let env = SpaceRobotEnv::from_robot(&robot, task).unwrap();
    let report = evaluate(&env, &composite.actors(), &eval_seeds(0, 2)).unwrap();
    assert!(report.position_error.unwrap().is_finite());
    assert!(report.base_error.unwrap().is_finite());
}

#[test]
fn three_dof_donor_on_six_dof_robot_is_rejected() {
    let (_, desk) = trained(&RobotConfig::desk2(), TaskSpec::trajectory(), 0);
    let tree = build_space_robot(&RobotConfig::full4()).unwrap();
    let sources = vec![ArmSource { set: &desk, task: ArmTask::Trajectory }; 4];
    assert!(matches!(reassemble(&tree, &sources, 50), Err(Error::Composition(_))));
}

#[test]
fn role_and_robot_mismatches_are_rejected() {
    let robot = RobotConfig::desk2();
    let tree = build_space_robot(&robot).unwrap();
    let (_, traj) = trained(&robot, TaskSpec::trajectory(), 0);
    let (_, mut reo) = trained(&robot, TaskSpec::reorientation(), 0);
    let wrong_role = [ArmSource { set: &traj, task: ArmTask::Reorientation }, ArmSource { set: &reo, task: ArmTask::Reorientation }];
    assert!(matches!(reassemble(&tree, &wrong_role, 50), Err(Error::Composition(_))));
    reo.provenance.robot_hash = "other".into();
    let other_robot = [ArmSource { set: &traj, task: ArmTask::Trajectory }, ArmSource { set: &reo, task: ArmTask::Reorientation }];
    assert!(matches!(reassemble(&tree, &other_robot, 50), Err(Error::Composition(_))));
    let too_few = [ArmSource { set: &traj, task: ArmTask::Trajectory }];
    assert!(matches!(reassemble(&tree, &too_few, 50), Err(Error::Composition(_))));
}

#[test]
fn check_against_names_mismatches() {
    let robot = RobotConfig::desk2();
    let (_, set) = trained(&robot, TaskSpec::trajectory(), 0);
    let env = SpaceRobotEnv::from_robot(&robot, TaskSpec::reorientation()).unwrap();
    assert!(set.check_against(SpaceRobotEnv::from_robot(&robot, TaskSpec::trajectory()).unwrap().agents(), 24, 3).is_ok());
    assert!(matches!(set.check_against(env.agents(), 24, 3), Err(Error::Composition(_))));
    let traj_agents = SpaceRobotEnv::from_robot(&robot, TaskSpec::trajectory()).unwrap().agents().to_vec();
    assert!(matches!(set.check_against(&traj_agents, 25, 3), Err(Error::Composition(_))));
    assert!(matches!(set.check_against(&traj_agents[..1], 24, 3), Err(Error::Composition(_))));
}

#[test]
fn mixed_actions_depend_only_on_own_observation() {
    let robot = RobotConfig::desk4();
    let (_, traj) = trained(&robot, TaskSpec::trajectory(), 0);
    let (_, reo) = trained(&robot, TaskSpec::reorientation(), 0);
    let tree = build_space_robot(&robot).unwrap();
    let mut sources = vec![ArmSource { set: &reo, task: ArmTask::Reorientation }; 4];
    sources[0] = ArmSource { set: &traj, task: ArmTask::Trajectory };
    let (composite, task) = reassemble(&tree, &sources, 50).unwrap();
    let mut env = SpaceRobotEnv::from_robot(&robot, task).unwrap();
    env.reset(11).unwrap();
    let actors = composite.actors();
    let zero = vec![vec![0.2, -0.1, 0.3]; 4];
    for _ in 0..5 {
        env.step(&zero).unwrap();
    }
    let before = env.observations();
    let action0 = actors[0].deterministic(&before[0]).unwrap();
    // Move the reaching arm's goal: only agent 0 sees it.
    let mut goals = env.goals().clone();
    goals.positions[0].x += 0.05;
    env.set_goals(goals.clone());
    let after = env.observations();
    assert_ne!(before[0], after[0]);
    for k in 1..4 {
        assert_eq!(before[k], after[k]);
    }
    // Move the base goal: the reaching agent's observation and action stay put.
    goals.base[2] += 0.1;
    env.set_goals(goals);
    let moved = env.observations();
    assert_eq!(after[0], moved[0]);
    assert_eq!(actors[0].deterministic(&moved[0]).unwrap(), actors[0].deterministic(&after[0]).unwrap());
    assert_ne!(actors[0].deterministic(&after[0]).unwrap(), action0);
}

#[test]
fn dropping_critics_leaves_evaluation_unchanged() {
    let robot = RobotConfig::desk2();
    let (_, set) = trained(&robot, TaskSpec::trajectory(), 1);
    let mut bare = set.clone();
    for a in &mut bare.agents {
        a.critic = None;
    }
    let env = SpaceRobotEnv::from_robot(&robot, TaskSpec::trajectory()).unwrap();
    let seeds = eval_seeds(5, 2);
    assert_eq!(evaluate(&env, &set.actors(), &seeds).unwrap(), evaluate(&env, &bare.actors(), &seeds).unwrap());
}

#[test]
fn checkpoint_round_trip_is_byte_identical() {
    let robot = RobotConfig::desk2();
    let task = TaskSpec::trajectory();
    let (trainer, set) = trained(&robot, task.clone(), 1);
    let full = Checkpoint::from_trainer(&trainer, trainer.env().agents(), task.kind.clone(), set.provenance.clone()).unwrap();
    let bare = Checkpoint { policies: set, training: None };
    for ck in [full, bare] {
        let bytes = encode_checkpoint(&ck);
        assert_eq!(&bytes[..8], MAGIC);
        let loaded = decode_checkpoint(&bytes).unwrap();
        assert_eq!(loaded, ck);
        assert_eq!(encode_checkpoint(&loaded), bytes);
    }
}

#[test]
fn loaded_policies_evaluate_identically() {
    let robot = RobotConfig::desk2();
    let (_, set) = trained(&robot, TaskSpec::trajectory(), 1);
    let loaded = decode_checkpoint(&encode_checkpoint(&Checkpoint { policies: set.clone(), training: None })).unwrap();
    let env = SpaceRobotEnv::from_robot(&robot, TaskSpec::trajectory()).unwrap();
    let seeds = eval_seeds(2, 3);
    let a = evaluate(&env, &set.actors(), &seeds).unwrap();
    let b = evaluate(&env, &loaded.policies.actors(), &seeds).unwrap();
    assert_eq!(a.mean_reward.to_bits(), b.mean_reward.to_bits());
    assert_eq!(a, b);
}

#[test]
fn mixed_task_kind_round_trips() {
    let robot = RobotConfig::desk2();
    let (_, set) = trained(&robot, TaskSpec::trajectory(), 0);
    let (_, reo) = trained(&robot, TaskSpec::reorientation(), 0);
    let tree = build_space_robot(&robot).unwrap();
    let sources = [ArmSource { set: &set, task: ArmTask::Trajectory }, ArmSource { set: &reo, task: ArmTask::Reorientation }];
    let (composite, _) = reassemble(&tree, &sources, 50).unwrap();
    let ck = Checkpoint { policies: composite, training: None };
    assert_eq!(decode_checkpoint(&encode_checkpoint(&ck)).unwrap(), ck);
}

#[test]
fn bad_checkpoints_are_rejected() {
    let (_, set) = trained(&RobotConfig::desk2(), TaskSpec::trajectory(), 0);
    let bytes = encode_checkpoint(&Checkpoint { policies: set, training: None });
    let mut wrong_version = bytes.clone();
    wrong_version[8] = 9;
    assert!(matches!(decode_checkpoint(&wrong_version), Err(Error::Version(_))));
    let mut wrong_magic = bytes.clone();
    wrong_magic[0] = b'X';
    assert!(matches!(decode_checkpoint(&wrong_magic), Err(Error::Version(_))));
    for cut in [4, 20, bytes.len() / 2, bytes.len() - 1] {
        assert!(matches!(decode_checkpoint(&bytes[..cut]), Err(Error::Input(_)) | Err(Error::Version(_))), "cut {cut}");
    }
    let mut trailing = bytes.clone();
    trailing.push(0);
    assert!(matches!(decode_checkpoint(&trailing), Err(Error::Input(_))));
}

#[test]
fn resumed_training_matches_uninterrupted_training() {
    let robot = RobotConfig::desk2();
    let task = TaskSpec::trajectory();
    let env = SpaceRobotEnv::from_robot(&robot, task.clone()).unwrap();
    let mut straight = Trainer::new(env.clone(), small_config(), 9).unwrap();
    let mut first = Trainer::new(env.clone(), small_config(), 9).unwrap();
    let mut expected = Vec::new();
    for _ in 0..4 {
        expected.push(straight.iterate().unwrap());
    }
    let mut got = Vec::new();
    for _ in 0..2 {
        got.push(first.iterate().unwrap());
    }
    let ck = Checkpoint::from_trainer(&first, env.agents(), task.kind.clone(), provenance(&robot, &task)).unwrap();
    let ck = decode_checkpoint(&encode_checkpoint(&ck)).unwrap();
    let mut resumed = ck.resume(env, small_config(), 9).unwrap();
    for _ in 0..2 {
        got.push(resumed.iterate().unwrap());
    }
    assert_eq!(got, expected);
    assert_eq!(resumed.actors(), straight.actors());
}
