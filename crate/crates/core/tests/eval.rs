use spacearm::env::{SpaceRobotEnv, TaskSpec};
use spacearm::eval::*;
use spacearm::marl::{ErrorSummary, TrainConfig, Trainer};
use spacearm::robot::RobotConfig;
use spacearm::Error;

fn trace(base_final: f64, reward: f64, collided: bool) -> EpisodeTrace {
    let err = |b| ErrorSummary { position: None, orientation: None, base: Some(b) };
    EpisodeTrace {
        seed: 0,
        rewards: vec![vec![reward, reward], vec![reward, 3.0 * reward]],
        errors: vec![err(1.0), err(base_final)],
        collisions: vec![false, collided],
        times: vec![0.2, 0.4],
    }
}

#[test]
fn report_aggregates_final_errors() {
    let traces = [trace(0.01, 1.0, false), trace(0.049, 2.0, true), trace(0.2, 0.5, false)];
    let r = EvalReport::from_traces(&traces);
    assert_eq!(r.episodes, 3);
    assert!((r.base_error.unwrap() - (0.01 + 0.049 + 0.2) / 3.0).abs() < 1e-15);
    assert_eq!(r.success_rate, Some(2.0 / 3.0));
    assert_eq!(r.collision_rate, 1.0 / 3.0);
    assert_eq!(r.position_error, None);
    // Per-agent mean of [r, r] then [r, 3r] sums to 3r; the total is 6r.
    assert!((r.mean_reward - 3.0 * 3.5 / 3.0).abs() < 1e-12);
    assert!((r.mean_total_reward - 6.0 * 3.5 / 3.0).abs() < 1e-12);
}

#[test]
fn success_threshold_is_strict() {
    let r = EvalReport::from_traces(&[trace(SUCCESS_THRESHOLD, 0.0, false)]);
    assert_eq!(r.success_rate, Some(0.0));
}

#[test]
fn eval_seeds_are_stable_and_distinct() {
    let a = eval_seeds(4, 30);
    assert_eq!(a, eval_seeds(4, 30));
    assert_eq!(&a[..10], &eval_seeds(4, 10)[..]);
    let mut sorted = a.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(sorted.len(), 30);
    assert_ne!(a, eval_seeds(5, 30));
}

#[test]
fn steady_mean_of_tail() {
    assert_eq!(steady_mean(&[5.0, 1.0, 2.0, 3.0], 1), Some(2.0));
    assert_eq!(steady_mean(&[1.0], 1), None);
    assert_eq!(steady_mean(&[1.0], 3), None);
}

#[test]
fn episodes_run_to_the_horizon_deterministically() {
    let env = SpaceRobotEnv::from_robot(&RobotConfig::desk2(), TaskSpec::trajectory().with_episode_length(12)).unwrap();
    let cfg = TrainConfig { hidden: vec![8], ..TrainConfig::trajectory() };
    let actors = Trainer::new(env.clone(), cfg, 1).unwrap().actors();
    let t = run_episode(&env, &actors, 77).unwrap();
    assert_eq!(t.rewards.len(), 12);
    assert_eq!(t.errors.len(), 12);
    assert!((t.times[11] - 12.0 * env.config().control_period()).abs() < 1e-9);
    assert_eq!(t, run_episode(&env, &actors, 77).unwrap());
    assert!(matches!(run_episode(&env, &actors[..1], 77), Err(Error::Config(_))));
}
