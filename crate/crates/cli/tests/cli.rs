use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use spacearm::robot::RobotConfig;
use spacearm_cli::config::{Overrides, RunConfig, TaskName};
use spacearm_cli::model::{load_robot, robot_hash, sha256_hex};
use spacearm_cli::runs::RunManifest;
use tempfile::TempDir;

fn spacearm(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spacearm"))
        .args(args)
        .env("SPACEARM_OUT", root.join("runs"))
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn ok(o: Output) -> serde_json::Value {
    assert_eq!(code(&o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("json summary")
}

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn train(root: &Path, name: &str, extra: &[&str]) -> PathBuf {
    let out = root.join(name);
    let mut args = vec!["train", "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    ok(spacearm(root, &args));
    out
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn model_files_match_presets() {
    for name in ["desk2", "desk4", "full4"] {
        let path = workspace().join(format!("models/{name}.toml"));
        let file = load_robot(path.to_str().unwrap()).unwrap();
        let preset = RobotConfig::preset(name).unwrap();
        assert_eq!(file, preset);
        assert_eq!(robot_hash(&file), robot_hash(&preset));
    }
}

#[test]
fn example_configs_parse() {
    for entry in std::fs::read_dir(workspace().join("configs")).unwrap() {
        let path = entry.unwrap().path();
        let cfg = RunConfig::load(Some(&path), &Overrides::default()).unwrap();
        assert!(RobotConfig::preset(&cfg.robot).is_some(), "{}", path.display());
    }
}

#[test]
fn train_section_overrides_the_task_preset() {
    let cfg = RunConfig::parse("task = \"reorientation\"\n[train]\nactor_lr = 0.01\n", "t", &Overrides::default()).unwrap();
    assert_eq!(cfg.train.actor_lr, 0.01);
    assert_eq!(cfg.train.critic_lr, TaskName::Reorientation.preset().critic_lr);
    let over = Overrides { seed: Some(9), max_env_steps: Some(123), ..Overrides::default() };
    let cfg = RunConfig::parse("seed = 1\n", "t", &over).unwrap();
    assert_eq!((cfg.seed, cfg.train.max_env_steps), (9, 123));
}

#[test]
fn config_hash_ignores_workers() {
    let a = RunConfig::parse("workers = 1\n", "a", &Overrides::default()).unwrap();
    let b = RunConfig::parse("workers = 4\n", "b", &Overrides::default()).unwrap();
    let c = RunConfig::parse("seed = 2\n", "c", &Overrides::default()).unwrap();
    assert_eq!(a.hash(), b.hash());
    assert_ne!(a.hash(), c.hash());
}

#[test]
fn bad_configs_exit_with_usage_code() {
    let tmp = TempDir::new().unwrap();
    let cases = [
        "robot = \"desk2\"\nsped = 3\n",
        "[train]\nactor_lrr = 1.0\n",
        "robot = \"desk9\"\n",
        "task = \"juggling\"\n",
        "workers = 0\n",
        "[train]\ngamma = 1.5\n",
        "seed = \n",
    ];
    for (i, text) in cases.iter().enumerate() {
        let path = tmp.path().join(format!("c{i}.toml"));
        std::fs::write(&path, text).unwrap();
        let o = spacearm(tmp.path(), &["train", "--config", path.to_str().unwrap(), "--max-steps", "400"]);
        assert_eq!(code(&o), 2, "{text}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = spacearm(tmp.path(), &["train", "--resume", "x", "--seed", "2"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn training_writes_metrics_and_manifest() {
    let tmp = TempDir::new().unwrap();
    let dir = train(tmp.path(), "run", &["--preset", "desk2", "--seed", "3", "--max-steps", "1200"]);
    let text = String::from_utf8(read(&dir.join("metrics.csv"))).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "iteration,env_steps,reward_agent_1,reward_agent_2,position_error_m,orientation_error_rad,base_error_rad,\
         collision_rate,mean_return,actor_objective,critic_loss,entropy"
    );
    assert_eq!(lines.count(), 3);
    let m = RunManifest::read(&dir).unwrap();
    assert_eq!(m.status, "completed");
    assert_eq!(m.seeds, vec![3]);
    assert_eq!(m.robot_hash, robot_hash(&RobotConfig::desk2()));
    for f in ["config.toml", "metrics.csv", "policy.octo"] {
        let out = m.outputs.iter().find(|o| o.path == f).unwrap_or_else(|| panic!("{f} missing"));
        assert_eq!(out.sha256, sha256_hex(&read(&dir.join(f))));
    }
}

#[test]
fn runs_are_deterministic_and_never_overwritten() {
    let tmp = TempDir::new().unwrap();
    let args = ["--preset", "desk2", "--seed", "4", "--max-steps", "1200"];
    let a = train(tmp.path(), "a", &args);
    let b = train(tmp.path(), "b", &[&args[..], &["--workers", "3"]].concat());
    assert_eq!(read(&a.join("metrics.csv")), read(&b.join("metrics.csv")));
    assert_eq!(read(&a.join("policy.octo")), read(&b.join("policy.octo")));
    let before = read(&a.join("metrics.csv"));
    let o = spacearm(tmp.path(), &["train", "--out", a.to_str().unwrap(), "--preset", "desk2", "--max-steps", "400"]);
    assert_eq!(code(&o), 2);
    assert_eq!(read(&a.join("metrics.csv")), before);

    let first = ok(spacearm(tmp.path(), &["train", "--preset", "desk2", "--max-steps", "400"]));
    let second = ok(spacearm(tmp.path(), &["train", "--preset", "desk2", "--max-steps", "400"]));
    assert_ne!(first["run_dir"], second["run_dir"]);
}

#[test]
fn resume_matches_an_uninterrupted_run() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(&cfg, "robot = \"desk2\"\nseed = 6\ncheckpoint_every = 2\n[train]\nmax_env_steps = 2400\n").unwrap();
    let c = cfg.to_str().unwrap();
    let full = train(tmp.path(), "full", &["--config", c]);
    let part = train(tmp.path(), "part", &["--config", c, "--max-steps", "1200"]);
    assert!(part.join("checkpoints/iter-000002.octo").exists());
    ok(spacearm(tmp.path(), &["train", "--resume", part.to_str().unwrap(), "--max-steps", "2400"]));
    assert_eq!(read(&full.join("metrics.csv")), read(&part.join("metrics.csv")));
    assert_eq!(read(&full.join("policy.octo")), read(&part.join("policy.octo")));
    let m = RunManifest::read(&part).unwrap();
    assert_eq!(m.resumed_unix.len(), 1);
    assert_eq!(m.status, "completed");
}

#[test]
fn divergence_exits_with_code_3_and_keeps_the_last_finite_state() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("hot.toml");
    std::fs::write(&cfg, "[train]\nactor_lr = 1e300\ncritic_lr = 1e300\nmax_grad_norm = 0.0\nmax_env_steps = 4000\n").unwrap();
    let dir = tmp.path().join("hot");
    let o = spacearm(tmp.path(), &["train", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.join("diverged.octo").exists());
    assert!(!dir.join("policy.octo").exists());
    assert_eq!(RunManifest::read(&dir).unwrap().status, "diverged");
    let ck = spacearm_cli::runs::load_checkpoint(&dir.join("diverged.octo")).unwrap();
    for a in &ck.policies.agents {
        assert!(a.actor.mean_net().params().iter().all(|p| p.is_finite()));
    }
}

#[test]
fn evaluation_commands_write_their_outputs() {
    let tmp = TempDir::new().unwrap();
    let dir = train(tmp.path(), "t", &["--preset", "desk2", "--max-steps", "800"]);
    let ck = dir.join("policy.octo");
    let ck = ck.to_str().unwrap();
    let root = tmp.path();
    let out = |n: &str| root.join(n).to_str().unwrap().to_string();

    let e = ok(spacearm(root, &["eval", "--checkpoint", ck, "--episodes", "3", "--out", &out("e")]));
    assert_eq!(e["summary"]["episodes"], 3);
    let episodes = std::fs::read_to_string(root.join("e/episodes.csv")).unwrap();
    assert_eq!(episodes.lines().count(), 4);
    let again = ok(spacearm(root, &["eval", "--checkpoint", ck, "--episodes", "3"]));
    assert_eq!(e["summary"], again["summary"]);

    ok(spacearm(root, &["sweep-mass", "--checkpoint", ck, "--episodes", "2", "--grid", "0.5,1.5", "--out", &out("s")]));
    let sweep = std::fs::read_to_string(root.join("s/sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 3);
    assert!(sweep.lines().nth(1).unwrap().starts_with("0.5,6,2,"));

    let d = ok(spacearm(
        root,
        &["disturb", "--checkpoint", ck, "--episodes", "2", "--force", "50,0,0", "--onset", "0.5", "--window", "0.2", "--out", &out("d")],
    ));
    assert_eq!(d["horizon_steps"], 50);
    assert_eq!(d["onset_step"], 25);
    assert!(d["recovery"]["position_error_m"]["reconverged"].is_boolean());
    let ts = std::fs::read_to_string(root.join("d/timeseries.csv")).unwrap();
    assert_eq!(ts.lines().count(), 51);

    let t = ok(spacearm(root, &["export-trace", "--checkpoint", ck, "--episode", "1", "--horizon", "7", "--out", &out("tr")]));
    assert_eq!(t["steps"], 7);
    let trace = std::fs::read_to_string(root.join("tr/trace.csv")).unwrap();
    assert!(trace.starts_with("step,time_s,reward_agent_1,reward_agent_2,position_error_arm_1_m"));
    assert_eq!(trace.lines().count(), 8);
    for sub in ["e", "s", "d", "tr"] {
        assert_eq!(RunManifest::read(&root.join(sub)).unwrap().status, "completed");
    }
}

#[test]
fn evaluation_argument_errors_exit_with_code_2() {
    let tmp = TempDir::new().unwrap();
    let dir = train(tmp.path(), "t", &["--preset", "desk2", "--max-steps", "400"]);
    let ck = dir.join("policy.octo");
    let ck = ck.to_str().unwrap();
    for args in [
        vec!["eval", "--checkpoint", ck, "--episodes", "0"],
        vec!["eval", "--checkpoint", ck, "--mass-scale", "-1"],
        vec!["eval", "--checkpoint", ck, "--robot", "desk9"],
        vec!["disturb", "--checkpoint", ck],
        vec!["sweep-mass", "--checkpoint", ck, "--grid", "0.5,x"],
        vec!["eval", "--checkpoint", ck, "--force", "1,2"],
        vec!["train", "--preset", "desk2", "--task", "juggling"],
    ] {
        assert_eq!(code(&spacearm(tmp.path(), &args)), 2, "{args:?}");
    }
    assert_eq!(code(&spacearm(tmp.path(), &["eval", "--checkpoint", "/nonexistent.octo"])), 1);
}

#[test]
fn incompatible_checkpoints_exit_with_code_4() {
    let tmp = TempDir::new().unwrap();
    let root = tmp.path();
    let traj = train(root, "traj", &["--preset", "desk2", "--max-steps", "400"]).join("policy.octo");
    let reo = train(root, "reo", &["--preset", "desk2", "--task", "reorientation", "--max-steps", "400"]).join("policy.octo");
    let full = train(root, "full", &["--preset", "full4", "--task", "reorientation", "--max-steps", "400"]).join("policy.octo");
    let (traj, reo, full) = (traj.to_str().unwrap(), reo.to_str().unwrap(), full.to_str().unwrap());

    assert_eq!(code(&spacearm(root, &["eval", "--checkpoint", traj, "--robot", "full4"])), 4);
    assert_eq!(code(&spacearm(root, &["reassemble-eval", "--trajectory", reo, "--reorientation", traj])), 4);
    assert_eq!(code(&spacearm(root, &["reassemble-eval", "--trajectory", traj, "--reorientation", full])), 4);

    let mut robot = RobotConfig::desk2();
    robot.model_version += 1;
    let model = root.join("desk2-v2.toml");
    std::fs::write(&model, spacearm_cli::model::robot_to_toml(&robot)).unwrap();
    assert_eq!(code(&spacearm(root, &["eval", "--checkpoint", traj, "--robot", model.to_str().unwrap()])), 4);

    let mut bytes = read(Path::new(traj));
    bytes[0] ^= 0xff;
    let bad = root.join("bad.octo");
    std::fs::write(&bad, &bytes).unwrap();
    assert_eq!(code(&spacearm(root, &["eval", "--checkpoint", bad.to_str().unwrap()])), 4);
}

#[test]
fn reassembly_keeps_donors_and_identity_matches_eval() {
    let tmp = TempDir::new().unwrap();
    let root = tmp.path();
    let traj = train(root, "traj", &["--preset", "desk2", "--max-steps", "800"]).join("policy.octo");
    let reo = train(root, "reo", &["--preset", "desk2", "--task", "reorientation", "--max-steps", "800"]).join("policy.octo");
    let (t, r) = (traj.to_str().unwrap(), reo.to_str().unwrap());
    let before = (read(&traj), read(&reo));

    let out = root.join("mix");
    let rep = ok(spacearm(root, &["reassemble-eval", "--trajectory", t, "--reorientation", r, "--episodes", "3", "--out", out.to_str().unwrap()]));
    assert_eq!(rep["hashes_unchanged"], true);
    assert_eq!(rep["config"]["assign"], serde_json::json!(["T", "R"]));
    assert!(rep["position_error_ratio"].as_f64().unwrap().is_finite());
    assert!(rep["base_error_ratio"].as_f64().unwrap().is_finite());
    assert_eq!((read(&traj), read(&reo)), before);
    let mixed = ok(spacearm(root, &["eval", "--checkpoint", out.join("mixed.octo").to_str().unwrap(), "--episodes", "3"]));
    assert_eq!(mixed["summary"], rep["mixed"]);

    let ident = ok(spacearm(root, &["reassemble-eval", "--trajectory", t, "--reorientation", r, "--assign", "T,T", "--episodes", "3"]));
    let plain = ok(spacearm(root, &["eval", "--checkpoint", t, "--episodes", "3"]));
    assert_eq!(ident["mixed"], plain["summary"]);
    assert_eq!(ident["position_error_ratio"], 1.0);

    assert_eq!(code(&spacearm(root, &["reassemble-eval", "--trajectory", t, "--reorientation", r, "--assign", "T"])), 2);
    assert_eq!(code(&spacearm(root, &["reassemble-eval", "--trajectory", t, "--reorientation", r, "--assign", "T,X"])), 2);
}

#[test]
fn centralized_baseline_trains_and_evaluates() {
    let tmp = TempDir::new().unwrap();
    let dir = train(tmp.path(), "c", &["--preset", "desk2", "--algo", "ppo-central", "--max-steps", "800"]);
    let header = std::fs::read_to_string(dir.join("metrics.csv")).unwrap();
    assert!(header.starts_with("iteration,env_steps,reward_agent_1,position_error_m"));
    let ck = dir.join("policy.octo");
    let e = ok(spacearm(tmp.path(), &["eval", "--checkpoint", ck.to_str().unwrap(), "--episodes", "2"]));
    assert!(e["summary"]["mean_total_reward"].as_f64().unwrap().is_finite());
    assert_eq!(e["algorithm"], "ppo-central");
    let o = spacearm(tmp.path(), &["train", "--resume", dir.to_str().unwrap(), "--max-steps", "1200"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}
