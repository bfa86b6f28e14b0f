use std::path::Path;

use serde::Serialize;
use serde_json::json;
use spacearm::env::SpaceRobotEnv;
use spacearm::eval::{eval_seeds, EpisodeTrace};
use spacearm::marl::{summarize_errors, ErrorSummary};

use super::{
    check_episodes, open_checkpoint, record_episode, scenario_env, to_trace, write_episodes_csv, EvalSummary, Loaded,
    Policy, StepRecord,
};
use crate::cli::{DisturbArgs, EvalArgs, ScenarioArgs, SweepArgs, TraceArgs};
use crate::error::{usage, CliError, Result};
use crate::runs::{new_run_dir, write_json, RunManifest};

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "policy".into())
}

fn scenario_json(s: &ScenarioArgs) -> serde_json::Value {
    json!({
        "mass_scale": s.mass_scale,
        "failed_arm": s.failed_arm,
        "force_n": s.force,
        "torque_nm": s.torque,
        "disturb_arm": s.disturb_arm,
        "onset_s": s.onset,
        "duration_s": s.duration,
        "mode": format!("{:?}", s.mode).to_lowercase(),
        "horizon": s.horizon,
    })
}

fn run_episodes(env: &SpaceRobotEnv, policy: &Policy, seeds: &[u64]) -> Result<Vec<Vec<StepRecord>>> {
    seeds.iter().map(|&s| record_episode(env, policy, s)).collect()
}

fn traces(seeds: &[u64], runs: &[Vec<StepRecord>]) -> Vec<EpisodeTrace> {
    seeds.iter().zip(runs).map(|(&s, r)| to_trace(s, r)).collect()
}

fn manifest(command: &str, config: serde_json::Value, seeds: Vec<u64>, loaded: &Loaded, dir: &Path) -> RunManifest {
    let hash = loaded.checkpoint.policies.provenance.robot_hash.clone();
    RunManifest::new(command, config, seeds, &loaded.robot_spec, &hash, dir)
}

/// Evaluates a checkpoint on `episodes` seeded episodes of a scenario.
pub fn evaluate(loaded: &Loaded, scenario: &ScenarioArgs, seed: u64, episodes: usize) -> Result<(EvalSummary, Vec<EpisodeTrace>)> {
    check_episodes(episodes)?;
    let env = scenario_env(loaded, scenario)?;
    let policy = Policy::for_env(&loaded.checkpoint.policies, &env)?;
    let seeds = eval_seeds(seed, episodes);
    let t = traces(&seeds, &run_episodes(&env, &policy, &seeds)?);
    Ok((EvalSummary::from_traces(&t), t))
}

pub fn eval(args: &EvalArgs) -> Result<serde_json::Value> {
    check_episodes(args.episodes)?;
    let loaded = open_checkpoint(&args.checkpoint, args.scenario.robot.as_deref())?;
    let (summary, traces) = evaluate(&loaded, &args.scenario, args.seed, args.episodes)?;
    let dir = new_run_dir(args.out.as_deref(), &format!("eval-{}-s{}", stem(&args.checkpoint), args.seed))?;
    let config = json!({ "checkpoint": args.checkpoint, "episodes": args.episodes, "scenario": scenario_json(&args.scenario) });
    let mut m = manifest("eval", config, vec![args.seed], &loaded, &dir);
    let report = json!({
        "command": "eval",
        "checkpoint": args.checkpoint,
        "task": loaded.checkpoint.policies.provenance.task,
        "algorithm": loaded.checkpoint.policies.provenance.algorithm,
        "seed": args.seed,
        "scenario": scenario_json(&args.scenario),
        "summary": summary,
    });
    write_json(&dir.join("summary.json"), &report)?;
    write_episodes_csv(&dir.join("episodes.csv"), &traces)?;
    for rel in ["summary.json", "episodes.csv"] {
        m.record(&dir, rel)?;
    }
    m.finish(&dir, "completed")?;
    Ok(with_dir(report, &dir))
}

fn with_dir(mut v: serde_json::Value, dir: &Path) -> serde_json::Value {
    v["run_dir"] = json!(dir.display().to_string());
    v
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub mass_scale: f64,
    pub base_mass_kg: f64,
    pub summary: EvalSummary,
}

pub fn sweep_mass(args: &SweepArgs) -> Result<serde_json::Value> {
    check_episodes(args.episodes)?;
    if args.grid.is_empty() {
        return Err(usage("--grid needs at least one mass scale"));
    }
    let loaded = open_checkpoint(&args.checkpoint, args.robot.as_deref())?;
    let mut rows = Vec::new();
    for &scale in &args.grid {
        let scenario = ScenarioArgs { mass_scale: scale, ..default_scenario() };
        let (summary, _) = evaluate(&loaded, &scenario, args.seed, args.episodes)?;
        rows.push(SweepRow { mass_scale: scale, base_mass_kg: loaded.robot.base_mass * scale, summary });
    }
    let dir = new_run_dir(args.out.as_deref(), &format!("sweep-{}-s{}", stem(&args.checkpoint), args.seed))?;
    let config = json!({ "checkpoint": args.checkpoint, "episodes": args.episodes, "grid": args.grid });
    let mut m = manifest("sweep-mass", config, vec![args.seed], &loaded, &dir);
    let mut w = csv::Writer::from_path(dir.join("sweep.csv"))?;
    w.write_record([
        "mass_scale",
        "base_mass_kg",
        "episodes",
        "success_rate",
        "base_error_rad",
        "position_error_m",
        "orientation_error_rad",
        "collision_rate",
    ])?;
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for r in &rows {
        let s = &r.summary;
        w.write_record([
            r.mass_scale.to_string(),
            r.base_mass_kg.to_string(),
            s.episodes.to_string(),
            opt(s.success_rate),
            opt(s.base_error_rad.map(|x| x.mean)),
            opt(s.position_error_m.map(|x| x.mean)),
            opt(s.orientation_error_rad.map(|x| x.mean)),
            s.collision_rate.to_string(),
        ])?;
    }
    w.flush().map_err(|e| CliError::Format(e.to_string()))?;
    drop(w);
    let report = json!({ "command": "sweep-mass", "checkpoint": args.checkpoint, "seed": args.seed, "rows": rows });
    write_json(&dir.join("summary.json"), &report)?;
    for rel in ["summary.json", "sweep.csv"] {
        m.record(&dir, rel)?;
    }
    m.finish(&dir, "completed")?;
    Ok(with_dir(report, &dir))
}

pub fn default_scenario() -> ScenarioArgs {
    ScenarioArgs {
        robot: None,
        mass_scale: 1.0,
        failed_arm: None,
        force: None,
        torque: None,
        disturb_arm: 0,
        onset: spacearm::env::DEFAULT_ONSET,
        duration: 0.2,
        mode: crate::cli::Mode::Joint,
        horizon: None,
    }
}

/// Steady and transient statistics of one error channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Recovery {
    /// Nominal mean over the final window.
    pub nominal_steady: f64,
    /// Disturbed mean over the final window.
    pub disturbed_steady: f64,
    /// Disturbed mean over the window before the onset.
    pub pre_onset: Option<f64>,
    /// Largest disturbed error from the onset on.
    pub peak_after_onset: Option<f64>,
    /// `disturbed_steady / nominal_steady`.
    pub ratio: f64,
    /// Disturbed steady error at most twice the nominal one.
    pub reconverged: bool,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len().max(1) as f64
}

fn recovery(nominal: &[f64], disturbed: &[f64], window: usize, onset: Option<usize>) -> Recovery {
    let n = nominal.len();
    let tail = n.saturating_sub(window);
    let nominal_steady = mean(&nominal[tail..]);
    let disturbed_steady = mean(&disturbed[tail..]);
    let (pre_onset, peak_after_onset) = match onset {
        Some(k) if k < n => {
            let pre = &disturbed[k.saturating_sub(window)..k];
            (Some(mean(pre)), Some(disturbed[k..].iter().copied().fold(f64::MIN, f64::max)))
        }
        _ => (None, None),
    };
    Recovery {
        nominal_steady,
        disturbed_steady,
        pre_onset,
        peak_after_onset,
        ratio: disturbed_steady / nominal_steady,
        reconverged: disturbed_steady <= 2.0 * nominal_steady,
    }
}

/// Mean over episodes of a per-step error channel.
fn channel(runs: &[Vec<ErrorSummary>], pick: fn(&ErrorSummary) -> Option<f64>) -> Option<Vec<f64>> {
    let steps = runs.first()?.len();
    (0..steps).map(|t| runs.iter().map(|r| pick(&r[t])).sum::<Option<f64>>().map(|s| s / runs.len() as f64)).collect()
}

pub fn disturb(args: &DisturbArgs) -> Result<serde_json::Value> {
    check_episodes(args.episodes)?;
    let s = &args.scenario;
    if s.force.is_none() && s.torque.is_none() && s.failed_arm.is_none() {
        return Err(usage("disturb needs --force, --torque or --failed-arm"));
    }
    if !(args.window > 0.0) {
        return Err(usage("--window must be positive"));
    }
    let loaded = open_checkpoint(&args.checkpoint, s.robot.as_deref())?;
    let disturbed_env = scenario_env(&loaded, s)?;
    let nominal_scenario = ScenarioArgs {
        failed_arm: None,
        force: None,
        torque: None,
        horizon: Some(disturbed_env.task().episode_length),
        ..s.clone()
    };
    let nominal_env = scenario_env(&loaded, &nominal_scenario)?;
    let policy = Policy::for_env(&loaded.checkpoint.policies, &disturbed_env)?;
    let seeds = eval_seeds(args.seed, args.episodes);
    // Both series are scored on the arms that work in the disturbed run.
    let score = |runs: Vec<Vec<StepRecord>>| -> Vec<Vec<ErrorSummary>> {
        runs.iter().map(|r| r.iter().map(|st| summarize_errors(&disturbed_env, &st.info)).collect()).collect()
    };
    let nominal = score(run_episodes(&nominal_env, &policy, &seeds)?);
    let disturbed = score(run_episodes(&disturbed_env, &policy, &seeds)?);
    let period = disturbed_env.config().control_period();
    let window = ((args.window / period).round() as usize).max(1);
    let onset = disturbed_env.config().disturbance.pulse.map(|p| (p.onset / period).floor() as usize);
    let picks: [(&str, fn(&ErrorSummary) -> Option<f64>); 3] =
        [("position_error_m", |e| e.position), ("orientation_error_rad", |e| e.orientation), ("base_error_rad", |e| e.base)];
    let series: Vec<(Option<Vec<f64>>, Option<Vec<f64>>)> =
        picks.iter().map(|(_, p)| (channel(&nominal, *p), channel(&disturbed, *p))).collect();
    let mut recoveries = serde_json::Map::new();
    for ((name, _), (n, d)) in picks.iter().zip(&series) {
        if let (Some(n), Some(d)) = (n, d) {
            recoveries.insert(name.to_string(), serde_json::to_value(recovery(n, d, window, onset))?);
        }
    }
    let dir = new_run_dir(args.out.as_deref(), &format!("disturb-{}-s{}", stem(&args.checkpoint), args.seed))?;
    let config = json!({ "checkpoint": args.checkpoint, "episodes": args.episodes, "window_s": args.window, "scenario": scenario_json(s) });
    let mut m = manifest("disturb", config, vec![args.seed], &loaded, &dir);
    let mut w = csv::Writer::from_path(dir.join("timeseries.csv"))?;
    w.write_record([
        "step",
        "time_s",
        "nominal_position_error_m",
        "disturbed_position_error_m",
        "nominal_orientation_error_rad",
        "disturbed_orientation_error_rad",
        "nominal_base_error_rad",
        "disturbed_base_error_rad",
    ])?;
    let cell = |s: &Option<Vec<f64>>, t: usize| s.as_ref().map(|v| v[t].to_string()).unwrap_or_default();
    for t in 0..disturbed_env.task().episode_length {
        let mut rec = vec![(t + 1).to_string(), ((t + 1) as f64 * period).to_string()];
        for (n, d) in &series {
            rec.push(cell(n, t));
            rec.push(cell(d, t));
        }
        w.write_record(rec)?;
    }
    w.flush().map_err(|e| CliError::Format(e.to_string()))?;
    drop(w);
    let report = json!({
        "command": "disturb",
        "checkpoint": args.checkpoint,
        "seed": args.seed,
        "episodes": args.episodes,
        "scenario": scenario_json(s),
        "horizon_steps": disturbed_env.task().episode_length,
        "window_steps": window,
        "onset_step": onset,
        "recovery": recoveries,
    });
    write_json(&dir.join("summary.json"), &report)?;
    for rel in ["summary.json", "timeseries.csv"] {
        m.record(&dir, rel)?;
    }
    m.finish(&dir, "completed")?;
    Ok(with_dir(report, &dir))
}

pub fn export_trace(args: &TraceArgs) -> Result<serde_json::Value> {
    let loaded = open_checkpoint(&args.checkpoint, args.scenario.robot.as_deref())?;
    let env = scenario_env(&loaded, &args.scenario)?;
    let policy = Policy::for_env(&loaded.checkpoint.policies, &env)?;
    let seed = eval_seeds(args.seed, args.episode + 1)[args.episode];
    let steps = record_episode(&env, &policy, seed)?;
    let dir = new_run_dir(args.out.as_deref(), &format!("trace-{}-s{}-e{}", stem(&args.checkpoint), args.seed, args.episode))?;
    let config = json!({ "checkpoint": args.checkpoint, "episode": args.episode, "scenario": scenario_json(&args.scenario) });
    let mut m = manifest("export-trace", config, vec![args.seed], &loaded, &dir);
    let agents = steps.first().map_or(0, |s| s.rewards.len());
    let arms = env.tree().arm_count();
    let mut header = vec!["step".to_string(), "time_s".to_string()];
    header.extend((1..=agents).map(|k| format!("reward_agent_{k}")));
    header.extend((1..=arms).map(|a| format!("position_error_arm_{a}_m")));
    header.extend((1..=arms).map(|a| format!("orientation_error_arm_{a}_rad")));
    header.extend(["base_error_rad".to_string(), "collision".to_string()]);
    let mut w = csv::Writer::from_path(dir.join("trace.csv"))?;
    w.write_record(&header)?;
    for (t, st) in steps.iter().enumerate() {
        let mut rec = vec![(t + 1).to_string(), st.info.time.to_string()];
        rec.extend(st.rewards.iter().map(f64::to_string));
        rec.extend(st.info.position_errors.iter().map(f64::to_string));
        rec.extend(st.info.orientation_errors.iter().map(f64::to_string));
        rec.push(st.info.base_error_norm().to_string());
        rec.push(st.info.collision.is_some().to_string());
        w.write_record(rec)?;
    }
    w.flush().map_err(|e| CliError::Format(e.to_string()))?;
    drop(w);
    m.record(&dir, "trace.csv")?;
    m.finish(&dir, "completed")?;
    Ok(json!({
        "command": "export-trace",
        "run_dir": dir.display().to_string(),
        "episode_seed": seed,
        "steps": steps.len(),
    }))
}
