use serde_json::json;
use spacearm::assembly::{reassemble, ArmSource, Checkpoint, PolicySet};
use spacearm::env::{ArmTask, TaskKind};
use spacearm::robot::build_space_robot;
use spacearm::Error;

use super::evaluate::{default_scenario, evaluate};
use super::{check_episodes, open_checkpoint, write_episodes_csv, Loaded};
use crate::cli::{ReassembleArgs, ScenarioArgs};
use crate::error::{usage, Result};
use crate::model::sha256_hex;
use crate::runs::{new_run_dir, save_checkpoint, write_json, RunManifest};

pub const MIXED_CHECKPOINT: &str = "mixed.octo";

/// Digest of every actor parameter of a set, in agent order.
pub fn actor_digest(set: &PolicySet) -> String {
    let mut bytes = Vec::new();
    for a in &set.agents {
        for p in a.actor.mean_net().params().iter().chain(a.actor.log_std()) {
            bytes.extend_from_slice(&p.to_le_bytes());
        }
    }
    sha256_hex(&bytes)
}

fn parse_assign(assign: Option<&[String]>, arms: usize) -> Result<Vec<ArmTask>> {
    let Some(tags) = assign else {
        return Ok((0..arms).map(|a| if a == 0 { ArmTask::Trajectory } else { ArmTask::Reorientation }).collect());
    };
    if tags.len() != arms {
        return Err(usage(format!("--assign lists {} arms, the robot has {arms}", tags.len())));
    }
    tags.iter()
        .map(|t| match t.trim().to_ascii_lowercase().as_str() {
            "t" | "trajectory" => Ok(ArmTask::Trajectory),
            "r" | "reorientation" => Ok(ArmTask::Reorientation),
            other => Err(usage(format!("unknown arm task `{other}`; use T or R"))),
        })
        .collect()
}

fn expect_task(loaded: &Loaded, want: TaskKind, flag: &str) -> Result<()> {
    let set = &loaded.checkpoint.policies;
    if set.task != want || set.provenance.algorithm != "mappo" {
        return Err(Error::Composition(format!(
            "{flag} needs a mappo checkpoint of the {} task, {} holds {} {:?}",
            flag.trim_start_matches('-'),
            loaded.path.display(),
            set.provenance.algorithm,
            set.task
        ))
        .into());
    }
    Ok(())
}

fn ratio(mixed: Option<f64>, single: Option<f64>) -> Option<f64> {
    Some(mixed? / single?)
}

pub fn reassemble_eval(args: &ReassembleArgs) -> Result<serde_json::Value> {
    check_episodes(args.episodes)?;
    let traj = open_checkpoint(&args.trajectory, None)?;
    let reo = open_checkpoint(&args.reorientation, None)?;
    expect_task(&traj, TaskKind::TrajectoryPlanning, "--trajectory")?;
    expect_task(&reo, TaskKind::BaseReorientation, "--reorientation")?;
    let (tp, rp) = (&traj.checkpoint.policies.provenance, &reo.checkpoint.policies.provenance);
    if tp.robot_hash != rp.robot_hash || tp.model_version != rp.model_version {
        return Err(Error::Composition(format!(
            "donors were trained on different robots (`{}` and `{}`)",
            tp.robot, rp.robot
        ))
        .into());
    }
    let before = [actor_digest(&traj.checkpoint.policies), actor_digest(&reo.checkpoint.policies)];

    let tree = build_space_robot(&traj.robot)?;
    let assign = parse_assign(args.assign.as_deref(), tree.arm_count())?;
    let sources: Vec<ArmSource<'_>> = assign
        .iter()
        .map(|&task| ArmSource {
            set: match task {
                ArmTask::Trajectory => &traj.checkpoint.policies,
                ArmTask::Reorientation => &reo.checkpoint.policies,
            },
            task,
        })
        .collect();
    let horizon = args.horizon.unwrap_or(spacearm::env::DEFAULT_EPISODE_LENGTH);
    let (mut set, _) = reassemble(&tree, &sources, horizon)?;
    // A uniform assignment is the donor's own task.
    if assign.iter().all(|&t| t == ArmTask::Trajectory) {
        set.task = TaskKind::TrajectoryPlanning;
        set.provenance.task = "trajectory".into();
    } else if assign.iter().all(|&t| t == ArmTask::Reorientation) {
        set.task = TaskKind::BaseReorientation;
        set.provenance.task = "reorientation".into();
    }
    let mixed = Loaded {
        path: "mixed".into(),
        checkpoint: Checkpoint { policies: set, training: None },
        robot_spec: traj.robot_spec.clone(),
        robot: traj.robot.clone(),
    };
    let scenario = ScenarioArgs { horizon: Some(horizon), ..default_scenario() };
    let (mixed_summary, traces) = evaluate(&mixed, &scenario, args.seed, args.episodes)?;
    let (traj_summary, _) = evaluate(&traj, &scenario, args.seed, args.episodes)?;
    let (reo_summary, _) = evaluate(&reo, &scenario, args.seed, args.episodes)?;

    let after = [actor_digest(&traj.checkpoint.policies), actor_digest(&reo.checkpoint.policies)];
    let hashes_unchanged = before == after;
    let position_ratio = ratio(
        mixed_summary.position_error_m.map(|s| s.mean),
        traj_summary.position_error_m.map(|s| s.mean),
    );
    let base_ratio = ratio(mixed_summary.base_error_rad.map(|s| s.mean), reo_summary.base_error_rad.map(|s| s.mean));

    let dir = new_run_dir(args.out.as_deref(), &format!("reassemble-s{}", args.seed))?;
    let tags: Vec<&str> = assign.iter().map(|t| if *t == ArmTask::Trajectory { "T" } else { "R" }).collect();
    let config = json!({
        "trajectory": args.trajectory,
        "reorientation": args.reorientation,
        "assign": tags,
        "episodes": args.episodes,
        "horizon": horizon,
    });
    let mut m = RunManifest::new("reassemble-eval", config.clone(), vec![args.seed], &traj.robot_spec, &tp.robot_hash, &dir);
    save_checkpoint(&dir.join(MIXED_CHECKPOINT), &mixed.checkpoint)?;
    write_episodes_csv(&dir.join("episodes.csv"), &traces)?;
    let report = json!({
        "command": "reassemble-eval",
        "config": config,
        "seed": args.seed,
        "mixed": mixed_summary,
        "trajectory_single": traj_summary,
        "reorientation_single": reo_summary,
        "position_error_ratio": position_ratio,
        "base_error_ratio": base_ratio,
        "actor_digests_before": before,
        "actor_digests_after": after,
        "hashes_unchanged": hashes_unchanged,
    });
    write_json(&dir.join("report.json"), &report)?;
    for rel in ["report.json", MIXED_CHECKPOINT, "episodes.csv"] {
        m.record(&dir, rel)?;
    }
    m.finish(&dir, "completed")?;
    let mut out = report;
    out["run_dir"] = json!(dir.display().to_string());
    Ok(out)
}
