//! Per-iteration training metrics as CSV.
//!
//! Columns, in order (append-only):
//! `iteration, env_steps, reward_agent_1 .. reward_agent_N, position_error_m,
//! orientation_error_rad, base_error_rad, collision_rate, mean_return,
//! actor_objective, critic_loss, entropy`. Rewards are per control step,
//! averaged over the iteration's episodes; errors are the episodes' final
//! errors; empty cells mean the task has no such error.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use spacearm::marl::IterationMetrics;

use crate::error::{CliError, IoContext, Result};

pub const METRICS_FILE: &str = "metrics.csv";

pub fn header(agents: usize) -> Vec<String> {
    let mut h = vec!["iteration".to_string(), "env_steps".to_string()];
    h.extend((1..=agents).map(|k| format!("reward_agent_{k}")));
    for c in [
        "position_error_m",
        "orientation_error_rad",
        "base_error_rad",
        "collision_rate",
        "mean_return",
        "actor_objective",
        "critic_loss",
        "entropy",
    ] {
        h.push(c.into());
    }
    h
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn row(m: &IterationMetrics) -> Vec<String> {
    let mut r = vec![m.iteration.to_string(), m.env_steps.to_string()];
    r.extend(m.mean_reward.iter().map(|v| v.to_string()));
    r.extend([
        opt(m.position_error),
        opt(m.orientation_error),
        opt(m.base_error),
        m.collision_rate.to_string(),
        m.mean_return.to_string(),
        m.actor_objective.to_string(),
        m.critic_loss.to_string(),
        m.entropy.to_string(),
    ]);
    r
}

/// Appends rows to a metrics file, flushing after every row.
pub struct MetricsWriter {
    inner: csv::Writer<File>,
}

impl MetricsWriter {
    pub fn create(path: &Path, agents: usize) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(File::create(path).at(path)?);
        inner.write_record(header(agents))?;
        inner.flush().at(path)?;
        Ok(Self { inner })
    }

    /// Keeps the header and the rows up to `iteration`, then appends.
    pub fn resume(path: &Path, iteration: u64) -> Result<Self> {
        let file = File::open(path).at(path)?;
        let mut kept = String::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.at(path)?;
            if i as u64 > iteration {
                break;
            }
            kept.push_str(&line);
            kept.push('\n');
        }
        let mut f = File::create(path).at(path)?;
        f.write_all(kept.as_bytes()).at(path)?;
        Ok(Self { inner: csv::WriterBuilder::new().has_headers(false).from_writer(f) })
    }

    pub fn write(&mut self, m: &IterationMetrics) -> Result<()> {
        self.inner.write_record(row(m))?;
        self.inner.flush().map_err(|e| CliError::Format(e.to_string()))
    }
}

/// Reads one numeric column; empty cells are skipped.
pub fn read_column(path: &Path, name: &str) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let idx = rdr
        .headers()?
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::Format(format!("{}: no column `{name}`", path.display())))?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let cell = rec.get(idx).unwrap_or("");
        if !cell.is_empty() {
            out.push(cell.parse().map_err(|_| CliError::Format(format!("bad number `{cell}` in `{name}`")))?);
        }
    }
    Ok(out)
}

/// Per-iteration reward averaged over the `reward_agent_*` columns.
pub fn mean_agent_reward(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let cols: Vec<usize> =
        rdr.headers()?.iter().enumerate().filter(|(_, h)| h.starts_with("reward_agent_")).map(|(i, _)| i).collect();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let vals = cols.iter().map(|&i| rec.get(i).unwrap_or("").parse::<f64>()).collect::<Result<Vec<_>, _>>();
        let vals = vals.map_err(|_| CliError::Format(format!("{}: bad reward cell", path.display())))?;
        out.push(vals.iter().sum::<f64>() / vals.len().max(1) as f64);
    }
    Ok(out)
}

/// Means of `blocks` equal consecutive blocks of the last `fraction` of `xs`
/// (a leading remainder is dropped).
pub fn block_means(xs: &[f64], fraction: f64, blocks: usize) -> Vec<f64> {
    let tail = &xs[xs.len() - ((xs.len() as f64 * fraction) as usize).min(xs.len())..];
    let size = tail.len() / blocks.max(1);
    if size == 0 {
        return Vec::new();
    }
    let tail = &tail[tail.len() - size * blocks..];
    tail.chunks(size).map(|c| c.iter().sum::<f64>() / size as f64).collect()
}

/// Whether the block-smoothed reward over the last half never decreases.
pub fn smoothed_nondecreasing(rewards: &[f64], blocks: usize) -> bool {
    let m = block_means(rewards, 0.5, blocks);
    !m.is_empty() && m.windows(2).all(|w| w[1] >= w[0])
}
