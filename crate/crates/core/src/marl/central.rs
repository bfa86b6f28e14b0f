use alloc::vec::Vec;

use super::trainer::{ErrorSummary, MultiAgentEnv, StepOutcome};
use crate::env::{Reset, StepInfo};
use crate::error::{config_err, Result};

/// Single-agent view of a multi-agent environment: the agent observes the
/// global state, commands every joint and receives the sum of all rewards.
#[derive(Debug, Clone)]
pub struct Centralized<E> {
    inner: E,
}

impl<E: MultiAgentEnv> Centralized<E> {
    pub fn new(inner: E) -> Self {
        Self { inner }
    }
    pub fn inner(&self) -> &E {
        &self.inner
    }

    /// Splits one joint command into the inner agents' commands.
    pub fn split_action(&self, action: &[f64]) -> Result<Vec<Vec<f64>>> {
        let dims: Vec<usize> = (0..self.inner.agent_count()).map(|k| self.inner.action_dim(k)).collect();
        if action.len() != dims.iter().sum::<usize>() {
            return Err(config_err!("centralized action has {} entries, expected {}", action.len(), dims.iter().sum::<usize>()));
        }
        let mut out = Vec::with_capacity(dims.len());
        let mut off = 0;
        for d in dims {
            out.push(action[off..off + d].to_vec());
            off += d;
        }
        Ok(out)
    }
}

impl<E: MultiAgentEnv> MultiAgentEnv for Centralized<E> {
    fn agent_count(&self) -> usize {
        1
    }
    fn obs_dim(&self, _agent: usize) -> usize {
        self.inner.state_dim()
    }
    fn action_dim(&self, _agent: usize) -> usize {
        (0..self.inner.agent_count()).map(|k| self.inner.action_dim(k)).sum()
    }
    fn state_dim(&self) -> usize {
        self.inner.state_dim()
    }
    fn reset(&mut self, seed: u64) -> Result<Reset> {
        let r = self.inner.reset(seed)?;
        Ok(Reset { observations: alloc::vec![r.global_state.clone()], global_state: r.global_state })
    }
    fn step(&mut self, actions: &[Vec<f64>]) -> Result<StepOutcome> {
        if actions.len() != 1 {
            return Err(config_err!("centralized environment takes one action vector, got {}", actions.len()));
        }
        let split = self.split_action(&actions[0])?;
        let out = self.inner.step(&split)?;
        Ok(StepOutcome {
            observations: alloc::vec![out.global_state.clone()],
            global_state: out.global_state,
            rewards: alloc::vec![out.rewards.iter().sum()],
            done: out.done,
            info: out.info,
        })
    }
    fn summarize(&self, info: &StepInfo) -> ErrorSummary {
        self.inner.summarize(info)
    }
}
