use crate::error::{config_err, Result};
use crate::math::{ln, norm_sq, wrap_angle};

/// Weights of the shaped reward.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct RewardConfig {
    /// Quadratic error.
    pub w1: f64,
    /// Inside the log term.
    pub w2: f64,
    /// Action change.
    pub w3: f64,
    /// Action magnitude.
    pub w4: f64,
    /// Collision penalty (base reorientation only).
    pub w5: f64,
    pub epsilon_log: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self { w1: 0.001, w2: 1.0, w3: 0.01, w4: 0.05, w5: 0.5, epsilon_log: 1e-3 }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        let w = [self.w1, self.w2, self.w3, self.w4, self.w5];
        if w.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(config_err!("reward weights must be finite and non-negative"));
        }
        if !(self.epsilon_log > 0.0) {
            return Err(config_err!("epsilon_log must be positive"));
        }
        Ok(())
    }
}

/// Componentwise `desired - current`, wrapped into `(-pi, pi]`.
pub fn euler_error(desired: [f64; 3], current: [f64; 3]) -> [f64; 3] {
    [
        wrap_angle(desired[0] - current[0]),
        wrap_angle(desired[1] - current[1]),
        wrap_angle(desired[2] - current[2]),
    ]
}

fn shaped(e: &[f64], u: &[f64], u_prev: &[f64], cfg: &RewardConfig) -> f64 {
    let e2 = norm_sq(e);
    let du: f64 = u.iter().zip(u_prev).map(|(a, b)| (a - b) * (a - b)).sum();
    cfg.w1 * e2 + ln(cfg.w2 * e2 + cfg.epsilon_log) + cfg.w3 * du + cfg.w4 * norm_sq(u)
}

/// Per-agent reaching reward.
///
/// `e` is the position error (m) for position agents or the orientation error
/// (rad) for wrist agents; `u`, `u_prev` are the agent's own normalized
/// actions. The applied torques do not enter the formula.
pub fn reward_trajectory(e: &[f64], u: &[f64], u_prev: &[f64], cfg: &RewardConfig) -> f64 {
    -shaped(e, u, u_prev, cfg)
}

/// Shared base-attitude reward with collision penalty.
pub fn reward_base(e_b: &[f64], u: &[f64], u_prev: &[f64], collided: bool, cfg: &RewardConfig) -> f64 {
    let co = if collided { 1.0 } else { 0.0 };
    -shaped(e_b, u, u_prev, cfg) - cfg.w5 * co
}
