use alloc::vec;
use alloc::vec::Vec;

use crate::error::{input_err, Result};
use crate::math::sqrt;

/// Generalized advantage estimation over one trajectory segment.
///
/// `values[t]` estimates the state before step `t`; `dones[t]` marks a
/// terminal transition at step `t` (no bootstrapping through it);
/// `bootstrap` values the state after the last step when it is not terminal.
/// Returns `(advantages, returns)` with `returns = advantages + values`.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap: f64,
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = rewards.len();
    if n == 0 {
        return Err(input_err!("empty reward series"));
    }
    if values.len() != n || dones.len() != n {
        return Err(input_err!("rewards, values and done flags must have equal length"));
    }
    let mut adv = vec![0.0; n];
    let mut next_value = bootstrap;
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * live - values[t];
        next_adv = delta + gamma * lambda * live * next_adv;
        adv[t] = next_adv;
        next_value = values[t];
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((adv, returns))
}

/// Shifts and scales to zero mean and unit (population) standard deviation.
/// A constant batch becomes all zeros.
pub fn normalize(xs: &mut [f64]) {
    if xs.is_empty() {
        return;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let std = sqrt(var);
    for x in xs.iter_mut() {
        *x -= mean;
        if std > 1e-12 {
            *x /= std;
        }
    }
    // Remove the residual mean left by rounding.
    let residual = xs.iter().sum::<f64>() / n;
    for x in xs.iter_mut() {
        *x -= residual;
    }
}
