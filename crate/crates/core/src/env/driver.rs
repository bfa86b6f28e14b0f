use alloc::vec::Vec;

use crate::error::{config_err, input_err, Result};

/// Fixed PD velocity tracker:
/// `tau = kp (qdot_des - qdot) - kd qddot_est`, clamped to `+-tau_max`.
///
/// Desired rates are clamped to `+-qdot_max` first.
pub fn pd_driver(
    desired_qdot: &[f64],
    current_qdot: &[f64],
    qddot_estimate: &[f64],
    kp: &[f64],
    kd: &[f64],
    qdot_max: &[f64],
    tau_max: &[f64],
) -> Result<Vec<f64>> {
    let n = desired_qdot.len();
    if [current_qdot.len(), qddot_estimate.len(), kp.len(), kd.len(), qdot_max.len(), tau_max.len()]
        .iter()
        .any(|&l| l != n)
    {
        return Err(config_err!("driver inputs must all have {n} entries"));
    }
    let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
    if !finite(desired_qdot) || !finite(current_qdot) || !finite(qddot_estimate) {
        return Err(input_err!("non-finite driver input"));
    }
    Ok((0..n)
        .map(|j| {
            let des = desired_qdot[j].clamp(-qdot_max[j], qdot_max[j]);
            let tau = kp[j] * (des - current_qdot[j]) - kd[j] * qddot_estimate[j];
            tau.clamp(-tau_max[j], tau_max[j])
        })
        .collect())
}
