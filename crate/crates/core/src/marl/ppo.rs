use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{config_err, Error, Result};
use crate::math::exp;
use crate::nn::{clip_grad_norm, Activation, Adam, GaussianPolicy, Mlp};

/// Centralized state-value network; the output is scaled by `scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction {
    pub net: Mlp,
    pub scale: f64,
}

impl ValueFunction {
    pub fn init<R: Rng + ?Sized>(state_dim: usize, hidden: &[usize], scale: f64, rng: &mut R) -> Result<Self> {
        let mut sizes = vec![state_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        Ok(Self { net: Mlp::new(&sizes, Activation::Tanh, rng)?, scale })
    }

    pub fn value(&self, state: &[f64]) -> Result<f64> {
        Ok(self.net.forward(state)?[0] * self.scale)
    }
}

/// `clamp(r, 1 - eps, 1 + eps)`.
pub fn clip_ratio(r: f64, eps: f64) -> f64 {
    r.clamp(1.0 - eps, 1.0 + eps)
}

/// `min(r A, clip(r) A)`.
pub fn clipped_surrogate(r: f64, advantage: f64, eps: f64) -> f64 {
    (r * advantage).min(clip_ratio(r, eps) * advantage)
}

/// Derivative of [`clipped_surrogate`] with respect to `r`: `A` on the
/// unclipped branch, zero when the clipped constant is the minimum.
pub fn surrogate_ratio_gradient(r: f64, advantage: f64, eps: f64) -> f64 {
    if r * advantage <= clip_ratio(r, eps) * advantage {
        advantage
    } else {
        0.0
    }
}

/// One stored decision of an agent.
#[derive(Debug, Clone, Copy)]
pub struct ActorSample<'a> {
    pub obs: &'a [f64],
    pub pre_tanh: &'a [f64],
    pub noise: &'a [f64],
    pub old_log_prob: f64,
    pub advantage: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActorStats {
    /// Mean clipped surrogate plus entropy bonus (maximized).
    pub objective: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
}

/// Adam over an actor's mean-network parameters followed by its log std.
pub fn actor_optimizer(actor: &GaussianPolicy, lr: f64) -> Adam {
    Adam::new(actor.mean_net().params().len() + actor.action_dim(), lr)
}

/// One gradient-ascent step on the clipped surrogate plus entropy bonus over
/// a minibatch.
pub fn ppo_actor_update(
    actor: &mut GaussianPolicy,
    opt: &mut Adam,
    batch: &[ActorSample<'_>],
    clip_epsilon: f64,
    entropy_coef: f64,
    max_grad_norm: f64,
) -> Result<ActorStats> {
    if batch.is_empty() {
        return Err(config_err!("empty actor minibatch"));
    }
    let np = actor.mean_net().params().len();
    let k = actor.action_dim();
    let d = actor.obs_dim();
    let mut grad = vec![0.0; np + k];
    let inv = 1.0 / batch.len() as f64;
    let mut stats = ActorStats::default();
    {
        let (gm, gs) = grad.split_at_mut(np);
        for s in batch {
            if s.obs.len() != d || s.pre_tanh.len() != k || s.noise.len() != k {
                return Err(config_err!("actor sample dimensions do not match the policy"));
            }
        }
        let obs = DMatrix::from_fn(batch.len(), d, |i, j| batch[i].obs[j]);
        let cache = actor.mean_net().forward_batch(&obs)?;
        let means = cache.output();
        let mut g_means = DMatrix::zeros(batch.len(), k);
        let mut mu = vec![0.0; k];
        let mut g_mu = vec![0.0; k];
        for (i, s) in batch.iter().enumerate() {
            for j in 0..k {
                mu[j] = means[(i, j)];
            }
            let (log_prob, entropy) = actor.density_terms(&mu, s.pre_tanh, s.noise);
            let log_ratio = log_prob - s.old_log_prob;
            let r = exp(log_ratio);
            if !r.is_finite() {
                return Err(Error::Training("non-finite probability ratio".into()));
            }
            stats.objective += (clipped_surrogate(r, s.advantage, clip_epsilon) + entropy_coef * entropy) * inv;
            stats.entropy += entropy * inv;
            stats.approx_kl += ((r - 1.0) - log_ratio) * inv;
            if (r - 1.0).abs() > clip_epsilon {
                stats.clip_fraction += inv;
            }
            // Minimize the negative objective.
            let d_log_prob = -surrogate_ratio_gradient(r, s.advantage, clip_epsilon) * r * inv;
            actor.density_gradients(&mu, s.pre_tanh, s.noise, d_log_prob, -entropy_coef * inv, &mut g_mu, gs);
            for j in 0..k {
                g_means[(i, j)] = g_mu[j];
            }
        }
        actor.mean_net().backward_batch(&cache, &g_means, gm)?;
    }
    if max_grad_norm > 0.0 {
        clip_grad_norm(&mut grad, max_grad_norm);
    }
    let mut params = Vec::with_capacity(np + k);
    params.extend_from_slice(actor.mean_net().params());
    params.extend_from_slice(actor.log_std());
    opt.step(&mut params, &grad)?;
    if !params.iter().all(|p| p.is_finite()) {
        return Err(Error::Training("actor parameters became non-finite".into()));
    }
    actor.mean_net_mut().params_mut().copy_from_slice(&params[..np]);
    actor.log_std_mut().copy_from_slice(&params[np..]);
    actor.clamp_log_std();
    Ok(stats)
}

/// One Adam step on the mean squared error between the critic and the
/// targets `y` (unscaled returns). Returns the loss in scaled units.
pub fn critic_update(
    critic: &mut ValueFunction,
    opt: &mut Adam,
    batch: &[(&[f64], f64)],
    max_grad_norm: f64,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(config_err!("empty critic minibatch"));
    }
    let d = critic.net.input_dim();
    if batch.iter().any(|(s, _)| s.len() != d) {
        return Err(config_err!("critic expects {d} state entries"));
    }
    let mut grad = vec![0.0; critic.net.params().len()];
    let inv = 1.0 / batch.len() as f64;
    let states = DMatrix::from_fn(batch.len(), d, |i, j| batch[i].0[j]);
    let cache = critic.net.forward_batch(&states)?;
    let mut loss = 0.0;
    let mut g_out = DMatrix::zeros(batch.len(), 1);
    for (i, (_, y)) in batch.iter().enumerate() {
        let err = cache.output()[(i, 0)] - y / critic.scale;
        loss += err * err * inv;
        g_out[(i, 0)] = 2.0 * err * inv;
    }
    critic.net.backward_batch(&cache, &g_out, &mut grad)?;
    if !loss.is_finite() {
        return Err(Error::Training("non-finite critic loss".into()));
    }
    if max_grad_norm > 0.0 {
        clip_grad_norm(&mut grad, max_grad_norm);
    }
    opt.step(critic.net.params_mut(), &grad)?;
    Ok(loss)
}
