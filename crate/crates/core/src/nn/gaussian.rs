use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{LN_2, PI};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::mlp::{Activation, Mlp, MlpCache};
use crate::error::{config_err, Result};
use crate::math::{exp, ln, softplus, tanh};

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;

/// `ln(1 - tanh(x)^2)` without cancellation for large `|x|`.
pub fn log_one_minus_tanh_sq(x: f64) -> f64 {
    2.0 * (LN_2 - x - softplus(-2.0 * x))
}

fn half_log_two_pi() -> f64 {
    0.5 * ln(2.0 * PI)
}

/// Entropy of a `k`-dimensional Gaussian with the given log standard deviations.
pub fn gaussian_entropy(log_std: &[f64]) -> f64 {
    log_std.iter().map(|s| 0.5 + half_log_two_pi() + s).sum()
}

/// Diagonal Gaussian over pre-squash actions, squashed into `[-1, 1]` by tanh.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicy {
    mean: Mlp,
    log_std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicySample {
    /// Squashed action in `[-1, 1]`.
    pub action: Vec<f64>,
    pub pre_tanh: Vec<f64>,
    /// Standard-normal noise that produced `pre_tanh`.
    pub noise: Vec<f64>,
    pub log_prob: f64,
    /// Single-sample entropy estimate including the squash correction.
    pub entropy: f64,
}

/// Cache for [`GaussianPolicy::backward`].
#[derive(Debug, Clone)]
pub struct GaussianCache {
    mlp: MlpCache,
    pre_tanh: Vec<f64>,
    noise: Vec<f64>,
    pub log_prob: f64,
    pub entropy: f64,
}

impl GaussianPolicy {
    pub fn new(mean: Mlp, log_std: Vec<f64>) -> Result<Self> {
        if log_std.len() != mean.output_dim() {
            return Err(config_err!("log_std has {} entries for {} actions", log_std.len(), mean.output_dim()));
        }
        if !log_std.iter().all(|s| s.is_finite()) {
            return Err(config_err!("non-finite log_std"));
        }
        let mut p = Self { mean, log_std };
        p.clamp_log_std();
        Ok(p)
    }

    /// Tanh MLP with a damped output layer and a uniform initial log std.
    pub fn init<R: Rng + ?Sized>(sizes: &[usize], initial_log_std: f64, rng: &mut R) -> Result<Self> {
        let mut mean = Mlp::new(sizes, Activation::Tanh, rng)?;
        mean.scale_last_layer(0.01);
        let k = mean.output_dim();
        Self::new(mean, vec![initial_log_std; k])
    }

    pub fn mean_net(&self) -> &Mlp {
        &self.mean
    }
    pub fn mean_net_mut(&mut self) -> &mut Mlp {
        &mut self.mean
    }
    pub fn log_std(&self) -> &[f64] {
        &self.log_std
    }
    pub fn log_std_mut(&mut self) -> &mut [f64] {
        &mut self.log_std
    }
    pub fn clamp_log_std(&mut self) {
        for s in &mut self.log_std {
            *s = s.clamp(LOG_STD_MIN, LOG_STD_MAX);
        }
    }
    pub fn obs_dim(&self) -> usize {
        self.mean.input_dim()
    }
    pub fn action_dim(&self) -> usize {
        self.mean.output_dim()
    }

    /// `tanh(mean)`, the action used at evaluation time.
    pub fn deterministic(&self, obs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.mean.forward(obs)?.into_iter().map(tanh).collect())
    }

    pub fn sample<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> Result<PolicySample> {
        let noise: Vec<f64> = (0..self.action_dim()).map(|_| StandardNormal.sample(rng)).collect();
        self.sample_with_noise(obs, &noise)
    }

    pub fn sample_with_noise(&self, obs: &[f64], noise: &[f64]) -> Result<PolicySample> {
        if noise.len() != self.action_dim() {
            return Err(config_err!("noise has {} entries for {} actions", noise.len(), self.action_dim()));
        }
        let mu = self.mean.forward(obs)?;
        let pre_tanh: Vec<f64> = (0..mu.len()).map(|i| mu[i] + exp(self.log_std[i]) * noise[i]).collect();
        let (log_prob, entropy) = self.density_terms(&mu, &pre_tanh, noise);
        Ok(PolicySample {
            action: pre_tanh.iter().map(|&x| tanh(x)).collect(),
            pre_tanh,
            noise: noise.to_vec(),
            log_prob,
            entropy,
        })
    }

    /// `(log_prob, entropy estimate)` for a mean, a stored pre-squash action
    /// and its noise.
    pub fn density_terms(&self, mu: &[f64], pre_tanh: &[f64], noise: &[f64]) -> (f64, f64) {
        let mut log_prob = 0.0;
        let mut entropy = 0.0;
        for i in 0..mu.len() {
            let s = self.log_std[i];
            let z = (pre_tanh[i] - mu[i]) * exp(-s);
            log_prob += -0.5 * z * z - s - half_log_two_pi() - log_one_minus_tanh_sq(pre_tanh[i]);
            let y = mu[i] + exp(s) * noise[i];
            entropy += 0.5 + half_log_two_pi() + s + log_one_minus_tanh_sq(y);
        }
        (log_prob, entropy)
    }

    /// Log-probability of a stored pre-squash action and the reparameterized
    /// entropy estimate for the stored noise, under the current parameters.
    pub fn evaluate(&self, obs: &[f64], pre_tanh: &[f64], noise: &[f64]) -> Result<GaussianCache> {
        if pre_tanh.len() != self.action_dim() || noise.len() != self.action_dim() {
            return Err(config_err!("action dimension mismatch"));
        }
        let mlp = self.mean.forward_cached(obs)?;
        let (log_prob, entropy) = self.density_terms(mlp.output(), pre_tanh, noise);
        Ok(GaussianCache { mlp, pre_tanh: pre_tanh.to_vec(), noise: noise.to_vec(), log_prob, entropy })
    }

    /// Accumulates `d_log_prob * grad(log_prob) + d_entropy * grad(entropy)`
    /// into the mean-network and log-std gradient buffers.
    pub fn backward(
        &self,
        cache: &GaussianCache,
        d_log_prob: f64,
        d_entropy: f64,
        grad_mean: &mut [f64],
        grad_log_std: &mut [f64],
    ) -> Result<()> {
        let mut g_mu = vec![0.0; self.action_dim()];
        self.density_gradients(cache.mlp.output(), &cache.pre_tanh, &cache.noise, d_log_prob, d_entropy, &mut g_mu, grad_log_std);
        self.mean.backward(&cache.mlp, &g_mu, grad_mean)?;
        Ok(())
    }

    /// Gradient of `d_log_prob * log_prob + d_entropy * entropy` with respect
    /// to the mean (written to `g_mu`) and to log std (accumulated).
    #[allow(clippy::too_many_arguments)]
    pub fn density_gradients(
        &self,
        mu: &[f64],
        pre_tanh: &[f64],
        noise: &[f64],
        d_log_prob: f64,
        d_entropy: f64,
        g_mu: &mut [f64],
        grad_log_std: &mut [f64],
    ) {
        for i in 0..mu.len() {
            let s = self.log_std[i];
            let sigma = exp(s);
            let z = (pre_tanh[i] - mu[i]) / sigma;
            let t = tanh(mu[i] + sigma * noise[i]);
            g_mu[i] = d_log_prob * z / sigma - d_entropy * 2.0 * t;
            grad_log_std[i] += d_log_prob * (z * z - 1.0) + d_entropy * (1.0 - 2.0 * t * sigma * noise[i]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_log_det_matches_naive() {
        for x in [-3.0, -0.5, 0.0, 0.2, 1.7, 4.0] {
            let t: f64 = tanh(x);
            assert!((log_one_minus_tanh_sq(x) - ln(1.0 - t * t)).abs() < 1e-12);
        }
        assert!(log_one_minus_tanh_sq(40.0).is_finite());
    }

    #[test]
    fn unit_gaussian_entropy() {
        let k = 3.0;
        assert!((gaussian_entropy(&[0.0; 3]) - k / 2.0 * (1.0 + ln(2.0 * PI))).abs() < 1e-14);
    }

    #[test]
    fn min_std_zero_noise_gives_tanh_mean() {
        let mut mean = Mlp::zeros(&[2, 2], Activation::Tanh).unwrap();
        let (_, b) = mean.layer_offsets(0);
        mean.params_mut()[b] = 0.3;
        mean.params_mut()[b + 1] = -1.1;
        let p = GaussianPolicy::new(mean, vec![-10.0, -10.0]).unwrap();
        assert_eq!(p.log_std(), &[LOG_STD_MIN, LOG_STD_MIN]);
        let s = p.sample_with_noise(&[1.0, 1.0], &[0.0, 0.0]).unwrap();
        assert_eq!(s.action, vec![tanh(0.3), tanh(-1.1)]);
        assert_eq!(s.action, p.deterministic(&[1.0, 1.0]).unwrap());
    }
}
