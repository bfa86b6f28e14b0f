//! Small differentiable MLP stack for actors and critics.

mod adam;
mod gaussian;
mod mlp;
mod norm;

pub use adam::{clip_grad_norm, Adam};
pub use gaussian::{
    gaussian_entropy, log_one_minus_tanh_sq, GaussianCache, GaussianPolicy, PolicySample, LOG_STD_MAX, LOG_STD_MIN,
};
pub use mlp::{param_count, Activation, Mlp, MlpBatchCache, MlpCache};
pub use norm::{RunningNorm, MIN_STD};
