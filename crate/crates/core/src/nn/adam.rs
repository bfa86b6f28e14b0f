use alloc::vec;
use alloc::vec::Vec;

use crate::error::{config_err, Error, Result};
use crate::math::sqrt;

/// Bias-corrected Adam over a flat parameter slice.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl Adam {
    pub fn new(len: usize, lr: f64) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; len], v: vec![0.0; len], t: 0 }
    }

    /// Applies one update. Non-finite gradients reject the step and leave
    /// both the parameters and the moments untouched.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(config_err!(
                "optimizer holds {} moments, got {} parameters and {} gradients",
                self.m.len(),
                params.len(),
                grads.len()
            ));
        }
        if !grads.iter().all(|g| g.is_finite()) {
            return Err(Error::Training("non-finite gradient, update rejected".into()));
        }
        self.t += 1;
        let c1 = 1.0 - powi(self.beta1, self.t);
        let c2 = 1.0 - powi(self.beta2, self.t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (sqrt(v_hat) + self.eps);
        }
        Ok(())
    }
}

fn powi(x: f64, n: u64) -> f64 {
    libm::pow(x, n as f64)
}

/// Rescales `grads` so that their Euclidean norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_grad_norm(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = sqrt(grads.iter().map(|g| g * g).sum());
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        for g in grads {
            *g *= s;
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr() {
        let mut opt = Adam::new(4, 8e-4);
        let mut p = vec![1.0, -2.0, 0.0, 3.0];
        let before = p.clone();
        opt.step(&mut p, &[1.0; 4]).unwrap();
        for (a, b) in p.iter().zip(&before) {
            // m_hat = 1, v_hat = 1: delta = -lr / (1 + eps).
            assert!((a - b + 8e-4 / (1.0 + 1e-8)).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_gradient_keeps_parameters() {
        let mut opt = Adam::new(3, 1e-3);
        let mut p = vec![0.5, 0.25, -1.0];
        opt.step(&mut p, &[0.0; 3]).unwrap();
        assert_eq!(p, vec![0.5, 0.25, -1.0]);
    }

    #[test]
    fn identical_calls_identical_results() {
        let mut a = Adam::new(2, 1e-2);
        let mut b = a.clone();
        let mut pa = vec![1.0, 2.0];
        let mut pb = pa.clone();
        for g in [[0.3, -0.7], [1.2, 0.1]] {
            a.step(&mut pa, &g).unwrap();
            b.step(&mut pb, &g).unwrap();
        }
        assert_eq!(pa, pb);
        assert_eq!(a, b);
    }

    #[test]
    fn non_finite_gradient_rejected() {
        let mut opt = Adam::new(2, 1e-3);
        let mut p = vec![1.0, 2.0];
        let err = opt.step(&mut p, &[f64::NAN, 0.0]).unwrap_err();
        assert!(matches!(err, Error::Training(_)));
        assert_eq!(p, vec![1.0, 2.0]);
        assert_eq!(opt.t, 0);
    }

    #[test]
    fn clipping() {
        let mut g = vec![3.0, 4.0];
        assert_eq!(clip_grad_norm(&mut g, 1.0), 5.0);
        assert!((g[0] - 0.6).abs() < 1e-15 && (g[1] - 0.8).abs() < 1e-15);
    }
}
