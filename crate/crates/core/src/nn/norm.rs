use alloc::vec;
use alloc::vec::Vec;

use crate::math::sqrt;

/// Smallest standard deviation used when turning statistics into scales.
pub const MIN_STD: f64 = 1e-2;

/// Running per-dimension mean and variance, merged batch by batch.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunningNorm {
    pub count: f64,
    pub mean: Vec<f64>,
    /// Population variance.
    pub var: Vec<f64>,
}

impl RunningNorm {
    pub fn new(dim: usize) -> Self {
        Self { count: 0.0, mean: vec![0.0; dim], var: vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Merges a batch (parallel-variance formula).
    pub fn update<'a>(&mut self, batch: impl IntoIterator<Item = &'a [f64]>) {
        let d = self.dim();
        let (mut n, mut mean, mut m2) = (0.0, vec![0.0; d], vec![0.0; d]);
        for x in batch {
            n += 1.0;
            for i in 0..d {
                let delta = x[i] - mean[i];
                mean[i] += delta / n;
                m2[i] += delta * (x[i] - mean[i]);
            }
        }
        if n == 0.0 {
            return;
        }
        let total = self.count + n;
        for i in 0..d {
            let delta = mean[i] - self.mean[i];
            let m2_total = self.var[i] * self.count + m2[i] + delta * delta * self.count * n / total;
            self.mean[i] += delta * n / total;
            self.var[i] = m2_total / total;
        }
        self.count = total;
    }

    /// `(shift, scale)` for [`crate::nn::Mlp::set_input_normalization`].
    pub fn shift_scale(&self) -> (Vec<f64>, Vec<f64>) {
        let scale = self.var.iter().map(|v| 1.0 / sqrt(*v).max(MIN_STD)).collect();
        (self.mean.clone(), scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merged_batches_match_one_pass() {
        let xs: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64 * 0.3, (i * i) as f64 % 7.0]).collect();
        let mut whole = RunningNorm::new(2);
        whole.update(xs.iter().map(|x| x.as_slice()));
        let mut parts = RunningNorm::new(2);
        parts.update(xs[..11].iter().map(|x| x.as_slice()));
        parts.update(xs[11..].iter().map(|x| x.as_slice()));
        for i in 0..2 {
            let m = xs.iter().map(|x| x[i]).sum::<f64>() / 30.0;
            let v = xs.iter().map(|x| (x[i] - m).powi(2)).sum::<f64>() / 30.0;
            assert!((whole.mean[i] - m).abs() < 1e-12 && (parts.mean[i] - m).abs() < 1e-12);
            assert!((whole.var[i] - v).abs() < 1e-12 && (parts.var[i] - v).abs() < 1e-12);
        }
    }
}
