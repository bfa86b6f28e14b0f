use alloc::vec;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut};
use rand::Rng;

use crate::error::{config_err, Error, Result};
use crate::math::{sqrt, tanh};

static GENERATION: AtomicU64 = AtomicU64::new(1);

fn next_generation() -> u64 {
    GENERATION.fetch_add(1, Ordering::Relaxed)
}

/// Hidden-layer nonlinearity. The output layer is always linear.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Activation {
    Tanh,
    /// No nonlinearity anywhere; used in tests.
    Identity,
}

/// Fully connected network with flat parameter storage.
///
/// For every layer the weights (`out x in`, row-major) are followed by the
/// biases; layers are stored in order. Inputs pass through a fixed affine
/// normalization `(x - shift) * scale` first (identity unless set).
#[derive(Debug, Clone)]
pub struct Mlp {
    sizes: Vec<usize>,
    activation: Activation,
    params: Vec<f64>,
    shift: Vec<f64>,
    scale: Vec<f64>,
    generation: u64,
}

// Equality ignores the cache generation.
impl PartialEq for Mlp {
    fn eq(&self, other: &Self) -> bool {
        self.sizes == other.sizes
            && self.activation == other.activation
            && self.params == other.params
            && self.shift == other.shift
            && self.scale == other.scale
    }
}

/// Activations recorded by [`Mlp::forward_cached`].
#[derive(Debug, Clone)]
pub struct MlpCache {
    generation: u64,
    /// `layers[l]` is the input to layer `l`; the last entry is the output.
    layers: Vec<Vec<f64>>,
}

/// Activations of a minibatch (one sample per row), from
/// [`Mlp::forward_batch`].
#[derive(Debug, Clone)]
pub struct MlpBatchCache {
    generation: u64,
    layers: Vec<DMatrix<f64>>,
}

impl MlpBatchCache {
    pub fn output(&self) -> &DMatrix<f64> {
        self.layers.last().unwrap()
    }
}

impl MlpCache {
    pub fn output(&self) -> &[f64] {
        self.layers.last().map(|v| v.as_slice()).unwrap_or(&[])
    }
}

pub fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Mlp {
    /// All-zero network.
    pub fn zeros(sizes: &[usize], activation: Activation) -> Result<Self> {
        if sizes.len() < 2 || sizes.iter().any(|&s| s == 0) {
            return Err(config_err!("layer sizes must have at least two non-zero entries, got {sizes:?}"));
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            activation,
            params: vec![0.0; param_count(sizes)],
            shift: vec![0.0; sizes[0]],
            scale: vec![1.0; sizes[0]],
            generation: next_generation(),
        })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], activation: Activation, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(sizes, activation)?;
        let mut off = 0;
        for w in sizes.windows(2) {
            let (n_in, n_out) = (w[0], w[1]);
            let limit = sqrt(6.0 / (n_in + n_out) as f64);
            for p in &mut net.params[off..off + n_in * n_out] {
                *p = rng.random_range(-limit..limit);
            }
            off += n_in * n_out + n_out;
        }
        Ok(net)
    }

    pub fn from_params(sizes: &[usize], activation: Activation, params: Vec<f64>) -> Result<Self> {
        let mut net = Self::zeros(sizes, activation)?;
        if params.len() != net.params.len() {
            return Err(config_err!("expected {} parameters, got {}", net.params.len(), params.len()));
        }
        if !params.iter().all(|p| p.is_finite()) {
            return Err(config_err!("non-finite parameter"));
        }
        net.params = params;
        Ok(net)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }
    pub fn activation(&self) -> Activation {
        self.activation
    }
    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }
    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }
    pub fn params(&self) -> &[f64] {
        &self.params
    }
    /// Mutable parameter access; invalidates outstanding caches.
    pub fn params_mut(&mut self) -> &mut [f64] {
        self.generation = next_generation();
        &mut self.params
    }

    /// `(shift, scale)` of the input normalization.
    pub fn input_normalization(&self) -> (&[f64], &[f64]) {
        (&self.shift, &self.scale)
    }

    pub fn set_input_normalization(&mut self, shift: Vec<f64>, scale: Vec<f64>) -> Result<()> {
        if shift.len() != self.input_dim() || scale.len() != self.input_dim() {
            return Err(config_err!("input normalization must have {} entries", self.input_dim()));
        }
        if !shift.iter().all(|v| v.is_finite()) || !scale.iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(config_err!("input normalization must be finite with positive scales"));
        }
        self.shift = shift;
        self.scale = scale;
        self.generation = next_generation();
        Ok(())
    }

    /// `(weight offset, bias offset)` of layer `l`.
    pub fn layer_offsets(&self, l: usize) -> (usize, usize) {
        let off = param_count(&self.sizes[..=l]);
        (off, off + self.sizes[l] * self.sizes[l + 1])
    }

    /// Multiplies the output layer's weights and biases by `factor`.
    pub fn scale_last_layer(&mut self, factor: f64) {
        let l = self.sizes.len() - 2;
        let (w, _) = self.layer_offsets(l);
        for p in &mut self.params_mut()[w..] {
            *p *= factor;
        }
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let mut cache = self.forward_cached(input)?;
        Ok(cache.layers.pop().unwrap())
    }

    pub fn forward_cached(&self, input: &[f64]) -> Result<MlpCache> {
        if input.len() != self.input_dim() {
            return Err(config_err!("network expects {} inputs, got {}", self.input_dim(), input.len()));
        }
        let n_layers = self.sizes.len() - 1;
        let mut layers = Vec::with_capacity(n_layers + 1);
        layers.push(input.iter().zip(&self.shift).zip(&self.scale).map(|((x, m), s)| (x - m) * s).collect());
        for l in 0..n_layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let (w, b) = self.layer_offsets(l);
            let x = &layers[l];
            let mut y = self.params[b..b + n_out].to_vec();
            for (o, yo) in y.iter_mut().enumerate() {
                let row = &self.params[w + o * n_in..w + (o + 1) * n_in];
                *yo += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            }
            if l + 1 < n_layers && self.activation == Activation::Tanh {
                for v in &mut y {
                    *v = tanh(*v);
                }
            }
            layers.push(y);
        }
        Ok(MlpCache { generation: self.generation, layers })
    }

    /// Transposed weights of layer `l` as an `in x out` view.
    fn weights_t(&self, l: usize) -> DMatrixView<'_, f64> {
        let (w, b) = self.layer_offsets(l);
        DMatrixView::from_slice(&self.params[w..b], self.sizes[l], self.sizes[l + 1])
    }

    /// Forward pass over a minibatch stored one sample per row.
    pub fn forward_batch(&self, inputs: &DMatrix<f64>) -> Result<MlpBatchCache> {
        if inputs.ncols() != self.input_dim() {
            return Err(config_err!("network expects {} inputs, got {}", self.input_dim(), inputs.ncols()));
        }
        let n_layers = self.sizes.len() - 1;
        let rows = inputs.nrows();
        let mut x0 = inputs.clone();
        for (j, mut col) in x0.column_iter_mut().enumerate() {
            let (m, s) = (self.shift[j], self.scale[j]);
            col.apply(|v| *v = (*v - m) * s);
        }
        let mut layers = Vec::with_capacity(n_layers + 1);
        layers.push(x0);
        for l in 0..n_layers {
            let n_out = self.sizes[l + 1];
            let (_, b) = self.layer_offsets(l);
            let mut y = DMatrix::zeros(rows, n_out);
            y.gemm(1.0, &layers[l], &self.weights_t(l), 0.0);
            let hidden = l + 1 < n_layers && self.activation == Activation::Tanh;
            for (o, mut col) in y.column_iter_mut().enumerate() {
                let bias = self.params[b + o];
                if hidden {
                    col.apply(|v| *v = tanh(*v + bias));
                } else {
                    col.add_scalar_mut(bias);
                }
            }
            layers.push(y);
        }
        Ok(MlpBatchCache { generation: self.generation, layers })
    }

    /// Batched reverse pass: `grad_output` holds one row per sample.
    /// Parameter gradients (summed over the batch) are accumulated into
    /// `grads`; the input gradients are returned row by row.
    pub fn backward_batch(&self, cache: &MlpBatchCache, grad_output: &DMatrix<f64>, grads: &mut [f64]) -> Result<DMatrix<f64>> {
        if cache.generation != self.generation {
            return Err(Error::Internal("stale activation cache: parameters changed since forward".into()));
        }
        let rows = cache.layers[0].nrows();
        if grad_output.shape() != (rows, self.output_dim()) || grads.len() != self.params.len() {
            return Err(config_err!("gradient shapes do not match the network"));
        }
        let n_layers = self.sizes.len() - 1;
        let mut delta = grad_output.clone();
        for l in (0..n_layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            if l + 1 < n_layers && self.activation == Activation::Tanh {
                delta.zip_apply(&cache.layers[l + 1], |d, a| *d *= 1.0 - a * a);
            }
            let (w, b) = self.layer_offsets(l);
            {
                let (gw, gb) = grads[w..b + n_out].split_at_mut(n_in * n_out);
                let mut gw = DMatrixViewMut::from_slice(gw, n_in, n_out);
                gw.gemm(1.0, &cache.layers[l].transpose(), &delta, 1.0);
                for (o, col) in delta.column_iter().enumerate() {
                    gb[o] += col.sum();
                }
            }
            let mut dx = DMatrix::zeros(rows, n_in);
            dx.gemm(1.0, &delta, &self.weights_t(l).transpose(), 0.0);
            delta = dx;
        }
        for (j, mut col) in delta.column_iter_mut().enumerate() {
            col *= self.scale[j];
        }
        Ok(delta)
    }

    /// Reverse pass. Parameter gradients are accumulated into `grads`
    /// (same layout as [`Mlp::params`]); the input gradient is returned.
    pub fn backward(&self, cache: &MlpCache, grad_output: &[f64], grads: &mut [f64]) -> Result<Vec<f64>> {
        if cache.generation != self.generation {
            return Err(Error::Internal("stale activation cache: parameters changed since forward".into()));
        }
        if grad_output.len() != self.output_dim() || grads.len() != self.params.len() {
            return Err(config_err!("gradient shapes do not match the network"));
        }
        let n_layers = self.sizes.len() - 1;
        let mut delta = grad_output.to_vec();
        for l in (0..n_layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            if l + 1 < n_layers && self.activation == Activation::Tanh {
                for (d, a) in delta.iter_mut().zip(&cache.layers[l + 1]) {
                    *d *= 1.0 - a * a;
                }
            }
            let (w, b) = self.layer_offsets(l);
            let x = &cache.layers[l];
            let mut dx = vec![0.0; n_in];
            for o in 0..n_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                grads[b + o] += d;
                let row = w + o * n_in;
                for i in 0..n_in {
                    grads[row + i] += d * x[i];
                    dx[i] += d * self.params[row + i];
                }
            }
            delta = dx;
        }
        for (d, s) in delta.iter_mut().zip(&self.scale) {
            *d *= s;
        }
        Ok(delta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weights_output_bias() {
        let mut net = Mlp::zeros(&[3, 4, 2], Activation::Tanh).unwrap();
        let (_, b) = net.layer_offsets(1);
        net.params_mut()[b] = 0.5;
        net.params_mut()[b + 1] = -1.5;
        assert_eq!(net.forward(&[9.0, -3.0, 1.0]).unwrap(), vec![0.5, -1.5]);
    }

    #[test]
    fn identity_single_layer_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut net = Mlp::new(&[3, 2], Activation::Identity, &mut rng).unwrap();
        let (_, b) = net.layer_offsets(0);
        net.params_mut()[b..].fill(0.0);
        let y1 = net.forward(&[1.0, 2.0, -1.0]).unwrap();
        let y3 = net.forward(&[3.0, 6.0, -3.0]).unwrap();
        for (a, b) in y1.iter().zip(&y3) {
            assert!((3.0 * a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn stale_cache_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut net = Mlp::new(&[2, 3, 1], Activation::Tanh, &mut rng).unwrap();
        let cache = net.forward_cached(&[0.1, 0.2]).unwrap();
        net.params_mut()[0] += 1.0;
        let mut g = vec![0.0; net.params().len()];
        assert!(matches!(net.backward(&cache, &[1.0], &mut g), Err(Error::Internal(_))));
    }

    #[test]
    fn input_normalization_is_affine() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut net = Mlp::new(&[2, 4, 1], Activation::Tanh, &mut rng).unwrap();
        let plain = net.forward(&[0.5, -0.25]).unwrap();
        net.set_input_normalization(vec![1.0, 2.0], vec![0.5, 4.0]).unwrap();
        assert_eq!(net.forward(&[2.0, 1.9375]).unwrap(), plain);
        assert!(net.set_input_normalization(vec![0.0, 0.0], vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn shape_mismatch_is_config_error() {
        let net = Mlp::zeros(&[2, 1], Activation::Tanh).unwrap();
        assert!(matches!(net.forward(&[1.0]), Err(Error::Config(_))));
        assert!(Mlp::zeros(&[2], Activation::Tanh).is_err());
    }
}
