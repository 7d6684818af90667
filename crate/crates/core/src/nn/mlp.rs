use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::NnError;

/// One affine layer. `weights` is `(fan_out, fan_in)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Layer {
    pub(crate) fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self { weights: Array2::zeros((fan_out, fan_in)), bias: Array1::zeros(fan_out) }
    }

    pub fn fan_in(&self) -> usize {
        self.weights.ncols()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.nrows()
    }
}

/// Fully connected network with rectified hidden layers and a linear output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    dims: Vec<usize>,
    layers: Vec<Layer>,
}

/// Parameter-shaped gradient buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Gradients {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        Self { layers: mlp.layers.iter().map(|l| Layer::zeros(l.fan_in(), l.fan_out())).collect() }
    }

    pub fn norm(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| l.weights.iter().chain(l.bias.iter()).map(|g| g * g).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    /// Rescales so the global L2 norm is at most `max_norm`; returns the norm before clipping.
    pub fn clip_norm(&mut self, max_norm: f64) -> f64 {
        let norm = self.norm();
        if norm > max_norm && norm.is_finite() {
            let scale = max_norm / norm;
            for l in &mut self.layers {
                l.weights.mapv_inplace(|g| g * scale);
                l.bias.mapv_inplace(|g| g * scale);
            }
        }
        norm
    }

    /// Flat view of every gradient entry, layer by layer, weights before biases.
    pub fn flatten(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied()).collect()
    }
}

/// Layer inputs and outputs recorded by a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `activations[0]` is the input batch; `activations[l + 1]` is the output of layer `l`.
    activations: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> ArrayView2<'_, f64> {
        self.activations.last().expect("cache holds the input").view()
    }

    pub fn batch_size(&self) -> usize {
        self.activations[0].nrows()
    }
}

impl Mlp {
    /// Uniform fan-in/fan-out scaled weights, zero biases, deterministic in `seed`.
    pub fn init(layer_dims: &[usize], seed: u64) -> Result<Self, NnError> {
        if layer_dims.len() < 2 {
            return Err(NnError::TooFewDims(layer_dims.len()));
        }
        if let Some(pos) = layer_dims.iter().position(|&d| d == 0) {
            return Err(NnError::ZeroDim(pos));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = layer_dims
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = init_bound(fan_in, fan_out);
                Layer {
                    weights: Array2::from_shape_simple_fn((fan_out, fan_in), || rng.gen_range(-bound..bound)),
                    bias: Array1::zeros(fan_out),
                }
            })
            .collect();
        Ok(Self { dims: layer_dims.to_vec(), layers })
    }

    /// Assembles a network from explicit layers, checking that shapes chain.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self, NnError> {
        if layers.is_empty() {
            return Err(NnError::TooFewDims(0));
        }
        let mut dims = vec![layers[0].fan_in()];
        for (i, l) in layers.iter().enumerate() {
            if l.fan_in() != *dims.last().unwrap() || l.bias.len() != l.fan_out() {
                return Err(NnError::DimensionMismatch(format!("layer {i} does not chain with its neighbours")));
            }
            if l.fan_out() == 0 || l.fan_in() == 0 {
                return Err(NnError::ZeroDim(i));
            }
            dims.push(l.fan_out());
        }
        Ok(Self { dims, layers })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Deep copy, used for target-network snapshots.
    pub fn clone_parameters(&self) -> Mlp {
        self.clone()
    }

    /// Overwrites this network's parameters with `src`'s without reallocating.
    pub fn copy_parameters_from(&mut self, src: &Mlp) {
        assert_eq!(self.dims, src.dims, "architectures differ");
        for (dst, s) in self.layers.iter_mut().zip(&src.layers) {
            dst.weights.assign(&s.weights);
            dst.bias.assign(&s.bias);
        }
    }

    pub fn forward(&self, input: &[f64]) -> Result<ForwardCache, NnError> {
        let x =
            ArrayView2::from_shape((1, input.len()), input).map_err(|e| NnError::DimensionMismatch(e.to_string()))?;
        self.forward_batch(x)
    }

    /// Forward pass over a `(batch, input_dim)` matrix.
    pub fn forward_batch(&self, x: ArrayView2<'_, f64>) -> Result<ForwardCache, NnError> {
        if x.ncols() != self.input_dim() {
            return Err(NnError::DimensionMismatch(format!(
                "input has {} features, network expects {}",
                x.ncols(),
                self.input_dim()
            )));
        }
        let last = self.layers.len() - 1;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.to_owned());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = activations[i].dot(&layer.weights.t());
            z += &layer.bias;
            if i < last {
                z.mapv_inplace(relu);
            }
            activations.push(z);
        }
        Ok(ForwardCache { activations })
    }

    /// Output for a single input without keeping intermediates.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>, NnError> {
        if input.len() != self.input_dim() {
            return Err(NnError::DimensionMismatch(format!(
                "input has {} features, network expects {}",
                input.len(),
                self.input_dim()
            )));
        }
        let last = self.layers.len() - 1;
        let mut x = input.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut out = layer.bias.to_vec();
            for (o, row) in out.iter_mut().zip(layer.weights.rows()) {
                *o += row.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>();
            }
            if i < last {
                out.iter_mut().for_each(|v| *v = relu(*v));
            }
            x = out;
        }
        Ok(x)
    }

    /// Reverse-mode gradients of a scalar loss whose derivative with respect
    /// to the network output is `output_grad` (same shape as the cached output).
    pub fn backward(&self, cache: &ForwardCache, output_grad: ArrayView2<'_, f64>) -> Result<Gradients, NnError> {
        if output_grad.dim() != cache.output().dim() {
            return Err(NnError::DimensionMismatch(format!(
                "output gradient {:?} does not match output {:?}",
                output_grad.dim(),
                cache.output().dim()
            )));
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = output_grad.to_owned();
        for l in (0..self.layers.len()).rev() {
            let input = &cache.activations[l];
            let weights = delta.t().dot(input);
            let bias = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut next = delta.dot(&self.layers[l].weights);
                Zip::from(&mut next).and(input).for_each(|d, &a| {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                });
                delta = next;
            }
            grads.push(Layer { weights, bias });
        }
        grads.reverse();
        Ok(Gradients { layers: grads })
    }

    pub(crate) fn check_finite(&self) -> Result<(), NnError> {
        for (i, l) in self.layers.iter().enumerate() {
            if !l.weights.iter().all(|v| v.is_finite()) {
                return Err(NnError::NonFinite { block: format!("layer {i} weights") });
            }
            if !l.bias.iter().all(|v| v.is_finite()) {
                return Err(NnError::NonFinite { block: format!("layer {i} bias") });
            }
        }
        Ok(())
    }
}

pub fn init_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

#[inline]
fn relu(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}
