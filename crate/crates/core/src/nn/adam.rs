use ndarray::Zip;

use super::mlp::{Gradients, Mlp};
use super::NnError;

/// Adaptive-moment optimizer state with bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    first: Gradients,
    second: Gradients,
}

impl AdamState {
    pub fn new(mlp: &Mlp, learning_rate: f64) -> Self {
        Self::with_decays(mlp, learning_rate, 0.9, 0.999, 1e-8)
    }

    pub fn with_decays(mlp: &Mlp, learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Self {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            step: 0,
            first: Gradients::zeros_like(mlp),
            second: Gradients::zeros_like(mlp),
        }
    }
}

/// One optimizer step. Non-finite gradients are rejected before anything is modified.
pub fn adam_step(mlp: &mut Mlp, grads: &Gradients, state: &mut AdamState) -> Result<(), NnError> {
    if grads.layers.len() != mlp.layers().len() {
        return Err(NnError::DimensionMismatch("gradient layer count differs from network".into()));
    }
    for (i, (g, p)) in grads.layers.iter().zip(mlp.layers()).enumerate() {
        if g.weights.dim() != p.weights.dim() || g.bias.dim() != p.bias.dim() {
            return Err(NnError::DimensionMismatch(format!("gradient shape differs at layer {i}")));
        }
        if !g.weights.iter().all(|v| v.is_finite()) {
            return Err(NnError::NonFinite { block: format!("layer {i} weight gradient") });
        }
        if !g.bias.iter().all(|v| v.is_finite()) {
            return Err(NnError::NonFinite { block: format!("layer {i} bias gradient") });
        }
    }

    state.step += 1;
    let (b1, b2, eps, lr) = (state.beta1, state.beta2, state.epsilon, state.learning_rate);
    let bc1 = 1.0 - b1.powi(state.step as i32);
    let bc2 = 1.0 - b2.powi(state.step as i32);
    let update = |p: &mut f64, &g: &f64, m: &mut f64, v: &mut f64| {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        *p -= lr * (*m / bc1) / ((*v / bc2).sqrt() + eps);
    };

    for (((p, g), m), v) in mlp
        .layers_mut()
        .iter_mut()
        .zip(&grads.layers)
        .zip(state.first.layers.iter_mut())
        .zip(state.second.layers.iter_mut())
    {
        Zip::from(&mut p.weights).and(&g.weights).and(&mut m.weights).and(&mut v.weights).for_each(update);
        Zip::from(&mut p.bias).and(&g.bias).and(&mut m.bias).and(&mut v.bias).for_each(update);
    }
    mlp.check_finite()
}
