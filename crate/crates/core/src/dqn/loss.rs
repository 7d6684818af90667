//! Bootstrap targets and the similarity-weighted multi-head TD loss.
//!
//! For a batch of `B` samples with taken actions `a_i` and targets `y_i`:
//!
//! ```text
//! loss        = (1/B) * sum_i sum_b K(a_i, b) * (y_i - Q(s_i, b))^2
//! dloss/dQ_ib = (2/B) * K(a_i, b) * (Q(s_i, b) - y_i)
//! ```
//!
//! With the identity matrix only the taken head contributes, which is the
//! ordinary squared TD error.

use ndarray::{Array2, ArrayView2};

use super::DqnError;
use crate::augmentation::SimilarityMatrix;
use crate::envs::Observation;
use crate::nn::Mlp;
use crate::qcore::Transition;

/// The one-step bootstrap target of one sample. It carries no gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QBatchTarget {
    pub y: f64,
}

/// Stacks observations row-wise into a `(batch, dim)` matrix.
pub(crate) fn stack<'a>(
    obs: impl ExactSizeIterator<Item = &'a Observation>,
    dim: usize,
) -> Result<Array2<f64>, DqnError> {
    let rows = obs.len();
    let mut flat = Vec::with_capacity(rows * dim);
    for o in obs {
        if o.len() != dim {
            return Err(DqnError::InvalidConfig(format!("observation of length {} where {dim} expected", o.len())));
        }
        flat.extend_from_slice(o.as_slice());
    }
    Ok(Array2::from_shape_vec((rows, dim), flat).expect("shape matches"))
}

/// `y = r` for terminal samples, otherwise `r + gamma * max_b target_net(s')_b`.
pub fn compute_targets(
    batch: &[&Transition<Observation>],
    target_net: &Mlp,
    gamma: f64,
) -> Result<Vec<QBatchTarget>, DqnError> {
    if batch.is_empty() {
        return Err(DqnError::InvalidConfig("empty batch".into()));
    }
    let next = stack(batch.iter().map(|t| &t.s_next), target_net.input_dim())?;
    let cache = target_net.forward_batch(next.view())?;
    let out = cache.output();
    Ok(batch
        .iter()
        .zip(out.rows())
        .map(|(t, row)| {
            let y = if t.terminal { t.r } else { t.r + gamma * row.iter().copied().fold(f64::NEG_INFINITY, f64::max) };
            QBatchTarget { y }
        })
        .collect())
}

/// Loss and output gradient of the similarity-weighted TD objective.
pub fn weighted_td_loss(
    q_outputs: ArrayView2<'_, f64>,
    actions: &[usize],
    targets: &[QBatchTarget],
    k: &SimilarityMatrix,
) -> Result<(f64, Array2<f64>), DqnError> {
    weighted_td_loss_with(q_outputs, actions, targets, k, false)
}

/// [`weighted_td_loss`] that can also divide each sample's weights by the size
/// of the similarity row of its action (`normalize_by_clique`).
pub fn weighted_td_loss_with(
    q_outputs: ArrayView2<'_, f64>,
    actions: &[usize],
    targets: &[QBatchTarget],
    k: &SimilarityMatrix,
    normalize_by_clique: bool,
) -> Result<(f64, Array2<f64>), DqnError> {
    let (batch, heads) = q_outputs.dim();
    if batch == 0 || actions.len() != batch || targets.len() != batch {
        return Err(DqnError::InvalidConfig(format!(
            "batch of {batch} outputs with {} actions and {} targets",
            actions.len(),
            targets.len()
        )));
    }
    if k.size() != heads {
        return Err(DqnError::InvalidConfig(format!("similarity matrix of size {} for {heads} heads", k.size())));
    }
    let scale = 2.0 / batch as f64;
    let mut grad = Array2::zeros((batch, heads));
    let mut total = 0.0;
    for (i, (&a, target)) in actions.iter().zip(targets).enumerate() {
        if a >= heads {
            return Err(DqnError::InvalidConfig(format!("action {a} out of range for {heads} heads")));
        }
        let row = k.row(a);
        let norm = if normalize_by_clique { row.iter().sum::<f64>() } else { 1.0 };
        for (b, &kw) in row.iter().enumerate() {
            if kw == 0.0 {
                continue;
            }
            let w = kw / norm;
            let diff = q_outputs[[i, b]] - target.y;
            total += w * diff * diff;
            grad[[i, b]] = scale * w * diff;
        }
    }
    Ok((total / batch as f64, grad))
}
