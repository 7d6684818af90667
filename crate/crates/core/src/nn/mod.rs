//! Dense Q-network with manual backpropagation and an Adam optimizer.

mod adam;
pub mod checkpoint;
mod mlp;

pub use adam::{adam_step, AdamState};
pub use mlp::{init_bound, ForwardCache, Gradients, Layer, Mlp};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NnError {
    #[error("a network needs at least 2 layer dims, got {0}")]
    TooFewDims(usize),
    #[error("layer dim {0} is zero")]
    ZeroDim(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite values in {block}")]
    NonFinite { block: String },
    #[error("checkpoint format: {0}")]
    Format(String),
    #[error("checkpoint io: {0}")]
    Io(String),
}
