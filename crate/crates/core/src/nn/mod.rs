//! Minimal differentiable kernel: dense layers, multi-head attention, layer
//! norm, transformer blocks, losses, Adam, finite-difference verification and
//! checkpointing. Every forward has a hand-derived backward; `gradcheck`
//! verifies them against central differences in double precision.

pub mod adam;
pub mod attention;
pub mod block;
pub mod checkpoint;
pub mod gradcheck;
pub mod linear;
pub mod losses;
pub mod norm;
pub mod param;
pub mod tensor;

pub use adam::{Adam, AdamConfig};
pub use attention::{softmax_rows, softmax_rows_backward, AttentionCtx, MultiHeadAttention};
pub use block::{
    add_positional_encoding, gelu, gelu_derivative, DecoderBlock, DecoderBlockCtx, FeedForward,
    TransformerBlock, TransformerBlockCtx,
};
pub use checkpoint::{Checkpoint, NamedTensor};
pub use gradcheck::{grad_check, GradCheckReport};
pub use linear::{Dense, DenseCtx};
pub use norm::{LayerNorm, LayerNormCtx};
pub use param::{
    count_params, param_names, set_trainable, visit_child, visit_child_mut, zero_grads, Module,
    Parameter,
};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch in {op}: expected {expected}, got {got}")]
    ShapeMismatch {
        op: String,
        expected: String,
        got: String,
    },
    #[error("non-finite value encountered in {0}")]
    NonFinite(String),
    #[error("zero-norm vector in {0}")]
    ZeroNorm(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("optimizer error: {0}")]
    Optimizer(String),
}
