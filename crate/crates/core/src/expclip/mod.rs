//! The alignment model mapping text, facial expressions, and facial-image
//! features into one joint style space, plus its two-stage trainer.

mod featurize;
mod model;
mod train;

pub use featurize::{TextFeaturizer, DEFAULT_TEXT_FEATURE_WIDTH};
pub use model::{
    ExpClipModel, ExpClipModelConfig, ExprDecoder, ExprDecoderCtx, ExprEncoder, ExprEncoderCtx,
    Projector, ProjectorCtx, StyleEmbedding,
};
pub use train::{
    history_to_csv, train_expclip_image, train_expclip_text, EpochLoss, ExpClipTrainConfig,
    ExpClipTrainState,
};

use thiserror::Error;

use crate::facs::FacsError;
use crate::nn::NnError;

#[derive(Debug, Error)]
pub enum ExpClipError {
    #[error("text is empty after normalization")]
    EmptyText,
    #[error("feature width mismatch: expected {expected}, got {got}")]
    FeatureWidth { expected: usize, got: usize },
    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    EmbeddingDim { expected: usize, got: usize },
    #[error("interpolation needs at least 2 steps, got {0}")]
    TooFewSteps(usize),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset: {0}")]
    Dataset(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Facs(#[from] FacsError),
}
