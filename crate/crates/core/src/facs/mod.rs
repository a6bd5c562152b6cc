//! Expression math shared by the whole pipeline: binary Action Unit vectors,
//! blendshape weight vectors, the AU→blendshape conversion table, and the
//! blend/perturbation primitives used for augmentation.

mod au_map;
mod ops;
mod types;

pub use au_map::AuBlendshapeMap;
pub use ops::{au_to_blendshapes, blend_prompts, perturb_blendshapes};
pub use types::{AuVector, BlendshapeWeights, AU_COUNT, BLENDSHAPE_COUNT};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FacsError {
    #[error("expected {expected} entries, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("entry {index} is {value}, outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("entry {index} is {value}, not a binary activation")]
    NotBinary { index: usize, value: f64 },
    #[error("perturbation magnitude {0} is negative")]
    NegativeMagnitude(f64),
    #[error("blend weight {0} is outside [0, 1]")]
    BlendWeightOutOfRange(f64),
    #[error("AU map: {0}")]
    Map(String),
}
