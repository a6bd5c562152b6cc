//! Expression prompt augmentation: blend a dataset-sampled expression into
//! the pooled prompt with a uniform random weight.

use rand::Rng;

use crate::animgen::AnimGenError;
use crate::facs::{blend_prompts, BlendshapeWeights};
use crate::scalar::Scalar;
use crate::tead::TeadStore;

/// Draw λ ~ U[0, 1] and a random store expression, and blend it into the
/// pooled prompt: (1−λ)·pooled + λ·sampled. Returns the blend and λ.
pub fn epa_sample<T: Scalar>(
    pooled: &BlendshapeWeights<T>,
    store: &TeadStore<T>,
    rng: &mut impl Rng,
) -> Result<(BlendshapeWeights<T>, T), AnimGenError> {
    if store.is_empty() {
        return Err(AnimGenError::EmptyStore);
    }
    let index = rng.gen_range(0..store.len());
    let lambda: T = rng.gen_range(T::zero()..=T::one());
    let sampled = &store.records()[index].blendshapes;
    let blended = blend_prompts(pooled, sampled, lambda)?;
    Ok((blended, lambda))
}
