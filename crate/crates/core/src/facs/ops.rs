//! Expression operations: AU conversion, bounded perturbation, linear blend.

use rand::Rng;

use crate::facs::{AuBlendshapeMap, AuVector, BlendshapeWeights, FacsError, BLENDSHAPE_COUNT};
use crate::scalar::{clamp01, Scalar};

/// Convert a binary AU activation vector to blendshape weights: sum the rows
/// of every active unit, then clamp each channel into [0, 1].
pub fn au_to_blendshapes<T: Scalar>(
    aus: &AuVector,
    map: &AuBlendshapeMap<T>,
) -> BlendshapeWeights<T> {
    let mut acc = vec![T::zero(); BLENDSHAPE_COUNT];
    for (au_index, &bit) in aus.bits().iter().enumerate() {
        if bit == 1 {
            for (a, &m) in acc.iter_mut().zip(map.row(au_index)) {
                *a += m;
            }
        }
    }
    for a in acc.iter_mut() {
        *a = clamp01(*a);
    }
    BlendshapeWeights::from_vec(acc).expect("clamped sum is valid")
}

/// Add independent uniform noise in [-magnitude, +magnitude] to each channel
/// and clamp back into [0, 1]. No entry moves by more than `magnitude`.
pub fn perturb_blendshapes<T: Scalar>(
    weights: &BlendshapeWeights<T>,
    magnitude: T,
    rng: &mut impl Rng,
) -> Result<BlendshapeWeights<T>, FacsError> {
    if magnitude < T::zero() {
        return Err(FacsError::NegativeMagnitude(magnitude.as_f64()));
    }
    if magnitude == T::zero() {
        return Ok(weights.clone());
    }
    let out = weights
        .values()
        .iter()
        .map(|&w| clamp01(w + rng.gen_range(-magnitude..=magnitude)))
        .collect();
    BlendshapeWeights::from_vec(out)
}

/// Linear blend (1−λ)·base + λ·aug, elementwise. Endpoints are returned
/// bit-exactly. λ must be in [0, 1].
pub fn blend_prompts<T: Scalar>(
    base: &BlendshapeWeights<T>,
    aug: &BlendshapeWeights<T>,
    lambda: T,
) -> Result<BlendshapeWeights<T>, FacsError> {
    if !lambda.is_finite() || lambda < T::zero() || lambda > T::one() {
        return Err(FacsError::BlendWeightOutOfRange(lambda.as_f64()));
    }
    if lambda == T::zero() {
        return Ok(base.clone());
    }
    if lambda == T::one() {
        return Ok(aug.clone());
    }
    let inv = T::one() - lambda;
    let out = base
        .values()
        .iter()
        .zip(aug.values())
        .map(|(&b, &a)| inv * b + lambda * a)
        .collect();
    BlendshapeWeights::from_vec_clamped(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::facs::AU_COUNT;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn shipped() -> AuBlendshapeMap<f64> {
        AuBlendshapeMap::shipped()
    }

    #[test]
    fn all_zero_aus_give_all_zero_weights() {
        let b = au_to_blendshapes(&AuVector::zeros(), &shipped());
        assert!(b.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn one_hot_au_gives_clamped_row() {
        let map = shipped();
        for k in 0..AU_COUNT {
            let b = au_to_blendshapes(&AuVector::one_hot(k), &map);
            for (out, &row) in b.values().iter().zip(map.row(k)) {
                assert_eq!(*out, row.clamp(0.0, 1.0));
            }
        }
    }

    #[test]
    fn overlapping_aus_sum_then_clamp() {
        // AU23 and AU28 both drive mouthRollUpper at 0.6 and 0.7; by hand the
        // sum is 1.3, so the converted weight clamps to 1.0.
        let map = shipped();
        let au23 = map.au_index("AU23_lip_tightener").unwrap();
        let au28 = map.au_index("AU28_lip_suck").unwrap();
        let roll_upper = map.bs_index("mouthRollUpper").unwrap();
        assert_eq!(map.row(au23)[roll_upper], 0.6);
        assert_eq!(map.row(au28)[roll_upper], 0.7);
        let b = au_to_blendshapes(&AuVector::from_active(&[au23, au28]), &map);
        assert_eq!(b.get(roll_upper), 1.0);
        // the lower lip channel clamps identically
        let roll_lower = map.bs_index("mouthRollLower").unwrap();
        assert_eq!(b.get(roll_lower), 1.0);
    }

    #[test]
    fn zero_magnitude_perturbation_is_identity() {
        let b = BlendshapeWeights::from_vec(vec![0.42f64; 52]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let out = perturb_blendshapes(&b, 0.0, &mut rng).unwrap();
        assert_eq!(out, b);
    }

    #[test]
    fn perturbation_respects_upper_clamp() {
        let b = BlendshapeWeights::from_vec(vec![1.0f64; 52]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let out = perturb_blendshapes(&b, 0.05, &mut rng).unwrap();
        assert!(out.values().iter().all(|&v| (0.95..=1.0).contains(&v)));
    }

    #[test]
    fn perturbation_is_deterministic_under_a_seed() {
        let b = BlendshapeWeights::from_vec((0..52).map(|i| i as f64 / 52.0).collect()).unwrap();
        let a = perturb_blendshapes(&b, 0.1, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
        let c = perturb_blendshapes(&b, 0.1, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn negative_magnitude_is_rejected() {
        let b = BlendshapeWeights::<f64>::zeros();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            perturb_blendshapes(&b, -0.1, &mut rng),
            Err(FacsError::NegativeMagnitude(_))
        ));
    }

    #[test]
    fn blend_endpoints_are_bit_exact() {
        let base = BlendshapeWeights::from_vec((0..52).map(|i| i as f64 / 52.0).collect()).unwrap();
        let aug = BlendshapeWeights::from_vec((0..52).map(|i| 1.0 - i as f64 / 52.0).collect()).unwrap();
        assert_eq!(blend_prompts(&base, &aug, 0.0).unwrap(), base);
        assert_eq!(blend_prompts(&base, &aug, 1.0).unwrap(), aug);
    }

    #[test]
    fn blend_midpoint() {
        let base = BlendshapeWeights::from_vec(vec![0.2f64; 52]).unwrap();
        let aug = BlendshapeWeights::from_vec(vec![0.8f64; 52]).unwrap();
        let mid = blend_prompts(&base, &aug, 0.5).unwrap();
        assert!(mid.values().iter().all(|&v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn blend_rejects_out_of_range_lambda() {
        let b = BlendshapeWeights::<f64>::zeros();
        assert!(blend_prompts(&b, &b, -0.1).is_err());
        assert!(blend_prompts(&b, &b, 1.1).is_err());
    }
}
