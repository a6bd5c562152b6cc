//! Generator losses: frame reconstruction, lip-motion consistency, and the
//! style loss that compares pooled style embeddings.

use crate::animgen::{AnimationClip, AnimGenError, ExpressionPooler};
use crate::expclip::ExpClipModel;
use crate::facs::BlendshapeWeights;
use crate::nn::losses::{l1_frame_mean, l2_distance};
use crate::nn::Tensor;
use crate::scalar::Scalar;

/// Mean-over-frames L1 between predicted and ground-truth clips, summed over
/// channels: (1/T)·Σ_t Σ_c |pred − truth|.
pub fn loss_rec<T: Scalar>(
    pred: &AnimationClip<T>,
    truth: &AnimationClip<T>,
) -> Result<T, AnimGenError> {
    if pred.frame_count() != truth.frame_count() {
        return Err(AnimGenError::FrameCount {
            expected: truth.frame_count(),
            got: pred.frame_count(),
        });
    }
    Ok(l1_frame_mean(&pred.to_tensor(), &truth.to_tensor()).0)
}

/// Lip-motion loss on the frame *differences*:
/// (1/(T−1))·Σ_t Σ_c |(pred[t+1]−pred[t]) − (truth[t+1]−truth[t])|.
/// Adding any constant per-channel offset to `pred` leaves it unchanged.
pub fn loss_lip<T: Scalar>(
    pred: &AnimationClip<T>,
    truth: &AnimationClip<T>,
) -> Result<T, AnimGenError> {
    if pred.frame_count() != truth.frame_count() {
        return Err(AnimGenError::FrameCount {
            expected: truth.frame_count(),
            got: pred.frame_count(),
        });
    }
    if truth.frame_count() < 2 {
        return Err(AnimGenError::TooFewFrames(truth.frame_count()));
    }
    Ok(lip_loss_tensor(&pred.to_tensor(), &truth.to_tensor()).0)
}

/// Differentiable form over [t, c] tensors; returns (loss, dL/dpred).
pub fn lip_loss_tensor<T: Scalar>(pred: &Tensor<T>, truth: &Tensor<T>) -> (T, Tensor<T>) {
    assert_eq!(pred.shape(), truth.shape(), "lip loss shape mismatch");
    let (t, c) = pred.dims2();
    assert!(t >= 2, "lip loss needs at least two frames");
    let inv_steps = T::one() / T::from_f64_lit((t - 1) as f64);
    let mut loss = T::zero();
    let mut grad = Tensor::zeros(pred.shape());
    for step in 0..t - 1 {
        for ch in 0..c {
            let dp = pred.row(step + 1)[ch] - pred.row(step)[ch];
            let dt = truth.row(step + 1)[ch] - truth.row(step)[ch];
            let d = dp - dt;
            loss += d.abs();
            let sign = if d > T::zero() {
                inv_steps
            } else if d < T::zero() {
                -inv_steps
            } else {
                T::zero()
            };
            grad.row_mut(step + 1)[ch] += sign;
            grad.row_mut(step)[ch] -= sign;
        }
    }
    (loss * inv_steps, grad)
}

/// Style loss ‖E(E_sa(pred)) − E(prompt)‖₂: the generated clip is pooled and
/// embedded, then compared with the embedding of the augmented prompt. The
/// prompt branch is a constant target. Evaluation form; the trainer runs the
/// same computation with gradients.
pub fn loss_style<T: Scalar>(
    pred: &AnimationClip<T>,
    prompt: &BlendshapeWeights<T>,
    expclip: &ExpClipModel<T>,
    pooler: &ExpressionPooler<T>,
) -> Result<T, AnimGenError> {
    let (pooled, _) = pooler.forward(&pred.to_tensor())?;
    let (z_out, _) = expclip.encoder.forward(&pooled)?;
    let z_target = expclip.encode_expression(prompt);
    Ok(l2_distance(z_out.data(), z_target.values()).0)
}
