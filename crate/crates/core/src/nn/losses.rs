//! Scalar losses with their input gradients.

use crate::nn::{NnError, Tensor};
use crate::scalar::Scalar;

/// Euclidean distance ‖pred − target‖₂ and d/dpred.
/// The gradient at an exact zero distance is defined as zero.
pub fn l2_distance<T: Scalar>(pred: &[T], target: &[T]) -> (T, Vec<T>) {
    assert_eq!(pred.len(), target.len(), "l2_distance length mismatch");
    let mut sq = T::zero();
    let diff: Vec<T> = pred
        .iter()
        .zip(target)
        .map(|(&p, &t)| {
            let d = p - t;
            sq += d * d;
            d
        })
        .collect();
    let norm = sq.sqrt();
    let tiny = T::from_f64_lit(1e-12);
    let grad = if norm < tiny {
        vec![T::zero(); pred.len()]
    } else {
        diff.iter().map(|&d| d / norm).collect()
    };
    (norm, grad)
}

/// Mean over rows of the per-row sum of absolute errors, and d/dpred.
/// For a [t, c] tensor this is (1/t)·Σ_t Σ_c |pred − target|.
pub fn l1_frame_mean<T: Scalar>(pred: &Tensor<T>, target: &Tensor<T>) -> (T, Tensor<T>) {
    assert_eq!(pred.shape(), target.shape(), "l1_frame_mean shape mismatch");
    let (rows, _) = pred.dims2();
    let inv_rows = T::one() / T::from_f64_lit(rows as f64);
    let mut loss = T::zero();
    let mut grad = Tensor::zeros(pred.shape());
    for ((g, &p), &t) in grad
        .data_mut()
        .iter_mut()
        .zip(pred.data())
        .zip(target.data())
    {
        let d = p - t;
        loss += d.abs();
        *g = if d > T::zero() {
            inv_rows
        } else if d < T::zero() {
            -inv_rows
        } else {
            T::zero()
        };
    }
    (loss * inv_rows, grad)
}

/// Cosine similarity of two vectors. Errors on a zero-norm operand instead of
/// letting NaN into the training loop.
pub fn cosine_similarity<T: Scalar>(a: &[T], b: &[T]) -> Result<T, NnError> {
    assert_eq!(a.len(), b.len(), "cosine_similarity length mismatch");
    let dot = a.iter().zip(b).map(|(&x, &y)| x * y).sum::<T>();
    let na = a.iter().map(|&x| x * x).sum::<T>().sqrt();
    let nb = b.iter().map(|&x| x * x).sum::<T>().sqrt();
    let tiny = T::from_f64_lit(1e-30);
    if na < tiny || nb < tiny {
        return Err(NnError::ZeroNorm("cosine_similarity".into()));
    }
    Ok(dot / (na * nb))
}

/// 1 − cos(a, b) with gradients for both operands. Range [0, 2].
pub fn cosine_embedding_loss<T: Scalar>(
    a: &[T],
    b: &[T],
) -> Result<(T, Vec<T>, Vec<T>), NnError> {
    let dot = a.iter().zip(b).map(|(&x, &y)| x * y).sum::<T>();
    let na2 = a.iter().map(|&x| x * x).sum::<T>();
    let nb2 = b.iter().map(|&x| x * x).sum::<T>();
    let na = na2.sqrt();
    let nb = nb2.sqrt();
    let tiny = T::from_f64_lit(1e-30);
    if na < tiny || nb < tiny {
        return Err(NnError::ZeroNorm("cosine_embedding_loss".into()));
    }
    let cos = dot / (na * nb);
    // d(1-cos)/da = -(b/(|a||b|) - a·cos/|a|²)
    let da: Vec<T> = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| -(y / (na * nb) - x * cos / na2))
        .collect();
    let db: Vec<T> = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| -(x / (na * nb) - y * cos / nb2))
        .collect();
    Ok((T::one() - cos, da, db))
}

/// Plain mean squared error over all elements, evaluation only.
pub fn mean_squared_error<T: Scalar>(a: &[T], b: &[T]) -> T {
    assert_eq!(a.len(), b.len(), "mean_squared_error length mismatch");
    let sum = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<T>();
    sum / T::from_f64_lit(a.len() as f64)
}
