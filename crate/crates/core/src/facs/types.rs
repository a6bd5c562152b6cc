//! Core expression value types.

use serde::{Deserialize, Serialize};

use crate::facs::FacsError;
use crate::scalar::Scalar;

/// Number of Action Units tracked by the shipped table.
pub const AU_COUNT: usize = 36;

/// Number of expression blendshape channels on the target rig.
pub const BLENDSHAPE_COUNT: usize = 52;

/// Binary activation vector over the 36 tracked Action Units.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuVector {
    bits: Vec<u8>,
}

impl AuVector {
    pub fn zeros() -> Self {
        Self {
            bits: vec![0; AU_COUNT],
        }
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self, FacsError> {
        if bits.len() != AU_COUNT {
            return Err(FacsError::WrongLength {
                expected: AU_COUNT,
                got: bits.len(),
            });
        }
        for (i, &b) in bits.iter().enumerate() {
            if b > 1 {
                return Err(FacsError::NotBinary {
                    index: i,
                    value: b as f64,
                });
            }
        }
        Ok(Self {
            bits: bits.to_vec(),
        })
    }

    /// Single activated unit at `index`.
    pub fn one_hot(index: usize) -> Self {
        assert!(index < AU_COUNT, "AU index {index} out of range");
        let mut bits = vec![0; AU_COUNT];
        bits[index] = 1;
        Self { bits }
    }

    /// Activate the units at the given indices.
    pub fn from_active(indices: &[usize]) -> Self {
        let mut bits = vec![0u8; AU_COUNT];
        for &i in indices {
            assert!(i < AU_COUNT, "AU index {i} out of range");
            bits[i] = 1;
        }
        Self { bits }
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn is_active(&self, index: usize) -> bool {
        self.bits[index] == 1
    }

    pub fn active_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }
}

/// 52 unitless activations in [0, 1], one full facial expression.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlendshapeWeights<T> {
    weights: Vec<T>,
}

impl<T: Scalar> BlendshapeWeights<T> {
    pub fn zeros() -> Self {
        Self {
            weights: vec![T::zero(); BLENDSHAPE_COUNT],
        }
    }

    pub fn from_vec(weights: Vec<T>) -> Result<Self, FacsError> {
        if weights.len() != BLENDSHAPE_COUNT {
            return Err(FacsError::WrongLength {
                expected: BLENDSHAPE_COUNT,
                got: weights.len(),
            });
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < T::zero() || w > T::one() {
                return Err(FacsError::OutOfRange {
                    index: i,
                    value: w.as_f64(),
                });
            }
        }
        Ok(Self { weights })
    }

    /// Clamp each entry into [0, 1] instead of rejecting.
    pub fn from_vec_clamped(weights: Vec<T>) -> Result<Self, FacsError> {
        if weights.len() != BLENDSHAPE_COUNT {
            return Err(FacsError::WrongLength {
                expected: BLENDSHAPE_COUNT,
                got: weights.len(),
            });
        }
        Ok(Self {
            weights: weights
                .into_iter()
                .map(crate::scalar::clamp01)
                .collect(),
        })
    }

    pub fn values(&self) -> &[T] {
        &self.weights
    }

    pub fn get(&self, index: usize) -> T {
        self.weights[index]
    }

    pub fn mean_of(&self, indices: &[usize]) -> T {
        let sum = indices.iter().map(|&i| self.weights[i]).sum::<T>();
        sum / T::from_f64_lit(indices.len() as f64)
    }
}
