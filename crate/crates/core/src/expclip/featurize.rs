//! Frozen text featurizer: an L2-normalized hashed 1–2-gram frequency
//! vector. Entirely deterministic — no trainable state, a fixed FNV-1a hash,
//! and a documented normalization (lowercase, apostrophes dropped, all other
//! punctuation treated as whitespace) — so the same text maps to the same
//! feature on every platform and run.

use crate::expclip::ExpClipError;
use crate::scalar::Scalar;

pub const DEFAULT_TEXT_FEATURE_WIDTH: usize = 512;

#[derive(Clone, Debug)]
pub struct TextFeaturizer {
    width: usize,
}

impl TextFeaturizer {
    pub fn new(width: usize) -> Self {
        assert!(width > 0, "feature width must be positive");
        Self { width }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Hash the normalized unigrams and bigrams of `text` into a fixed-width
    /// count vector, then L2-normalize. Empty text (after normalization) is
    /// an error.
    pub fn featurize<T: Scalar>(&self, text: &str) -> Result<Vec<T>, ExpClipError> {
        let words = normalize_words(text);
        if words.is_empty() {
            return Err(ExpClipError::EmptyText);
        }
        let mut counts = vec![0u32; self.width];
        for w in &words {
            counts[(fnv1a64(w.as_bytes()) % self.width as u64) as usize] += 1;
        }
        for pair in words.windows(2) {
            let bigram = format!("{} {}", pair[0], pair[1]);
            counts[(fnv1a64(bigram.as_bytes()) % self.width as u64) as usize] += 1;
        }
        let norm = (counts.iter().map(|&c| (c as f64) * (c as f64)).sum::<f64>()).sqrt();
        Ok(counts
            .into_iter()
            .map(|c| T::from_f64_lit(c as f64 / norm))
            .collect())
    }
}

impl Default for TextFeaturizer {
    fn default() -> Self {
        Self::new(DEFAULT_TEXT_FEATURE_WIDTH)
    }
}

/// Lowercase, drop apostrophes (so "can't" and "cant" agree), treat every
/// other non-alphanumeric character as a separator.
fn normalize_words(text: &str) -> Vec<String> {
    text.to_lowercase()
        .replace('\'', "")
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect::<String>()
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
