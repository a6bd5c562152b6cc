//! The text-expression dataset pipeline: corpus records in, LLM annotations
//! in the middle, validated quadruple records out.

mod annotate;
mod augment;
mod client;
mod parse;
mod prompt;
mod store;
pub mod toy;

pub use annotate::{annotate_corpus, AnnotateConfig, AnnotateOutcome, SkippedRecord};
pub use augment::{augment_text, sample_text_view, AugmentOp, StopwordList, SynonymTable};
pub use client::{AnnotationClient, ClientError, FixtureClient, HttpClient, HttpClientConfig};
pub use parse::parse_annotation;
pub use prompt::build_annotation_prompt;
pub use store::{split_dataset, validate_store_file, StoreError, TeadStore};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::facs::{AuVector, BlendshapeWeights, FacsError};
use crate::scalar::Scalar;

/// One transcript from an emotional-text corpus, pre-annotation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    pub transcript: String,
}

impl CorpusRecord {
    pub fn new(id: impl Into<String>, transcript: impl Into<String>) -> Result<Self, TeadError> {
        let id = id.into();
        let transcript = transcript.into();
        if transcript.trim().is_empty() {
            return Err(TeadError::EmptyTranscript { id });
        }
        Ok(Self { id, transcript })
    }
}

/// What the annotator returns for one record: emotion tags, activated AUs,
/// and a situation sentence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Annotation {
    pub tags: Vec<String>,
    pub aus: AuVector,
    pub situation: String,
}

/// One dataset record: transcript, tags, blendshape weights, situation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quadruple<T> {
    pub id: String,
    pub transcript: String,
    pub tags: Vec<String>,
    pub blendshapes: BlendshapeWeights<T>,
    pub situation: String,
}

impl<T: Scalar> Quadruple<T> {
    /// Enforce every record-level invariant. Weights are validated by their
    /// own constructor, so this covers the textual fields.
    pub fn validate(&self) -> Result<(), TeadError> {
        if self.transcript.trim().is_empty() {
            return Err(TeadError::EmptyTranscript {
                id: self.id.clone(),
            });
        }
        if self.tags.len() < 3 || self.tags.len() > 5 {
            return Err(TeadError::TagCount {
                id: self.id.clone(),
                got: self.tags.len(),
            });
        }
        let mut seen = std::collections::BTreeSet::new();
        for tag in &self.tags {
            if tag.trim().is_empty() {
                return Err(TeadError::EmptyTag {
                    id: self.id.clone(),
                });
            }
            if tag.chars().any(|c| c.is_uppercase()) {
                return Err(TeadError::TagNotLowercase {
                    id: self.id.clone(),
                    tag: tag.clone(),
                });
            }
            if !seen.insert(tag.clone()) {
                return Err(TeadError::DuplicateTag {
                    id: self.id.clone(),
                    tag: tag.clone(),
                });
            }
        }
        if self.situation.trim().is_empty() {
            return Err(TeadError::EmptySituation {
                id: self.id.clone(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum TeadError {
    #[error("record '{id}': transcript is empty")]
    EmptyTranscript { id: String },
    #[error("record '{id}': {got} tags, expected 3 to 5")]
    TagCount { id: String, got: usize },
    #[error("record '{id}': empty tag")]
    EmptyTag { id: String },
    #[error("record '{id}': tag '{tag}' is not lowercase")]
    TagNotLowercase { id: String, tag: String },
    #[error("record '{id}': duplicate tag '{tag}'")]
    DuplicateTag { id: String, tag: String },
    #[error("record '{id}': situation is empty")]
    EmptySituation { id: String },
    #[error("duplicate id '{id}'")]
    DuplicateId { id: String },
    #[error(transparent)]
    Facs(#[from] FacsError),
}

/// Reasons an LLM response is rejected. A malformed response is retried and
/// eventually skipped, never silently repaired.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MalformedResponse {
    #[error("no JSON object found in response")]
    NoJson,
    #[error("response JSON does not parse: {0}")]
    BadJson(String),
    #[error("{got} AU entries, expected 36")]
    AuCount { got: usize },
    #[error("AU entry {index} is {value}, not 0 or 1")]
    NonBinaryAu { index: usize, value: String },
    #[error("{got} tags after normalization, expected 3 to 5")]
    TagCount { got: usize },
    #[error("situation is empty")]
    EmptySituation,
}
