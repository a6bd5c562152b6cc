//! Text augmentation: stop-word removal, synonym replacement, sentence
//! shuffling. Operations degrade to the identity when inapplicable, never to
//! empty output, and are deterministic under a seeded RNG.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::tead::Quadruple;

const STOPWORDS_TXT: &str = include_str!("../../assets/stopwords.txt");
const SYNONYMS_CSV: &str = include_str!("../../assets/synonyms.csv");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AugmentOp {
    StopwordRemoval,
    SynonymReplace,
    SentenceShuffle,
}

/// The shipped stop-word list.
#[derive(Clone, Debug)]
pub struct StopwordList {
    words: Vec<String>,
}

impl StopwordList {
    pub fn shipped() -> Self {
        Self {
            words: STOPWORDS_TXT
                .lines()
                .map(|l| l.trim().to_string())
                .filter(|l| !l.is_empty())
                .collect(),
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        let w = word.to_lowercase();
        self.words.iter().any(|s| s == &w)
    }
}

/// The shipped synonym table: each CSV row is a word followed by its
/// replacements.
#[derive(Clone, Debug)]
pub struct SynonymTable {
    entries: Vec<(String, Vec<String>)>,
}

impl SynonymTable {
    pub fn shipped() -> Self {
        let entries = SYNONYMS_CSV
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|line| {
                let mut parts = line.split(',').map(|p| p.trim().to_string());
                let word = parts.next().unwrap_or_default();
                (word, parts.collect())
            })
            .collect();
        Self { entries }
    }

    pub fn synonyms_of(&self, word: &str) -> Option<&[String]> {
        let w = word.to_lowercase();
        self.entries
            .iter()
            .find(|(k, _)| k == &w)
            .map(|(_, v)| v.as_slice())
    }

    pub fn contains_replacement(&self, word: &str) -> bool {
        let w = word.to_lowercase();
        self.entries.iter().any(|(_, v)| v.iter().any(|s| s == &w))
    }
}

/// Apply the requested augmentations in a fixed order: sentence shuffle,
/// stop-word removal, synonym replacement. `ops` must be non-empty.
pub fn augment_text(
    text: &str,
    rng: &mut impl Rng,
    ops: &[AugmentOp],
    stopwords: &StopwordList,
    synonyms: &SynonymTable,
) -> String {
    assert!(!ops.is_empty(), "augment_text requires at least one operation");
    let mut out = text.to_string();
    if ops.contains(&AugmentOp::SentenceShuffle) {
        out = shuffle_sentences(&out, rng);
    }
    if ops.contains(&AugmentOp::StopwordRemoval) {
        out = remove_stopwords(&out, stopwords);
    }
    if ops.contains(&AugmentOp::SynonymReplace) {
        out = replace_synonyms(&out, rng, synonyms);
    }
    if out.trim().is_empty() {
        // every word was a stop word; augmentation degrades to identity
        text.to_string()
    } else {
        out
    }
}

/// Split into sentences on ./!/? (keeping the punctuation), shuffle, rejoin.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut sentences = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        current.push(ch);
        if matches!(ch, '.' | '!' | '?') {
            let s = current.trim().to_string();
            if !s.is_empty() {
                sentences.push(s);
            }
            current.clear();
        }
    }
    let tail = current.trim().to_string();
    if !tail.is_empty() {
        sentences.push(tail);
    }
    sentences
}

fn shuffle_sentences(text: &str, rng: &mut impl Rng) -> String {
    let mut sentences = split_sentences(text);
    if sentences.len() < 2 {
        return text.to_string();
    }
    sentences.shuffle(rng);
    sentences.join(" ")
}

fn remove_stopwords(text: &str, stopwords: &StopwordList) -> String {
    text.split_whitespace()
        .filter(|token| {
            let bare: String = token
                .chars()
                .filter(|c| c.is_alphanumeric() || *c == '\'')
                .collect();
            !stopwords.contains(&bare)
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn replace_synonyms(text: &str, rng: &mut impl Rng, synonyms: &SynonymTable) -> String {
    text.split_whitespace()
        .map(|token| {
            let bare: String = token
                .chars()
                .filter(|c| c.is_alphanumeric() || *c == '\'')
                .collect();
            if let Some(options) = synonyms.synonyms_of(&bare) {
                if !options.is_empty() && rng.gen_bool(0.5) {
                    let replacement = &options[rng.gen_range(0..options.len())];
                    return token.replacen(&bare, replacement, 1);
                }
            }
            token.to_string()
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Pick one textual view of a quadruple — the transcript, the joined tags,
/// or the situation sentence — uniformly at random.
pub fn sample_text_view<T>(quadruple: &Quadruple<T>, rng: &mut impl Rng) -> String {
    match rng.gen_range(0..3u8) {
        0 => quadruple.transcript.clone(),
        1 => quadruple.tags.join(", "),
        _ => quadruple.situation.clone(),
    }
}
