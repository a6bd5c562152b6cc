//! Dataset storage: JSONL with one quadruple per line, validated on load and
//! on write, plus the deterministic train/test split.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::facs::BlendshapeWeights;
use crate::scalar::Scalar;
use crate::tead::{Quadruple, TeadError};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    InvalidRecord { line: usize, reason: String },
    #[error("train fraction {0} is outside (0, 1)")]
    BadFraction(f64),
    #[error("store is empty")]
    Empty,
}

/// JSONL row schema: {"id", "t", "e", "b", "s"}.
#[derive(Serialize, Deserialize)]
struct QuadRow<T> {
    id: String,
    t: String,
    e: Vec<String>,
    b: Vec<T>,
    s: String,
}

/// An ordered collection of quadruples with a seed for splitting.
#[derive(Clone, Debug)]
pub struct TeadStore<T> {
    records: Vec<Quadruple<T>>,
    pub split_seed: u64,
}

impl<T: Scalar> TeadStore<T> {
    pub fn new(records: Vec<Quadruple<T>>, split_seed: u64) -> Result<Self, TeadError> {
        let mut ids = std::collections::BTreeSet::new();
        for q in &records {
            q.validate()?;
            if !ids.insert(q.id.clone()) {
                return Err(TeadError::DuplicateId { id: q.id.clone() });
            }
        }
        Ok(Self {
            records,
            split_seed,
        })
    }

    pub fn records(&self) -> &[Quadruple<T>] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Quadruple<T>> {
        self.records.iter().find(|q| q.id == id)
    }

    /// Write one JSON object per line, in record order. Records were
    /// validated on construction, so the file round-trips.
    pub fn save(&self, path: &Path) -> Result<(), StoreError> {
        let file = fs::File::create(path).map_err(|e| StoreError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let mut w = BufWriter::new(file);
        for q in &self.records {
            let row = QuadRow {
                id: q.id.clone(),
                t: q.transcript.clone(),
                e: q.tags.clone(),
                b: q.blendshapes.values().to_vec(),
                s: q.situation.clone(),
            };
            let line = serde_json::to_string(&row).expect("row serialization cannot fail");
            writeln!(w, "{line}").map_err(|e| StoreError::Io {
                path: path.display().to_string(),
                source: e,
            })?;
        }
        w.flush().map_err(|e| StoreError::Io {
            path: path.display().to_string(),
            source: e,
        })
    }

    pub fn load(path: &Path, split_seed: u64) -> Result<Self, StoreError> {
        let file = fs::File::open(path).map_err(|e| StoreError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let reader = BufReader::new(file);
        let mut records = Vec::new();
        let mut ids = std::collections::BTreeSet::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|e| StoreError::Io {
                path: path.display().to_string(),
                source: e,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let row: QuadRow<T> =
                serde_json::from_str(&line).map_err(|e| StoreError::InvalidRecord {
                    line: line_no,
                    reason: e.to_string(),
                })?;
            let blendshapes =
                BlendshapeWeights::from_vec(row.b).map_err(|e| StoreError::InvalidRecord {
                    line: line_no,
                    reason: e.to_string(),
                })?;
            let q = Quadruple {
                id: row.id,
                transcript: row.t,
                tags: row.e,
                blendshapes,
                situation: row.s,
            };
            q.validate().map_err(|e| StoreError::InvalidRecord {
                line: line_no,
                reason: e.to_string(),
            })?;
            if !ids.insert(q.id.clone()) {
                return Err(StoreError::InvalidRecord {
                    line: line_no,
                    reason: format!("duplicate id '{}'", q.id),
                });
            }
            records.push(q);
        }
        Ok(Self {
            records,
            split_seed,
        })
    }

    /// Split into train/test id lists using this store's seed.
    pub fn split(&self, train_fraction: f64) -> Result<(Vec<String>, Vec<String>), StoreError> {
        split_dataset(self, train_fraction)
    }

    /// Records whose ids appear in `ids`, in store order.
    pub fn subset(&self, ids: &[String]) -> Vec<&Quadruple<T>> {
        let wanted: std::collections::BTreeSet<&str> =
            ids.iter().map(|s| s.as_str()).collect();
        self.records
            .iter()
            .filter(|q| wanted.contains(q.id.as_str()))
            .collect()
    }
}

/// Deterministic partition into train and test ids. |train| is the rounded
/// fraction of the record count; a degenerate all-train split logs a warning.
pub fn split_dataset<T: Scalar>(
    store: &TeadStore<T>,
    train_fraction: f64,
) -> Result<(Vec<String>, Vec<String>), StoreError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(StoreError::BadFraction(train_fraction));
    }
    if store.is_empty() {
        return Err(StoreError::Empty);
    }
    let n = store.len();
    let n_train = ((train_fraction * n as f64).round() as usize).min(n);
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(store.split_seed);
    indices.shuffle(&mut rng);
    let mut train: Vec<String> = indices[..n_train]
        .iter()
        .map(|&i| store.records()[i].id.clone())
        .collect();
    let mut test: Vec<String> = indices[n_train..]
        .iter()
        .map(|&i| store.records()[i].id.clone())
        .collect();
    train.sort();
    test.sort();
    if test.is_empty() {
        log::warn!(
            "train/test split of {n} records at fraction {train_fraction} leaves the test set empty"
        );
    }
    Ok((train, test))
}

/// Validate a store file without keeping it; returns the record count.
pub fn validate_store_file<T: Scalar>(path: &Path) -> Result<usize, StoreError> {
    let store = TeadStore::<T>::load(path, 0)?;
    Ok(store.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::TempDir;

    fn quadruple(id: &str) -> Quadruple<f32> {
        Quadruple {
            id: id.to_string(),
            transcript: format!("transcript for {id}"),
            tags: vec!["happy".into(), "glad".into(), "warm".into()],
            blendshapes: BlendshapeWeights::from_vec(vec![0.25; 52]).unwrap(),
            situation: "a pleasant afternoon".into(),
        }
    }

    fn store_of(n: usize) -> TeadStore<f32> {
        let records = (0..n).map(|i| quadruple(&format!("id{i:03}"))).collect();
        TeadStore::new(records, 7).unwrap()
    }

    #[test]
    fn save_load_round_trip() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("store.jsonl");
        let store = store_of(5);
        store.save(&path).unwrap();
        let loaded = TeadStore::<f32>::load(&path, 7).unwrap();
        assert_eq!(loaded.len(), 5);
        assert_eq!(loaded.records()[2].id, "id002");
        assert_eq!(
            loaded.records()[2].blendshapes.values(),
            store.records()[2].blendshapes.values()
        );
    }

    #[test]
    fn save_is_byte_deterministic() {
        let dir = TempDir::new().unwrap();
        let a = dir.path().join("a.jsonl");
        let b = dir.path().join("b.jsonl");
        let store = store_of(8);
        store.save(&a).unwrap();
        store.save(&b).unwrap();
        assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
    }

    #[test]
    fn corrupted_line_is_rejected_with_its_number() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("store.jsonl");
        store_of(4).save(&path).unwrap();
        // corrupt the third line with an out-of-range weight
        let text = fs::read_to_string(&path).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        lines[2] = lines[2].replace("0.25", "2.5");
        fs::write(&path, lines.join("\n")).unwrap();
        match TeadStore::<f32>::load(&path, 0) {
            Err(StoreError::InvalidRecord { line: 3, .. }) => {}
            other => panic!("expected invalid record on line 3, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let records = vec![quadruple("same"), quadruple("same")];
        assert!(matches!(
            TeadStore::new(records, 0),
            Err(TeadError::DuplicateId { .. })
        ));
    }

    #[test]
    fn split_is_a_partition_with_rounded_sizes() {
        let store = store_of(100);
        let (train, test) = store.split(0.9).unwrap();
        assert_eq!(train.len(), 90);
        assert_eq!(test.len(), 10);
        let mut all: Vec<String> = train.iter().chain(test.iter()).cloned().collect();
        all.sort();
        let mut expected: Vec<String> = (0..100).map(|i| format!("id{i:03}")).collect();
        expected.sort();
        assert_eq!(all, expected);
    }

    #[test]
    fn split_single_record_is_train_biased() {
        let store = store_of(1);
        let (train, test) = store.split(0.9).unwrap();
        assert_eq!(train.len(), 1);
        assert!(test.is_empty());
    }

    #[test]
    fn split_is_deterministic_per_seed() {
        let store = store_of(50);
        let (t1, s1) = store.split(0.8).unwrap();
        let (t2, s2) = store.split(0.8).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(s1, s2);

        let mut other = store_of(50);
        other.split_seed = 8;
        let (t3, _) = other.split(0.8).unwrap();
        assert_ne!(t1, t3, "different seeds give different partitions");
    }

    #[test]
    fn split_rejects_bad_fraction() {
        let store = store_of(10);
        assert!(store.split(0.0).is_err());
        assert!(store.split(1.0).is_err());
        assert!(store.split(-0.5).is_err());
    }
}
