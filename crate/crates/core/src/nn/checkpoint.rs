//! Checkpoints: a versioned JSON manifest of named parameter tensors.
//! Loading validates that names and shapes agree with the receiving model.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::nn::{Module, NnError, Tensor};
use crate::scalar::Scalar;

pub const CHECKPOINT_FORMAT: &str = "expclip-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NamedTensor<T> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<T>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint<T> {
    pub format: String,
    pub version: u32,
    pub params: Vec<NamedTensor<T>>,
}

impl<T: Scalar> Checkpoint<T> {
    pub fn capture(module: &dyn Module<T>) -> Self {
        let mut params = Vec::new();
        module.visit_params(&mut |name, p| {
            params.push(NamedTensor {
                name: name.to_string(),
                shape: p.value.shape().to_vec(),
                data: p.value.data().to_vec(),
            });
        });
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            params,
        }
    }

    /// Restore parameter values into `module`. Every checkpoint entry must
    /// match a parameter of the same name and shape, and vice versa.
    pub fn restore(&self, module: &mut dyn Module<T>) -> Result<(), NnError> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(NnError::Checkpoint(format!(
                "unknown checkpoint format '{}'",
                self.format
            )));
        }
        if self.version != CHECKPOINT_VERSION {
            return Err(NnError::Checkpoint(format!(
                "unsupported checkpoint version {}",
                self.version
            )));
        }
        let mut expected = BTreeSet::new();
        let mut err: Option<NnError> = None;
        module.visit_params(&mut |name, _| {
            expected.insert(name.to_string());
        });
        let mut provided = BTreeSet::new();
        for entry in &self.params {
            provided.insert(entry.name.clone());
            if !expected.contains(&entry.name) {
                return Err(NnError::Checkpoint(format!(
                    "checkpoint parameter '{}' not present in model",
                    entry.name
                )));
            }
        }
        for name in &expected {
            if !provided.contains(name) {
                return Err(NnError::Checkpoint(format!(
                    "model parameter '{name}' missing from checkpoint"
                )));
            }
        }
        for entry in &self.params {
            module.visit_params_mut(&mut |name, p| {
                if err.is_some() || name != entry.name {
                    return;
                }
                if p.value.shape() != entry.shape.as_slice() {
                    err = Some(NnError::Checkpoint(format!(
                        "shape mismatch for '{}': model {:?}, checkpoint {:?}",
                        name,
                        p.value.shape(),
                        entry.shape
                    )));
                    return;
                }
                match Tensor::from_vec(&entry.shape, entry.data.clone()) {
                    Ok(t) => p.value = t,
                    Err(e) => err = Some(e),
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), NnError> {
        let file = fs::File::create(path)
            .map_err(|e| NnError::Checkpoint(format!("create {}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer(&mut w, self)
            .map_err(|e| NnError::Checkpoint(format!("write {}: {e}", path.display())))?;
        w.flush()
            .map_err(|e| NnError::Checkpoint(format!("flush {}: {e}", path.display())))?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("checkpoint serialization cannot fail")
    }

    /// Names of parameters whose bytes differ between two checkpoints.
    pub fn changed_params(&self, other: &Checkpoint<T>) -> Vec<String>
    where
        T: PartialEq,
    {
        let mut changed = Vec::new();
        for (a, b) in self.params.iter().zip(&other.params) {
            if a.name != b.name || a.shape != b.shape || a.data != b.data {
                changed.push(a.name.clone());
            }
        }
        changed
    }
}

impl<T: Scalar + DeserializeOwned> Checkpoint<T> {
    pub fn load(path: &Path) -> Result<Self, NnError> {
        let file = fs::File::open(path)
            .map_err(|e| NnError::Checkpoint(format!("open {}: {e}", path.display())))?;
        serde_json::from_reader(BufReader::new(file))
            .map_err(|e| NnError::Checkpoint(format!("parse {}: {e}", path.display())))
    }
}
