//! The AU→blendshape conversion table.
//!
//! The table is data, not code: a CSV with one header row of blendshape names
//! and 36 data rows keyed by AU label. A default table using canonical
//! FACS↔blendshape correspondences ships with the crate and can be replaced
//! at runtime by loading another file with the same schema.

use std::fs;
use std::path::Path;

use crate::facs::{FacsError, AU_COUNT, BLENDSHAPE_COUNT};
use crate::scalar::Scalar;

/// Nonzeros allowed per AU row; each unit drives a handful of rig targets.
const MAX_TARGETS_PER_AU: usize = 8;

const DEFAULT_MAP_CSV: &str = include_str!("../../assets/au_blendshape_map.csv");

#[derive(Clone, Debug)]
pub struct AuBlendshapeMap<T> {
    /// Row-major [AU_COUNT x BLENDSHAPE_COUNT], entries in [0, 1].
    matrix: Vec<T>,
    au_names: Vec<String>,
    bs_names: Vec<String>,
}

impl<T: Scalar> AuBlendshapeMap<T> {
    /// The table shipped with the crate.
    pub fn shipped() -> Self {
        Self::from_csv_str(DEFAULT_MAP_CSV).expect("shipped AU map is valid")
    }

    pub fn load(path: &Path) -> Result<Self, FacsError> {
        let text = fs::read_to_string(path)
            .map_err(|e| FacsError::Map(format!("read {}: {e}", path.display())))?;
        Self::from_csv_str(&text)
    }

    pub fn from_csv_str(text: &str) -> Result<Self, FacsError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| FacsError::Map("empty AU map file".into()))?;
        let mut cols = header.split(',');
        let key_col = cols.next().unwrap_or("");
        if key_col.trim() != "au" {
            return Err(FacsError::Map(format!(
                "first header column must be 'au', got '{key_col}'"
            )));
        }
        let bs_names: Vec<String> = cols.map(|c| c.trim().to_string()).collect();
        if bs_names.len() != BLENDSHAPE_COUNT {
            return Err(FacsError::Map(format!(
                "header names {} blendshapes, expected {BLENDSHAPE_COUNT}",
                bs_names.len()
            )));
        }

        let mut au_names = Vec::with_capacity(AU_COUNT);
        let mut matrix = Vec::with_capacity(AU_COUNT * BLENDSHAPE_COUNT);
        for (row_idx, line) in lines.enumerate() {
            let mut fields = line.split(',');
            let label = fields
                .next()
                .ok_or_else(|| FacsError::Map(format!("row {}: missing AU label", row_idx + 1)))?
                .trim()
                .to_string();
            let values: Vec<&str> = fields.collect();
            if values.len() != BLENDSHAPE_COUNT {
                return Err(FacsError::Map(format!(
                    "row '{label}': {} values, expected {BLENDSHAPE_COUNT}",
                    values.len()
                )));
            }
            let mut nonzeros = 0usize;
            for (col, raw) in values.iter().enumerate() {
                let v: f64 = raw.trim().parse().map_err(|_| {
                    FacsError::Map(format!("row '{label}', column {col}: bad number '{raw}'"))
                })?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(FacsError::Map(format!(
                        "row '{label}', column {col}: {v} outside [0, 1]"
                    )));
                }
                if v != 0.0 {
                    nonzeros += 1;
                }
                matrix.push(T::from_f64_lit(v));
            }
            if nonzeros > MAX_TARGETS_PER_AU {
                return Err(FacsError::Map(format!(
                    "row '{label}' drives {nonzeros} blendshapes, limit is {MAX_TARGETS_PER_AU}"
                )));
            }
            au_names.push(label);
        }
        if au_names.len() != AU_COUNT {
            return Err(FacsError::Map(format!(
                "{} AU rows, expected {AU_COUNT}",
                au_names.len()
            )));
        }
        Ok(Self {
            matrix,
            au_names,
            bs_names,
        })
    }

    pub fn au_names(&self) -> &[String] {
        &self.au_names
    }

    pub fn bs_names(&self) -> &[String] {
        &self.bs_names
    }

    pub fn row(&self, au_index: usize) -> &[T] {
        &self.matrix[au_index * BLENDSHAPE_COUNT..(au_index + 1) * BLENDSHAPE_COUNT]
    }

    pub fn au_index(&self, label: &str) -> Option<usize> {
        self.au_names.iter().position(|n| n == label)
    }

    pub fn bs_index(&self, name: &str) -> Option<usize> {
        self.bs_names.iter().position(|n| n == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_map_is_well_formed() {
        let map = AuBlendshapeMap::<f64>::shipped();
        assert_eq!(map.au_names().len(), AU_COUNT);
        assert_eq!(map.bs_names().len(), BLENDSHAPE_COUNT);
        for i in 0..AU_COUNT {
            let nonzeros = map.row(i).iter().filter(|&&v| v != 0.0).count();
            assert!(nonzeros >= 1, "AU row {i} drives nothing");
            assert!(nonzeros <= MAX_TARGETS_PER_AU);
            assert!(map.row(i).iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn shipped_map_smile_row() {
        let map = AuBlendshapeMap::<f64>::shipped();
        let au12 = map.au_index("AU12_lip_corner_puller").unwrap();
        let left = map.bs_index("mouthSmileLeft").unwrap();
        let right = map.bs_index("mouthSmileRight").unwrap();
        assert_eq!(map.row(au12)[left], 0.85);
        assert_eq!(map.row(au12)[right], 0.85);
    }

    #[test]
    fn rejects_wrong_column_count() {
        let bad = "au,only,two\nAU01,0,0\n";
        assert!(AuBlendshapeMap::<f64>::from_csv_str(bad).is_err());
    }

    #[test]
    fn rejects_out_of_range_value() {
        let mut csv = String::from("au");
        for i in 0..BLENDSHAPE_COUNT {
            csv.push_str(&format!(",bs{i}"));
        }
        csv.push('\n');
        csv.push_str("AU01");
        for i in 0..BLENDSHAPE_COUNT {
            csv.push_str(if i == 0 { ",1.5" } else { ",0" });
        }
        csv.push('\n');
        assert!(AuBlendshapeMap::<f64>::from_csv_str(&csv).is_err());
    }
}
