//! Category-text to integer-code maps, bijective per column with codes
//! contiguous from 0 in first-seen order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::PreprocessError;
use crate::data::{ColumnKind, Dataset, Value};

/// Per-categorical-column encoding tables. The forward map is the category
/// vector itself (code = index); lookups go through an index map.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct EncodingMap {
    /// column name -> categories in first-seen order
    pub columns: BTreeMap<String, Vec<String>>,
}

impl EncodingMap {
    /// Collect the encoding tables of every categorical column (the label
    /// column's class labels included, keyed by its column name).
    pub fn fit(d: &Dataset) -> Self {
        let mut columns = BTreeMap::new();
        for col in &d.schema.columns {
            if col.kind == ColumnKind::Categorical {
                columns.insert(col.name.clone(), col.categories.clone());
            }
        }
        EncodingMap { columns }
    }

    pub fn encode(&self, column: &str, category: &str) -> Result<u32, PreprocessError> {
        let vocab = self
            .columns
            .get(column)
            .ok_or_else(|| PreprocessError::NoSuchColumn(column.to_string()))?;
        vocab
            .iter()
            .position(|c| c == category)
            .map(|i| i as u32)
            .ok_or_else(|| PreprocessError::UnseenCategory {
                column: column.to_string(),
                category: category.to_string(),
            })
    }

    pub fn decode(&self, column: &str, code: u32) -> Result<&str, PreprocessError> {
        let vocab = self
            .columns
            .get(column)
            .ok_or_else(|| PreprocessError::NoSuchColumn(column.to_string()))?;
        vocab
            .get(code as usize)
            .map(String::as_str)
            .ok_or_else(|| PreprocessError::UnseenCategory {
                column: column.to_string(),
                category: format!("#{code}"),
            })
    }

    /// Re-encode a dataset whose categorical vocabularies may differ from the
    /// fitted ones (e.g. a validation split loaded separately). Unseen
    /// categories are an error, surfacing train/serve skew.
    pub fn apply(&self, d: &Dataset) -> Result<Dataset, PreprocessError> {
        let mut out = d.clone();
        for (ci, col) in d.schema.columns.iter().enumerate() {
            if col.kind != ColumnKind::Categorical {
                continue;
            }
            let Some(fitted) = self.columns.get(&col.name) else {
                return Err(PreprocessError::NoSuchColumn(col.name.clone()));
            };
            if *fitted == col.categories {
                continue;
            }
            let mut remap = Vec::with_capacity(col.categories.len());
            for cat in &col.categories {
                let code = fitted.iter().position(|c| c == cat).ok_or_else(|| {
                    PreprocessError::UnseenCategory {
                        column: col.name.clone(),
                        category: cat.clone(),
                    }
                })?;
                remap.push(code as u32);
            }
            for row in &mut out.rows {
                if let Value::Cat(c) = row.values[ci] {
                    let new = remap[c as usize];
                    row.values[ci] = Value::Cat(new);
                    if Some(ci) == d.schema.label_column {
                        row.label = Some(new);
                    }
                }
            }
            out.schema.columns[ci].categories = fitted.clone();
            if Some(ci) == d.schema.label_column {
                out.schema.class_labels = fitted.clone();
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Column, Instance, Schema};

    fn cat_dataset(vocab: &[&str], codes: &[u32]) -> Dataset {
        let schema = Schema::new(vec![Column::categorical(
            "c",
            vocab.iter().map(|s| s.to_string()).collect(),
        )]);
        let mut d = Dataset::new(schema);
        for &c in codes {
            d.push(Instance::new(vec![Value::Cat(c)])).unwrap();
        }
        d
    }

    #[test]
    fn round_trip_for_every_seen_category() {
        let d = cat_dataset(&["red", "green", "blue"], &[0, 1, 2, 1]);
        let map = EncodingMap::fit(&d);
        for (code, name) in ["red", "green", "blue"].iter().enumerate() {
            assert_eq!(map.encode("c", name).unwrap(), code as u32);
            assert_eq!(map.decode("c", code as u32).unwrap(), *name);
        }
    }

    #[test]
    fn unseen_category_is_a_distinct_error() {
        let d = cat_dataset(&["red"], &[0]);
        let map = EncodingMap::fit(&d);
        assert!(matches!(
            map.encode("c", "cyan"),
            Err(PreprocessError::UnseenCategory { .. })
        ));
    }

    #[test]
    fn apply_remaps_differently_ordered_vocabulary() {
        let train = cat_dataset(&["red", "green"], &[0, 1]);
        let map = EncodingMap::fit(&train);
        // Same categories, seen in the opposite order.
        let valid = cat_dataset(&["green", "red"], &[0, 1]);
        let remapped = map.apply(&valid).unwrap();
        assert_eq!(remapped.rows[0].values[0], Value::Cat(1)); // green
        assert_eq!(remapped.rows[1].values[0], Value::Cat(0)); // red
    }

    #[test]
    fn apply_rejects_unseen_category() {
        let train = cat_dataset(&["red"], &[0]);
        let map = EncodingMap::fit(&train);
        let valid = cat_dataset(&["red", "cyan"], &[0, 1]);
        assert!(matches!(
            map.apply(&valid),
            Err(PreprocessError::UnseenCategory { .. })
        ));
    }
}
