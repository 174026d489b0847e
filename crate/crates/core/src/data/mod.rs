//! Tabular data model: schemas, instances, datasets and pull-based streams.
//!
//! Datasets are immutable after load and safely shareable; a [`DataStream`]
//! is a single-consumer pull iterator.

mod csv_io;
mod stream;

pub use csv_io::{load_csv, load_csv_labeled, save_csv};
pub use stream::{
    generate_stream, ConceptSpec, DataStream, DriftKind, DriftStreamSpec, ThresholdRule,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from data loading, schema validation and stream generation.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv parse error: {0}")]
    Csv(String),
    #[error("file has no header row")]
    MissingHeader,
    #[error("row {row} has {found} cells, header has {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("schema hint names column '{hinted}' but header has '{found}' at position {index}")]
    HintMismatch {
        index: usize,
        hinted: String,
        found: String,
    },
    #[error("row {row}, column '{column}': cannot parse '{cell}' as a finite number")]
    NumericParse {
        row: usize,
        column: String,
        cell: String,
    },
    #[error("row {row}: label '{label}' is not among the declared class labels")]
    UnknownClassLabel { row: usize, label: String },
    #[error("column '{0}' not found")]
    NoSuchColumn(String),
    #[error("invalid stream spec: {}", .0.join("; "))]
    InvalidSpec(Vec<String>),
    #[error("instance has {found} values, schema has {expected} columns")]
    ArityMismatch { expected: usize, found: usize },
}

/// Kind of a column: finite reals or an enumerated category set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

/// A named, typed column. Categorical columns carry their category
/// vocabulary in first-seen order; codes are indices into it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
}

impl Column {
    pub fn numeric(name: impl Into<String>) -> Self {
        Column {
            name: name.into(),
            kind: ColumnKind::Numeric,
            categories: Vec::new(),
        }
    }

    pub fn categorical(name: impl Into<String>, categories: Vec<String>) -> Self {
        Column {
            name: name.into(),
            kind: ColumnKind::Categorical,
            categories,
        }
    }
}

/// Column layout of a dataset, plus the designated label column and the
/// ordered class-label set for classification tasks.
///
/// The label column, when set, is one of `columns`; feature operations skip
/// it via [`Schema::feature_indices`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<Column>,
    pub label_column: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub class_labels: Vec<String>,
}

impl Schema {
    pub fn new(columns: Vec<Column>) -> Self {
        Schema {
            columns,
            label_column: None,
            class_labels: Vec::new(),
        }
    }

    /// Designate `name` as the label column with the given class labels
    /// (class labels may be empty, in which case they are collected from data).
    pub fn with_label(mut self, name: &str, class_labels: Vec<String>) -> Result<Self, DataError> {
        let idx = self
            .column_index(name)
            .ok_or_else(|| DataError::NoSuchColumn(name.to_string()))?;
        self.label_column = Some(idx);
        self.class_labels = class_labels;
        Ok(self)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    /// Indices of feature columns (all columns except the label column).
    pub fn feature_indices(&self) -> Vec<usize> {
        (0..self.columns.len())
            .filter(|i| Some(*i) != self.label_column)
            .collect()
    }

    pub fn n_features(&self) -> usize {
        self.feature_indices().len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_labels.len()
    }

    /// Column names must be unique; the label column, if set, must exist and
    /// have a non-empty class-label set.
    pub fn validate(&self) -> Result<(), DataError> {
        let mut problems = Vec::new();
        for (i, c) in self.columns.iter().enumerate() {
            if self.columns[..i].iter().any(|o| o.name == c.name) {
                problems.push(format!("duplicate column name '{}'", c.name));
            }
        }
        if let Some(idx) = self.label_column {
            if idx >= self.columns.len() {
                problems.push(format!("label column index {idx} out of range"));
            }
            if self.class_labels.is_empty() {
                problems.push("label column set but class_labels empty".to_string());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(DataError::InvalidSpec(problems))
        }
    }
}

/// A single cell: finite real, category code, or missing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Num(f64),
    Cat(u32),
    Missing,
}

impl Value {
    pub fn is_missing(&self) -> bool {
        matches!(self, Value::Missing)
    }

    pub fn as_num(&self) -> Option<f64> {
        match self {
            Value::Num(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_cat(&self) -> Option<u32> {
        match self {
            Value::Cat(c) => Some(*c),
            _ => None,
        }
    }
}

/// One row: per-column values, optional class id, non-negative weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub values: Vec<Value>,
    pub label: Option<u32>,
    pub weight: f64,
}

impl Instance {
    pub fn new(values: Vec<Value>) -> Self {
        Instance {
            values,
            label: None,
            weight: 1.0,
        }
    }

    pub fn labeled(values: Vec<Value>, label: u32) -> Self {
        Instance {
            values,
            label: Some(label),
            weight: 1.0,
        }
    }
}

/// An ordered collection of instances conforming to a schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub schema: Schema,
    pub rows: Vec<Instance>,
}

impl Dataset {
    pub fn new(schema: Schema) -> Self {
        Dataset {
            schema,
            rows: Vec::new(),
        }
    }

    /// Append a row after checking it conforms to the schema.
    pub fn push(&mut self, row: Instance) -> Result<(), DataError> {
        if row.values.len() != self.schema.n_columns() {
            return Err(DataError::ArityMismatch {
                expected: self.schema.n_columns(),
                found: row.values.len(),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn is_labeled(&self) -> bool {
        self.schema.label_column.is_some() && self.rows.iter().any(|r| r.label.is_some())
    }

    /// Per-class instance counts, indexed by class id.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.schema.n_classes()];
        for r in &self.rows {
            if let Some(l) = r.label {
                if (l as usize) < counts.len() {
                    counts[l as usize] += 1;
                }
            }
        }
        counts
    }

    /// Values of a numeric column; missing cells are skipped.
    pub fn numeric_column(&self, col: usize) -> Vec<f64> {
        self.rows
            .iter()
            .filter_map(|r| r.values[col].as_num())
            .collect()
    }

    /// Restrict the dataset to the named feature columns (label kept).
    pub fn select_features(&self, keep: &[String]) -> Result<Dataset, DataError> {
        let mut indices = Vec::with_capacity(keep.len());
        for name in keep {
            indices.push(
                self.schema
                    .column_index(name)
                    .ok_or_else(|| DataError::NoSuchColumn(name.clone()))?,
            );
        }
        if let Some(label_idx) = self.schema.label_column {
            if !indices.contains(&label_idx) {
                indices.push(label_idx);
            }
        }
        let columns = indices
            .iter()
            .map(|&i| self.schema.columns[i].clone())
            .collect::<Vec<_>>();
        let label_column = self
            .schema
            .label_column
            .map(|l| indices.iter().position(|&i| i == l).unwrap());
        let schema = Schema {
            columns,
            label_column,
            class_labels: self.schema.class_labels.clone(),
        };
        let rows = self
            .rows
            .iter()
            .map(|r| Instance {
                values: indices.iter().map(|&i| r.values[i]).collect(),
                label: r.label,
                weight: r.weight,
            })
            .collect();
        Ok(Dataset { schema, rows })
    }
}
