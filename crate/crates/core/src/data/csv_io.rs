//! CSV ingestion with schema inference, and CSV export.
//!
//! Format: comma-separated, double-quote escaping, UTF-8, header mandatory.
//! Cells in `{"", "NaN", "nan", "null", "?"}` are treated as missing. Without
//! a schema hint, a column is numeric iff every non-missing cell parses as a
//! finite real; otherwise it is categorical with codes assigned in first-seen
//! order. The label column is never inferred: it comes from the hint or from
//! [`load_csv_labeled`].

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{Column, ColumnKind, DataError, Dataset, Instance, Schema, Value};

const MISSING_MARKERS: [&str; 5] = ["", "NaN", "nan", "null", "?"];

fn is_missing(cell: &str) -> bool {
    MISSING_MARKERS.contains(&cell)
}

fn parse_finite(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|x| x.is_finite())
}

/// Load a CSV file. With a hint, column names and kinds (and the label
/// designation) are taken from it; hinted category vocabularies and class
/// labels are used as the starting vocabulary and extended in first-seen
/// order when empty-extensible, otherwise unseen labels are an error.
pub fn load_csv(path: impl AsRef<Path>, hint: Option<&Schema>) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let mut file = File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut text = String::new();
    file.read_to_string(&mut text).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    from_csv_text(&text, hint, None)
}

/// Load a CSV file and designate `label_column` (by name) as the label.
pub fn load_csv_labeled(path: impl AsRef<Path>, label_column: &str) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let mut file = File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut text = String::new();
    file.read_to_string(&mut text).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    from_csv_text(&text, None, Some(label_column))
}

/// Parse CSV text into a dataset. Exposed for in-memory tests and tooling.
pub(crate) fn from_csv_text(
    text: &str,
    hint: Option<&Schema>,
    label_name: Option<&str>,
) -> Result<Dataset, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| DataError::Csv(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(DataError::MissingHeader);
    }
    let n_cols = header.len();

    let mut records: Vec<Vec<String>> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| DataError::Csv(e.to_string()))?;
        let cells: Vec<String> = rec.iter().map(str::to_string).collect();
        if cells.len() != n_cols {
            return Err(DataError::RaggedRow {
                row: i + 1,
                expected: n_cols,
                found: cells.len(),
            });
        }
        records.push(cells);
    }

    // Resolve the label column index before kind inference: the label column
    // is always categorical.
    let label_idx: Option<usize> = if let Some(h) = hint {
        h.label_column
    } else if let Some(name) = label_name {
        Some(
            header
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| DataError::NoSuchColumn(name.to_string()))?,
        )
    } else {
        None
    };

    if let Some(h) = hint {
        if h.columns.len() != n_cols {
            return Err(DataError::RaggedRow {
                row: 0,
                expected: h.columns.len(),
                found: n_cols,
            });
        }
        for (i, c) in h.columns.iter().enumerate() {
            if c.name != header[i] {
                return Err(DataError::HintMismatch {
                    index: i,
                    hinted: c.name.clone(),
                    found: header[i].clone(),
                });
            }
        }
    }

    let kinds: Vec<ColumnKind> = (0..n_cols)
        .map(|col| {
            if Some(col) == label_idx {
                return ColumnKind::Categorical;
            }
            if let Some(h) = hint {
                return h.columns[col].kind;
            }
            let numeric = records
                .iter()
                .map(|r| r[col].as_str())
                .filter(|c| !is_missing(c))
                .all(|c| parse_finite(c).is_some());
            if numeric {
                ColumnKind::Numeric
            } else {
                ColumnKind::Categorical
            }
        })
        .collect();

    // Category vocabularies, seeded from the hint when present.
    let mut vocabs: Vec<Vec<String>> = (0..n_cols)
        .map(|col| {
            hint.map(|h| h.columns[col].categories.clone())
                .unwrap_or_default()
        })
        .collect();
    let mut class_labels: Vec<String> = hint
        .map(|h| h.class_labels.clone())
        .unwrap_or_default();
    let class_labels_fixed = !class_labels.is_empty();

    let mut rows: Vec<Instance> = Vec::with_capacity(records.len());
    for (ri, rec) in records.iter().enumerate() {
        let mut values = Vec::with_capacity(n_cols);
        let mut label: Option<u32> = None;
        for (col, cell) in rec.iter().enumerate() {
            if is_missing(cell) {
                values.push(Value::Missing);
                continue;
            }
            match kinds[col] {
                ColumnKind::Numeric => {
                    let x = parse_finite(cell).ok_or_else(|| DataError::NumericParse {
                        row: ri + 1,
                        column: header[col].clone(),
                        cell: cell.clone(),
                    })?;
                    values.push(Value::Num(x));
                }
                ColumnKind::Categorical => {
                    let code = if Some(col) == label_idx {
                        let code = match class_labels.iter().position(|v| v == cell) {
                            Some(c) => c,
                            None if class_labels_fixed => {
                                return Err(DataError::UnknownClassLabel {
                                    row: ri + 1,
                                    label: cell.clone(),
                                })
                            }
                            None => {
                                class_labels.push(cell.clone());
                                class_labels.len() - 1
                            }
                        };
                        label = Some(code as u32);
                        code
                    } else {
                        match vocabs[col].iter().position(|v| v == cell) {
                            Some(c) => c,
                            None => {
                                vocabs[col].push(cell.clone());
                                vocabs[col].len() - 1
                            }
                        }
                    };
                    values.push(Value::Cat(code as u32));
                }
            }
        }
        rows.push(Instance {
            values,
            label,
            weight: 1.0,
        });
    }

    let columns = header
        .iter()
        .zip(kinds.iter())
        .enumerate()
        .map(|(col, (name, kind))| Column {
            name: name.clone(),
            kind: *kind,
            categories: match kind {
                ColumnKind::Numeric => Vec::new(),
                ColumnKind::Categorical => {
                    if Some(col) == label_idx {
                        class_labels.clone()
                    } else {
                        std::mem::take(&mut vocabs[col])
                    }
                }
            },
        })
        .collect();

    let schema = Schema {
        columns,
        label_column: label_idx,
        class_labels: if label_idx.is_some() {
            class_labels
        } else {
            Vec::new()
        },
    };
    schema.validate()?;
    Ok(Dataset { schema, rows })
}

/// Write a dataset as CSV. Missing cells become empty strings; numeric cells
/// use the shortest round-trip representation.
pub fn save_csv(d: &Dataset, path: impl AsRef<Path>) -> Result<(), DataError> {
    let path = path.as_ref();
    let mut file = File::create(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let text = to_csv_text(d);
    file.write_all(text.as_bytes()).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub(crate) fn to_csv_text(d: &Dataset) -> String {
    let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
    writer
        .write_record(d.schema.columns.iter().map(|c| c.name.as_str()))
        .expect("csv write");
    for row in &d.rows {
        let rec: Vec<String> = row
            .values
            .iter()
            .enumerate()
            .map(|(col, v)| match v {
                Value::Num(x) => format!("{x}"),
                Value::Cat(c) => d.schema.columns[col]
                    .categories
                    .get(*c as usize)
                    .cloned()
                    .unwrap_or_else(|| c.to_string()),
                Value::Missing => String::new(),
            })
            .collect();
        writer.write_record(&rec).expect("csv write");
    }
    String::from_utf8(writer.into_inner().expect("csv flush")).expect("utf8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infers_numeric_and_categorical_kinds() {
        let d = from_csv_text("a,b\n1,x\n2.5,y\n3,x\n", None, None).unwrap();
        assert_eq!(d.schema.columns[0].kind, ColumnKind::Numeric);
        assert_eq!(d.schema.columns[1].kind, ColumnKind::Categorical);
        assert_eq!(d.schema.columns[1].categories, vec!["x", "y"]);
        assert_eq!(d.rows[1].values, vec![Value::Num(2.5), Value::Cat(1)]);
    }

    #[test]
    fn question_mark_in_numeric_column_is_missing() {
        let d = from_csv_text("a\n1\n?\n3\n", None, None).unwrap();
        assert_eq!(d.schema.columns[0].kind, ColumnKind::Numeric);
        assert_eq!(d.rows[1].values[0], Value::Missing);
    }

    #[test]
    fn all_missing_markers_recognized() {
        let d = from_csv_text("a,b\n1,0\n,0\nNaN,0\nnan,0\nnull,0\n?,0\n", None, None).unwrap();
        assert_eq!(d.schema.columns[0].kind, ColumnKind::Numeric);
        assert_eq!(d.rows.iter().filter(|r| r.values[0].is_missing()).count(), 5);
    }

    #[test]
    fn ragged_row_cites_index() {
        let err = from_csv_text("a,b,c\n1,2,3\n1,2\n", None, None).unwrap_err();
        match err {
            DataError::RaggedRow { row, expected, found } => {
                assert_eq!((row, expected, found), (2, 3, 2));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn hint_mismatch_is_reported() {
        let hint = Schema::new(vec![Column::numeric("x"), Column::numeric("b")]);
        let err = from_csv_text("a,b\n1,2\n", Some(&hint), None).unwrap_err();
        assert!(matches!(err, DataError::HintMismatch { index: 0, .. }));
    }

    #[test]
    fn label_designation_builds_class_labels() {
        let d = from_csv_text("f,y\n1,spam\n2,ham\n3,spam\n", None, Some("y")).unwrap();
        assert_eq!(d.schema.label_column, Some(1));
        assert_eq!(d.schema.class_labels, vec!["spam", "ham"]);
        assert_eq!(d.rows[0].label, Some(0));
        assert_eq!(d.rows[1].label, Some(1));
    }

    #[test]
    fn numeric_label_column_becomes_categorical() {
        let d = from_csv_text("f,y\n1,0\n2,1\n", None, Some("y")).unwrap();
        assert_eq!(d.schema.columns[1].kind, ColumnKind::Categorical);
        assert_eq!(d.schema.class_labels, vec!["0", "1"]);
    }

    #[test]
    fn round_trip_preserves_values_kinds_and_missing() {
        let d = from_csv_text(
            "a,b,y\n1.5,x,no\n,y,yes\n2,\"q,uo\tted\",no\n",
            None,
            Some("y"),
        )
        .unwrap();
        let text = to_csv_text(&d);
        let d2 = from_csv_text(&text, None, Some("y")).unwrap();
        assert_eq!(d, d2);
    }

    #[test]
    fn missing_label_cell_yields_unlabeled_row() {
        let d = from_csv_text("f,y\n1,a\n2,\n", None, Some("y")).unwrap();
        assert_eq!(d.rows[1].label, None);
        assert!(d.rows[1].values[1].is_missing());
    }
}
