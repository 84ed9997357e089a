//! Comma-separated io. The format is deliberately plain: a header row of
//! column names, then numeric rows. Floats are written in Rust's shortest
//! round-trip form, so write -> read -> write is byte-stable.

use super::{Column, ColumnKind, Dataset, Schema};
use crate::error::{AuditError, Result};
use crate::numcore::RealMatrix;
use std::path::Path;

/// How to assign column kinds when loading.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SchemaHint {
    /// A column is binary iff every value is exactly 0 or 1.
    Infer,
    /// Caller-provided kinds, one per column; binary columns are verified.
    Explicit(Vec<ColumnKind>),
}

pub fn load_csv(path: &Path, hint: &SchemaHint) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    load_csv_str(&text, hint)
}

pub fn load_csv_str(text: &str, hint: &SchemaHint) -> Result<Dataset> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| AuditError::Data("empty csv: no header row".into()))?;
    let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    if names.iter().any(|n| n.is_empty()) {
        return Err(AuditError::Data("empty column name in header".into()));
    }
    let n_cols = names.len();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line_no, line) in lines.enumerate() {
        let row_no = line_no + 1; // 1-based data row, header not counted
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != n_cols {
            return Err(AuditError::Parse {
                row: row_no,
                col: cells.len().min(n_cols),
                message: format!("expected {} cells, found {}", n_cols, cells.len()),
            });
        }
        let mut row = Vec::with_capacity(n_cols);
        for (j, cell) in cells.iter().enumerate() {
            let trimmed = cell.trim();
            let v: f64 = trimmed.parse().map_err(|_| AuditError::Parse {
                row: row_no,
                col: j + 1,
                message: format!("cannot parse {trimmed:?} as a number"),
            })?;
            if !v.is_finite() {
                return Err(AuditError::Parse {
                    row: row_no,
                    col: j + 1,
                    message: format!("non-finite value {trimmed:?}"),
                });
            }
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(AuditError::Data("csv has a header but no data rows".into()));
    }
    let values = RealMatrix::from_rows(&rows)?;

    let kinds: Vec<ColumnKind> = match hint {
        SchemaHint::Infer => (0..n_cols)
            .map(|j| {
                let all01 = (0..values.n_rows())
                    .all(|i| values.get(i, j) == 0.0 || values.get(i, j) == 1.0);
                if all01 {
                    ColumnKind::Binary
                } else {
                    ColumnKind::Continuous
                }
            })
            .collect(),
        SchemaHint::Explicit(kinds) => {
            if kinds.len() != n_cols {
                return Err(AuditError::Schema(format!(
                    "schema hint has {} kinds for {} columns",
                    kinds.len(),
                    n_cols
                )));
            }
            kinds.clone()
        }
    };
    let schema = Schema {
        columns: names
            .into_iter()
            .zip(kinds)
            .map(|(name, kind)| Column { name, kind })
            .collect(),
    };
    Dataset::new(schema, values)
}

pub fn write_csv_string(dataset: &Dataset) -> String {
    let mut out = String::new();
    let names: Vec<&str> = dataset
        .schema
        .columns
        .iter()
        .map(|c| c.name.as_str())
        .collect();
    out.push_str(&names.join(","));
    out.push('\n');
    for row in dataset.values.rows() {
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            first = false;
            out.push_str(&format_float(*v));
        }
        out.push('\n');
    }
    out
}

pub fn write_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    std::fs::write(path, write_csv_string(dataset))?;
    Ok(())
}

/// Shortest decimal that parses back to exactly the same f64.
pub fn format_float(v: f64) -> String {
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infers_binary_and_continuous() {
        let d = load_csv_str("flag,x\n0,1.5\n1,2.25\n0,-3\n", &SchemaHint::Infer).unwrap();
        assert_eq!(d.schema.columns[0].kind, ColumnKind::Binary);
        assert_eq!(d.schema.columns[1].kind, ColumnKind::Continuous);
        assert_eq!(d.n_rows(), 3);
    }

    #[test]
    fn bad_cell_names_row_and_column() {
        // Row 7 of the data holds a word.
        let mut text = String::from("x\n");
        for i in 0..10 {
            if i == 6 {
                text.push_str("abc\n");
            } else {
                text.push_str("1.0\n");
            }
        }
        let err = load_csv_str(&text, &SchemaHint::Infer).unwrap_err();
        match err {
            AuditError::Parse { row, col, .. } => {
                assert_eq!(row, 7);
                assert_eq!(col, 1);
            }
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn ragged_row_is_a_parse_error() {
        let err = load_csv_str("a,b\n1,2\n3\n", &SchemaHint::Infer).unwrap_err();
        match err {
            AuditError::Parse { row, .. } => assert_eq!(row, 2),
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn non_finite_cell_rejected() {
        assert!(load_csv_str("x\ninf\n", &SchemaHint::Infer).is_err());
        assert!(load_csv_str("x\nnan\n", &SchemaHint::Infer).is_err());
    }

    #[test]
    fn explicit_hint_is_verified() {
        let hint = SchemaHint::Explicit(vec![ColumnKind::Binary]);
        assert!(load_csv_str("x\n0\n0.5\n", &hint).is_err());
        assert!(load_csv_str("x\n0\n1\n", &hint).is_ok());
    }

    #[test]
    fn write_read_write_is_byte_stable() {
        let mut rng = crate::numcore::SeededRng::new(9);
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| {
                vec![
                    rng.normal() * 1e-3,
                    rng.normal() * 1e6,
                    rng.uniform(),
                    if rng.uniform() < 0.5 { 0.0 } else { 1.0 },
                ]
            })
            .collect();
        let schema = Schema::continuous(&["a", "b", "c", "d"]);
        let d = Dataset::new(schema, RealMatrix::from_rows(&rows).unwrap()).unwrap();
        let first = write_csv_string(&d);
        let re_read = load_csv_str(&first, &SchemaHint::Infer).unwrap();
        let second = write_csv_string(&re_read);
        assert_eq!(first, second);
        for i in 0..d.n_rows() {
            for j in 0..d.n_cols() {
                assert_eq!(re_read.values.get(i, j), d.values.get(i, j));
            }
        }
    }
}
