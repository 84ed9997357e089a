//! Tabular datasets: schema, standardization, splits.
//!
//! A dataset is a finite real matrix plus a schema naming each column and
//! classifying it as continuous or binary. Standardization is always fit on
//! one set and applied to others, never refit, so every set lives in the
//! same coordinates as the set the attacker actually sees.

mod csv_io;
mod split;

pub use csv_io::{format_float, load_csv, load_csv_str, write_csv, write_csv_string, SchemaHint};
pub use split::{
    make_shifted_split, make_split, make_split_and_holdout, shifted_reference, subgroup_mask,
    ExperimentSplit, GroupPredicate, GroupedSizes, SubgroupMask,
};

use crate::error::{AuditError, Result};
use crate::numcore::{RealMatrix, SeededRng};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<Column>,
}

impl Schema {
    pub fn continuous(names: &[&str]) -> Self {
        Schema {
            columns: names
                .iter()
                .map(|n| Column {
                    name: n.to_string(),
                    kind: ColumnKind::Continuous,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Check that declared binary columns really hold only 0 and 1.
    pub fn validate(&self, values: &RealMatrix) -> Result<()> {
        if self.len() != values.n_cols() {
            return Err(AuditError::Dimension(format!(
                "schema has {} columns, data has {}",
                self.len(),
                values.n_cols()
            )));
        }
        for (j, col) in self.columns.iter().enumerate() {
            if col.kind == ColumnKind::Binary {
                for i in 0..values.n_rows() {
                    let v = values.get(i, j);
                    if v != 0.0 && v != 1.0 {
                        return Err(AuditError::Schema(format!(
                            "binary column {:?} holds {} at row {}",
                            col.name,
                            v,
                            i + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Fitted standardization parameters. Population std (divide by n).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub jitter: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: Schema,
    pub values: RealMatrix,
    /// Present iff the values are in standardized coordinates.
    pub standardization: Option<Standardization>,
}

impl Dataset {
    pub fn new(schema: Schema, values: RealMatrix) -> Result<Self> {
        schema.validate(&values)?;
        Ok(Dataset {
            schema,
            values,
            standardization: None,
        })
    }

    /// Raw constructor for rows already in standardized or synthetic
    /// coordinates, where the binary-range check does not apply.
    pub fn with_values_unchecked(
        schema: Schema,
        values: RealMatrix,
        standardization: Option<Standardization>,
    ) -> Result<Self> {
        if schema.len() != values.n_cols() {
            return Err(AuditError::Dimension(format!(
                "schema has {} columns, data has {}",
                schema.len(),
                values.n_cols()
            )));
        }
        Ok(Dataset {
            schema,
            values,
            standardization,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.values.n_rows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.n_cols()
    }

    pub fn is_standardized(&self) -> bool {
        self.standardization.is_some()
    }

    pub fn select_rows(&self, idx: &[usize]) -> Result<Dataset> {
        Ok(Dataset {
            schema: self.schema.clone(),
            values: self.values.select_rows(idx)?,
            standardization: self.standardization.clone(),
        })
    }

    /// Dataset without the named column (schema and standardization params
    /// both shrink). Used to hide bookkeeping columns from attackers.
    pub fn drop_column(&self, name: &str) -> Result<Dataset> {
        let j = self
            .schema
            .index_of(name)
            .ok_or_else(|| AuditError::Schema(format!("no column named {name:?}")))?;
        let keep: Vec<usize> = (0..self.n_cols()).filter(|&c| c != j).collect();
        let values = self.values.select_cols(&keep)?;
        let columns = keep
            .iter()
            .map(|&c| self.schema.columns[c].clone())
            .collect();
        let standardization = self.standardization.as_ref().map(|s| Standardization {
            means: keep.iter().map(|&c| s.means[c]).collect(),
            stds: keep.iter().map(|&c| s.stds[c]).collect(),
            jitter: s.jitter,
        });
        Ok(Dataset {
            schema: Schema { columns },
            values,
            standardization,
        })
    }

    pub fn column_by_name(&self, name: &str) -> Result<Vec<f64>> {
        let j = self
            .schema
            .index_of(name)
            .ok_or_else(|| AuditError::Schema(format!("no column named {name:?}")))?;
        Ok(self.values.column(j))
    }
}

/// Fit standardization on `train`, apply it to `train` and every dataset in
/// `others`. With `jitter` on, binary columns get uniform dequantization
/// noise in (-0.05, 0.05) before the fit and before each application.
///
/// Standardizing an already-standardized dataset is an error, not a no-op.
pub fn standardize_fit_apply(
    train: &Dataset,
    others: &[&Dataset],
    jitter: bool,
    rng: &mut SeededRng,
) -> Result<(Standardization, Dataset, Vec<Dataset>)> {
    if train.is_standardized() || others.iter().any(|d| d.is_standardized()) {
        return Err(AuditError::Data(
            "refusing to standardize already-standardized data".into(),
        ));
    }
    for (k, d) in others.iter().enumerate() {
        if d.schema != train.schema {
            return Err(AuditError::Schema(format!(
                "dataset {k} does not share the fitting set's schema"
            )));
        }
    }

    let train_values = jitter_binary(train, jitter, rng)?;
    let means = train_values.col_means();
    let stds = train_values.col_stds();
    for (j, (&s, col)) in stds.iter().zip(&train.schema.columns).enumerate() {
        if s == 0.0 {
            return Err(AuditError::DegenerateColumn {
                name: col.name.clone(),
                message: format!("zero variance in fitting set (column index {j})"),
            });
        }
    }
    let params = Standardization {
        means,
        stds,
        jitter,
    };

    let apply = |values: &RealMatrix, params: &Standardization| -> Result<RealMatrix> {
        let mut out = Vec::with_capacity(values.n_rows() * values.n_cols());
        for row in values.rows() {
            for (j, v) in row.iter().enumerate() {
                out.push((v - params.means[j]) / params.stds[j]);
            }
        }
        RealMatrix::from_vec(values.n_rows(), values.n_cols(), out)
    };

    let train_std = Dataset {
        schema: train.schema.clone(),
        values: apply(&train_values, &params)?,
        standardization: Some(params.clone()),
    };
    let mut others_std = Vec::with_capacity(others.len());
    for d in others {
        let jittered = jitter_binary(d, jitter, rng)?;
        others_std.push(Dataset {
            schema: d.schema.clone(),
            values: apply(&jittered, &params)?,
            standardization: Some(params.clone()),
        });
    }
    Ok((params, train_std, others_std))
}

/// Map a standardized dataset back to original coordinates.
pub fn destandardize(dataset: &Dataset) -> Result<Dataset> {
    let params = dataset.standardization.as_ref().ok_or_else(|| {
        AuditError::Data("cannot destandardize: dataset is not standardized".into())
    })?;
    let mut out = Vec::with_capacity(dataset.n_rows() * dataset.n_cols());
    for row in dataset.values.rows() {
        for (j, v) in row.iter().enumerate() {
            out.push(v * params.stds[j] + params.means[j]);
        }
    }
    Ok(Dataset {
        schema: dataset.schema.clone(),
        values: RealMatrix::from_vec(dataset.n_rows(), dataset.n_cols(), out)?,
        standardization: None,
    })
}

fn jitter_binary(dataset: &Dataset, jitter: bool, rng: &mut SeededRng) -> Result<RealMatrix> {
    if !jitter {
        return Ok(dataset.values.clone());
    }
    let binary: Vec<bool> = dataset
        .schema
        .columns
        .iter()
        .map(|c| c.kind == ColumnKind::Binary)
        .collect();
    let mut out = Vec::with_capacity(dataset.n_rows() * dataset.n_cols());
    for row in dataset.values.rows() {
        for (j, v) in row.iter().enumerate() {
            if binary[j] {
                out.push(v + rng.uniform_in(-0.05, 0.05));
            } else {
                out.push(*v);
            }
        }
    }
    RealMatrix::from_vec(dataset.n_rows(), dataset.n_cols(), out)
}
