//! Report assembly and on-disk formats: the JSON audit report, the sweep
//! CSV, and per-attacker score dumps.
//!
//! Everything here is deliberately boring: plain structs with a fixed field
//! order, Vec instead of maps, and no clocks or hostnames anywhere. Two runs
//! with the same config and seeds must produce byte-identical files.

use serde::{Deserialize, Serialize};

use crate::attacks::AttackScores;
use crate::data::format_float;
use crate::error::{AuditError, Result};
use crate::eval::metrics::{PrecisionCurve, SubgroupOutcome};

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// One resolved key from the effective configuration, echoed into the
/// report so a reader can re-run the audit bit-identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEntry {
    pub key: String,
    pub value: String,
}

/// Everything measured for one attacker on one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackerMetrics {
    pub name: String,
    pub config: String,
    pub auc: f64,
    pub accuracy_at_median: f64,
    pub precision_curve: PrecisionCurve,
    pub subgroup: Option<SubgroupOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub utility_wasserstein: Option<f64>,
    pub attackers: Vec<AttackerMetrics>,
}

/// Mean and population standard deviation over seeds, per attacker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackerAggregate {
    pub name: String,
    pub auc_mean: f64,
    pub auc_std: f64,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilitySummary {
    pub wasserstein_mean: f64,
    pub wasserstein_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub format_version: u32,
    pub software_version: String,
    /// Which subcommand produced this report.
    pub command: String,
    pub seeds: Vec<u64>,
    pub config: Vec<ConfigEntry>,
    pub runs: Vec<SeedRun>,
    pub aggregates: Vec<AttackerAggregate>,
    pub utility: Option<UtilitySummary>,
}

impl AuditReport {
    pub fn to_json(&self) -> Result<String> {
        let body = serde_json::to_string_pretty(self)
            .map_err(|e| AuditError::Data(format!("report serialization: {e}")))?;
        Ok(body + "\n")
    }

    pub fn from_json(text: &str) -> Result<AuditReport> {
        serde_json::from_str(text).map_err(|e| AuditError::Data(format!("report parse: {e}")))
    }
}

pub fn mean_and_population_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Per-attacker mean/std over seed runs. Every run must list the same
/// attackers in the same order; the engine guarantees this, so a mismatch
/// here means the runs came from different configs.
pub fn aggregate_attackers(runs: &[SeedRun]) -> Result<Vec<AttackerAggregate>> {
    let first = runs
        .first()
        .ok_or_else(|| AuditError::Size("no seed runs to aggregate".into()))?;
    let mut out = Vec::with_capacity(first.attackers.len());
    for (idx, head) in first.attackers.iter().enumerate() {
        let mut aucs = Vec::with_capacity(runs.len());
        let mut accs = Vec::with_capacity(runs.len());
        for run in runs {
            let m = run.attackers.get(idx).ok_or_else(|| {
                AuditError::Data(format!(
                    "seed {} run is missing attacker #{idx}",
                    run.seed
                ))
            })?;
            if m.name != head.name {
                return Err(AuditError::Data(format!(
                    "attacker order differs across seeds: {} vs {}",
                    head.name, m.name
                )));
            }
            aucs.push(m.auc);
            accs.push(m.accuracy_at_median);
        }
        let (auc_mean, auc_std) = mean_and_population_std(&aucs);
        let (accuracy_mean, accuracy_std) = mean_and_population_std(&accs);
        out.push(AttackerAggregate {
            name: head.name.clone(),
            auc_mean,
            auc_std,
            accuracy_mean,
            accuracy_std,
        });
    }
    Ok(out)
}

pub fn summarize_utility(runs: &[SeedRun]) -> Option<UtilitySummary> {
    let ws: Vec<f64> = runs.iter().filter_map(|r| r.utility_wasserstein).collect();
    if ws.len() != runs.len() || ws.is_empty() {
        return None;
    }
    let (wasserstein_mean, wasserstein_std) = mean_and_population_std(&ws);
    Some(UtilitySummary {
        wasserstein_mean,
        wasserstein_std,
    })
}

/// Value for the sweep CSV's seed column: a concrete seed or an aggregate
/// row over all seeds at that knob value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepSeedCol {
    Seed(u64),
    Mean,
    Std,
}

impl SweepSeedCol {
    fn render(self) -> String {
        match self {
            SweepSeedCol::Seed(s) => s.to_string(),
            SweepSeedCol::Mean => "mean".into(),
            SweepSeedCol::Std => "std".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub seed: SweepSeedCol,
    pub utility: Option<f64>,
    /// One AUC per attacker, in the table's attacker order.
    pub aucs: Vec<f64>,
}

/// Wide table for sweep and shift output: one row per (knob value, seed)
/// plus mean/std rows per value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub knob: String,
    pub attacker_names: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn new(knob: &str, attacker_names: Vec<String>) -> Self {
        SweepTable {
            knob: knob.to_string(),
            attacker_names,
            rows: Vec::new(),
        }
    }

    /// Insert mean and population-std rows after each knob value's seed
    /// rows. Seed rows are grouped by value in first-seen order; call this
    /// once, after all seed rows are pushed.
    pub fn append_aggregate_rows(&mut self) {
        let mut values = Vec::new();
        for row in &self.rows {
            if !values.iter().any(|&v: &f64| v.to_bits() == row.value.to_bits()) {
                values.push(row.value);
            }
        }
        let mut out: Vec<SweepRow> = Vec::with_capacity(self.rows.len() + 2 * values.len());
        for &value in &values {
            let group: Vec<&SweepRow> = self
                .rows
                .iter()
                .filter(|r| {
                    r.value.to_bits() == value.to_bits()
                        && matches!(r.seed, SweepSeedCol::Seed(_))
                })
                .collect();
            out.extend(group.iter().map(|r| (*r).clone()));
            if group.is_empty() {
                continue;
            }
            let utilities: Vec<f64> = group.iter().filter_map(|r| r.utility).collect();
            let util_stats = (utilities.len() == group.len())
                .then(|| mean_and_population_std(&utilities));
            let mut mean_aucs = Vec::with_capacity(self.attacker_names.len());
            let mut std_aucs = Vec::with_capacity(self.attacker_names.len());
            for a in 0..self.attacker_names.len() {
                let col: Vec<f64> = group.iter().map(|r| r.aucs[a]).collect();
                let (m, s) = mean_and_population_std(&col);
                mean_aucs.push(m);
                std_aucs.push(s);
            }
            out.push(SweepRow {
                value,
                seed: SweepSeedCol::Mean,
                utility: util_stats.map(|(m, _)| m),
                aucs: mean_aucs,
            });
            out.push(SweepRow {
                value,
                seed: SweepSeedCol::Std,
                utility: util_stats.map(|(_, s)| s),
                aucs: std_aucs,
            });
        }
        self.rows = out;
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("knob,value,seed,utility");
        for name in &self.attacker_names {
            out.push_str(",auc_");
            out.push_str(name);
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&self.knob);
            out.push(',');
            out.push_str(&format_float(row.value));
            out.push(',');
            out.push_str(&row.seed.render());
            out.push(',');
            if let Some(u) = row.utility {
                out.push_str(&format_float(u));
            }
            for &a in &row.aucs {
                out.push(',');
                out.push_str(&format_float(a));
            }
            out.push('\n');
        }
        out
    }
}

/// Per-row score dump for one attacker.
pub fn scores_to_csv(scores: &AttackScores) -> String {
    let mut out = String::from("row_id,score\n");
    for (i, &s) in scores.scores.iter().enumerate() {
        out.push_str(&i.to_string());
        out.push(',');
        out.push_str(&format_float(s));
        out.push('\n');
    }
    out
}

/// Precision curve as a two-column CSV, for plotting.
pub fn precision_curve_to_csv(curve: &PrecisionCurve) -> String {
    let mut out = String::from("q,precision\n");
    for (q, p) in curve.qs.iter().zip(&curve.precision) {
        out.push_str(&format_float(*q));
        out.push(',');
        out.push_str(&format_float(*p));
        out.push('\n');
    }
    out
}
