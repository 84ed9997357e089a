//! Metrics over attack scores and the report formats they end up in.

pub mod metrics;
pub mod report;

pub use metrics::{
    accuracy_at_median, accuracy_at_threshold, auc, auc_brute_force, median,
    precision_quantile_curve, subgroup_report, wasserstein_utility, GroupMetrics, PrecisionCurve,
    SubgroupOutcome, DEFAULT_QUANTILES,
};
pub use report::{
    aggregate_attackers, mean_and_population_std, precision_curve_to_csv, scores_to_csv,
    summarize_utility, AttackerAggregate, AttackerMetrics, AuditReport, ConfigEntry, SeedRun,
    SweepRow, SweepSeedCol, SweepTable, UtilitySummary, REPORT_FORMAT_VERSION,
};
