//! Ranking and threshold metrics for attack scores, subgroup breakdowns,
//! and the per-feature Wasserstein utility score.
//!
//! Conventions pinned here and relied on elsewhere:
//! - AUC uses the Mann-Whitney tie convention (ties count one half) via
//!   midranks, and must agree with the O(n^2) pairwise oracle bit for bit.
//! - Thresholds are strict: a row is predicted member iff score > tau.
//! - Medians average the middle two values for even counts.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SubgroupMask};
use crate::error::{AuditError, Result};
use crate::numcore::SeededRng;

/// Quantile grid reports use unless the caller overrides it.
pub const DEFAULT_QUANTILES: [f64; 5] = [0.05, 0.1, 0.2, 0.5, 1.0];

fn validate_scored(scores: &[f64], labels: &[u8]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(AuditError::Dimension(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.is_empty() {
        return Err(AuditError::Size("no scored rows".into()));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(AuditError::Numeric(format!(
            "score {} at row {i} is not finite",
            scores[i]
        )));
    }
    if let Some(i) = labels.iter().position(|&l| l > 1) {
        return Err(AuditError::Data(format!(
            "membership label {} at row {i}; labels must be 0 or 1",
            labels[i]
        )));
    }
    Ok(())
}

fn class_counts(labels: &[u8]) -> (usize, usize) {
    let ones = labels.iter().filter(|&&l| l == 1).count();
    (labels.len() - ones, ones)
}

fn require_both_classes(labels: &[u8], what: &str) -> Result<()> {
    let (zeros, ones) = class_counts(labels);
    if zeros == 0 || ones == 0 {
        return Err(AuditError::DegenerateLabels(format!(
            "{what}: all {} labels are {}",
            labels.len(),
            if ones > 0 { 1 } else { 0 }
        )));
    }
    Ok(())
}

/// Probability that a random member outranks a random non-member, ties
/// counted one half. Computed with midranks in O(n log n); agrees exactly
/// with [`auc_brute_force`] because every midrank is a multiple of 1/2 and
/// all intermediate sums stay far below 2^52.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    validate_scored(scores, labels)?;
    require_both_classes(labels, "auc")?;
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite scores"));

    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1..=j share the midrank ((i+1)+j)/2.
        let midrank = (i + 1 + j) as f64 / 2.0;
        for &row in &order[i..j] {
            if labels[row] == 1 {
                rank_sum_pos += midrank;
            }
        }
        i = j;
    }

    let (n0, n1) = class_counts(labels);
    let u = rank_sum_pos - (n1 * (n1 + 1)) as f64 / 2.0;
    Ok(u / (n1 as f64 * n0 as f64))
}

/// O(n^2) pairwise AUC. Kept public as the oracle the fast path is tested
/// against; also cheap enough for the small acceptance instances.
pub fn auc_brute_force(scores: &[f64], labels: &[u8]) -> Result<f64> {
    validate_scored(scores, labels)?;
    require_both_classes(labels, "auc")?;
    let mut wins = 0.0;
    let mut pairs = 0usize;
    for (i, &si) in scores.iter().enumerate() {
        if labels[i] != 1 {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] != 0 {
                continue;
            }
            pairs += 1;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    let (n0, n1) = class_counts(labels);
    debug_assert_eq!(pairs, n0 * n1);
    Ok(wins / (n1 as f64 * n0 as f64))
}

/// Median with the mean-of-middle-two convention for even counts.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(AuditError::Size("median of no values".into()));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(AuditError::Numeric(format!("median of non-finite value {v}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = sorted.len();
    if n % 2 == 1 {
        Ok(sorted[n / 2])
    } else {
        Ok((sorted[n / 2 - 1] + sorted[n / 2]) / 2.0)
    }
}

/// Fraction of rows whose strict-threshold prediction (score > tau) matches
/// the label. Exposed separately from [`accuracy_at_median`] so subgroup
/// breakdowns can share one global threshold.
pub fn accuracy_at_threshold(scores: &[f64], labels: &[u8], tau: f64) -> Result<f64> {
    validate_scored(scores, labels)?;
    if !tau.is_finite() {
        return Err(AuditError::Numeric(format!("threshold {tau} is not finite")));
    }
    let correct = scores
        .iter()
        .zip(labels)
        .filter(|&(&s, &l)| (s > tau) as u8 == l)
        .count();
    Ok(correct as f64 / scores.len() as f64)
}

/// Accuracy with tau = median of the scores themselves. With all-equal
/// scores the strict rule predicts nobody a member.
pub fn accuracy_at_median(scores: &[f64], labels: &[u8]) -> Result<f64> {
    validate_scored(scores, labels)?;
    require_both_classes(labels, "accuracy_at_median")?;
    accuracy_at_threshold(scores, labels, median(scores)?)
}

/// Precision of the top-scored slice at each quantile q: the mean label
/// among the ceil(q*n) highest-scoring rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionCurve {
    pub qs: Vec<f64>,
    pub precision: Vec<f64>,
}

/// Top-slice precision on a q grid. Ties are broken by stable input order,
/// and q = 1 recovers the base membership rate exactly.
pub fn precision_quantile_curve(
    scores: &[f64],
    labels: &[u8],
    q_grid: &[f64],
) -> Result<PrecisionCurve> {
    validate_scored(scores, labels)?;
    require_both_classes(labels, "precision_quantile_curve")?;
    if q_grid.is_empty() {
        return Err(AuditError::Parameter("empty quantile grid".into()));
    }
    if let Some(&q) = q_grid.iter().find(|&&q| !(q > 0.0 && q <= 1.0)) {
        return Err(AuditError::Parameter(format!(
            "quantile {q} outside (0, 1]"
        )));
    }

    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort so equal scores keep input order within the top slice.
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("finite scores"));

    let mut precision = Vec::with_capacity(q_grid.len());
    for &q in q_grid {
        // The 1e-9 dust guard keeps q*n from ceiling one row too far when
        // the product lands a rounding error above an integer; q = 1 still
        // takes all n rows because n - 1e-9 ceils back to n.
        let m = ((q * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
        let hits = order[..m].iter().filter(|&&row| labels[row] == 1).count();
        precision.push(hits as f64 / m as f64);
    }
    Ok(PrecisionCurve {
        qs: q_grid.to_vec(),
        precision,
    })
}

/// Metrics for one side of a subgroup split. `accuracy` is measured at the
/// global median threshold, not the group's own median, so the group-size
/// weighted mean of accuracies reproduces the global accuracy exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMetrics {
    pub n: usize,
    pub auc: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupOutcome {
    pub definition: String,
    pub minority: GroupMetrics,
    pub majority: GroupMetrics,
    /// minority minus majority, in both cases.
    pub auc_gap: f64,
    pub accuracy_gap: f64,
}

fn group_metrics(
    scores: &[f64],
    labels: &[u8],
    rows: &[usize],
    tau: f64,
    group: &str,
) -> Result<GroupMetrics> {
    if rows.is_empty() {
        return Err(AuditError::DegenerateLabels(format!(
            "{group} group is empty"
        )));
    }
    let sub_scores: Vec<f64> = rows.iter().map(|&i| scores[i]).collect();
    let sub_labels: Vec<u8> = rows.iter().map(|&i| labels[i]).collect();
    let auc = auc(&sub_scores, &sub_labels).map_err(|e| match e {
        AuditError::DegenerateLabels(msg) => {
            AuditError::DegenerateLabels(format!("{group} group: {msg}"))
        }
        other => other,
    })?;
    Ok(GroupMetrics {
        n: rows.len(),
        auc,
        accuracy: accuracy_at_threshold(&sub_scores, &sub_labels, tau)?,
    })
}

/// Per-group AUC and accuracy, with gaps reported as minority - majority.
/// Mask bit 1 marks the minority side.
pub fn subgroup_report(
    scores: &[f64],
    labels: &[u8],
    mask: &SubgroupMask,
) -> Result<SubgroupOutcome> {
    validate_scored(scores, labels)?;
    if mask.bits.len() != scores.len() {
        return Err(AuditError::Dimension(format!(
            "mask covers {} rows but {} were scored",
            mask.bits.len(),
            scores.len()
        )));
    }
    let minority_rows: Vec<usize> = (0..scores.len()).filter(|&i| mask.bits[i] == 1).collect();
    let majority_rows: Vec<usize> = (0..scores.len()).filter(|&i| mask.bits[i] == 0).collect();

    let tau = median(scores)?;
    let minority = group_metrics(scores, labels, &minority_rows, tau, "minority")?;
    let majority = group_metrics(scores, labels, &majority_rows, tau, "majority")?;
    Ok(SubgroupOutcome {
        definition: mask.definition.clone(),
        auc_gap: minority.auc - majority.auc,
        accuracy_gap: minority.accuracy - majority.accuracy,
        minority,
        majority,
    })
}

/// Mean over features of the 1-D empirical Wasserstein-1 distance between
/// two same-schema datasets. Unequal sizes are reconciled by sampling the
/// larger set down to the smaller; pass a child of the audit seed so the
/// resample is reproducible. Equal sizes never touch the rng.
pub fn wasserstein_utility(a: &Dataset, b: &Dataset, rng: &mut SeededRng) -> Result<f64> {
    if a.schema != b.schema {
        return Err(AuditError::Schema(
            "utility comparison across different schemas".into(),
        ));
    }
    if a.n_rows() == 0 || b.n_rows() == 0 {
        return Err(AuditError::Size("utility comparison with an empty dataset".into()));
    }

    let m = a.n_rows().min(b.n_rows());
    let shrink = |d: &Dataset, rng: &mut SeededRng| -> Result<Dataset> {
        if d.n_rows() == m {
            Ok(d.clone())
        } else {
            d.select_rows(&rng.choose_without_replacement(d.n_rows(), m))
        }
    };
    let a = shrink(a, rng)?;
    let b = shrink(b, rng)?;

    let d = a.n_cols();
    let mut total = 0.0;
    for j in 0..d {
        let mut xa = a.values.column(j);
        let mut xb = b.values.column(j);
        xa.sort_by(|p, q| p.partial_cmp(q).expect("finite values"));
        xb.sort_by(|p, q| p.partial_cmp(q).expect("finite values"));
        // Sorted coupling is the optimal transport plan in one dimension.
        let w1: f64 = xa
            .iter()
            .zip(&xb)
            .map(|(p, q)| (p - q).abs())
            .sum::<f64>()
            / m as f64;
        total += w1;
    }
    let out = total / d as f64;
    if !out.is_finite() {
        return Err(AuditError::Numeric(format!(
            "non-finite utility distance {out}"
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Schema;
    use crate::numcore::RealMatrix;
    use proptest::prelude::*;

    fn one_col(values: &[f64]) -> Dataset {
        let rows: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
        Dataset::with_values_unchecked(
            Schema::continuous(&["f0"]),
            RealMatrix::from_rows(&rows).unwrap(),
            None,
        )
        .unwrap()
    }

    #[test]
    fn auc_matches_hand_values() {
        let labels = [1u8, 1, 0, 0];
        assert_eq!(auc(&[0.9, 0.8, 0.2, 0.1], &labels).unwrap(), 1.0);
        assert_eq!(auc(&[0.1, 0.2, 0.8, 0.9], &labels).unwrap(), 0.0);
        assert_eq!(auc(&[0.4, 0.4, 0.4, 0.4], &labels).unwrap(), 0.5);
        // One discordant pair out of four: (0.3, 0.8).
        assert_eq!(auc(&[0.9, 0.8, 0.3, 0.1], &[1, 0, 1, 0]).unwrap(), 0.75);
    }

    #[test]
    fn tied_scores_use_midranks() {
        // Positives tied above the negative: both pairs are wins.
        assert_eq!(auc(&[2.0, 2.0, 1.0], &[1, 1, 0]).unwrap(), 1.0);
        // Everything tied: every pair counts half.
        assert_eq!(auc(&[1.0, 1.0, 1.0], &[1, 1, 0]).unwrap(), 0.5);
        // Mixed: wins 3, tie 1 of 4 pairs.
        assert_eq!(auc(&[1.0, 2.0, 2.0, 3.0], &[0, 1, 0, 1]).unwrap(), 0.875);
    }

    #[test]
    fn auc_matches_brute_force_bitwise_on_random_tied_instances() {
        let mut rng = SeededRng::new(0x00c2_17a1);
        for _ in 0..200 {
            let n = 2 + rng.below(63);
            // Nine-point grid forces heavy ties.
            let scores: Vec<f64> = (0..n).map(|_| rng.below(9) as f64 / 4.0 - 1.0).collect();
            let mut labels: Vec<u8> = (0..n).map(|_| rng.below(2) as u8).collect();
            labels[0] = 1;
            labels[n - 1] = 0;
            let fast = auc(&scores, &labels).unwrap();
            let brute = auc_brute_force(&scores, &labels).unwrap();
            assert_eq!(fast.to_bits(), brute.to_bits(), "scores {scores:?}");
        }
    }

    #[test]
    fn degenerate_and_malformed_inputs_are_rejected() {
        assert!(matches!(
            auc(&[1.0, 2.0], &[1, 1]),
            Err(AuditError::DegenerateLabels(_))
        ));
        assert!(matches!(
            auc(&[1.0, f64::NAN], &[1, 0]),
            Err(AuditError::Numeric(_))
        ));
        assert!(matches!(
            auc(&[1.0, 2.0, 3.0], &[1, 0]),
            Err(AuditError::Dimension(_))
        ));
        assert!(matches!(auc(&[], &[]), Err(AuditError::Size(_))));
        assert!(matches!(
            auc(&[1.0, 2.0], &[1, 2]),
            Err(AuditError::Data(_))
        ));
    }

    #[test]
    fn accuracy_matches_hand_values() {
        // tau = 1.5, strict > predicts [1,1,0,0].
        assert_eq!(
            accuracy_at_median(&[3.0, 2.0, 1.0, 0.0], &[1, 1, 0, 0]).unwrap(),
            1.0
        );
        assert_eq!(
            accuracy_at_median(&[3.0, 2.0, 1.0, 0.0], &[0, 1, 1, 0]).unwrap(),
            0.5
        );
        // All-equal scores predict all zeros under the strict rule.
        assert_eq!(
            accuracy_at_median(&[5.0, 5.0, 5.0, 5.0], &[1, 0, 0, 0]).unwrap(),
            0.75
        );
    }

    #[test]
    fn subgroup_accuracy_reuses_the_global_threshold() {
        // Global median of [0,1,2,3] is 1.5; restricted to rows 2..4 the
        // local median would be 2.5 and would flip row 3's prediction.
        let scores = [0.0, 1.0, 2.0, 3.0];
        let labels = [0u8, 1, 0, 1];
        let mask = SubgroupMask {
            bits: vec![0, 0, 1, 1],
            definition: "test".into(),
        };
        let out = subgroup_report(&scores, &labels, &mask).unwrap();
        // Minority rows score 2 and 3, both > 1.5: predictions [1,1],
        // labels [0,1].
        assert_eq!(out.minority.accuracy, 0.5);
        assert_eq!(out.majority.accuracy, 0.5);
    }

    #[test]
    fn precision_curve_matches_hand_values() {
        let scores = [4.0, 3.0, 2.0, 1.0];
        let labels = [1u8, 0, 1, 0];
        let curve =
            precision_quantile_curve(&scores, &labels, &[0.25, 0.5, 1.0]).unwrap();
        assert_eq!(curve.precision, vec![1.0, 0.5, 0.5]);
    }

    #[test]
    fn precision_ties_break_by_input_order() {
        let scores = [7.0, 7.0, 7.0, 7.0];
        let curve = precision_quantile_curve(&scores, &[1, 0, 1, 0], &[0.5]).unwrap();
        assert_eq!(curve.precision, vec![0.5]);
        let curve = precision_quantile_curve(&scores, &[0, 0, 1, 1], &[0.5]).unwrap();
        assert_eq!(curve.precision, vec![0.0]);
    }

    #[test]
    fn precision_grid_is_validated() {
        let scores = [1.0, 2.0];
        let labels = [0u8, 1];
        assert!(matches!(
            precision_quantile_curve(&scores, &labels, &[]),
            Err(AuditError::Parameter(_))
        ));
        assert!(matches!(
            precision_quantile_curve(&scores, &labels, &[0.0]),
            Err(AuditError::Parameter(_))
        ));
        assert!(matches!(
            precision_quantile_curve(&scores, &labels, &[1.2]),
            Err(AuditError::Parameter(_))
        ));
    }

    #[test]
    fn subgroup_report_matches_a_hand_instance() {
        // Rows 0..4 majority, 4..8 minority. Minority scores separate its
        // members perfectly; majority has one discordant pair (0.3 vs 0.8).
        let scores = [0.9, 0.8, 0.3, 0.1, 10.0, 9.0, 2.0, 1.0];
        let labels = [1u8, 0, 1, 0, 1, 1, 0, 0];
        let mask = SubgroupMask {
            bits: vec![0, 0, 0, 0, 1, 1, 1, 1],
            definition: "group = 1".into(),
        };
        let out = subgroup_report(&scores, &labels, &mask).unwrap();
        assert_eq!(out.minority.auc, 1.0);
        assert_eq!(out.majority.auc, 0.75);
        assert_eq!(out.auc_gap, 0.25);
        assert_eq!(out.minority.n, 4);
        assert_eq!(out.majority.n, 4);
        // Global tau = median of all eight scores = (0.9 + 1.0) / 2.
        let tau = median(&scores).unwrap();
        assert_eq!(tau, 0.95);
        // Minority predictions [1,1,1,1] vs [1,1,0,0]; majority [0,0,0,0]
        // vs [1,0,1,0]: both halves get half right.
        assert_eq!(out.minority.accuracy, 0.5);
        assert_eq!(out.majority.accuracy, 0.5);
        assert_eq!(out.accuracy_gap, 0.0);
    }

    #[test]
    fn weighted_subgroup_identity_is_exact_for_dyadic_group_sizes() {
        // Group sizes 8 and 32: each per-group accuracy is an exact dyadic
        // c/2^k, so size * accuracy reproduces the correct count exactly
        // and the weighted mean matches global accuracy bit for bit.
        let mut rng = SeededRng::new(41);
        let n = 40;
        let scores: Vec<f64> = (0..n).map(|_| rng.below(7) as f64).collect();
        let mut labels: Vec<u8> = (0..n).map(|_| rng.below(2) as u8).collect();
        let mut bits = vec![0u8; n];
        for b in bits.iter_mut().take(8) {
            *b = 1;
        }
        // Both classes in both groups.
        labels[0] = 1;
        labels[1] = 0;
        labels[8] = 1;
        labels[9] = 0;
        let mask = SubgroupMask {
            bits,
            definition: "first eight rows".into(),
        };
        let out = subgroup_report(&scores, &labels, &mask).unwrap();
        let tau = median(&scores).unwrap();
        let global = accuracy_at_threshold(&scores, &labels, tau).unwrap();
        let weighted = (out.minority.n as f64 * out.minority.accuracy
            + out.majority.n as f64 * out.majority.accuracy)
            / n as f64;
        assert_eq!(global.to_bits(), weighted.to_bits());
    }

    #[test]
    fn majority_metrics_equal_a_direct_restriction() {
        let scores = [0.9, 0.8, 0.3, 0.1, 10.0, 9.0, 2.0, 1.0];
        let labels = [1u8, 0, 1, 0, 1, 1, 0, 0];
        let mask = SubgroupMask {
            bits: vec![0, 0, 0, 0, 1, 1, 1, 1],
            definition: "restricted".into(),
        };
        let out = subgroup_report(&scores, &labels, &mask).unwrap();
        let direct = auc(&scores[..4], &labels[..4]).unwrap();
        assert_eq!(out.majority.auc.to_bits(), direct.to_bits());
    }

    #[test]
    fn empty_minority_errors_naming_the_group() {
        let mask = SubgroupMask {
            bits: vec![0, 0, 0, 0],
            definition: "nobody".into(),
        };
        let err = subgroup_report(&[1.0, 2.0, 3.0, 4.0], &[1, 0, 1, 0], &mask).unwrap_err();
        match err {
            AuditError::DegenerateLabels(msg) => assert!(msg.contains("minority")),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn single_class_group_errors_naming_the_group() {
        let mask = SubgroupMask {
            bits: vec![1, 1, 0, 0],
            definition: "front half".into(),
        };
        let err = subgroup_report(&[1.0, 2.0, 3.0, 4.0], &[1, 1, 1, 0], &mask).unwrap_err();
        match err {
            AuditError::DegenerateLabels(msg) => assert!(msg.contains("minority")),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn wasserstein_matches_hand_values() {
        let mut rng = SeededRng::new(7);
        let a = one_col(&[0.0, 1.0, 2.0]);
        assert_eq!(wasserstein_utility(&a, &a, &mut rng).unwrap(), 0.0);

        let b = one_col(&[5.0, 6.0, 7.0]);
        assert_eq!(wasserstein_utility(&a, &b, &mut rng).unwrap(), 5.0);

        let p = one_col(&[0.0, 1.0]);
        let q = one_col(&[0.0, 3.0]);
        assert_eq!(wasserstein_utility(&p, &q, &mut rng).unwrap(), 1.0);
    }

    #[test]
    fn wasserstein_requires_matching_schemas() {
        let a = one_col(&[0.0]);
        let b = Dataset::with_values_unchecked(
            Schema::continuous(&["other"]),
            RealMatrix::from_rows(&[vec![0.0]]).unwrap(),
            None,
        )
        .unwrap();
        let mut rng = SeededRng::new(7);
        assert!(matches!(
            wasserstein_utility(&a, &b, &mut rng),
            Err(AuditError::Schema(_))
        ));
    }

    #[test]
    fn wasserstein_resamples_deterministically_per_seed() {
        let a = one_col(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        let b = one_col(&[1.0, 2.0, 4.0]);
        let w1 = wasserstein_utility(&a, &b, &mut SeededRng::new(3)).unwrap();
        let w2 = wasserstein_utility(&a, &b, &mut SeededRng::new(3)).unwrap();
        assert_eq!(w1.to_bits(), w2.to_bits());
    }

    proptest! {
        #[test]
        fn auc_is_invariant_under_exact_monotone_maps(
            raw in proptest::collection::vec(-100i32..=100, 2..40),
        ) {
            // Quarter-integer scores; x/8 + 3 is exact f64 arithmetic on
            // them, so the transform is strictly increasing with the same
            // tie pattern and the AUC must not move a single bit.
            let n = raw.len();
            let scores: Vec<f64> = raw.iter().map(|&v| v as f64 / 4.0).collect();
            let mut labels = vec![0u8; n];
            for (i, l) in labels.iter_mut().enumerate() {
                *l = (i % 2) as u8;
            }
            let mapped: Vec<f64> = scores.iter().map(|&s| s / 8.0 + 3.0).collect();
            let base = auc(&scores, &labels).unwrap();
            let moved = auc(&mapped, &labels).unwrap();
            prop_assert_eq!(base.to_bits(), moved.to_bits());
        }

        #[test]
        fn precision_at_one_is_the_base_rate_bitwise(
            raw in proptest::collection::vec((-20i32..=20, 0u8..=1), 2..50),
        ) {
            let mut scores: Vec<f64> = raw.iter().map(|&(v, _)| v as f64).collect();
            let mut labels: Vec<u8> = raw.iter().map(|&(_, l)| l).collect();
            labels[0] = 1;
            let last = labels.len() - 1;
            labels[last] = 0;
            scores[0] += 0.5;
            let curve = precision_quantile_curve(&scores, &labels, &DEFAULT_QUANTILES).unwrap();
            let ones = labels.iter().filter(|&&l| l == 1).count();
            let base_rate = ones as f64 / labels.len() as f64;
            prop_assert_eq!(curve.precision.last().unwrap().to_bits(), base_rate.to_bits());
            for &p in &curve.precision {
                prop_assert!((0.0..=1.0).contains(&p));
            }
        }

        #[test]
        fn accuracy_stays_in_range(
            raw in proptest::collection::vec((-20i32..=20, 0u8..=1), 4..40),
        ) {
            let scores: Vec<f64> = raw.iter().map(|&(v, _)| v as f64 / 2.0).collect();
            let mut labels: Vec<u8> = raw.iter().map(|&(_, l)| l).collect();
            labels[0] = 1;
            let last = labels.len() - 1;
            labels[last] = 0;
            let acc = accuracy_at_median(&scores, &labels).unwrap();
            prop_assert!((0.0..=1.0).contains(&acc));
        }

        #[test]
        fn wasserstein_is_a_metric_on_equal_size_samples(
            xs in proptest::collection::vec(-50.0f64..50.0, 6),
            ys in proptest::collection::vec(-50.0f64..50.0, 6),
            zs in proptest::collection::vec(-50.0f64..50.0, 6),
        ) {
            let a = one_col(&xs);
            let b = one_col(&ys);
            let c = one_col(&zs);
            let mut rng = SeededRng::new(0);
            let dab = wasserstein_utility(&a, &b, &mut rng).unwrap();
            let dba = wasserstein_utility(&b, &a, &mut rng).unwrap();
            let dac = wasserstein_utility(&a, &c, &mut rng).unwrap();
            let dcb = wasserstein_utility(&c, &b, &mut rng).unwrap();
            let daa = wasserstein_utility(&a, &a, &mut rng).unwrap();
            prop_assert!((dab - dba).abs() <= 1e-9);
            prop_assert_eq!(daa, 0.0);
            prop_assert!(dab <= dac + dcb + 1e-9);
            prop_assert!(dab >= 0.0);
        }
    }
}
