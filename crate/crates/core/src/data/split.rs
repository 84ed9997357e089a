//! Membership splits.
//!
//! The audit protocol needs four disjoint roles from one pool of rows: a
//! member set the generator trains on, a reference sample the attacker owns,
//! fresh non-members for the test set, and optionally a holdout for utility
//! measurement. Test rows are half members (copies of member rows, label 1)
//! and half fresh rows (label 0), shuffled.

use super::Dataset;
use crate::error::{AuditError, Result};
use crate::numcore::SeededRng;

#[derive(Debug, Clone)]
pub struct ExperimentSplit {
    pub d_mem: Dataset,
    pub d_ref: Dataset,
    pub d_test: Dataset,
    /// 1 = member, aligned with d_test rows.
    pub labels: Vec<u8>,
}

/// Equality test on one column; f64 equality is fine because group columns
/// hold small integer codes.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPredicate {
    pub column: String,
    pub equals: f64,
}

impl GroupPredicate {
    pub fn describe(&self) -> String {
        format!("{} == {}", self.column, self.equals)
    }

    pub fn matches(&self, dataset: &Dataset) -> Result<Vec<bool>> {
        let col = dataset.column_by_name(&self.column)?;
        Ok(col.iter().map(|&v| v == self.equals).collect())
    }
}

/// Membership bit per test row, 1 = row satisfies the predicate.
#[derive(Debug, Clone)]
pub struct SubgroupMask {
    pub bits: Vec<u8>,
    pub definition: String,
}

pub fn subgroup_mask(dataset: &Dataset, pred: &GroupPredicate) -> Result<SubgroupMask> {
    let bits = pred
        .matches(dataset)?
        .into_iter()
        .map(|b| b as u8)
        .collect();
    Ok(SubgroupMask {
        bits,
        definition: pred.describe(),
    })
}

fn check_sizes(n_mem: usize, n_ref: usize, n_test: usize) -> Result<usize> {
    if !n_test.is_multiple_of(2) {
        return Err(AuditError::Size(format!(
            "n_test must be even to hold 50% members, got {n_test}"
        )));
    }
    let half = n_test / 2;
    if half > n_mem {
        return Err(AuditError::Size(format!(
            "n_test/2 = {half} member test rows requested but only {n_mem} members"
        )));
    }
    if n_mem == 0 || n_ref == 0 || n_test == 0 {
        return Err(AuditError::Size(
            "n_mem, n_ref and n_test must all be positive".into(),
        ));
    }
    Ok(half)
}

/// Disjoint member/reference/test split from one pool.
pub fn make_split(
    data: &Dataset,
    n_mem: usize,
    n_ref: usize,
    n_test: usize,
    rng: &mut SeededRng,
) -> Result<ExperimentSplit> {
    let (split, _) = make_split_and_holdout(data, n_mem, n_ref, n_test, 0, rng)?;
    Ok(split)
}

/// Like `make_split` but also carves `n_holdout` rows, disjoint from every
/// other role, for utility measurement.
pub fn make_split_and_holdout(
    data: &Dataset,
    n_mem: usize,
    n_ref: usize,
    n_test: usize,
    n_holdout: usize,
    rng: &mut SeededRng,
) -> Result<(ExperimentSplit, Option<Dataset>)> {
    let half = check_sizes(n_mem, n_ref, n_test)?;
    let needed = n_mem + n_ref + half + n_holdout;
    if needed > data.n_rows() {
        return Err(AuditError::Size(format!(
            "split needs {} rows (n_mem {} + n_ref {} + n_test/2 {} + n_holdout {}), pool has {}",
            needed,
            n_mem,
            n_ref,
            half,
            n_holdout,
            data.n_rows()
        )));
    }
    let perm = rng.permutation(data.n_rows());
    let mem_idx = &perm[0..n_mem];
    let ref_idx = &perm[n_mem..n_mem + n_ref];
    let fresh_idx = &perm[n_mem + n_ref..n_mem + n_ref + half];
    let holdout_idx = &perm[n_mem + n_ref + half..needed];

    // The member block is already in random order, so its first rows are a
    // uniform draw for the test members.
    let test_members = &mem_idx[0..half];
    let split = assemble(data, mem_idx, ref_idx, test_members, fresh_idx, rng)?;
    let holdout = if n_holdout > 0 {
        Some(data.select_rows(holdout_idx)?)
    } else {
        None
    };
    Ok((split, holdout))
}

fn assemble(
    data: &Dataset,
    mem_idx: &[usize],
    ref_idx: &[usize],
    test_member_idx: &[usize],
    fresh_idx: &[usize],
    rng: &mut SeededRng,
) -> Result<ExperimentSplit> {
    let d_mem = data.select_rows(mem_idx)?;
    let d_ref = data.select_rows(ref_idx)?;
    let mut test: Vec<(usize, u8)> = test_member_idx.iter().map(|&i| (i, 1u8)).collect();
    test.extend(fresh_idx.iter().map(|&i| (i, 0u8)));
    rng.shuffle(&mut test);
    let test_rows: Vec<usize> = test.iter().map(|&(i, _)| i).collect();
    let labels: Vec<u8> = test.iter().map(|&(_, l)| l).collect();
    let d_test = data.select_rows(&test_rows)?;
    Ok(ExperimentSplit {
        d_mem,
        d_ref,
        d_test,
        labels,
    })
}

/// Reference set whose composition is shifted away from the members'
/// stratum: exactly round(p_group0 * n_ref) rows satisfy `shifted_group`,
/// the rest come from the complement. Rows are drawn without replacement and
/// the result is shuffled.
pub fn shifted_reference(
    pool: &Dataset,
    shifted_group: &GroupPredicate,
    p_group0: f64,
    n_ref: usize,
    rng: &mut SeededRng,
) -> Result<Dataset> {
    if !(0.0..=1.0).contains(&p_group0) {
        return Err(AuditError::Parameter(format!(
            "p_group0 must lie in [0, 1], got {p_group0}"
        )));
    }
    let matches = shifted_group.matches(pool)?;
    let idx0: Vec<usize> = (0..pool.n_rows()).filter(|&i| matches[i]).collect();
    let idx1: Vec<usize> = (0..pool.n_rows()).filter(|&i| !matches[i]).collect();
    let n0 = (p_group0 * n_ref as f64).round() as usize;
    let n1 = n_ref - n0;
    if n0 > idx0.len() {
        return Err(AuditError::Size(format!(
            "shifted reference needs {} rows with {}, pool stratum has {}",
            n0,
            shifted_group.describe(),
            idx0.len()
        )));
    }
    if n1 > idx1.len() {
        return Err(AuditError::Size(format!(
            "shifted reference needs {} rows outside {}, pool stratum has {}",
            n1,
            shifted_group.describe(),
            idx1.len()
        )));
    }
    let pick0 = rng.choose_without_replacement(idx0.len(), n0);
    let pick1 = rng.choose_without_replacement(idx1.len(), n1);
    let mut rows: Vec<usize> = pick0.iter().map(|&k| idx0[k]).collect();
    rows.extend(pick1.iter().map(|&k| idx1[k]));
    rng.shuffle(&mut rows);
    pool.select_rows(&rows)
}

#[derive(Debug, Clone, Copy)]
pub struct GroupedSizes {
    pub n_mem: usize,
    pub n_ref: usize,
    pub n_test: usize,
    pub n_holdout: usize,
}

/// Split for distribution-shift runs. Members come entirely from the
/// stratum NOT satisfying `shifted_group`; the reference and the non-member
/// half of the test set are stratified with expected fraction `p_group0`
/// from the shifted stratum. With p_group0 = 0 this is an ordinary audit
/// split restricted to the members' stratum, same code path, same draws.
pub fn make_shifted_split(
    data: &Dataset,
    shifted_group: &GroupPredicate,
    p_group0: f64,
    sizes: GroupedSizes,
    rng: &mut SeededRng,
) -> Result<(ExperimentSplit, Option<Dataset>)> {
    if !(0.0..=1.0).contains(&p_group0) {
        return Err(AuditError::Parameter(format!(
            "p_group0 must lie in [0, 1], got {p_group0}"
        )));
    }
    let half = check_sizes(sizes.n_mem, sizes.n_ref, sizes.n_test)?;
    let matches = shifted_group.matches(data)?;
    let all0: Vec<usize> = (0..data.n_rows()).filter(|&i| matches[i]).collect();
    let all1: Vec<usize> = (0..data.n_rows()).filter(|&i| !matches[i]).collect();

    // Both strata are permuted unconditionally so the stream of draws does
    // not depend on p_group0.
    let perm0 = rng.permutation(all0.len());
    let perm1 = rng.permutation(all1.len());
    let idx0: Vec<usize> = perm0.iter().map(|&k| all0[k]).collect();
    let idx1: Vec<usize> = perm1.iter().map(|&k| all1[k]).collect();

    let ref0 = (p_group0 * sizes.n_ref as f64).round() as usize;
    let ref1 = sizes.n_ref - ref0;
    let test0 = (p_group0 * half as f64).round() as usize;
    let test1 = half - test0;

    let need1 = sizes.n_mem + ref1 + test1 + sizes.n_holdout;
    if need1 > idx1.len() {
        return Err(AuditError::Size(format!(
            "members' stratum needs {} rows (n_mem {} + ref {} + test {} + holdout {}), has {}",
            need1,
            sizes.n_mem,
            ref1,
            test1,
            sizes.n_holdout,
            idx1.len()
        )));
    }
    let need0 = ref0 + test0;
    if need0 > idx0.len() {
        return Err(AuditError::Size(format!(
            "shifted stratum ({}) needs {} rows, has {}",
            shifted_group.describe(),
            need0,
            idx0.len()
        )));
    }

    let mem_idx = &idx1[0..sizes.n_mem];
    let mut cursor1 = sizes.n_mem;
    let ref_idx: Vec<usize> = idx1[cursor1..cursor1 + ref1]
        .iter()
        .chain(idx0[0..ref0].iter())
        .copied()
        .collect();
    cursor1 += ref1;
    let fresh_idx: Vec<usize> = idx1[cursor1..cursor1 + test1]
        .iter()
        .chain(idx0[ref0..ref0 + test0].iter())
        .copied()
        .collect();
    cursor1 += test1;
    let holdout_idx = &idx1[cursor1..cursor1 + sizes.n_holdout];

    let mut ref_shuffled = ref_idx;
    rng.shuffle(&mut ref_shuffled);
    let mut fresh_shuffled = fresh_idx;
    rng.shuffle(&mut fresh_shuffled);

    let test_members = &mem_idx[0..half];
    let split = assemble(data, mem_idx, &ref_shuffled, test_members, &fresh_shuffled, rng)?;
    let holdout = if sizes.n_holdout > 0 {
        Some(data.select_rows(holdout_idx)?)
    } else {
        None
    };
    Ok((split, holdout))
}
