use std::collections::{HashMap, HashSet};

use super::ctt::{pearson, CttTable};
use crate::data::{AbilityEstimate, ItemParams2PL};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn check_pairs<T: Scalar>(est: &[T], reference: &[T]) -> Result<()> {
    if est.len() != reference.len() {
        return Err(Error::LengthMismatch {
            left: est.len(),
            right: reference.len(),
        });
    }
    if est.is_empty() {
        return Err(Error::Undefined("no pairs to compare".into()));
    }
    if est.iter().chain(reference).any(|v| !v.is_finite()) {
        return Err(Error::Validation("non-finite value in comparison".into()));
    }
    Ok(())
}

/// Mean of `est - reference`.
pub fn bias<T: Scalar>(est: &[T], reference: &[T]) -> Result<T> {
    check_pairs(est, reference)?;
    let sum: T = est.iter().zip(reference).map(|(&e, &r)| e - r).sum();
    Ok(sum / T::from_count(est.len()))
}

/// Root mean squared difference.
pub fn rmse<T: Scalar>(est: &[T], reference: &[T]) -> Result<T> {
    check_pairs(est, reference)?;
    let sum: T = est.iter().zip(reference).map(|(&e, &r)| (e - r) * (e - r)).sum();
    Ok((sum / T::from_count(est.len())).sqrt())
}

/// 1-based ranks with ties replaced by the mean of the ranks they span.
pub fn average_ranks<T: Scalar>(x: &[T]) -> Vec<T> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&i, &j| x[i].partial_cmp(&x[j]).expect("finite values"));
    let mut ranks = vec![T::zero(); x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] == x[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = T::from_count(start + 1 + end) / T::lit(2.0);
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman correlation: Pearson correlation of average ranks.
pub fn spearman<T: Scalar>(x: &[T], y: &[T]) -> Result<T> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::Undefined("Spearman correlation needs at least 2 pairs".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Validation("non-finite value in Spearman correlation".into()));
    }
    pearson(&average_ranks(x), &average_ranks(y))
        .ok_or_else(|| Error::Undefined("constant input to Spearman correlation".into()))
}

/// Agreement between two calibrations on one statistic. Bias is
/// `estimate - reference`.
#[derive(Debug, Clone, PartialEq)]
pub struct StatComparison<T> {
    /// Number of pairs with both sides defined.
    pub n: usize,
    pub bias: Option<T>,
    pub rmse: Option<T>,
    pub spearman: Option<T>,
}

impl<T: Scalar> StatComparison<T> {
    fn build(est: &[T], reference: &[T], with_error_metrics: bool) -> Self {
        let metric = |r: Result<T>| if with_error_metrics { r.ok() } else { None };
        Self {
            n: est.len(),
            bias: metric(bias(est, reference)),
            rmse: metric(rmse(est, reference)),
            spearman: spearman(est, reference).ok(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonSummary<T> {
    pub theta: StatComparison<T>,
    pub a: StatComparison<T>,
    pub b: StatComparison<T>,
    /// Bias and RMSE are withheld for the CTT rows.
    pub proportion_correct: StatComparison<T>,
    pub item_total_r: StatComparison<T>,
    pub excluded_ids: Vec<String>,
}

/// Compares a reference calibration (`*_ref`) with an estimate (`*_est`).
///
/// Item rows are matched by id after removing `exclude`; ability rows are
/// matched by examinee id. Items whose statistic is undefined on either side
/// are left out of that row only.
#[allow(clippy::too_many_arguments)]
pub fn compare_calibrations<T: Scalar>(
    params_ref: &[ItemParams2PL<T>],
    params_est: &[ItemParams2PL<T>],
    ctt_ref: &CttTable<T>,
    ctt_est: &CttTable<T>,
    thetas_ref: &[AbilityEstimate<T>],
    thetas_est: &[AbilityEstimate<T>],
    exclude: &[String],
) -> Result<ComparisonSummary<T>> {
    let excluded: HashSet<&str> = exclude.iter().map(String::as_str).collect();
    let est_params: HashMap<&str, &ItemParams2PL<T>> = params_est.iter().map(|p| (p.item_id.as_str(), p)).collect();
    let pairs: Vec<(&ItemParams2PL<T>, &ItemParams2PL<T>)> = params_ref
        .iter()
        .filter(|p| !excluded.contains(p.item_id.as_str()))
        .filter_map(|r| est_params.get(r.item_id.as_str()).map(|e| (r, *e)))
        .collect();
    if pairs.is_empty() {
        return Err(Error::Validation("no common items remain after exclusion".into()));
    }
    let ids: Vec<&str> = pairs.iter().map(|(r, _)| r.item_id.as_str()).collect();
    let unzip = |f: fn(&ItemParams2PL<T>) -> T| -> (Vec<T>, Vec<T>) { pairs.iter().map(|(r, e)| (f(e), f(r))).unzip() };
    let (a_est, a_ref) = unzip(|p| p.a);
    let (b_est, b_ref) = unzip(|p| p.b);

    let ctt_pairs = |f: &dyn Fn(&super::ctt::CttItem<T>) -> Option<T>| -> (Vec<T>, Vec<T>) {
        let est: HashMap<&str, _> = ctt_est.items.iter().map(|c| (c.item_id.as_str(), c)).collect();
        let reference: HashMap<&str, _> = ctt_ref.items.iter().map(|c| (c.item_id.as_str(), c)).collect();
        ids.iter()
            .filter_map(|id| {
                let e = est.get(id).and_then(|c| f(c))?;
                let r = reference.get(id).and_then(|c| f(c))?;
                Some((e, r))
            })
            .unzip()
    };
    let (p_est, p_ref) = ctt_pairs(&|c| Some(c.proportion_correct));
    let (r_est, r_ref) = ctt_pairs(&|c| c.item_total_r);

    let est_theta: HashMap<&str, T> = thetas_est.iter().map(|t| (t.examinee_id.as_str(), t.theta)).collect();
    let (t_est, t_ref): (Vec<T>, Vec<T>) = thetas_ref
        .iter()
        .filter_map(|r| est_theta.get(r.examinee_id.as_str()).map(|&e| (e, r.theta)))
        .unzip();

    let mut excluded_ids: Vec<String> = exclude.to_vec();
    excluded_ids.sort();
    excluded_ids.dedup();
    Ok(ComparisonSummary {
        theta: StatComparison::build(&t_est, &t_ref, true),
        a: StatComparison::build(&a_est, &a_ref, true),
        b: StatComparison::build(&b_est, &b_ref, true),
        proportion_correct: StatComparison::build(&p_est, &p_ref, false),
        item_total_r: StatComparison::build(&r_est, &r_ref, false),
        excluded_ids,
    })
}
