use crate::data::ResponseMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct CttItem<T> {
    pub item_id: String,
    pub proportion_correct: T,
    /// `None` when the item or the total has no variance.
    pub item_total_r: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CttTable<T> {
    pub items: Vec<CttItem<T>>,
    pub cronbach_alpha: T,
    /// Mean of per-examinee proportion-correct scores.
    pub mean_score: T,
    /// Population SD of per-examinee proportion-correct scores.
    pub sd_score: T,
    /// Whether item-total correlations exclude the item from the total.
    pub corrected: bool,
}

/// Pearson correlation; `None` if either input has zero variance.
pub fn pearson<T: Scalar>(x: &[T], y: &[T]) -> Option<T> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = T::from_count(x.len());
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy = sxy + da * db;
        sxx = sxx + da * da;
        syy = syy + db * db;
    }
    if sxx <= T::zero() || syy <= T::zero() {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).max(-T::one()).min(T::one()))
}

fn column<T: Scalar>(responses: &ResponseMatrix, item: usize) -> Vec<T> {
    responses
        .scored_column(item)
        .map(|u| if u == 1 { T::one() } else { T::zero() })
        .collect()
}

fn population_variance<T: Scalar>(v: &[T]) -> T {
    let n = T::from_count(v.len());
    let mean = v.iter().copied().sum::<T>() / n;
    v.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / n
}

pub fn proportion_correct<T: Scalar>(responses: &ResponseMatrix) -> Vec<T> {
    let n = T::from_count(responses.n_examinees());
    (0..responses.n_items())
        .map(|j| column::<T>(responses, j).into_iter().sum::<T>() / n)
        .collect()
}

/// Item-total correlation per item. With `corrected` the item is removed
/// from the total (rest score).
pub fn item_total_correlation<T: Scalar>(responses: &ResponseMatrix, corrected: bool) -> Vec<Option<T>> {
    let totals: Vec<T> = responses
        .total_scores()
        .into_iter()
        .map(|t| T::from_count(t as usize))
        .collect();
    (0..responses.n_items())
        .map(|j| {
            let item = column::<T>(responses, j);
            let other: Vec<T> = if corrected {
                totals.iter().zip(&item).map(|(&t, &u)| t - u).collect()
            } else {
                totals.clone()
            };
            pearson(&item, &other)
        })
        .collect()
}

/// `k/(k-1) * (1 - sum item variances / total variance)` with 1/n variances.
pub fn cronbach_alpha<T: Scalar>(responses: &ResponseMatrix) -> Result<T> {
    let k = responses.n_items();
    if k < 2 {
        return Err(Error::Undefined("Cronbach's alpha needs at least 2 items".into()));
    }
    let totals: Vec<T> = responses
        .total_scores()
        .into_iter()
        .map(|t| T::from_count(t as usize))
        .collect();
    let total_var = population_variance(&totals);
    if total_var <= T::zero() {
        return Err(Error::Undefined("total score has zero variance".into()));
    }
    let item_var: T = (0..k).map(|j| population_variance(&column::<T>(responses, j))).sum();
    let kf = T::from_count(k);
    Ok(kf / (kf - T::one()) * (T::one() - item_var / total_var))
}

pub fn ctt_table<T: Scalar>(responses: &ResponseMatrix, corrected: bool) -> Result<CttTable<T>> {
    if responses.n_examinees() == 0 {
        return Err(Error::Undefined("no examinees".into()));
    }
    let p = proportion_correct::<T>(responses);
    let r = item_total_correlation::<T>(responses, corrected);
    let k = T::from_count(responses.n_items());
    let scores: Vec<T> = responses
        .total_scores()
        .into_iter()
        .map(|t| T::from_count(t as usize) / k)
        .collect();
    let n = T::from_count(scores.len());
    let mean_score = scores.iter().copied().sum::<T>() / n;
    Ok(CttTable {
        items: responses
            .item_ids()
            .iter()
            .zip(p)
            .zip(r)
            .map(|((id, p), r)| CttItem {
                item_id: id.clone(),
                proportion_correct: p,
                item_total_r: r,
            })
            .collect(),
        cronbach_alpha: cronbach_alpha(responses)?,
        mean_score,
        sd_score: population_variance(&scores).sqrt(),
        corrected,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::data::{Item, ItemBank};

    fn matrix(rows: &[&[u8]]) -> ResponseMatrix {
        let k = rows[0].len();
        let items = (0..k)
            .map(|j| Item::new(format!("i{j}"), "s", vec!["x".into(), "y".into()], 0))
            .collect();
        let bank = ItemBank::new(items, BTreeMap::new()).unwrap();
        let ids = (0..rows.len()).map(|i| format!("e{i}")).collect();
        ResponseMatrix::from_scored(&bank, ids, rows.concat()).unwrap()
    }

    #[test]
    fn proportions_of_constant_columns() {
        let m = matrix(&[&[1, 0, 1], &[1, 0, 0]]);
        assert_eq!(proportion_correct::<f64>(&m), vec![1.0, 0.0, 0.5]);
    }

    #[test]
    fn hand_computed_rest_correlation() {
        // item 1 = (1,1,1,0), rest scores (2,1,0,0): r = 0.75 / sqrt(0.75 * 2.75) = sqrt(3/11)
        let m = matrix(&[&[1, 1, 1], &[1, 1, 0], &[1, 0, 0], &[0, 0, 0]]);
        let r = item_total_correlation::<f64>(&m, true);
        assert!((r[0].unwrap() - (3.0f64 / 11.0).sqrt()).abs() < 1e-12);
        // uncorrected: totals (3,2,1,0) -> r = 0.75*... computed by hand: sqrt(0.6)
        let u = item_total_correlation::<f64>(&m, false);
        assert!((u[0].unwrap() - 0.6f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn identical_items_correlate_perfectly() {
        let m = matrix(&[&[1, 1], &[0, 0], &[1, 1], &[0, 0], &[1, 1]]);
        let r = item_total_correlation::<f64>(&m, true);
        assert!((r[0].unwrap() - 1.0).abs() < 1e-12);
        assert!((cronbach_alpha::<f64>(&m).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn duplicated_columns_give_unit_alpha_for_any_k() {
        let base = [1u8, 0, 1, 1, 0, 0, 1];
        for k in 2..7 {
            let rows: Vec<Vec<u8>> = base.iter().map(|&u| vec![u; k]).collect();
            let refs: Vec<&[u8]> = rows.iter().map(Vec::as_slice).collect();
            assert!((cronbach_alpha::<f64>(&matrix(&refs)).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_variance_item_is_missing() {
        let m = matrix(&[&[1, 1, 0], &[1, 0, 0], &[1, 1, 1]]);
        let r = item_total_correlation::<f64>(&m, true);
        assert!(r[0].is_none());
        assert!(r[1].is_some());
    }

    #[test]
    fn zero_total_variance_is_an_error() {
        let m = matrix(&[&[1, 0], &[0, 1]]);
        assert!(matches!(cronbach_alpha::<f64>(&m), Err(Error::Undefined(_))));
    }

    #[test]
    fn ctt_table_score_moments() {
        let m = matrix(&[&[1, 1], &[1, 0], &[0, 0], &[1, 1]]);
        let t = ctt_table::<f64>(&m, true).unwrap();
        // scores 1, .5, 0, 1
        assert!((t.mean_score - 0.625).abs() < 1e-15);
        assert!((t.sd_score - (0.171_875f64).sqrt()).abs() < 1e-15);
        assert_eq!(t.items.len(), 2);
    }
}
