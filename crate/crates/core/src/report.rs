//! Comparison report (JSON) and plot-ready CSV tables.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::csvio::{csv_err, finish, fmt_f64, writer};
use crate::data::{AbilityEstimate, ItemParams2PL, ResponseMatrix};
use crate::error::{Error, Result};
use crate::irt::prob_2pl;
use crate::stats::{compare_calibrations, pearson, ComparisonSummary, CttItem, CttTable, StatComparison};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemStats {
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub proportion_correct: Option<f64>,
    pub item_total_r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemRow {
    pub item_id: String,
    pub excluded: bool,
    pub reference: ItemStats,
    pub estimate: ItemStats,
}

/// Pair of values for the reference and the estimated calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sides<X> {
    pub reference: X,
    pub estimate: X,
}

/// Sample description; `sd` uses the n - 1 denominator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Describe {
    pub n: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub median: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

impl Describe {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                n,
                mean: None,
                sd: None,
                median: None,
                min: None,
                max: None,
            };
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = (n > 1).then(|| (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt());
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        Self {
            n,
            mean: Some(mean),
            sd,
            median: Some(median),
            min: sorted.first().copied(),
            max: sorted.last().copied(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Descriptives {
    pub theta: Describe,
    pub a: Describe,
    pub b: Describe,
    pub proportion_correct: Describe,
    pub item_total_r: Describe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSummary {
    pub mean_score: f64,
    pub sd_score: f64,
    pub cronbach_alpha: f64,
    pub corrected_item_total: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatRow {
    pub n: usize,
    pub bias: Option<f64>,
    pub rmse: Option<f64>,
    pub spearman: Option<f64>,
}

impl From<&StatComparison<f64>> for StatRow {
    fn from(s: &StatComparison<f64>) -> Self {
        Self {
            n: s.n,
            bias: s.bias,
            rmse: s.rmse,
            spearman: s.spearman,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub excluded_ids: Vec<String>,
    pub theta: StatRow,
    pub a: StatRow,
    pub b: StatRow,
    pub proportion_correct: StatRow,
    pub item_total_r: StatRow,
}

impl From<&ComparisonSummary<f64>> for Summary {
    fn from(c: &ComparisonSummary<f64>) -> Self {
        Self {
            excluded_ids: c.excluded_ids.clone(),
            theta: (&c.theta).into(),
            a: (&c.a).into(),
            b: (&c.b).into(),
            proportion_correct: (&c.proportion_correct).into(),
            item_total_r: (&c.item_total_r).into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub per_item: Vec<ItemRow>,
    pub descriptives: Sides<Descriptives>,
    pub test: Sides<TestSummary>,
    pub summary: Summary,
    /// Correlation of estimated abilities with the zeroed-vocabulary share.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ability_vs_zeroed_r: Option<f64>,
}

fn item_stats(params: Option<&ItemParams2PL<f64>>, ctt: Option<&CttItem<f64>>) -> ItemStats {
    ItemStats {
        a: params.map(|p| p.a),
        b: params.map(|p| p.b),
        proportion_correct: ctt.map(|c| c.proportion_correct),
        item_total_r: ctt.and_then(|c| c.item_total_r),
    }
}

fn descriptives(params: &[ItemParams2PL<f64>], ctt: &CttTable<f64>, thetas: &[AbilityEstimate<f64>]) -> Descriptives {
    let collect = |v: Vec<f64>| Describe::of(&v);
    Descriptives {
        theta: collect(thetas.iter().map(|t| t.theta).collect()),
        a: collect(params.iter().map(|p| p.a).collect()),
        b: collect(params.iter().map(|p| p.b).collect()),
        proportion_correct: collect(ctt.items.iter().map(|c| c.proportion_correct).collect()),
        item_total_r: collect(ctt.items.iter().filter_map(|c| c.item_total_r).collect()),
    }
}

fn test_summary(ctt: &CttTable<f64>) -> TestSummary {
    TestSummary {
        mean_score: ctt.mean_score,
        sd_score: ctt.sd_score,
        cronbach_alpha: ctt.cronbach_alpha,
        corrected_item_total: ctt.corrected,
    }
}

/// Assembles the full report. Item rows follow the reference parameter order.
pub fn build_report(
    params_ref: &[ItemParams2PL<f64>],
    params_est: &[ItemParams2PL<f64>],
    ctt_ref: &CttTable<f64>,
    ctt_est: &CttTable<f64>,
    thetas_ref: &[AbilityEstimate<f64>],
    thetas_est: &[AbilityEstimate<f64>],
    exclude: &[String],
) -> Result<Report> {
    let comparison = compare_calibrations(
        params_ref, params_est, ctt_ref, ctt_est, thetas_ref, thetas_est, exclude,
    )?;
    let excluded: HashSet<&str> = exclude.iter().map(String::as_str).collect();
    let est: HashMap<&str, &ItemParams2PL<f64>> = params_est.iter().map(|p| (p.item_id.as_str(), p)).collect();
    let ctt_r: HashMap<&str, _> = ctt_ref.items.iter().map(|c| (c.item_id.as_str(), c)).collect();
    let ctt_e: HashMap<&str, _> = ctt_est.items.iter().map(|c| (c.item_id.as_str(), c)).collect();
    let per_item = params_ref
        .iter()
        .map(|p| {
            let id = p.item_id.as_str();
            ItemRow {
                item_id: p.item_id.clone(),
                excluded: excluded.contains(id),
                reference: item_stats(Some(p), ctt_r.get(id).copied()),
                estimate: item_stats(est.get(id).copied(), ctt_e.get(id).copied()),
            }
        })
        .collect();
    Ok(Report {
        per_item,
        descriptives: Sides {
            reference: descriptives(params_ref, ctt_ref, thetas_ref),
            estimate: descriptives(params_est, ctt_est, thetas_est),
        },
        test: Sides {
            reference: test_summary(ctt_ref),
            estimate: test_summary(ctt_est),
        },
        summary: (&comparison).into(),
        ability_vs_zeroed_r: None,
    })
}

/// Pearson correlation between abilities and `1 - retention`, matched by examinee.
pub fn ability_vs_zeroed(thetas: &[AbilityEstimate<f64>], examinee_ids: &[String], retention: &[f64]) -> Option<f64> {
    let by_id: HashMap<&str, f64> = thetas.iter().map(|t| (t.examinee_id.as_str(), t.theta)).collect();
    let (t, z): (Vec<f64>, Vec<f64>) = examinee_ids
        .iter()
        .zip(retention)
        .filter_map(|(id, r)| by_id.get(id.as_str()).map(|&t| (t, 1.0 - r)))
        .unzip();
    pearson(&t, &z)
}

pub fn write_report(path: impl AsRef<Path>, report: &Report) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(report).map_err(|e| Error::parse(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_report(path: impl AsRef<Path>) -> Result<Report> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e))
}

/// Test score against retained-vocabulary share, one row per examinee.
pub fn write_retention_scores(path: impl AsRef<Path>, responses: &ResponseMatrix) -> Result<()> {
    let path = path.as_ref();
    let retention = responses
        .retention()
        .ok_or_else(|| Error::Validation("responses carry no retention values".into()))?;
    let k = responses.n_items() as f64;
    let mut w = writer(path)?;
    w.write_record(["examinee_id", "retention", "score"])
        .map_err(|e| csv_err(path, e))?;
    for ((id, r), total) in responses
        .examinee_ids()
        .iter()
        .zip(retention)
        .zip(responses.total_scores())
    {
        w.write_record([id.as_str(), &fmt_f64(*r), &fmt_f64(f64::from(total) / k)])
            .map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

/// Item response functions of both calibrations on a theta grid from -4 to 4
/// in steps of 0.1, items ordered by reference difficulty.
pub fn write_item_curves(
    path: impl AsRef<Path>,
    params_ref: &[ItemParams2PL<f64>],
    params_est: &[ItemParams2PL<f64>],
    scaling_d: f64,
) -> Result<()> {
    let path = path.as_ref();
    let est: HashMap<&str, &ItemParams2PL<f64>> = params_est.iter().map(|p| (p.item_id.as_str(), p)).collect();
    let mut order: Vec<&ItemParams2PL<f64>> = params_ref.iter().collect();
    order.sort_by(|x, y| x.b.total_cmp(&y.b).then_with(|| x.item_id.cmp(&y.item_id)));
    let mut w = writer(path)?;
    w.write_record(["item_id", "theta", "p_reference", "p_estimate"])
        .map_err(|e| csv_err(path, e))?;
    for r in order {
        let e = est
            .get(r.item_id.as_str())
            .ok_or_else(|| Error::MissingParams(r.item_id.clone()))?;
        for step in -40..=40 {
            let theta = f64::from(step) / 10.0;
            w.write_record([
                r.item_id.as_str(),
                &fmt_f64(theta),
                &fmt_f64(prob_2pl(theta, r.a, r.b, scaling_d)),
                &fmt_f64(prob_2pl(theta, e.a, e.b, scaling_d)),
            ])
            .map_err(|e| csv_err(path, e))?;
        }
    }
    finish(path, w)
}

/// Ability estimates under both calibrations, matched by examinee.
pub fn write_theta_pairs(
    path: impl AsRef<Path>,
    thetas_ref: &[AbilityEstimate<f64>],
    thetas_est: &[AbilityEstimate<f64>],
) -> Result<()> {
    let path = path.as_ref();
    let est: HashMap<&str, f64> = thetas_est.iter().map(|t| (t.examinee_id.as_str(), t.theta)).collect();
    let mut w = writer(path)?;
    w.write_record(["examinee_id", "theta_reference", "theta_estimate"])
        .map_err(|e| csv_err(path, e))?;
    for r in thetas_ref {
        if let Some(&e) = est.get(r.examinee_id.as_str()) {
            w.write_record([r.examinee_id.as_str(), &fmt_f64(r.theta), &fmt_f64(e)])
                .map_err(|e| csv_err(path, e))?;
        }
    }
    finish(path, w)
}

#[derive(Serialize, Deserialize)]
struct CttFileItem {
    item_id: String,
    proportion_correct: f64,
    item_total_r: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct CttFile {
    items: Vec<CttFileItem>,
    cronbach_alpha: f64,
    mean_score: f64,
    sd_score: f64,
    corrected: bool,
}

pub fn write_ctt(path: impl AsRef<Path>, table: &CttTable<f64>) -> Result<()> {
    let path = path.as_ref();
    let file = CttFile {
        items: table
            .items
            .iter()
            .map(|c| CttFileItem {
                item_id: c.item_id.clone(),
                proportion_correct: c.proportion_correct,
                item_total_r: c.item_total_r,
            })
            .collect(),
        cronbach_alpha: table.cronbach_alpha,
        mean_score: table.mean_score,
        sd_score: table.sd_score,
        corrected: table.corrected,
    };
    let mut text = serde_json::to_string_pretty(&file).map_err(|e| Error::parse(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_ctt(path: impl AsRef<Path>) -> Result<CttTable<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: CttFile = serde_json::from_str(&text).map_err(|e| Error::parse(path, e))?;
    Ok(CttTable {
        items: file
            .items
            .into_iter()
            .map(|c| CttItem {
                item_id: c.item_id,
                proportion_correct: c.proportion_correct,
                item_total_r: c.item_total_r,
            })
            .collect(),
        cronbach_alpha: file.cronbach_alpha,
        mean_score: file.mean_score,
        sd_score: file.sd_score,
        corrected: file.corrected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctt(p: &[f64]) -> CttTable<f64> {
        CttTable {
            items: p
                .iter()
                .enumerate()
                .map(|(j, &p)| CttItem {
                    item_id: format!("i{j}"),
                    proportion_correct: p,
                    item_total_r: (j != 1).then_some(0.3 + 0.1 * j as f64),
                })
                .collect(),
            cronbach_alpha: 0.8,
            mean_score: 0.5,
            sd_score: 0.2,
            corrected: true,
        }
    }

    #[test]
    fn describe_odd_and_even() {
        let d = Describe::of(&[3.0, 1.0, 2.0]);
        assert_eq!((d.median, d.min, d.max), (Some(2.0), Some(1.0), Some(3.0)));
        assert_eq!(d.sd, Some(1.0));
        assert_eq!(Describe::of(&[1.0, 2.0, 3.0, 10.0]).median, Some(2.5));
        assert_eq!(Describe::of(&[]).mean, None);
    }

    #[test]
    fn report_json_round_trips() {
        let params: Vec<_> = (0..4)
            .map(|j| ItemParams2PL::new(format!("i{j}"), 0.5 + 0.1 * j as f64, -1.0 + j as f64))
            .collect();
        let mut est = params.clone();
        est[3].b = 9.0;
        let thetas: Vec<_> = (0..5)
            .map(|i| AbilityEstimate {
                examinee_id: format!("E{i}"),
                theta: i as f64 * 0.5,
                se: None,
            })
            .collect();
        let report = build_report(
            &params,
            &est,
            &ctt(&[0.2, 0.4, 0.6, 0.8]),
            &ctt(&[0.25, 0.35, 0.65, 0.7]),
            &thetas,
            &thetas,
            &["i3".to_string()],
        )
        .unwrap();
        assert!(report.per_item[3].excluded);
        assert_eq!(report.summary.excluded_ids, vec!["i3".to_string()]);
        assert_eq!(report.summary.b.bias, Some(0.0));
        assert_eq!(report.summary.proportion_correct.bias, None);
        // item i1 has no item-total correlation on either side
        assert_eq!(report.summary.item_total_r.n, 2);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        write_report(&path, &report).unwrap();
        assert_eq!(read_report(&path).unwrap(), report);
    }

    #[test]
    fn ctt_file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ctt.json");
        let table = ctt(&[0.1, 0.5, 0.9]);
        write_ctt(&path, &table).unwrap();
        assert_eq!(read_ctt(&path).unwrap(), table);
    }
}
