//! Statistical properties of the CTT and comparison routines on simulated data.

use std::collections::BTreeMap;

use fieldcal::data::{AbilityEstimate, EngineConfig, Item, ItemBank, ItemParams2PL, ResponseMatrix};
use fieldcal::irt::fit_2pl_mml;
use fieldcal::simulate::{gen_responses_2pl, reference_bank};
use fieldcal::stats::{compare_calibrations, cronbach_alpha, ctt_table, item_total_correlation, CttTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn binary_bank(k: usize) -> ItemBank {
    let items = (0..k)
        .map(|j| Item::new(format!("i{j}"), "s", vec!["yes".into(), "no".into()], 0))
        .collect();
    ItemBank::new(items, BTreeMap::new()).unwrap()
}

fn independent_items(n: usize, k: usize, seed: u64) -> ResponseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scored = (0..n * k).map(|_| u8::from(rng.random::<bool>())).collect();
    ResponseMatrix::from_scored(&binary_bank(k), (0..n).map(|i| format!("e{i}")).collect(), scored).unwrap()
}

fn thetas(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

#[test]
fn independent_items_have_no_internal_consistency() {
    let m = independent_items(100_000, 10, 1);
    for r in item_total_correlation::<f64>(&m, true) {
        assert!(r.unwrap().abs() <= 0.02);
    }
    assert!(cronbach_alpha::<f64>(&m).unwrap().abs() <= 0.05);
}

#[test]
fn self_inclusion_inflates_item_total_correlation() {
    let (bank, params) = reference_bank(29).unwrap();
    let m = gen_responses_2pl(&thetas(3000, 2), &params, &bank, 1.7, 3).unwrap();
    let corrected = item_total_correlation::<f64>(&m, true);
    let raw = item_total_correlation::<f64>(&m, false);
    for (c, r) in corrected.iter().zip(&raw) {
        assert!(r.unwrap() >= c.unwrap());
    }
}

fn abilities(values: &[f64]) -> Vec<AbilityEstimate<f64>> {
    values
        .iter()
        .enumerate()
        .map(|(i, &theta)| AbilityEstimate {
            examinee_id: format!("E{i}"),
            theta,
            se: None,
        })
        .collect()
}

fn simulated_ctt(params: &[ItemParams2PL<f64>], seed: u64) -> CttTable<f64> {
    let (bank, _) = reference_bank(params.len()).unwrap();
    let m = gen_responses_2pl(&thetas(2000, seed), params, &bank, 1.7, seed + 1).unwrap();
    ctt_table(&m, true).unwrap()
}

#[test]
fn identical_calibrations_agree_perfectly() {
    let (_, params) = reference_bank(29).unwrap();
    let ctt = simulated_ctt(&params, 10);
    let t = abilities(&thetas(200, 11));
    let s = compare_calibrations(&params, &params, &ctt, &ctt, &t, &t, &[]).unwrap();
    for row in [&s.theta, &s.a, &s.b] {
        assert_eq!(row.bias, Some(0.0));
        assert_eq!(row.rmse, Some(0.0));
        assert!((row.spearman.unwrap() - 1.0).abs() < 1e-12);
    }
    for row in [&s.proportion_correct, &s.item_total_r] {
        assert_eq!((row.bias, row.rmse), (None, None));
        assert!((row.spearman.unwrap() - 1.0).abs() < 1e-12);
    }
    assert!(s.excluded_ids.is_empty());
}

#[test]
fn excluding_an_extreme_difficulty_lowers_rmse() {
    let (_, reference) = reference_bank(29).unwrap();
    let mut estimate = reference.clone();
    for (j, p) in estimate.iter_mut().enumerate() {
        p.b += if j % 2 == 0 { 0.2 } else { -0.15 };
    }
    estimate[21].b = 22.55;
    let ctt = simulated_ctt(&reference, 20);
    let t = abilities(&[0.0, 1.0, 2.0]);
    let all = compare_calibrations(&reference, &estimate, &ctt, &ctt, &t, &t, &[]).unwrap();
    let trimmed = compare_calibrations(&reference, &estimate, &ctt, &ctt, &t, &t, &["item22".to_string()]).unwrap();
    assert!(trimmed.b.rmse.unwrap() < all.b.rmse.unwrap());
    assert_eq!(trimmed.excluded_ids, vec!["item22".to_string()]);
    assert_eq!(trimmed.b.n, 28);
}

#[test]
fn exclusion_of_everything_is_an_error() {
    let (_, params) = reference_bank(3).unwrap();
    let ctt = simulated_ctt(&params, 30);
    let ids: Vec<String> = params.iter().map(|p| p.item_id.clone()).collect();
    assert!(compare_calibrations(&params, &params, &ctt, &ctt, &[], &[], &ids).is_err());
}

#[test]
fn replicate_calibrations_rank_discriminations_alike() {
    let (bank, params) = reference_bank(29).unwrap();
    let cfg = EngineConfig::default();
    let fit = |seed: u64| {
        let m = gen_responses_2pl(&thetas(5000, seed), &params, &bank, 1.7, seed + 1).unwrap();
        (
            fit_2pl_mml::<f64>(&m, &cfg).unwrap(),
            ctt_table::<f64>(&m, true).unwrap(),
        )
    };
    let (f1, c1) = fit(40);
    let (f2, c2) = fit(50);
    let s = compare_calibrations(&f1.params, &f2.params, &c1, &c2, &[], &[], &[]).unwrap();
    assert!(s.a.spearman.unwrap() >= 0.95, "{:?}", s.a);
}
