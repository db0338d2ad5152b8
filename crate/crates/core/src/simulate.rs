//! Synthetic examinee populations and response generation.
//!
//! The vocabulary-ablation manipulation is modelled by a linear link from the
//! retained-vocabulary proportion to ability, `theta = alpha + beta * p + eps`,
//! after which the correct option follows the 2PL under reference parameters
//! and the remaining mass is spread evenly over the distractors.
//!
//! Every generator uses a single ChaCha8 stream seeded from a `u64` and
//! consumes it in a fixed order (examinee-major, then canonical item order),
//! so any cell can be reproduced from the seed alone.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::Value;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{Item, ItemBank, ItemParams2PL, OptionProbMatrix, ResponseMatrix};
use crate::error::{Error, Result};
use crate::irt::prob_2pl;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateConfig {
    /// Ability at zero retained vocabulary.
    pub alpha: f64,
    /// Ability gained per unit of retained vocabulary.
    pub beta: f64,
    pub sigma_eps: f64,
    /// Lower clamp on the correct-option probability; 0 disables it.
    pub guess_floor: f64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        Self {
            alpha: -1.89,
            beta: 3.2,
            sigma_eps: 0.548,
            guess_floor: 0.0,
        }
    }
}

impl SurrogateConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Config(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.sigma_eps >= 0.0 && self.sigma_eps.is_finite()) {
            return Err(Error::Config(format!("sigma_eps must be >= 0, got {}", self.sigma_eps)));
        }
        if !(0.0..=1.0).contains(&self.guess_floor) {
            return Err(Error::Config(format!(
                "guess_floor must be in [0, 1], got {}",
                self.guess_floor
            )));
        }
        if !self.alpha.is_finite() {
            return Err(Error::Config("alpha must be finite".into()));
        }
        Ok(())
    }

    /// Population correlation between ability and the zeroed proportion `1 - p`.
    pub fn implied_zeroed_correlation(&self) -> f64 {
        let sd_p = (1.0f64 / 12.0).sqrt();
        -self.beta * sd_p / (self.beta * self.beta * sd_p * sd_p + self.sigma_eps * self.sigma_eps).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExamineeProfile {
    pub id: String,
    /// Proportion of vocabulary retained, in `[0, 1]`.
    pub retention: f64,
    pub theta_true: f64,
}

pub fn examinee_id(index: usize) -> String {
    format!("E{:05}", index + 1)
}

/// Mixes a master seed with a stage label so pipeline stages draw from
/// unrelated streams.
pub fn derive_seed(master: u64, stage: &str) -> u64 {
    // FNV-1a over the label, then a SplitMix64 finalizer.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in stage.bytes() {
        h ^= u64::from(byte);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = master ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Draws `n` examinees: retention ~ U(0,1), then one standard-normal draw for the noise.
pub fn gen_population(n: usize, seed: u64, cfg: &SurrogateConfig) -> Vec<ExamineeProfile> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let retention: f64 = rng.random();
            let z: f64 = rng.sample(StandardNormal);
            ExamineeProfile {
                id: examinee_id(i),
                retention,
                theta_true: cfg.alpha + cfg.beta * retention + cfg.sigma_eps * z,
            }
        })
        .collect()
}

fn params_by_id<'a>(bank: &ItemBank, params: &'a [ItemParams2PL<f64>]) -> Result<Vec<&'a ItemParams2PL<f64>>> {
    let index: HashMap<&str, &ItemParams2PL<f64>> = params.iter().map(|p| (p.item_id.as_str(), p)).collect();
    bank.items()
        .iter()
        .map(|item| {
            index
                .get(item.id.as_str())
                .copied()
                .ok_or_else(|| Error::MissingParams(item.id.clone()))
        })
        .collect()
}

fn option_vector(item: &Item, p_correct: f64) -> Vec<f64> {
    let k = item.n_options();
    let distractor = (1.0 - p_correct) / (k - 1) as f64;
    (0..k)
        .map(|o| if o == item.key { p_correct } else { distractor })
        .collect()
}

/// Option probabilities of one examinee on every bank item, in bank order.
pub fn surrogate_option_probs(
    profile: &ExamineeProfile,
    bank: &ItemBank,
    params_ref: &[ItemParams2PL<f64>],
    scaling_d: f64,
    cfg: &SurrogateConfig,
) -> Result<Vec<Vec<f64>>> {
    let params = params_by_id(bank, params_ref)?;
    Ok(bank
        .items()
        .iter()
        .zip(params)
        .map(|(item, p)| {
            let pc = prob_2pl(profile.theta_true, p.a, p.b, scaling_d).max(cfg.guess_floor);
            option_vector(item, pc)
        })
        .collect())
}

/// Option-probability matrix for a whole population, carrying retention.
pub fn surrogate_matrix(
    profiles: &[ExamineeProfile],
    bank: &ItemBank,
    params_ref: &[ItemParams2PL<f64>],
    scaling_d: f64,
    cfg: &SurrogateConfig,
) -> Result<OptionProbMatrix> {
    cfg.validate()?;
    let mut cells = Vec::with_capacity(profiles.len() * bank.len());
    for profile in profiles {
        cells.extend(surrogate_option_probs(profile, bank, params_ref, scaling_d, cfg)?);
    }
    OptionProbMatrix::new(
        profiles.iter().map(|p| p.id.clone()).collect(),
        bank.item_ids(),
        cells,
        Some(profiles.iter().map(|p| p.retention).collect()),
    )
}

/// Scored responses straight from the 2PL: success with probability
/// `prob_2pl(theta, a, b, D)`, otherwise a uniformly chosen distractor.
/// Each cell draws one uniform, plus one distractor index on failure.
pub fn gen_responses_2pl(
    thetas: &[f64],
    params: &[ItemParams2PL<f64>],
    bank: &ItemBank,
    scaling_d: f64,
    seed: u64,
) -> Result<ResponseMatrix> {
    let aligned = params_by_id(bank, params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = Vec::with_capacity(thetas.len() * bank.len());
    for &theta in thetas {
        for (item, p) in bank.items().iter().zip(&aligned) {
            let u: f64 = rng.random();
            let opt = if u < prob_2pl(theta, p.a, p.b, scaling_d) {
                item.key
            } else {
                let d = rng.random_range(0..item.n_options() - 1);
                if d >= item.key {
                    d + 1
                } else {
                    d
                }
            };
            chosen.push(opt as u32);
        }
    }
    let ids = (0..thetas.len()).map(examinee_id).collect();
    ResponseMatrix::from_choices(bank, ids, chosen, None)
}

/// Index drawn from `probs` by inverting its CDF at `u`.
fn inverse_cdf(probs: &[f64], u: f64) -> usize {
    let mut cum = 0.0;
    for (o, &p) in probs.iter().enumerate() {
        cum += p;
        if u < cum {
            return o;
        }
    }
    // u landed in the rounding gap above the final partial sum
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// Draws one option per cell: one uniform per cell, examinee-major, bank item order.
pub fn sample_responses(probs: &OptionProbMatrix, bank: &ItemBank, seed: u64) -> Result<ResponseMatrix> {
    if probs.item_ids() != bank.item_ids().as_slice() {
        return Err(Error::Validation(
            "option-probability items must match the bank's items and order".into(),
        ));
    }
    probs.validate_against(bank)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = Vec::with_capacity(probs.n_examinees() * probs.n_items());
    for i in 0..probs.n_examinees() {
        for j in 0..probs.n_items() {
            let u: f64 = rng.random();
            chosen.push(inverse_cdf(probs.cell(i, j), u) as u32);
        }
    }
    ResponseMatrix::from_choices(
        bank,
        probs.examinee_ids().to_vec(),
        chosen,
        probs.retention().map(<[f64]>::to_vec),
    )
}

/// Target marginal moments of a synthetic parameter set: median, mean, SD.
#[derive(Debug, Clone, Copy)]
pub struct SkewedMoments {
    pub median: f64,
    pub mean: f64,
    pub sd: f64,
}

/// Discrimination moments of the human reference calibration.
pub const REFERENCE_A: SkewedMoments = SkewedMoments {
    median: 0.65,
    mean: 0.66,
    sd: 0.26,
};

/// Difficulty moments of the human reference calibration.
pub const REFERENCE_B: SkewedMoments = SkewedMoments {
    median: -0.12,
    mean: 0.05,
    sd: 0.83,
};

/// `k` values at normal quantiles `(j + 0.5) / k`, stretched by separate
/// scales below and above the median so that the sample mean and SD
/// (n - 1 denominator) hit `target` exactly. Returned in ascending order.
pub fn two_piece_quantiles(k: usize, target: SkewedMoments) -> Vec<f64> {
    let normal = Normal::standard();
    let z: Vec<f64> = (0..k)
        .map(|j| normal.inverse_cdf((j as f64 + 0.5) / k as f64))
        .collect();
    let lower: Vec<f64> = z.iter().map(|&v| v.min(0.0)).collect();
    let upper: Vec<f64> = z.iter().map(|&v| v.max(0.0)).collect();
    let kf = k as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / kf;
    let (ml, mu) = (mean(&lower), mean(&upper));
    let cov = |x: &[f64], mx: f64, y: &[f64], my: f64| {
        x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (kf - 1.0)
    };
    let (vl, vu, c) = (
        cov(&lower, ml, &lower, ml),
        cov(&upper, mu, &upper, mu),
        cov(&lower, ml, &upper, mu),
    );
    // Mean: median + s_lo*ml + s_hi*mu = mean, with ml = -mu by symmetry of the quantiles.
    let shift = (target.mean - target.median) / mu;
    // s_hi = s_lo + shift; solve the variance equation for s_lo.
    let qa = vl + vu + 2.0 * c;
    let qb = 2.0 * shift * (vu + c);
    let qc = shift * shift * vu - target.sd * target.sd;
    let s_lo = (-qb + (qb * qb - 4.0 * qa * qc).sqrt()) / (2.0 * qa);
    let s_hi = s_lo + shift;
    z.iter()
        .map(|&v| target.median + if v < 0.0 { s_lo * v } else { s_hi * v })
        .collect()
}

/// Deterministic bank whose 2PL parameters mirror the human reference
/// distribution: discriminations and difficulties from [`two_piece_quantiles`],
/// paired in opposite rank order (the most discriminating item is the easiest).
pub fn reference_bank(k: usize) -> Result<(ItemBank, Vec<ItemParams2PL<f64>>)> {
    if k < 2 {
        return Err(Error::Validation("reference bank needs at least 2 items".into()));
    }
    let a = two_piece_quantiles(k, REFERENCE_A);
    let b = two_piece_quantiles(k, REFERENCE_B);
    let labels = ["A", "B", "C", "D"];
    let mut items = Vec::with_capacity(k);
    let mut params = Vec::with_capacity(k);
    for j in 0..k {
        let id = format!("item{:02}", j + 1);
        let options = labels.iter().map(|l| format!("Option {l}")).collect();
        items.push(Item::new(
            id.clone(),
            format!("Synthetic item {}", j + 1),
            options,
            j % labels.len(),
        ));
        params.push(ItemParams2PL::new(id, a[k - 1 - j], b[j]));
    }
    let metadata = BTreeMap::from([
        ("source".to_string(), Value::from("synthetic")),
        ("options".to_string(), Value::from(labels.len())),
    ]);
    Ok((ItemBank::new(items, metadata)?, params))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pearson(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
        sxy / (sxx * syy).sqrt()
    }

    #[test]
    fn default_constants_imply_target_correlation() {
        let r = SurrogateConfig::default().implied_zeroed_correlation();
        assert!((r + 0.86).abs() < 0.005, "{r}");
    }

    #[test]
    fn population_correlation_with_zeroed_share() {
        let pop = gen_population(5000, 11, &SurrogateConfig::default());
        let theta: Vec<f64> = pop.iter().map(|p| p.theta_true).collect();
        let zeroed: Vec<f64> = pop.iter().map(|p| 1.0 - p.retention).collect();
        let r = pearson(&theta, &zeroed);
        assert!((-0.90..=-0.82).contains(&r), "{r}");
    }

    #[test]
    fn noiseless_population_is_linear_in_retention() {
        let cfg = SurrogateConfig {
            sigma_eps: 0.0,
            ..Default::default()
        };
        let pop = gen_population(1000, 3, &cfg);
        let theta: Vec<f64> = pop.iter().map(|p| p.theta_true).collect();
        let ret: Vec<f64> = pop.iter().map(|p| p.retention).collect();
        assert!((pearson(&theta, &ret) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn population_is_seed_deterministic() {
        let cfg = SurrogateConfig::default();
        assert_eq!(gen_population(50, 9, &cfg), gen_population(50, 9, &cfg));
        assert_ne!(gen_population(50, 9, &cfg), gen_population(50, 10, &cfg));
    }

    #[test]
    fn derived_seeds_differ_by_stage() {
        assert_ne!(derive_seed(1, "sample"), derive_seed(1, "simulate"));
        assert_eq!(derive_seed(1, "sample"), derive_seed(1, "sample"));
    }

    fn one_item_bank() -> (ItemBank, Vec<ItemParams2PL<f64>>) {
        let opts = (0..4).map(|o| format!("o{o}")).collect();
        let bank = ItemBank::new(vec![Item::new("q", "s", opts, 2)], BTreeMap::new()).unwrap();
        (bank, vec![ItemParams2PL::new("q", 0.66, 0.05)])
    }

    #[test]
    fn surrogate_at_difficulty_splits_evenly() {
        let (bank, params) = one_item_bank();
        let prof = ExamineeProfile {
            id: "E".into(),
            retention: 0.5,
            theta_true: 0.05,
        };
        let v = surrogate_option_probs(&prof, &bank, &params, 1.7, &SurrogateConfig::default()).unwrap();
        assert!((v[0][2] - 0.5).abs() < 1e-15);
        for o in [0, 1, 3] {
            assert!((v[0][o] - 1.0 / 6.0).abs() < 1e-15);
        }
    }

    #[test]
    fn surrogate_matches_logistic_oracle() {
        // 1/(1+exp(-1.7*0.66*(0-0.05))) = 0.4859786771, distractors 0.1713404410 (30-digit evaluation)
        let (bank, params) = one_item_bank();
        let prof = ExamineeProfile {
            id: "E".into(),
            retention: 0.5,
            theta_true: 0.0,
        };
        let v = surrogate_option_probs(&prof, &bank, &params, 1.7, &SurrogateConfig::default()).unwrap();
        assert!((v[0][2] - 0.485_978_677_144).abs() < 1e-12, "{}", v[0][2]);
        assert!((v[0][0] - 0.171_340_440_952).abs() < 1e-12, "{}", v[0][0]);
    }

    #[test]
    fn surrogate_saturates_for_high_ability() {
        let (bank, _) = one_item_bank();
        let params = vec![ItemParams2PL::new("q", 5.0, 0.0)];
        let prof = ExamineeProfile {
            id: "E".into(),
            retention: 1.0,
            theta_true: 10.0,
        };
        let v = surrogate_option_probs(&prof, &bank, &params, 1.7, &SurrogateConfig::default()).unwrap();
        assert!(v[0][2] > 1.0 - 1e-12);
        assert!(v[0][0] < 1e-12);
    }

    #[test]
    fn surrogate_requires_params_for_every_item() {
        let (bank, _) = one_item_bank();
        let prof = ExamineeProfile {
            id: "E".into(),
            retention: 1.0,
            theta_true: 0.0,
        };
        assert!(matches!(
            surrogate_option_probs(&prof, &bank, &[], 1.7, &SurrogateConfig::default()),
            Err(Error::MissingParams(id)) if id == "q"
        ));
    }

    #[test]
    fn guess_floor_clamps_correct_probability() {
        let (bank, params) = one_item_bank();
        let prof = ExamineeProfile {
            id: "E".into(),
            retention: 0.0,
            theta_true: -8.0,
        };
        let cfg = SurrogateConfig {
            guess_floor: 0.25,
            ..Default::default()
        };
        let v = surrogate_option_probs(&prof, &bank, &params, 1.7, &cfg).unwrap();
        assert_eq!(v[0][2], 0.25);
    }

    #[test]
    fn degenerate_vector_always_picks_its_option() {
        for u in [0.0, 0.3, 0.999_999] {
            assert_eq!(inverse_cdf(&[1.0, 0.0, 0.0, 0.0], u), 0);
        }
        assert_eq!(inverse_cdf(&[0.5, 0.5, 0.0], 1.0), 1);
    }

    #[test]
    fn two_piece_quantiles_hit_targets() {
        for target in [REFERENCE_A, REFERENCE_B] {
            let v = two_piece_quantiles(29, target);
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            assert!((mean - target.mean).abs() < 1e-12);
            assert!((sd - target.sd).abs() < 1e-12);
            assert!((v[14] - target.median).abs() < 1e-12);
            assert!(v.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn reference_bank_has_positive_discriminations() {
        let (bank, params) = reference_bank(29).unwrap();
        assert_eq!(bank.len(), 29);
        assert!(params.iter().all(|p| p.a > 0.0));
        // easiest item carries the largest discrimination
        assert!(params[0].b < params[28].b && params[0].a > params[28].a);
    }
}
