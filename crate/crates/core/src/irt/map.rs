use super::em::align_params;
use super::model::{loglik, prob_2pl};
use crate::data::{AbilityEstimate, EngineConfig, GroupDist, ItemParams2PL, ResponseMatrix};
use crate::error::Result;
use crate::scalar::Scalar;

/// Search interval for the posterior mode.
const THETA_LIMIT: f64 = 40.0;
const GRID_POINTS: usize = 8001;
const MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapEstimate<T> {
    pub theta: T,
    /// Inverse square root of the posterior curvature at the mode.
    pub se: T,
}

struct Posterior<'a, T> {
    scored: &'a [u8],
    params: &'a [ItemParams2PL<T>],
    d: T,
    mean: T,
    variance: T,
}

impl<T: Scalar> Posterior<'_, T> {
    fn log_density(&self, theta: T) -> T {
        let dev = theta - self.mean;
        loglik(self.scored, self.params, self.d, theta) - dev * dev / (self.variance + self.variance)
    }

    /// First and second derivatives of the log posterior.
    fn derivatives(&self, theta: T) -> (T, T) {
        let (mut g, mut h) = (-(theta - self.mean) / self.variance, -T::one() / self.variance);
        for (&u, p) in self.scored.iter().zip(self.params) {
            let prob = prob_2pl(theta, p.a, p.b, self.d);
            let slope = self.d * p.a;
            let observed = if u == 1 { T::one() } else { T::zero() };
            g = g + slope * (observed - prob);
            h = h - slope * slope * prob * (T::one() - prob);
        }
        (g, h)
    }
}

/// Posterior mode of `theta` under a normal prior.
///
/// The log posterior is concave, so its derivative is decreasing. The root
/// is bracketed in `[-40, 40]` and found by Newton steps that fall back to
/// bisection whenever a step leaves the bracket. If the derivative does not
/// change sign inside the interval, the mode is taken from a dense grid.
pub fn map_score<T: Scalar>(scored: &[u8], params: &[ItemParams2PL<T>], d: T, prior: &GroupDist<T>) -> MapEstimate<T> {
    let post = Posterior {
        scored,
        params,
        d,
        mean: prior.mean,
        variance: prior.sd * prior.sd,
    };
    let limit = T::lit(THETA_LIMIT);
    let (mut lo, mut hi) = (-limit, limit);
    let finish = |theta: T| {
        let (_, h) = post.derivatives(theta);
        MapEstimate {
            theta,
            se: (-h).sqrt().recip(),
        }
    };

    if post.derivatives(lo).0 <= T::zero() || post.derivatives(hi).0 >= T::zero() {
        return finish(grid_mode(&post, lo, hi));
    }
    let mut theta = prior.mean.max(lo).min(hi);
    let tol = T::epsilon() * T::lit(16.0);
    for _ in 0..MAX_ITER {
        let (g, h) = post.derivatives(theta);
        if g == T::zero() {
            break;
        }
        if g > T::zero() {
            lo = theta;
        } else {
            hi = theta;
        }
        let newton = theta - g / h;
        let next = if h < T::zero() && newton > lo && newton < hi {
            newton
        } else {
            lo + (hi - lo) * T::lit(0.5)
        };
        let step = (next - theta).abs();
        theta = next;
        if step <= tol * (T::one() + theta.abs()) || hi - lo <= tol * (T::one() + theta.abs()) {
            break;
        }
    }
    finish(theta)
}

fn grid_mode<T: Scalar>(post: &Posterior<'_, T>, lo: T, hi: T) -> T {
    let step = (hi - lo) / T::from_count(GRID_POINTS - 1);
    (0..GRID_POINTS)
        .map(|k| lo + step * T::from_count(k))
        .map(|t| (t, post.log_density(t)))
        .fold(
            (lo, T::neg_infinity()),
            |best, cur| if cur.1 > best.1 { cur } else { best },
        )
        .0
}

/// MAP scores for every examinee with prior N(0, `prior_variance`).
pub fn score_all<T: Scalar>(
    responses: &ResponseMatrix,
    params: &[ItemParams2PL<T>],
    config: &EngineConfig,
) -> Result<Vec<AbilityEstimate<T>>> {
    config.validate()?;
    let aligned = align_params(responses.item_ids(), params)?;
    let prior = GroupDist {
        mean: T::zero(),
        sd: T::lit(config.prior_variance.sqrt()),
    };
    let d = T::lit(config.scaling_d);
    Ok((0..responses.n_examinees())
        .map(|i| {
            let est = map_score(responses.scored_row(i), &aligned, d, &prior);
            AbilityEstimate {
                examinee_id: responses.examinee_ids()[i].clone(),
                theta: est.theta,
                se: Some(est.se),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weak_prior() -> GroupDist<f64> {
        GroupDist { mean: 0.0, sd: 10.0 }
    }

    #[test]
    fn empty_pattern_returns_prior_mean() {
        let est = map_score::<f64>(&[], &[], 1.7, &weak_prior());
        assert_eq!(est.theta, 0.0);
        assert!((est.se - 10.0).abs() < 1e-12);
        let shifted = GroupDist { mean: 1.5, sd: 2.0 };
        assert_eq!(map_score::<f64>(&[], &[], 1.7, &shifted).theta, 1.5);
    }

    #[test]
    fn single_item_matches_grid_search() {
        let params = [ItemParams2PL::new("x", 1.0, 0.0)];
        let est = map_score(&[1], &params, 1.7, &weak_prior());
        // independent oracle: brute-force maximization on a 1e-5 grid
        let objective = |t: f64| -(1.0 + (-1.7 * t).exp()).ln() - t * t / 200.0;
        let oracle = (0..500_000)
            .map(|k| k as f64 * 1e-5)
            .max_by(|x, y| objective(*x).total_cmp(&objective(*y)))
            .unwrap();
        assert!((est.theta - oracle).abs() < 1e-3, "{} vs {oracle}", est.theta);
        assert!((est.theta - 2.48).abs() < 0.01);
    }

    #[test]
    fn extreme_patterns_stay_finite() {
        let params: Vec<_> = (0..29)
            .map(|j| ItemParams2PL::new(format!("i{j}"), 0.66, -1.0 + j as f64 * 0.1))
            .collect();
        let all_right = map_score(&[1; 29], &params, 1.7, &weak_prior());
        let all_wrong = map_score(&[0; 29], &params, 1.7, &weak_prior());
        assert!(all_right.theta.is_finite() && all_right.theta > 3.0);
        assert!(all_wrong.theta.is_finite() && all_wrong.theta < -3.0);
    }

    #[test]
    fn converges_toward_ml_as_prior_flattens() {
        let params: Vec<_> = (0..5)
            .map(|j| ItemParams2PL::new(format!("i{j}"), 1.0, j as f64 - 2.0))
            .collect();
        let pattern = [1, 1, 1, 0, 1];
        let flat = GroupDist {
            mean: 0.0,
            sd: f64::INFINITY,
        };
        let ml = map_score(&pattern, &params, 1.7, &flat).theta;
        let gaps: Vec<f64> = [1e2f64, 1e4]
            .iter()
            .map(|v| {
                let prior = GroupDist {
                    mean: 0.0,
                    sd: v.sqrt(),
                };
                (map_score(&pattern, &params, 1.7, &prior).theta - ml).abs()
            })
            .collect();
        assert!(gaps[1] < gaps[0], "{gaps:?}");
        assert!(gaps[1] < 1e-3);
    }

    #[test]
    fn single_precision_scoring() {
        let params = [ItemParams2PL::new("x", 1.0f32, 0.0)];
        let est = map_score(&[1], &params, 1.7f32, &GroupDist { mean: 0.0, sd: 10.0 });
        assert!((est.theta - 2.48).abs() < 0.01);
    }

    #[test]
    fn grid_fallback_when_root_outside_interval() {
        // prior centred far outside the search window
        let prior = GroupDist { mean: 100.0, sd: 0.1 };
        let est = map_score::<f64>(&[], &[], 1.7, &prior);
        assert!((est.theta - 40.0).abs() < 1e-9);
    }
}
