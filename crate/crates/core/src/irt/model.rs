use crate::data::ItemParams2PL;
use crate::scalar::{log_sigmoid, sigmoid, Scalar};

/// `P(correct) = 1 / (1 + exp(-D * a * (theta - b)))`.
#[inline]
pub fn prob_2pl<T: Scalar>(theta: T, a: T, b: T, d: T) -> T {
    sigmoid(d * a * (theta - b))
}

/// Bernoulli log-likelihood of a 0/1 pattern at `theta`. `scored` and
/// `params` are aligned by position.
pub fn loglik<T: Scalar>(scored: &[u8], params: &[ItemParams2PL<T>], d: T, theta: T) -> T {
    debug_assert_eq!(scored.len(), params.len());
    scored
        .iter()
        .zip(params)
        .map(|(&u, p)| {
            let z = d * p.a * (theta - p.b);
            if u == 1 {
                log_sigmoid(z)
            } else {
                log_sigmoid(-z)
            }
        })
        .sum()
}
