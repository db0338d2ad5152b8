//! Per-item maximization of the expected complete-data log-likelihood.

use crate::scalar::{log_sigmoid, sigmoid, Scalar};

const MAX_NEWTON_ITER: usize = 25;
const MAX_HALVINGS: usize = 30;

/// Expected counts at each quadrature node for one item: `correct[q]` of
/// `total[q]` examinees answered correctly.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeCounts<T> {
    pub correct: Vec<T>,
    pub total: Vec<T>,
}

impl<T: Scalar> NodeCounts<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            correct: vec![T::zero(); n],
            total: vec![T::zero(); n],
        }
    }
}

/// Value, gradient and Hessian of the item objective in `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ItemObjective<T> {
    pub value: T,
    pub grad: [T; 2],
    pub hess: [[T; 2]; 2],
}

/// `sum_q r_q ln P_q + (n_q - r_q) ln(1 - P_q)` with `P_q = prob_2pl(x_q; a, b, D)`,
/// with analytic first and second derivatives.
pub fn item_objective<T: Scalar>(a: T, b: T, nodes: &[T], counts: &NodeCounts<T>, d: T) -> ItemObjective<T> {
    let mut value = T::zero();
    let (mut ga, mut gb) = (T::zero(), T::zero());
    let (mut haa, mut hbb, mut hab) = (T::zero(), T::zero(), T::zero());
    let mut resid_sum = T::zero();
    for ((&x, &r), &n) in nodes.iter().zip(&counts.correct).zip(&counts.total) {
        let z = d * a * (x - b);
        value = value + r * log_sigmoid(z) + (n - r) * log_sigmoid(-z);
        let p = sigmoid(z);
        let resid = r - n * p;
        let w = n * p * (T::one() - p);
        let dz_da = d * (x - b);
        let dz_db = -d * a;
        ga = ga + resid * dz_da;
        gb = gb + resid * dz_db;
        haa = haa - w * dz_da * dz_da;
        hbb = hbb - w * dz_db * dz_db;
        hab = hab - w * dz_da * dz_db;
        resid_sum = resid_sum + resid;
    }
    // d2z/(da db) = -D contributes through the residuals.
    hab = hab - d * resid_sum;
    ItemObjective {
        value,
        grad: [ga, gb],
        hess: [[haa, hab], [hab, hbb]],
    }
}

/// Solves `H step = -g` for a negative-definite `H`; `None` otherwise.
fn newton_direction<T: Scalar>(grad: [T; 2], hess: [[T; 2]; 2]) -> Option<[T; 2]> {
    let det = hess[0][0] * hess[1][1] - hess[0][1] * hess[1][0];
    if !(hess[0][0] < T::zero() && det > T::zero()) {
        return None;
    }
    Some([
        -(hess[1][1] * grad[0] - hess[0][1] * grad[1]) / det,
        -(-hess[1][0] * grad[0] + hess[0][0] * grad[1]) / det,
    ])
}

/// Bounded Newton ascent from `start`. Falls back to Fisher scoring when the
/// observed Hessian is not negative definite, halves steps that lower the
/// objective, and stops after 25 iterations or once the step is negligible.
pub fn maximize_item<T: Scalar>(
    start: (T, T),
    nodes: &[T],
    counts: &NodeCounts<T>,
    d: T,
    a_bounds: (T, T),
    b_bounds: (T, T),
) -> (T, T) {
    let clamp = |v: T, (lo, hi): (T, T)| v.max(lo).min(hi);
    let (mut a, mut b) = (clamp(start.0, a_bounds), clamp(start.1, b_bounds));
    let tiny = T::epsilon().sqrt() * T::lit(1e-2);
    let mut obj = item_objective(a, b, nodes, counts, d);
    for _ in 0..MAX_NEWTON_ITER {
        let step = newton_direction(obj.grad, obj.hess).or_else(|| {
            let fisher = expected_information(a, b, nodes, counts, d);
            newton_direction(obj.grad, fisher)
        });
        let Some(step) = step else { break };
        let mut scale = T::one();
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let na = clamp(a + scale * step[0], a_bounds);
            let nb = clamp(b + scale * step[1], b_bounds);
            let cand = item_objective(na, nb, nodes, counts, d);
            if cand.value >= obj.value {
                accepted = Some((na, nb, cand));
                break;
            }
            scale = scale * T::lit(0.5);
        }
        let Some((na, nb, cand)) = accepted else { break };
        let moved = (na - a).abs().max((nb - b).abs());
        a = na;
        b = nb;
        obj = cand;
        if moved <= tiny * (T::one() + a.abs().max(b.abs())) {
            break;
        }
    }
    (a, b)
}

/// Negative expected information (Hessian without the residual terms).
fn expected_information<T: Scalar>(a: T, b: T, nodes: &[T], counts: &NodeCounts<T>, d: T) -> [[T; 2]; 2] {
    let (mut haa, mut hbb, mut hab) = (T::zero(), T::zero(), T::zero());
    for (&x, &n) in nodes.iter().zip(&counts.total) {
        let p = sigmoid(d * a * (x - b));
        let w = n * p * (T::one() - p);
        let (da, db) = (d * (x - b), -d * a);
        haa = haa - w * da * da;
        hbb = hbb - w * db * db;
        hab = hab - w * da * db;
    }
    [[haa, hab], [hab, hbb]]
}
