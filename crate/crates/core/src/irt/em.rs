use std::collections::HashMap;

use super::mstep::{maximize_item, NodeCounts};
use super::quadrature::{make_quadrature, QuadratureGrid};
use crate::data::{EngineConfig, GroupDist, ItemParams2PL, ResponseMatrix};
use crate::error::{Error, Result};
use crate::scalar::{log_sigmoid, log_sum_exp, Scalar};

/// Outcome of a free (all items estimated) calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<T> {
    pub params: Vec<ItemParams2PL<T>>,
    pub group: GroupDist<T>,
    /// Marginal log-likelihood at the final parameters.
    pub loglik: T,
    pub n_iter: usize,
    pub converged: bool,
    /// Marginal log-likelihood at the start of every EM iteration.
    pub loglik_trace: Vec<T>,
}

/// Outcome of calibrating one item against fixed anchors.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchoredFit<T> {
    pub params: ItemParams2PL<T>,
    pub group: GroupDist<T>,
    pub loglik: T,
    pub n_iter: usize,
    pub converged: bool,
    pub loglik_trace: Vec<T>,
}

/// Smallest group SD the anchored EM will move to.
const MIN_GROUP_SD: f64 = 1e-3;

struct Settings<T> {
    d: T,
    a_bounds: (T, T),
    b_bounds: (T, T),
    tol: T,
    max_iter: usize,
}

impl<T: Scalar> Settings<T> {
    fn from_config(config: &EngineConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            d: T::lit(config.scaling_d),
            a_bounds: (T::lit(config.a_bounds[0]), T::lit(config.a_bounds[1])),
            b_bounds: (T::lit(config.b_bounds[0]), T::lit(config.b_bounds[1])),
            tol: T::lit(config.em_tol),
            max_iter: config.max_em_iter,
        })
    }

    /// Slope of one logit per theta unit, difficulty from the observed logit.
    fn start_values(&self, responses: &ResponseMatrix, item: usize) -> (T, T) {
        let n = responses.n_examinees();
        let correct = responses.scored_column(item).filter(|&u| u == 1).count();
        let p = T::from_count(correct) / T::from_count(n);
        let b = -(p / (T::one() - p)).ln();
        (
            (T::one() / self.d).max(self.a_bounds.0).min(self.a_bounds.1),
            b.max(self.b_bounds.0).min(self.b_bounds.1),
        )
    }
}

fn check_column(responses: &ResponseMatrix, item: usize) -> Result<()> {
    let mut seen = [false; 2];
    for u in responses.scored_column(item) {
        seen[usize::from(u)] = true;
        if seen[0] && seen[1] {
            return Ok(());
        }
    }
    Err(Error::DegenerateItem(responses.item_ids()[item].clone()))
}

/// Parameters reordered to the matrix's item columns.
pub(crate) fn align_params<T: Scalar>(
    item_ids: &[String],
    params: &[ItemParams2PL<T>],
) -> Result<Vec<ItemParams2PL<T>>> {
    let index: HashMap<&str, &ItemParams2PL<T>> = params.iter().map(|p| (p.item_id.as_str(), p)).collect();
    item_ids
        .iter()
        .map(|id| {
            index
                .get(id.as_str())
                .map(|p| (*p).clone())
                .ok_or_else(|| Error::MissingParams(id.clone()))
        })
        .collect()
}

/// Log P and log(1 - P) of one item at every node.
fn log_probs<T: Scalar>(grid: &QuadratureGrid<T>, a: T, b: T, d: T) -> (Vec<T>, Vec<T>) {
    grid.nodes()
        .iter()
        .map(|&x| {
            let z = d * a * (x - b);
            (log_sigmoid(z), log_sigmoid(-z))
        })
        .unzip()
}

/// E-step over all items: expected node counts per item and the marginal
/// log-likelihood. Examinees are accumulated sequentially in row order.
fn estep_all<T: Scalar>(
    responses: &ResponseMatrix,
    grid: &QuadratureGrid<T>,
    params: &[ItemParams2PL<T>],
    d: T,
) -> (Vec<NodeCounts<T>>, T) {
    let nq = grid.len();
    let mut base: Vec<T> = grid.log_weights().to_vec();
    let mut diff = Vec::with_capacity(params.len() * nq);
    for p in params {
        let (lp, lq) = log_probs(grid, p.a, p.b, d);
        for q in 0..nq {
            base[q] = base[q] + lq[q];
            diff.push(lp[q] - lq[q]);
        }
    }
    let mut total = vec![T::zero(); nq];
    let mut correct = vec![T::zero(); params.len() * nq];
    let mut loglik = T::zero();
    let mut ll = vec![T::zero(); nq];
    for i in 0..responses.n_examinees() {
        ll.copy_from_slice(&base);
        let row = responses.scored_row(i);
        for (j, _) in row.iter().enumerate().filter(|(_, &u)| u == 1) {
            for (l, &dv) in ll.iter_mut().zip(&diff[j * nq..(j + 1) * nq]) {
                *l = *l + dv;
            }
        }
        let norm = log_sum_exp(&ll);
        loglik = loglik + norm;
        for l in ll.iter_mut() {
            *l = (*l - norm).exp();
        }
        for (t, &w) in total.iter_mut().zip(&ll) {
            *t = *t + w;
        }
        for (j, _) in row.iter().enumerate().filter(|(_, &u)| u == 1) {
            for (c, &w) in correct[j * nq..(j + 1) * nq].iter_mut().zip(&ll) {
                *c = *c + w;
            }
        }
    }
    let counts = correct
        .chunks(nq)
        .map(|c| NodeCounts {
            correct: c.to_vec(),
            total: total.clone(),
        })
        .collect();
    (counts, loglik)
}

/// Marginal maximum likelihood 2PL calibration by EM. The latent
/// distribution is fixed at N(0, 1) to identify the scale; every item's
/// `(a, b)` is re-estimated each M-step.
pub fn fit_2pl_mml<T: Scalar>(responses: &ResponseMatrix, config: &EngineConfig) -> Result<FitResult<T>> {
    let settings = Settings::<T>::from_config(config)?;
    if responses.n_items() < 2 {
        return Err(Error::Validation("free calibration needs at least 2 items".into()));
    }
    for j in 0..responses.n_items() {
        check_column(responses, j)?;
    }
    let group = GroupDist::standard();
    let grid = make_quadrature(config, &group);
    let mut params: Vec<ItemParams2PL<T>> = responses
        .item_ids()
        .iter()
        .enumerate()
        .map(|(j, id)| {
            let (a, b) = settings.start_values(responses, j);
            ItemParams2PL::new(id.clone(), a, b)
        })
        .collect();

    let mut trace = Vec::new();
    let mut converged = false;
    let mut n_iter = 0;
    while n_iter < settings.max_iter {
        n_iter += 1;
        let (counts, ll) = estep_all(responses, &grid, &params, settings.d);
        trace.push(ll);
        let mut max_change = T::zero();
        for (p, c) in params.iter_mut().zip(&counts) {
            let (a, b) = maximize_item(
                (p.a, p.b),
                grid.nodes(),
                c,
                settings.d,
                settings.a_bounds,
                settings.b_bounds,
            );
            max_change = max_change.max((a - p.a).abs()).max((b - p.b).abs());
            p.a = a;
            p.b = b;
        }
        if max_change <= settings.tol {
            converged = true;
            break;
        }
    }
    let (_, loglik) = estep_all(responses, &grid, &params, settings.d);
    Ok(FitResult {
        params,
        group,
        loglik,
        n_iter,
        converged,
        loglik_trace: trace,
    })
}

/// Calibrates `target_item_id` with every other item fixed at its anchor
/// value. Only the target's `(a, b)` and the group mean/SD are updated, so
/// the scale is inherited from the anchors. The group is re-estimated from
/// the first two moments of the aggregated posterior.
pub fn fit_anchored_item<T: Scalar>(
    responses: &ResponseMatrix,
    anchors: &[ItemParams2PL<T>],
    target_item_id: &str,
    config: &EngineConfig,
) -> Result<AnchoredFit<T>> {
    let settings = Settings::<T>::from_config(config)?;
    let target = responses
        .item_ids()
        .iter()
        .position(|id| id == target_item_id)
        .ok_or_else(|| Error::Validation(format!("target item {target_item_id} not in responses")))?;
    check_column(responses, target)?;
    let anchor_index: HashMap<&str, &ItemParams2PL<T>> = anchors.iter().map(|p| (p.item_id.as_str(), p)).collect();
    let mut fixed_params = Vec::with_capacity(responses.n_items());
    for (j, id) in responses.item_ids().iter().enumerate() {
        if j == target {
            continue;
        }
        let p = anchor_index
            .get(id.as_str())
            .ok_or_else(|| Error::MissingParams(id.clone()))?;
        fixed_params.push((j, (*p).clone()));
    }

    let mut group = GroupDist::standard();
    let mut grid = make_quadrature(config, &group);
    let nq = grid.len();
    let n = responses.n_examinees();

    // Anchored part of each examinee's log-likelihood at every node.
    let mut fixed = vec![T::zero(); n * nq];
    for (j, p) in &fixed_params {
        let (lp, lq) = log_probs(&grid, p.a, p.b, settings.d);
        for (i, row) in fixed.chunks_mut(nq).enumerate() {
            let src = if responses.scored(i, *j) == 1 { &lp } else { &lq };
            for (f, &v) in row.iter_mut().zip(src) {
                *f = *f + v;
            }
        }
    }

    let (mut a, mut b) = settings.start_values(responses, target);
    let estep = |grid: &QuadratureGrid<T>, a: T, b: T| {
        let (lp, lq) = log_probs(grid, a, b, settings.d);
        let mut counts = NodeCounts::zeros(nq);
        let mut loglik = T::zero();
        let mut ll = vec![T::zero(); nq];
        for (i, row) in fixed.chunks(nq).enumerate() {
            let correct = responses.scored(i, target) == 1;
            let item = if correct { &lp } else { &lq };
            for (((l, &lw), &r), &it) in ll.iter_mut().zip(grid.log_weights()).zip(row).zip(item) {
                *l = lw + r + it;
            }
            let norm = log_sum_exp(&ll);
            loglik = loglik + norm;
            for (q, &l) in ll.iter().enumerate() {
                let w = (l - norm).exp();
                counts.total[q] = counts.total[q] + w;
                if correct {
                    counts.correct[q] = counts.correct[q] + w;
                }
            }
        }
        (counts, loglik)
    };

    let mut trace = Vec::new();
    let mut converged = false;
    let mut n_iter = 0;
    let min_sd = T::lit(MIN_GROUP_SD);
    while n_iter < settings.max_iter {
        n_iter += 1;
        let (counts, ll) = estep(&grid, a, b);
        trace.push(ll);
        let (na, nb) = maximize_item(
            (a, b),
            grid.nodes(),
            &counts,
            settings.d,
            settings.a_bounds,
            settings.b_bounds,
        );
        let mass: T = counts.total.iter().copied().sum();
        let mean = grid.nodes().iter().zip(&counts.total).map(|(&x, &w)| x * w).sum::<T>() / mass;
        let var = grid
            .nodes()
            .iter()
            .zip(&counts.total)
            .map(|(&x, &w)| (x - mean) * (x - mean) * w)
            .sum::<T>()
            / mass;
        let sd = var.sqrt().max(min_sd);
        let max_change = (na - a)
            .abs()
            .max((nb - b).abs())
            .max((mean - group.mean).abs())
            .max((sd - group.sd).abs());
        a = na;
        b = nb;
        group = GroupDist { mean, sd };
        grid.reweight(&group);
        if max_change <= settings.tol {
            converged = true;
            break;
        }
    }
    let (_, loglik) = estep(&grid, a, b);
    Ok(AnchoredFit {
        params: ItemParams2PL::new(target_item_id, a, b),
        group,
        loglik,
        n_iter,
        converged,
        loglik_trace: trace,
    })
}

/// Runs [`fit_anchored_item`] for every item column in order, each against
/// the full anchor set.
pub fn fit_anchored_all<T: Scalar>(
    responses: &ResponseMatrix,
    anchors: &[ItemParams2PL<T>],
    config: &EngineConfig,
) -> Result<Vec<AnchoredFit<T>>> {
    responses
        .item_ids()
        .iter()
        .map(|id| fit_anchored_item(responses, anchors, id, config))
        .collect()
}
