use crate::data::{EngineConfig, GroupDist};
use crate::scalar::{log_sum_exp, Scalar};

/// Equally spaced nodes with normal weights under a group distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
    log_weights: Vec<T>,
}

impl<T: Scalar> QuadratureGrid<T> {
    pub fn new(points: usize, range: T, group: &GroupDist<T>) -> Self {
        assert!(points >= 2, "quadrature needs at least two nodes");
        let step = (range + range) / T::from_count(points - 1);
        let nodes = (0..points).map(|q| -range + step * T::from_count(q)).collect();
        let mut grid = Self {
            nodes,
            weights: Vec::new(),
            log_weights: Vec::new(),
        };
        grid.reweight(group);
        grid
    }

    /// Recomputes weights for a new group distribution, keeping the nodes.
    pub fn reweight(&mut self, group: &GroupDist<T>) {
        let half = T::lit(0.5);
        let log_density: Vec<T> = self
            .nodes
            .iter()
            .map(|&x| {
                let z = (x - group.mean) / group.sd;
                -half * z * z
            })
            .collect();
        let norm = log_sum_exp(&log_density);
        self.log_weights = log_density.iter().map(|&l| l - norm).collect();
        self.weights = self.log_weights.iter().map(|&l| l.exp()).collect();
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn log_weights(&self) -> &[T] {
        &self.log_weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

pub fn make_quadrature<T: Scalar>(config: &EngineConfig, group: &GroupDist<T>) -> QuadratureGrid<T> {
    QuadratureGrid::new(config.quad_points, T::lit(config.quad_range), group)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(mean: f64, sd: f64) -> QuadratureGrid<f64> {
        make_quadrature(&EngineConfig::default(), &GroupDist::new(mean, sd).unwrap())
    }

    #[test]
    fn weights_normalized_and_nodes_increasing() {
        let g = grid(0.3, 0.8);
        assert_eq!(g.len(), 61);
        assert!((g.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(g.nodes().windows(2).all(|w| w[0] < w[1]));
        assert!((g.nodes()[0] + 6.0).abs() < 1e-15 && (g.nodes()[60] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn standard_grid_is_symmetric() {
        let g = grid(0.0, 1.0);
        let w = g.weights();
        for q in 0..30 {
            assert!((w[q] - w[60 - q]).abs() < 1e-15);
        }
    }

    #[test]
    fn mode_follows_mean() {
        let argmax = |g: &QuadratureGrid<f64>| {
            (0..g.len())
                .max_by(|&x, &y| g.weights()[x].total_cmp(&g.weights()[y]))
                .unwrap()
        };
        assert!(argmax(&grid(1.0, 1.0)) > argmax(&grid(0.0, 1.0)));
    }

    #[test]
    fn first_moment_matches_group_mean() {
        for (mean, sd) in [(0.0, 1.0), (0.3, 0.9), (-0.29, 1.07)] {
            let g = grid(mean, sd);
            let m: f64 = g.nodes().iter().zip(g.weights()).map(|(x, w)| x * w).sum();
            assert!((m - mean).abs() < 1e-6, "{mean} {sd}: {m}");
        }
    }

    #[test]
    fn narrow_group_does_not_underflow() {
        let g = grid(0.0, 1e-3);
        assert!((g.weights()[30] - 1.0).abs() < 1e-12);
        assert!(g.log_weights().iter().all(|l| !l.is_nan()));
    }
}
