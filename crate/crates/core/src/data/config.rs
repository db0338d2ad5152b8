use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Run-wide numerical configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub seed: u64,
    /// Logistic-to-normal-ogive scaling constant D.
    pub scaling_d: f64,
    pub quad_points: usize,
    /// Quadrature nodes span `[-quad_range, quad_range]`.
    pub quad_range: f64,
    pub max_em_iter: usize,
    /// EM stops once the largest absolute parameter change falls to this value.
    pub em_tol: f64,
    pub a_bounds: [f64; 2],
    pub b_bounds: [f64; 2],
    /// Variance (not SD) of the normal prior used for MAP scoring.
    pub prior_variance: f64,
    pub n_examinees: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            scaling_d: 1.7,
            quad_points: 61,
            quad_range: 6.0,
            max_em_iter: 500,
            em_tol: 1e-4,
            a_bounds: [0.01, 5.0],
            b_bounds: [-10.0, 25.0],
            prior_variance: 100.0,
            n_examinees: 5000,
        }
    }
}

impl EngineConfig {
    /// Reads a JSON config; absent fields take their defaults.
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("scaling_d", self.scaling_d)?;
        positive("quad_range", self.quad_range)?;
        positive("em_tol", self.em_tol)?;
        positive("prior_variance", self.prior_variance)?;
        if self.quad_points < 11 || self.quad_points.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "quad_points must be odd and >= 11, got {}",
                self.quad_points
            )));
        }
        if self.max_em_iter == 0 {
            return Err(Error::Config("max_em_iter must be at least 1".into()));
        }
        if self.n_examinees == 0 {
            return Err(Error::Config("n_examinees must be at least 1".into()));
        }
        let [a_lo, a_hi] = self.a_bounds;
        if !(a_lo > 0.0 && a_lo < a_hi && a_hi.is_finite()) {
            return Err(Error::Config(format!("invalid a_bounds {:?}", self.a_bounds)));
        }
        let [b_lo, b_hi] = self.b_bounds;
        if !(b_lo.is_finite() && b_hi.is_finite() && b_lo < b_hi) {
            return Err(Error::Config(format!("invalid b_bounds {:?}", self.b_bounds)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = EngineConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.scaling_d, 1.7);
        assert_eq!(cfg.prior_variance, 100.0);
        assert_eq!(cfg.n_examinees, 5000);
    }

    #[test]
    fn even_quadrature_rejected() {
        let cfg = EngineConfig {
            quad_points: 60,
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let cfg = EngineConfig {
            quad_points: 9,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg: EngineConfig = serde_json::from_str(r#"{"seed": 7, "scaling_d": 1.0}"#).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.scaling_d, 1.0);
        assert_eq!(cfg.quad_points, 61);
    }
}
