//! Two-parameter logistic IRT: response function, marginal maximum
//! likelihood calibration by EM over a fixed quadrature grid, anchored
//! single-item calibration, and MAP ability scoring.

mod em;
mod map;
mod model;
mod mstep;
mod quadrature;

pub use em::{fit_2pl_mml, fit_anchored_all, fit_anchored_item, AnchoredFit, FitResult};
pub use map::{map_score, score_all, MapEstimate};
pub use model::{loglik, prob_2pl};
pub use mstep::{item_objective, maximize_item, ItemObjective, NodeCounts};
pub use quadrature::{make_quadrature, QuadratureGrid};
