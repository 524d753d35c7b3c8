//! Index pilots: the adaptive ridge gate and the explore-then-commit
//! offline oracles (Lasso and local polynomial regression).

mod adaptive;
mod lasso;
mod locpoly;
mod offline;

pub use adaptive::{confidence_multiplier, default_eta, PilotDecision, RidgeState};
pub use lasso::{default_lambda, lasso_fit, lasso_gram, LassoFit, KKT_TOL, MAX_SWEEPS};
pub use locpoly::{
    default_bandwidth, default_degree, locpoly_fit, locpoly_predict, multi_indices, MAX_WIDENINGS,
};
pub use offline::{schedule_n_exp, BurninDataset, FrozenPilot, OracleSpec, ScheduleKind};
