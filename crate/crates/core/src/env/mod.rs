//! Demand environments: tails, instances, revenue and the oracle price map.

mod instance;
mod oracle;
mod tail;

pub use instance::{
    anisotropic_root, make_custom_instance, make_experiment_instance, revenue, sphere_into,
    ContextLaw, ExperimentKind, Instance, Utility, EXPERIMENT_INTERVAL, EXPERIMENT_P_MAX,
};
pub use oracle::{oracle_price_for, OraclePriceTable, OracleResult};
pub use tail::{
    experiment_tail, experiment_tail_value, smooth_cutoff, truncated_linear_tail, TailModel,
    DEFAULT_INVERSE_CDF_TOL, EXPERIMENT_HALF_WIDTH,
};
