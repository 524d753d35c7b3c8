//! Experiment configuration, seeded simulation, regret accounting and
//! output files.

mod config;
mod emit;
mod regret;
mod run;
mod sim;
mod slope;

pub use config::{ExperimentConfig, ExperimentKindName, PolicyKind};
pub use emit::{
    emit, read_rep_csv, read_summary_csv, rep_path, write_rep_csv, write_summary_csv, REP_HEADER,
    SUMMARY_HEADER,
};
pub use regret::{regret_account, regret_raw, REGRET_SLACK};
pub use run::{
    build_instance, hard_family_omega, hard_family_params, run, run_with, HorizonContext,
    HorizonSummary, RunSummary,
};
pub use sim::{simulate, Phase, PolicySettings, RepSeeds, RepetitionOutput, RunRecord};
pub use slope::{fit_loglog_slope, SlopeFit};
