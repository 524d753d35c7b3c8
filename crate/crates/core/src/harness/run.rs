use std::fmt::Write as _;

use rand::Rng;

use super::config::{ExperimentConfig, ExperimentKindName, PolicyKind};
use super::sim::{simulate, PolicySettings, RepSeeds, RepetitionOutput};
use crate::bco::BcoParams;
use crate::env::{
    make_custom_instance, make_experiment_instance, ExperimentKind, Instance, OraclePriceTable,
};
use crate::error::{OrbitError, Result};
use crate::hard_instance::{HardFamily, HardFamilyParams};
use crate::numeric::{median, quantile};
use crate::orbit::OrbitConfig;
use crate::pilot::{confidence_multiplier, default_eta, schedule_n_exp, OracleSpec, ScheduleKind};
use crate::seed::{Purpose, SeedStream};

/// Repetition index reserved for draws shared by every repetition
/// (sparse supports, hard-family signs).
const SHARED_REPETITION: u64 = u64::MAX;

/// Hard-family parameters implied by the configuration at horizon `t`.
pub fn hard_family_params(config: &ExperimentConfig, t: u64) -> HardFamilyParams {
    let mut p = HardFamilyParams::new(config.beta, config.hard_t_nominal.unwrap_or(t as f64));
    p.gamma = config.hard_gamma;
    p.kappa = config.hard_kappa;
    if config.hard_epsilon0 != p.epsilon0 {
        p.epsilon0 = config.hard_epsilon0;
        p.delta = crate::hard_instance::default_delta(config.hard_epsilon0);
    }
    p
}

/// Sign vector of the hard family, shared by all repetitions.
pub fn hard_family_omega(config: &ExperimentConfig, m: usize) -> Vec<i8> {
    let mut rng = SeedStream::new(config.master_seed, SHARED_REPETITION).rng(Purpose::Parameters);
    (0..m)
        .map(|_| if rng.random::<bool>() { 1 } else { -1 })
        .collect()
}

/// The environment described by `config` at horizon `t`.
pub fn build_instance(config: &ExperimentConfig, t: u64) -> Result<Instance> {
    let mut rng = SeedStream::new(config.master_seed, SHARED_REPETITION).rng(Purpose::Parameters);
    match config.experiment {
        ExperimentKindName::LinearIid => {
            make_experiment_instance(ExperimentKind::SphereIid, config.d, &mut rng)
        }
        ExperimentKindName::Anisotropic => make_experiment_instance(
            ExperimentKind::Anisotropic {
                epsilon: config.epsilon,
            },
            config.d,
            &mut rng,
        ),
        ExperimentKindName::Sparse => make_experiment_instance(
            ExperimentKind::SparseCube { sparsity: config.s },
            config.d,
            &mut rng,
        ),
        ExperimentKindName::Custom => {
            let theta = config
                .theta
                .clone()
                .ok_or_else(|| OrbitError::config("the custom experiment needs 'theta'"))?;
            make_custom_instance(theta, config.p_max.unwrap_or(crate::env::EXPERIMENT_P_MAX))
        }
        ExperimentKindName::HardInstance => {
            let family = HardFamily::new(hard_family_params(config, t))?;
            let omega = hard_family_omega(config, family.m());
            family.centered_instance(&omega)
        }
    }
}

/// Instance, oracle table and resolved policy settings at one horizon.
#[derive(Debug, Clone)]
pub struct HorizonContext {
    pub instance: Instance,
    pub table: OraclePriceTable,
    pub settings: PolicySettings,
    pub c_theta: f64,
    /// The unscaled confidence multiplier, reported next to the one used.
    pub c_w_paper: f64,
}

impl HorizonContext {
    pub fn new(config: &ExperimentConfig, t: u64) -> Result<Self> {
        config.validate()?;
        if t == 0 {
            return Err(OrbitError::config("horizon T must be positive"));
        }
        let instance = build_instance(config, t)?;
        let table = match config.oracle_resolution {
            Some(res) => OraclePriceTable::build(&instance, res)?,
            None => OraclePriceTable::build_default(&instance)?,
        };
        let d = instance.dim;
        let theta_norm = instance
            .utility
            .theta()
            .map(|th| th.iter().map(|v| v * v).sum::<f64>().sqrt());
        let c_theta = config
            .c_theta
            .or(theta_norm)
            .unwrap_or(instance.index_interval.1.abs());
        let c_w_paper = confidence_multiplier(c_theta, instance.p_max, t);
        let eta = config
            .eta
            .unwrap_or_else(|| default_eta(d, t, config.c_eta));
        let orbit = OrbitConfig {
            beta: config.beta,
            target_h: config.bin_width_for(t),
            horizon: t,
            m0: config.m0,
            eta_grid: config.eta_grid,
            bco: BcoParams {
                delta_cap: config.delta_cap,
                step_scale: config.step_scale,
                horizon: t,
            },
        };
        orbit.validate()?;
        let (n_exp, oracle) = match config.policy {
            PolicyKind::ExploreThenOrbitLasso => (
                resolve_n_exp(config, ScheduleKind::Sparse { s: config.s }, t, d)?,
                OracleSpec::Lasso {
                    c_lambda: config.c_lambda,
                },
            ),
            PolicyKind::ExploreThenOrbitLocpoly => (
                resolve_n_exp(
                    config,
                    ScheduleKind::Holder {
                        gamma: config.gamma,
                    },
                    t,
                    d,
                )?,
                OracleSpec::Locpoly {
                    gamma: config.gamma,
                },
            ),
            _ => (
                0,
                OracleSpec::Lasso {
                    c_lambda: config.c_lambda,
                },
            ),
        };
        let settings = PolicySettings {
            policy: config.policy,
            horizon: t,
            orbit,
            eta,
            c_w: config.c_w_multiplier * c_w_paper,
            n_exp,
            oracle,
        };
        Ok(HorizonContext {
            instance,
            table,
            settings,
            c_theta,
            c_w_paper,
        })
    }

    pub fn run_repetition(
        &self,
        config: &ExperimentConfig,
        repetition: usize,
        keep: bool,
    ) -> Result<RepetitionOutput> {
        let seeds = RepSeeds::from_stream(&SeedStream::new(config.master_seed, repetition as u64));
        simulate(
            &self.instance,
            &self.table,
            &self.settings,
            seeds,
            repetition,
            keep,
        )
    }

    /// Resolved constants for the metadata file.
    pub fn describe(&self) -> String {
        let s = &self.settings;
        let mut out = String::new();
        let _ = writeln!(out, "[T = {}]", s.horizon);
        let _ = writeln!(out, "dimension = {}", self.instance.dim);
        let _ = writeln!(out, "p_max = {:.16e}", self.instance.p_max);
        let (lo, hi) = self.instance.index_interval;
        let _ = writeln!(out, "index_interval = [{lo:.16e}, {hi:.16e}]");
        if let Some(theta) = self.instance.utility.theta() {
            let v: Vec<String> = theta.iter().map(|x| format!("{x:.16e}")).collect();
            let _ = writeln!(out, "theta = [{}]", v.join(", "));
        }
        let _ = writeln!(
            out,
            "oracle_table_resolution = {:.16e}",
            self.table.resolution()
        );
        let _ = writeln!(
            out,
            "oracle_table_ambiguous = {}",
            self.table.ambiguous_count()
        );
        let _ = writeln!(out, "bin_width = {:.16e}", s.orbit.target_h);
        let _ = writeln!(out, "rho_loc = {:.16e}", s.orbit.rho_loc());
        let _ = writeln!(out, "degree = {}", s.orbit.degree());
        let _ = writeln!(out, "c_theta = {:.16e}", self.c_theta);
        let _ = writeln!(out, "c_w_paper = {:.16e}", self.c_w_paper);
        let _ = writeln!(out, "c_w_used = {:.16e}", s.c_w);
        let _ = writeln!(out, "eta = {:.16e}", s.eta);
        let _ = writeln!(out, "n_exp = {}", s.n_exp);
        out
    }
}

fn resolve_n_exp(config: &ExperimentConfig, kind: ScheduleKind, t: u64, d: usize) -> Result<u64> {
    match config.n_exp {
        Some(n) if n >= t => Err(OrbitError::config(format!(
            "n_exp = {n} leaves no rounds for pricing at T = {t}"
        ))),
        Some(n) => Ok(n),
        None => schedule_n_exp(kind, t, d, config.n_exp_scale),
    }
}

/// Final cumulative regret across repetitions at one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonSummary {
    pub horizon: u64,
    pub finals: Vec<f64>,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub mean: f64,
    pub explore_rounds: Vec<u64>,
    pub slack_violations: u64,
}

impl HorizonSummary {
    pub fn from_finals(horizon: u64, finals: Vec<f64>) -> Self {
        HorizonSummary {
            horizon,
            median: median(&finals),
            q25: quantile(&finals, 0.25),
            q75: quantile(&finals, 0.75),
            mean: finals.iter().sum::<f64>() / finals.len() as f64,
            finals,
            explore_rounds: Vec::new(),
            slack_violations: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub horizons: Vec<HorizonSummary>,
    /// Resolved per-horizon constants.
    pub details: String,
}

/// Runs every repetition at every horizon. `sink` sees each repetition as
/// it finishes; transcripts are attached when `config.write_transcripts`.
pub fn run_with<F>(config: &ExperimentConfig, mut sink: F) -> Result<RunSummary>
where
    F: FnMut(&RepetitionOutput) -> Result<()>,
{
    config.validate()?;
    let mut horizons = Vec::with_capacity(config.horizons.len());
    let mut details = String::new();
    for &t in &config.horizons {
        let ctx = HorizonContext::new(config, t)?;
        details.push_str(&ctx.describe());
        let mut finals = Vec::with_capacity(config.repetitions);
        let mut explore = Vec::with_capacity(config.repetitions);
        let mut slack = 0;
        for rep in 0..config.repetitions {
            let out = ctx.run_repetition(config, rep, config.write_transcripts)?;
            sink(&out)?;
            finals.push(out.final_regret);
            explore.push(out.explore_rounds);
            slack += out.slack_violations;
        }
        let mut summary = HorizonSummary::from_finals(t, finals);
        summary.explore_rounds = explore;
        summary.slack_violations = slack;
        horizons.push(summary);
    }
    Ok(RunSummary { horizons, details })
}

/// Runs without transcripts.
pub fn run(config: &ExperimentConfig) -> Result<RunSummary> {
    let mut quiet = config.clone();
    quiet.write_transcripts = false;
    run_with(&quiet, |_| Ok(()))
}
