use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::PolicyKind;
use super::regret::{regret_raw, REGRET_SLACK};
use crate::bco::BcoParams;
use crate::env::{Instance, OraclePriceTable};
use crate::error::{OrbitError, Result};
use crate::orbit::{OrbitConfig, OrbitPhase, OrbitState};
use crate::pilot::{BurninDataset, FrozenPilot, OracleSpec, PilotDecision, RidgeState};
use crate::seed::{Purpose, SeedStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    PilotExplore,
    Burnin,
    Coarse,
    Refine,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::PilotExplore => "pilot_explore",
            Phase::Burnin => "burnin",
            Phase::Coarse => "coarse",
            Phase::Refine => "refine",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "pilot_explore" => Phase::PilotExplore,
            "burnin" => Phase::Burnin,
            "coarse" => Phase::Coarse,
            "refine" => Phase::Refine,
            _ => return None,
        })
    }

    fn from_orbit(p: OrbitPhase) -> Self {
        match p {
            OrbitPhase::Coarse => Phase::Coarse,
            OrbitPhase::Refine => Phase::Refine,
        }
    }
}

/// One transcript row.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    /// 1-based round.
    pub t: u64,
    pub phase: Phase,
    pub bin: Option<usize>,
    pub u: f64,
    pub u_tilde: Option<f64>,
    pub price: f64,
    pub purchase: bool,
    pub inst_regret: f64,
    pub cum_regret: f64,
}

/// Every tuning value one simulated run needs, already resolved.
#[derive(Debug, Clone)]
pub struct PolicySettings {
    pub policy: PolicyKind,
    pub horizon: u64,
    pub orbit: OrbitConfig,
    /// Adaptive pilot accuracy and confidence multiplier.
    pub eta: f64,
    pub c_w: f64,
    /// Burn-in length and oracle of the explore-then-commit policies.
    pub n_exp: u64,
    pub oracle: OracleSpec,
}

impl PolicySettings {
    /// ORBIT tuning for a pilot budget `h`, keeping everything else.
    pub fn orbit_for_budget(&self, h: u64) -> OrbitConfig {
        OrbitConfig {
            horizon: h,
            bco: BcoParams {
                horizon: h,
                ..self.orbit.bco
            },
            ..self.orbit
        }
    }
}

/// Seeds of the independent streams of one repetition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RepSeeds {
    pub contexts: u64,
    pub noise: u64,
    pub explore: u64,
    pub orbit: u64,
}

impl RepSeeds {
    pub fn from_stream(s: &SeedStream) -> Self {
        RepSeeds {
            contexts: s.seed(Purpose::Contexts, 0),
            noise: s.seed(Purpose::Noise, 0),
            explore: s.seed(Purpose::ExplorePrices, 0),
            orbit: s.seed(Purpose::Refinement, 0),
        }
    }
}

/// Outcome of one repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct RepetitionOutput {
    pub repetition: usize,
    pub horizon: u64,
    pub final_regret: f64,
    /// Pilot exploration plus burn-in rounds.
    pub explore_rounds: u64,
    pub orbit_rounds: u64,
    /// ORBIT rounds whose pilot value was within `eta` of the true index.
    pub pilot_within_eta: u64,
    pub max_pilot_error: f64,
    /// Rounds whose raw regret fell below the interpolation slack.
    pub slack_violations: u64,
    pub records: Vec<RunRecord>,
}

struct Ledger {
    cum: f64,
    keep: bool,
    out: RepetitionOutput,
}

impl Ledger {
    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        instance: &Instance,
        table: &OraclePriceTable,
        t: u64,
        phase: Phase,
        bin: Option<usize>,
        u: f64,
        u_tilde: Option<f64>,
        price: f64,
        purchase: bool,
    ) {
        let raw = regret_raw(instance, table, u, price);
        if raw < REGRET_SLACK {
            self.out.slack_violations += 1;
        }
        let inst = raw.max(0.0);
        self.cum += inst;
        if self.keep {
            self.out.records.push(RunRecord {
                t,
                phase,
                bin,
                u,
                u_tilde,
                price,
                purchase,
                inst_regret: inst,
                cum_regret: self.cum,
            });
        }
    }
}

enum Pilot {
    Adaptive(RidgeState),
    Frozen(FrozenPilot),
    Exact,
}

/// Simulates one repetition of `settings.policy` on `instance`.
pub fn simulate(
    instance: &Instance,
    table: &OraclePriceTable,
    settings: &PolicySettings,
    seeds: RepSeeds,
    repetition: usize,
    keep_records: bool,
) -> Result<RepetitionOutput> {
    let t_total = settings.horizon;
    if t_total == 0 {
        return Err(OrbitError::config("horizon T must be positive"));
    }
    let locate = |round: u64| {
        move |e: OrbitError| OrbitError::Run {
            repetition,
            round,
            source: Box::new(e),
        }
    };
    let mut ctx_rng = ChaCha8Rng::seed_from_u64(seeds.contexts);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(seeds.noise);
    let mut explore_rng = ChaCha8Rng::seed_from_u64(seeds.explore);
    let p_max = instance.p_max;
    let interval = instance.index_interval;
    let mut x = vec![0.0; instance.dim];
    let mut ledger = Ledger {
        cum: 0.0,
        keep: keep_records,
        out: RepetitionOutput {
            repetition,
            horizon: t_total,
            final_regret: 0.0,
            explore_rounds: 0,
            orbit_rounds: 0,
            pilot_within_eta: 0,
            max_pilot_error: 0.0,
            slack_violations: 0,
            records: Vec::with_capacity(if keep_records { t_total as usize } else { 0 }),
        },
    };
    let mut t = 1u64;

    // Explore-then-commit burn-in, or the whole run for uniform pricing.
    let burnin = match settings.policy {
        PolicyKind::UniformRandom => t_total,
        PolicyKind::ExploreThenOrbitLasso | PolicyKind::ExploreThenOrbitLocpoly => {
            settings.n_exp.min(t_total)
        }
        _ => 0,
    };
    let mut data = BurninDataset::new(instance.dim, p_max);
    while t <= burnin {
        instance.contexts.sample_into(&mut ctx_rng, &mut x);
        let u = instance.index(&x);
        let v: f64 = noise_rng.random();
        let price = explore_rng.random::<f64>() * p_max;
        let y = instance.tail.purchase_from_uniform(price - u, v);
        if settings.policy != PolicyKind::UniformRandom {
            data.push(x.clone(), y).map_err(locate(t))?;
        }
        ledger.push(instance, table, t, Phase::Burnin, None, u, None, price, y);
        ledger.out.explore_rounds += 1;
        t += 1;
    }
    if t > t_total {
        ledger.out.final_regret = ledger.cum;
        return Ok(ledger.out);
    }

    let mut pilot = match settings.policy {
        PolicyKind::OrbitAdaptive => {
            Pilot::Adaptive(RidgeState::new(instance.dim, settings.eta, settings.c_w)?)
        }
        PolicyKind::OrbitExact => Pilot::Exact,
        _ => Pilot::Frozen(
            FrozenPilot::fit(data, settings.oracle, t_total, interval).map_err(locate(t))?,
        ),
    };
    let budget = t_total - burnin;
    let mut orbit = OrbitState::new(
        settings.orbit_for_budget(budget),
        interval,
        p_max,
        seeds.orbit,
    )?;

    while t <= t_total {
        instance.contexts.sample_into(&mut ctx_rng, &mut x);
        let u = instance.index(&x);
        let v: f64 = noise_rng.random();
        let u_tilde = match &mut pilot {
            Pilot::Adaptive(ridge) => match ridge.decide(&x, interval).map_err(locate(t))? {
                PilotDecision::Explore => {
                    let price = explore_rng.random::<f64>() * p_max;
                    let y = instance.tail.purchase_from_uniform(price - u, v);
                    ridge.update(&x, p_max, y).map_err(locate(t))?;
                    ledger.push(
                        instance,
                        table,
                        t,
                        Phase::PilotExplore,
                        None,
                        u,
                        None,
                        price,
                        y,
                    );
                    ledger.out.explore_rounds += 1;
                    t += 1;
                    continue;
                }
                PilotDecision::Orbit(ut) => ut,
            },
            Pilot::Frozen(fp) => fp.predict(&x).map_err(locate(t))?,
            Pilot::Exact => instance.project_index(u),
        };
        let prop = orbit.propose(u_tilde).map_err(locate(t))?;
        let y = instance.tail.purchase_from_uniform(prop.price - u, v);
        orbit.observe(y).map_err(locate(t))?;
        let err = (u_tilde - u).abs();
        ledger.out.orbit_rounds += 1;
        if err <= settings.eta {
            ledger.out.pilot_within_eta += 1;
        }
        ledger.out.max_pilot_error = ledger.out.max_pilot_error.max(err);
        ledger.push(
            instance,
            table,
            t,
            Phase::from_orbit(prop.phase),
            Some(prop.bin),
            u,
            Some(u_tilde),
            prop.price,
            y,
        );
        t += 1;
    }
    ledger.out.final_regret = ledger.cum;
    Ok(ledger.out)
}
