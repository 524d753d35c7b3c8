use std::sync::Arc;

use super::lasso::{default_lambda, lasso_fit, LassoFit};
use super::locpoly::{default_bandwidth, default_degree, locpoly_predict};
use crate::env::Utility;
use crate::error::{OrbitError, Result};

/// Burn-in rows `(x, p_max * y)` collected under uniform prices.
#[derive(Debug, Clone)]
pub struct BurninDataset {
    dim: usize,
    p_max: f64,
    contexts: Vec<Vec<f64>>,
    responses: Vec<f64>,
}

impl BurninDataset {
    pub fn new(dim: usize, p_max: f64) -> Self {
        BurninDataset {
            dim,
            p_max,
            contexts: Vec::new(),
            responses: Vec::new(),
        }
    }

    /// Adds the pseudo-response `p_max * y` of a burn-in round.
    pub fn push(&mut self, x: Vec<f64>, purchase: bool) -> Result<()> {
        if x.len() != self.dim {
            return Err(OrbitError::contract(
                "burn-in context has the wrong dimension",
            ));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(OrbitError::contract("burn-in context is not finite"));
        }
        self.contexts.push(x);
        self.responses.push(if purchase { self.p_max } else { 0.0 });
        Ok(())
    }

    /// Adds an arbitrary response; used for oracle-level regression tests.
    pub fn push_unchecked(&mut self, x: Vec<f64>, z: f64) {
        self.contexts.push(x);
        self.responses.push(z);
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    pub fn contexts(&self) -> &[Vec<f64>] {
        &self.contexts
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }
}

/// Which offline estimator to fit after burn-in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleSpec {
    Lasso { c_lambda: f64 },
    Locpoly { gamma: f64 },
}

#[derive(Clone, Debug)]
enum FrozenOracle {
    Lasso(LassoFit),
    Locpoly {
        data: Arc<BurninDataset>,
        bandwidth: f64,
        degree: usize,
    },
    Given(Utility),
}

/// Estimator frozen after burn-in; predictions are clamped to the index
/// interval.
#[derive(Clone, Debug)]
pub struct FrozenPilot {
    oracle: FrozenOracle,
    interval: (f64, f64),
}

impl FrozenPilot {
    /// Fits the requested oracle on `data`; `horizon` enters the default
    /// penalty and bandwidth formulas.
    pub fn fit(
        data: BurninDataset,
        spec: OracleSpec,
        horizon: u64,
        interval: (f64, f64),
    ) -> Result<Self> {
        if data.is_empty() {
            return Err(OrbitError::contract("burn-in produced no data"));
        }
        let oracle = match spec {
            OracleSpec::Lasso { c_lambda } => {
                let lambda =
                    default_lambda(c_lambda, data.p_max(), data.dim(), horizon, data.len());
                FrozenOracle::Lasso(lasso_fit(&data, lambda)?)
            }
            OracleSpec::Locpoly { gamma } => {
                let bandwidth = default_bandwidth(gamma, data.dim(), horizon, data.len());
                FrozenOracle::Locpoly {
                    data: Arc::new(data),
                    bandwidth,
                    degree: default_degree(gamma),
                }
            }
        };
        Ok(FrozenPilot { oracle, interval })
    }

    /// Wraps a known utility, for interface checks with a perfect oracle.
    pub fn exact(utility: Utility, interval: (f64, f64)) -> Self {
        FrozenPilot {
            oracle: FrozenOracle::Given(utility),
            interval,
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let raw = match &self.oracle {
            FrozenOracle::Lasso(fit) => fit.theta.iter().zip(x).map(|(a, b)| a * b).sum(),
            FrozenOracle::Locpoly {
                data,
                bandwidth,
                degree,
            } => locpoly_predict(data, x, *bandwidth, *degree)?,
            FrozenOracle::Given(u) => u.eval(x),
        };
        Ok(raw.clamp(self.interval.0, self.interval.1))
    }

    pub fn kind(&self) -> &'static str {
        match self.oracle {
            FrozenOracle::Lasso(_) => "lasso",
            FrozenOracle::Locpoly { .. } => "locpoly",
            FrozenOracle::Given(_) => "exact",
        }
    }

    pub fn lasso(&self) -> Option<&LassoFit> {
        match &self.oracle {
            FrozenOracle::Lasso(fit) => Some(fit),
            _ => None,
        }
    }

    /// Bandwidth and degree of a local-polynomial pilot.
    pub fn locpoly_settings(&self) -> Option<(f64, usize)> {
        match &self.oracle {
            FrozenOracle::Locpoly {
                bandwidth, degree, ..
            } => Some((*bandwidth, *degree)),
            _ => None,
        }
    }
}

/// Burn-in length rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleKind {
    /// `c * s * sqrt(T)`.
    Sparse { s: usize },
    /// `c * T^{(2 gamma + d)/(4 gamma + d)}`.
    Holder { gamma: f64 },
}

/// Burn-in length, clamped to `[d + 1, T/2]`; the upper end wins when the
/// two bounds cross.
pub fn schedule_n_exp(kind: ScheduleKind, t: u64, d: usize, c: f64) -> Result<u64> {
    if t < 4 {
        return Err(OrbitError::config(format!(
            "horizon T = {t} is too short for a burn-in (needs T >= 4)"
        )));
    }
    if !(c > 0.0) {
        return Err(OrbitError::config("burn-in constant must be positive"));
    }
    let raw = match kind {
        ScheduleKind::Sparse { s } => c * s as f64 * (t as f64).sqrt(),
        ScheduleKind::Holder { gamma } => {
            let d = d as f64;
            c * (t as f64).powf((2.0 * gamma + d) / (4.0 * gamma + d))
        }
    };
    let upper = t / 2;
    Ok((raw.round() as u64).max(d as u64 + 1).min(upper))
}
