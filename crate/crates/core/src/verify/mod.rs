//! Numerical structure checks: revenue growth constants, the local
//! concavity radius, the oracle-map slope, CDF-shape constants and the
//! learning/approximation split of refinement regret.

mod cdf;
mod decomposition;
mod growth;

pub use cdf::{cdf_shape_constants, reachable_gap_range, CdfReport};
pub use decomposition::{refinement_decomposition, BinDecomposition, BinGeometry, RefineRow};
pub use growth::{concavity_radius, oracle_lipschitz, quadratic_growth_scan, GrowthEstimate};

use crate::env::{oracle_price_for, Instance, TailModel};
use crate::error::Result;

/// Step of every central difference in this module.
pub const DIFF_STEP: f64 = 1e-4;

/// A family of revenue curves indexed by the utility index.
pub trait RevenueCurve {
    fn revenue(&self, u: f64, p: f64) -> f64;
    fn p_max(&self) -> f64;
    fn index_interval(&self) -> (f64, f64);

    fn oracle_price(&self, u: f64) -> f64 {
        oracle_price_for(|p| self.revenue(u, p), self.p_max()).price
    }

    /// Tail behind the curve, when it has the `p g(p - u)` form.
    fn tail(&self) -> Option<&TailModel> {
        None
    }
}

impl RevenueCurve for Instance {
    fn revenue(&self, u: f64, p: f64) -> f64 {
        Instance::revenue(self, u, p)
    }

    fn p_max(&self) -> f64 {
        self.p_max
    }

    fn index_interval(&self) -> (f64, f64) {
        self.index_interval
    }

    fn tail(&self) -> Option<&TailModel> {
        Some(&self.tail)
    }
}

/// Collected structure estimates for one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureReport {
    pub growth: GrowthEstimate,
    pub growth_refined: GrowthEstimate,
    pub rho0: Option<f64>,
    pub lp: f64,
    pub lp_refined: f64,
    pub cdf: Option<CdfReport>,
}

impl StructureReport {
    pub fn growth_stable(&self) -> bool {
        rel_change(self.growth.sigma, self.growth_refined.sigma) < 0.05
            && rel_change(self.growth.l, self.growth_refined.l) < 0.05
    }

    pub fn lp_stable(&self) -> bool {
        rel_change(self.lp, self.lp_refined) < 0.05
    }

    /// Whether the CDF-implied bracket contains the scanned constants; `None`
    /// when the CDF check does not apply.
    pub fn bracket_contains(&self) -> Option<bool> {
        self.cdf
            .as_ref()
            .filter(|c| c.applicable)
            .map(|c| c.contains(&self.growth))
    }

    pub fn passed(&self) -> bool {
        self.growth.sigma > 0.0
            && self.growth.sigma <= self.growth.l
            && self.rho0.is_some_and(|r| r > 0.0)
            && self.lp_stable()
            && self.bracket_contains() != Some(false)
    }

    /// `key = value` lines.
    pub fn to_text(&self) -> String {
        let mut lines = vec![
            format!("sigma_r_est = {:.16e}", self.growth.sigma),
            format!("L_r_est = {:.16e}", self.growth.l),
            format!("growth_grid = {}x{}", self.growth.n_u, self.growth.n_p),
            format!("sigma_r_est_refined = {:.16e}", self.growth_refined.sigma),
            format!("L_r_est_refined = {:.16e}", self.growth_refined.l),
            format!("growth_stable = {}", self.growth_stable()),
            format!(
                "rho0_est = {}",
                self.rho0
                    .map_or("none".to_string(), |r| format!("{r:.16e}"))
            ),
            format!("L_p_est = {:.16e}", self.lp),
            format!("L_p_est_refined = {:.16e}", self.lp_refined),
            format!("L_p_stable = {}", self.lp_stable()),
        ];
        match &self.cdf {
            Some(c) => {
                lines.push(format!("cdf_applicable = {}", c.applicable));
                lines.push(format!(
                    "cdf_gap_range = [{:.16e}, {:.16e}]",
                    c.gap_range.0, c.gap_range.1
                ));
                lines.push(format!("c_l = {:.16e}", c.c_l));
                lines.push(format!("c_u = {:.16e}", c.c_u));
                lines.push(format!("M_f = {:.16e}", c.m_f));
                lines.push(format!("c_phi = {:.16e}", c.c_phi));
                lines.push(format!("implied_sigma_lower = {:.16e}", c.sigma_lower()));
                lines.push(format!("implied_L_upper = {:.16e}", c.l_upper()));
                lines.push(format!(
                    "bracket_contains_scan = {}",
                    self.bracket_contains()
                        .map_or("not_applicable".to_string(), |b| b.to_string())
                ));
            }
            None => lines.push("cdf_applicable = false".to_string()),
        }
        lines.push(format!("passed = {}", self.passed()));
        lines.join("\n") + "\n"
    }
}

fn rel_change(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Runs every structure check at the default resolutions and again with
/// the grids doubled.
pub fn structure_report<C: RevenueCurve + ?Sized>(curve: &C) -> Result<StructureReport> {
    let growth = quadratic_growth_scan(curve, 200, 400)?;
    let growth_refined = quadratic_growth_scan(curve, 400, 800)?;
    let rho0 = concavity_radius(curve, growth.sigma);
    let lp = oracle_lipschitz(curve, 1000);
    let lp_refined = oracle_lipschitz(curve, 2000);
    let cdf = curve
        .tail()
        .map(|tail| cdf_shape_constants(tail, reachable_gap_range(curve, tail)));
    Ok(StructureReport {
        growth,
        growth_refined,
        rho0,
        lp,
        lp_refined,
        cdf,
    })
}
