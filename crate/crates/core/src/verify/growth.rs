use super::{RevenueCurve, DIFF_STEP};
use crate::error::{OrbitError, Result};

/// Extremes of `2 (r(u, p*) - r(u, p)) / (p - p*)^2` over a scan grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthEstimate {
    pub sigma: f64,
    pub l: f64,
    pub n_u: usize,
    pub n_p: usize,
    /// Price spacing of the scan.
    pub resolution: f64,
}

fn index_grid(interval: (f64, f64), n: usize) -> impl Iterator<Item = f64> {
    let (lo, hi) = interval;
    (0..n).map(move |i| {
        if n == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    })
}

/// Scans `n_u` indices and `n_p` prices, skipping prices within ten grid
/// steps of the maximizer.
pub fn quadratic_growth_scan<C: RevenueCurve + ?Sized>(
    curve: &C,
    n_u: usize,
    n_p: usize,
) -> Result<GrowthEstimate> {
    let p_max = curve.p_max();
    let res = p_max / (n_p - 1) as f64;
    let mut sigma = f64::INFINITY;
    let mut l: f64 = 0.0;
    for u in index_grid(curve.index_interval(), n_u) {
        let p_star = curve.oracle_price(u);
        let r_star = curve.revenue(u, p_star);
        for k in 0..n_p {
            let p = k as f64 * res;
            let dp = p - p_star;
            if dp.abs() < 10.0 * res {
                continue;
            }
            let gap = r_star - curve.revenue(u, p);
            if gap < -1e-12 {
                return Err(OrbitError::Numerical(format!(
                    "price {p} beats the oracle price {p_star} at u = {u} by {}",
                    -gap
                )));
            }
            let ratio = 2.0 * gap.max(0.0) / (dp * dp);
            sigma = sigma.min(ratio);
            l = l.max(ratio);
        }
    }
    Ok(GrowthEstimate {
        sigma,
        l,
        n_u,
        n_p,
        resolution: res,
    })
}

fn second_difference<C: RevenueCurve + ?Sized>(curve: &C, u: f64, p: f64) -> f64 {
    let h = DIFF_STEP;
    (curve.revenue(u, p + h) - 2.0 * curve.revenue(u, p) + curve.revenue(u, p - h)) / (h * h)
}

/// Largest dyadic radius `rho = p_max 2^{-k}` such that `-r_pp >= sigma/2`
/// on `|p - p*(u)| <= rho` for 200 indices, with the band inside
/// `(0, p_max)`. `None` when no radius down to `p_max 2^{-40}` qualifies.
pub fn concavity_radius<C: RevenueCurve + ?Sized>(curve: &C, sigma: f64) -> Option<f64> {
    let p_max = curve.p_max();
    let centers: Vec<(f64, f64)> = index_grid(curve.index_interval(), 200)
        .map(|u| (u, curve.oracle_price(u)))
        .collect();
    (1..=40).map(|k| p_max * 0.5f64.powi(k)).find(|&rho| {
        centers.iter().all(|&(u, p_star)| {
            if p_star - rho <= DIFF_STEP || p_star + rho >= p_max - DIFF_STEP {
                return false;
            }
            (0..=100).all(|i| {
                let p = p_star - rho + 2.0 * rho * i as f64 / 100.0;
                -second_difference(curve, u, p) >= sigma / 2.0
            })
        })
    })
}

/// Largest slope of the oracle map between neighbours of an `n`-point
/// index grid.
pub fn oracle_lipschitz<C: RevenueCurve + ?Sized>(curve: &C, n: usize) -> f64 {
    let pts: Vec<(f64, f64)> = index_grid(curve.index_interval(), n)
        .map(|u| (u, curve.oracle_price(u)))
        .collect();
    pts.windows(2)
        .map(|w| (w[1].1 - w[0].1).abs() / (w[1].0 - w[0].0))
        .fold(0.0, f64::max)
}
