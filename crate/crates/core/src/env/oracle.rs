use super::instance::Instance;
use crate::error::{OrbitError, Result};
use crate::numeric::golden_section_max;

/// Coarse bracketing resolution, relative to the price cap.
const COARSE_RELATIVE: f64 = 1e-3;
const GOLDEN_TOL: f64 = 1e-8;

/// Result of a single oracle-price search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    pub price: f64,
    pub revenue: f64,
    /// Set when the maximum is attained on a flat top wider than `10 * tol`;
    /// the smallest maximizer is returned in that case.
    pub ambiguous: bool,
}

/// Maximizes a revenue curve on `[0, p_max]`: dense bracketing followed by
/// golden-section refinement, ties resolved toward the smallest price.
pub fn oracle_price_for<F: Fn(f64) -> f64>(revenue: F, p_max: f64) -> OracleResult {
    let n = (1.0 / COARSE_RELATIVE).ceil() as usize;
    let step = p_max / n as f64;
    let mut best = 0usize;
    let mut best_val = f64::NEG_INFINITY;
    let values: Vec<f64> = (0..=n).map(|i| revenue(i as f64 * step)).collect();
    for (i, &v) in values.iter().enumerate() {
        if v > best_val {
            best_val = v;
            best = i;
        }
    }
    let lo = best.saturating_sub(1) as f64 * step;
    let hi = ((best + 1).min(n)) as f64 * step;
    let mut price = golden_section_max(&revenue, lo, hi, GOLDEN_TOL);
    let mut value = revenue(price);
    for candidate in [lo, hi] {
        if revenue(candidate) > value {
            price = candidate;
            value = revenue(candidate);
        }
    }
    // Flat-top detection: the maximum still holds 10 tol to the left.
    let flat = 4.0 * f64::EPSILON * value.abs().max(1.0);
    let left = price - 10.0 * GOLDEN_TOL;
    let ambiguous = left >= 0.0 && revenue(left) >= value - flat;
    if ambiguous {
        // Bisect for the left edge of the flat top.
        let below = values[..=best].iter().rposition(|&v| v < value - flat);
        let Some(i) = below else {
            return OracleResult {
                price: 0.0,
                revenue: revenue(0.0),
                ambiguous,
            };
        };
        let (mut a, mut b) = (i as f64 * step, left);
        while b - a > GOLDEN_TOL {
            let m = 0.5 * (a + b);
            if revenue(m) >= value - flat {
                b = m;
            } else {
                a = m;
            }
        }
        price = b;
        value = revenue(b);
    }
    OracleResult {
        price,
        revenue: value,
        ambiguous,
    }
}

/// Oracle prices on an equispaced index grid with linear interpolation.
#[derive(Debug, Clone)]
pub struct OraclePriceTable {
    grid: Vec<f64>,
    values: Vec<f64>,
    resolution: f64,
    tol: f64,
    ambiguous: usize,
}

impl OraclePriceTable {
    /// Builds the table with spacing at most `resolution` over the index
    /// interval and checks that every price is strictly interior.
    pub fn build(instance: &Instance, resolution: f64) -> Result<Self> {
        let (lo, hi) = instance.index_interval;
        if !(resolution > 0.0) {
            return Err(OrbitError::config(
                "oracle table resolution must be positive",
            ));
        }
        let n = ((hi - lo) / resolution).ceil().max(1.0) as usize;
        let step = (hi - lo) / n as f64;
        let mut grid = Vec::with_capacity(n + 1);
        let mut values = Vec::with_capacity(n + 1);
        let mut ambiguous = 0;
        for i in 0..=n {
            let u = if i == n { hi } else { lo + i as f64 * step };
            let r = oracle_price_for(|p| instance.revenue(u, p), instance.p_max);
            if !(r.price > 0.0 && r.price < instance.p_max) {
                return Err(OrbitError::Structure(format!(
                    "oracle price {} at u = {u} is not interior to (0, p_max)",
                    r.price
                )));
            }
            ambiguous += r.ambiguous as usize;
            grid.push(u);
            values.push(r.price);
        }
        Ok(OraclePriceTable {
            grid,
            values,
            resolution: step,
            tol: GOLDEN_TOL,
            ambiguous,
        })
    }

    /// Default table for regret accounting: spacing `1e-3 * |interval|`.
    pub fn build_default(instance: &Instance) -> Result<Self> {
        let (lo, hi) = instance.index_interval;
        Self::build(instance, 1e-3 * (hi - lo))
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Number of grid points whose maximizer was a flat top.
    pub fn ambiguous_count(&self) -> usize {
        self.ambiguous
    }

    /// Linearly interpolated `p*(u)`; `u` is clamped to the table range.
    pub fn price(&self, u: f64) -> f64 {
        let lo = self.grid[0];
        let n = self.grid.len() - 1;
        let pos = ((u - lo) / self.resolution).clamp(0.0, n as f64);
        let i = (pos.floor() as usize).min(n.saturating_sub(1));
        if n == 0 {
            return self.values[0];
        }
        let frac = pos - i as f64;
        self.values[i] + frac * (self.values[i + 1] - self.values[i])
    }

    /// Largest slope between consecutive grid values.
    pub fn lipschitz_estimate(&self) -> f64 {
        self.values
            .windows(2)
            .zip(self.grid.windows(2))
            .map(|(v, g)| (v[1] - v[0]).abs() / (g[1] - g[0]))
            .fold(0.0, f64::max)
    }

    pub fn check_lipschitz(&self, bound: f64) -> Result<()> {
        let l = self.lipschitz_estimate();
        if l > bound {
            return Err(OrbitError::Structure(format!(
                "oracle map slope {l} exceeds the bound {bound}"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::instance::{make_experiment_instance, revenue, ExperimentKind};
    use crate::env::tail::{experiment_tail, truncated_linear_tail};
    use crate::seed::{Purpose, SeedStream};
    use approx::assert_abs_diff_eq;

    #[test]
    fn uniform_tail_oracle_is_half_sum() {
        let b = 31.0 / 32.0;
        let g = truncated_linear_tail(b).unwrap();
        for &u in &[0.0, 1.0 / 32.0] {
            let r = oracle_price_for(|p| revenue(u, p, &g), 1.0);
            assert_abs_diff_eq!(r.price, (b + u) / 2.0, epsilon = 1e-7);
            assert!(!r.ambiguous);
        }
    }

    #[test]
    fn golden_section_matches_dense_grid() {
        let g = experiment_tail();
        let r = oracle_price_for(|p| revenue(2.0, p, &g), 3.5);
        let mut best = (0.0, f64::NEG_INFINITY);
        let n = 3_500_000;
        for i in 0..=n {
            let p = i as f64 * 1e-6;
            let v = revenue(2.0, p, &g);
            if v > best.1 {
                best = (p, v);
            }
        }
        assert_abs_diff_eq!(r.price, best.0, epsilon = 1e-6);
    }

    #[test]
    fn flat_top_resolves_to_smallest_maximizer() {
        let f = |p: f64| {
            if (0.4..=0.9).contains(&p) {
                1.0
            } else {
                1.0 - (p - 0.65).abs()
            }
        };
        let r = oracle_price_for(f, 2.0);
        assert!(r.ambiguous);
        assert_abs_diff_eq!(r.price, 0.4, epsilon = 1e-7);
    }

    #[test]
    fn table_interpolates_and_is_interior() {
        let mut rng = SeedStream::new(0, 0).rng(Purpose::Auxiliary);
        let inst = make_experiment_instance(ExperimentKind::SphereIid, 5, &mut rng).unwrap();
        let table = OraclePriceTable::build_default(&inst).unwrap();
        assert_eq!(table.grid().len(), 1001);
        let direct = inst.oracle_price(2.0005).unwrap();
        assert_abs_diff_eq!(table.price(2.0005), direct, epsilon = 1e-6);
        let l = table.lipschitz_estimate();
        assert!(l > 0.5 && l < 2.0, "{l}");
        table.check_lipschitz(2.0).unwrap();
    }
}
