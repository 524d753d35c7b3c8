//! The bump-perturbed lower-bound family.
//!
//! A smooth baseline tail `g0` equals the truncated-linear tail `1 - z/B` on
//! a wide interior strip. Odd bumps of width `w` and height `kappa w^beta`
//! placed at the baseline optimal gaps `z_j = B/2 - j w` move the oracle
//! price at the grid context `c_j = 2 j w` by order `w^(beta-1)` in the
//! direction of the sign `omega_j`. Every perturbation integrates to zero,
//! so all members share the noise mean `mu0`, and the centered instance
//! uses contexts `mu0 + c_j`.

use std::sync::Arc;

use crate::env::{oracle_price_for, smooth_cutoff, ContextLaw, Instance, TailModel, Utility};
use crate::error::{OrbitError, Result};
use crate::numeric::{adaptive_simpson, bisect, integrate_piecewise};

pub const C_LOC: f64 = 1.0 / 32.0;
pub const B: f64 = 1.0 - C_LOC;

/// Odd bump `e t exp(-1/(1 - (8t)^2))` on `|t| < 1/8` with slope 1 at 0.
pub fn bump_phi(t: f64) -> f64 {
    let q = 1.0 - 64.0 * t * t;
    if q <= 0.0 {
        return 0.0;
    }
    std::f64::consts::E * t * (-1.0 / q).exp()
}

pub fn bump_phi_prime(t: f64) -> f64 {
    let q = 1.0 - 64.0 * t * t;
    if q <= 0.0 {
        return 0.0;
    }
    std::f64::consts::E * (-1.0 / q).exp() * (1.0 - 128.0 * t * t / (q * q))
}

/// Subintervals of the tabulated shoulder integral.
const SHOULDER_CELLS: usize = 2048;

/// Smooth baseline tail: shoulders of width `delta` at both ends of `[0, B]`
/// and the exact line `1 - z/B` between them.
#[derive(Debug, Clone)]
pub struct BaselineShape {
    epsilon0: f64,
    delta: f64,
    coefficient: f64,
    /// `H_L` at the cell edges of `[0, delta]`.
    cumulative: Vec<f64>,
}

impl BaselineShape {
    pub fn new(epsilon0: f64, delta: f64) -> Result<Self> {
        let limit = (1.0f64 / 8.0).min(B - 7.0 / 8.0).min(B * epsilon0 / 4.0);
        if !(delta > 0.0 && delta < limit) {
            return Err(OrbitError::config(format!(
                "shoulder width {delta} must lie in (0, {limit}) for epsilon0 = {epsilon0}"
            )));
        }
        let target = delta / B;
        let tol = 1e-14 * delta;
        let mass = |c: f64| {
            let h = |z: f64| shoulder_density(delta, c, z);
            integrate_piecewise(
                &h,
                0.0,
                delta,
                &[delta / 8.0, delta / 4.0, 0.75 * delta, 0.875 * delta],
                tol,
            )
        };
        let mut hi = 1.0;
        while mass(hi) < target {
            hi *= 2.0;
            if hi > 1e12 {
                return Err(OrbitError::Structure(
                    "shoulder coefficient search diverged".into(),
                ));
            }
        }
        let coefficient = bisect(|c| mass(c) - target, 0.0, hi, 1e-12, 200)
            .ok_or_else(|| OrbitError::Structure("shoulder coefficient has no root".into()))?;
        let step = delta / SHOULDER_CELLS as f64;
        let mut cumulative = Vec::with_capacity(SHOULDER_CELLS + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        let h = |z: f64| shoulder_density(delta, coefficient, z);
        for i in 0..SHOULDER_CELLS {
            acc += adaptive_simpson(&h, i as f64 * step, (i + 1) as f64 * step, 1e-18);
            cumulative.push(acc);
        }
        Ok(BaselineShape {
            epsilon0,
            delta,
            coefficient,
            cumulative,
        })
    }

    /// Defaults `epsilon0 = 0.01`, `delta = min(1/16, B epsilon0 / 8)`.
    pub fn default_shape() -> Self {
        let eps = 0.01;
        Self::new(eps, default_delta(eps)).expect("default shoulder parameters are feasible")
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn epsilon0(&self) -> f64 {
        self.epsilon0
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    /// `H_L(z) = int_0^z h_L`, by cubic Hermite interpolation of the table
    /// using the exact density as slope.
    fn shoulder_integral(&self, z: f64) -> f64 {
        let step = self.delta / SHOULDER_CELLS as f64;
        let pos = (z / step).clamp(0.0, SHOULDER_CELLS as f64);
        let i = (pos.floor() as usize).min(SHOULDER_CELLS - 1);
        let t = pos - i as f64;
        let (y0, y1) = (self.cumulative[i], self.cumulative[i + 1]);
        let m0 = step * shoulder_density(self.delta, self.coefficient, i as f64 * step);
        let m1 = step * shoulder_density(self.delta, self.coefficient, (i + 1) as f64 * step);
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1
    }

    pub fn value(&self, z: f64) -> f64 {
        if z <= 0.0 {
            1.0
        } else if z >= B {
            0.0
        } else if z < self.delta {
            1.0 - self.shoulder_integral(z)
        } else if z > B - self.delta {
            self.shoulder_integral(B - z)
        } else {
            1.0 - z / B
        }
    }

    /// Density `-g0'(z)`.
    pub fn density(&self, z: f64) -> f64 {
        if z <= 0.0 || z >= B {
            0.0
        } else if z < self.delta {
            shoulder_density(self.delta, self.coefficient, z)
        } else if z > B - self.delta {
            shoulder_density(self.delta, self.coefficient, B - z)
        } else {
            1.0 / B
        }
    }

    /// Breakpoints where the piecewise definition switches.
    pub fn breakpoints(&self) -> Vec<f64> {
        vec![
            0.0,
            self.delta / 4.0,
            0.75 * self.delta,
            self.delta,
            B - self.delta,
            B - 0.75 * self.delta,
            B - self.delta / 4.0,
            B,
        ]
    }

    pub fn tail(self: &Arc<Self>) -> TailModel {
        let shape = Arc::clone(self);
        TailModel::new(move |z| shape.value(z), 0.0, B, f64::INFINITY)
            .expect("baseline support is valid")
    }
}

pub fn default_delta(epsilon0: f64) -> f64 {
    (1.0f64 / 16.0).min(B * epsilon0 / 8.0)
}

/// Left shoulder density: a smooth rise from 0 to `1/B` over
/// `[delta/4, 3 delta/4]` plus `c` times an interior bump on
/// `[delta/8, 7 delta/8]`.
fn shoulder_density(delta: f64, c: f64, z: f64) -> f64 {
    let rise = smooth_cutoff((z - delta / 4.0) / (delta / 2.0)) / B;
    let s = (z - delta / 2.0) / (0.375 * delta);
    let bump = if s.abs() < 1.0 {
        (-1.0 / (1.0 - s * s)).exp()
    } else {
        0.0
    };
    rise + c * bump
}

/// Baseline tail as a [`TailModel`].
pub fn baseline_tail(epsilon0: f64, delta: f64) -> Result<TailModel> {
    Ok(Arc::new(BaselineShape::new(epsilon0, delta)?).tail())
}

/// Parameters of the family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardFamilyParams {
    pub beta: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub t_nominal: f64,
    pub epsilon0: f64,
    pub delta: f64,
}

impl HardFamilyParams {
    /// Defaults `gamma = 0.1`, `kappa = 0.05`, `epsilon0 = 0.01` and the
    /// default shoulder width.
    pub fn new(beta: f64, t_nominal: f64) -> Self {
        HardFamilyParams {
            beta,
            gamma: 0.1,
            kappa: 0.05,
            t_nominal,
            epsilon0: 0.01,
            delta: default_delta(0.01),
        }
    }
}

/// Per-context oracle displacement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftReport {
    /// 1-based grid index.
    pub j: usize,
    pub baseline_price: f64,
    pub price: f64,
    /// `omega_j (p*_omega(c_j) - p_j^0) / w^(beta-1)`.
    pub ratio: f64,
    pub sign_matches: bool,
}

#[derive(Debug, Clone)]
pub struct HardFamily {
    params: HardFamilyParams,
    w: f64,
    m: usize,
    mu0: f64,
    shape: Arc<BaselineShape>,
}

impl HardFamily {
    pub fn new(params: HardFamilyParams) -> Result<Self> {
        if !(params.beta >= 2.0) || !params.beta.is_finite() {
            return Err(OrbitError::config(format!(
                "beta = {} must be a finite value >= 2",
                params.beta
            )));
        }
        if !(params.gamma > 0.0 && params.kappa >= 0.0 && params.t_nominal >= 1.0) {
            return Err(OrbitError::config(
                "gamma and T must be positive and kappa nonnegative",
            ));
        }
        let w = params.gamma * params.t_nominal.powf(-1.0 / (4.0 * params.beta - 3.0));
        let m = (1.0 / (64.0 * w) + 1e-9).floor() as usize;
        if m == 0 {
            return Err(OrbitError::config(format!(
                "horizon too small: bump width {w} leaves no grid contexts"
            )));
        }
        let shape = Arc::new(BaselineShape::new(params.epsilon0, params.delta)?);
        let breaks = shape.breakpoints();
        let g = |z: f64| shape.value(z);
        let mu0 = integrate_piecewise(&g, 0.0, B, &breaks, 1e-12);
        Ok(HardFamily {
            params,
            w,
            m,
            mu0,
            shape,
        })
    }

    pub fn params(&self) -> &HardFamilyParams {
        &self.params
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    pub fn shape(&self) -> &Arc<BaselineShape> {
        &self.shape
    }

    /// Bump center `z_j = B/2 - j w` (1-based `j`).
    pub fn z(&self, j: usize) -> f64 {
        B / 2.0 - j as f64 * self.w
    }

    /// Local grid coordinate `c_j = 2 j w`.
    pub fn c(&self, j: usize) -> f64 {
        2.0 * j as f64 * self.w
    }

    /// `(B + c_j)/2`.
    pub fn baseline_price(&self, j: usize) -> f64 {
        (B + self.c(j)) / 2.0
    }

    fn amplitude(&self) -> f64 {
        self.params.kappa * self.w.powf(self.params.beta)
    }

    /// The bump whose support contains `z`, if any.
    fn active_bump(&self, z: f64) -> Option<(usize, f64)> {
        let j = ((B / 2.0 - z) / self.w).round();
        if j < 1.0 || j > self.m as f64 {
            return None;
        }
        let j = j as usize;
        let t = (z - self.z(j)) / self.w;
        (t.abs() < 0.125).then_some((j, t))
    }

    fn check_omega(&self, omega: &[i8]) -> Result<()> {
        if omega.len() != self.m || omega.iter().any(|s| *s != 1 && *s != -1) {
            return Err(OrbitError::contract(format!(
                "omega must be a sign vector of length {}",
                self.m
            )));
        }
        Ok(())
    }

    /// `g_omega(z)` in the uncentered coordinate.
    pub fn perturbed_value(&self, omega: &[i8], z: f64) -> f64 {
        let base = self.shape.value(z);
        match self.active_bump(z) {
            Some((j, t)) => base + self.amplitude() * omega[j - 1] as f64 * bump_phi(t),
            None => base,
        }
    }

    /// `g_omega'(z)`.
    pub fn perturbed_derivative(&self, omega: &[i8], z: f64) -> f64 {
        let base = -self.shape.density(z);
        match self.active_bump(z) {
            Some((j, t)) => {
                base + self.amplitude() / self.w * omega[j - 1] as f64 * bump_phi_prime(t)
            }
            None => base,
        }
    }

    /// `g_omega` as a validated tail on `[0, B]`.
    pub fn perturbed_tail(&self, omega: &[i8]) -> Result<TailModel> {
        self.check_omega(omega)?;
        let family = self.clone();
        let omega = omega.to_vec();
        let tail = TailModel::new(
            move |z| family.perturbed_value(&omega, z),
            0.0,
            B,
            f64::INFINITY,
        )?;
        tail.validate(100_001).map_err(|e| {
            OrbitError::InvalidTail(format!(
                "{e}; the perturbation amplitude kappa is too large"
            ))
        })?;
        Ok(tail)
    }

    /// `int_0^B g_omega` by piecewise adaptive quadrature.
    pub fn mean(&self, omega: &[i8]) -> Result<f64> {
        self.check_omega(omega)?;
        let mut breaks = self.shape.breakpoints();
        for j in 1..=self.m {
            let z = self.z(j);
            breaks.extend([z - self.w / 8.0, z, z + self.w / 8.0]);
        }
        let g = |z: f64| self.perturbed_value(omega, z);
        Ok(integrate_piecewise(&g, 0.0, B, &breaks, 1e-12))
    }

    /// Centered instance: tail `g_omega(z + mu0)`, contexts `mu0 + c_j`
    /// uniformly, `theta = 1`, `p_max = 1`, index interval
    /// `[mu0, mu0 + 1/32]`.
    pub fn centered_instance(&self, omega: &[i8]) -> Result<Instance> {
        self.check_omega(omega)?;
        let family = self.clone();
        let omega_owned = omega.to_vec();
        let mu0 = self.mu0;
        let tail = TailModel::new(
            move |z| family.perturbed_value(&omega_owned, z + mu0),
            -mu0,
            B - mu0,
            f64::INFINITY,
        )?;
        let points = (1..=self.m).map(|j| vec![mu0 + self.c(j)]).collect();
        Instance::new(
            Utility::Linear(vec![1.0]),
            ContextLaw::Discrete { points },
            tail,
            1.0,
            (mu0, mu0 + C_LOC),
        )
    }

    /// Oracle price at local coordinate `c`: the dense-grid/golden-section
    /// oracle, polished by bisection on the first-order condition.
    pub fn oracle_price_local(&self, omega: &[i8], c: f64) -> Result<f64> {
        self.check_omega(omega)?;
        let revenue = |p: f64| p * self.perturbed_value(omega, p - c);
        let coarse = oracle_price_for(revenue, 1.0);
        if coarse.ambiguous {
            return Err(OrbitError::Structure(format!(
                "flat revenue maximum at local coordinate {c}"
            )));
        }
        let slope = |p: f64| {
            self.perturbed_value(omega, p - c) + p * self.perturbed_derivative(omega, p - c)
        };
        let r = 1e-6;
        Ok(bisect(slope, coarse.price - r, coarse.price + r, 1e-15, 200).unwrap_or(coarse.price))
    }

    pub fn shift_check(&self, omega: &[i8]) -> Result<Vec<ShiftReport>> {
        self.check_omega(omega)?;
        let scale = self.w.powf(self.params.beta - 1.0);
        (1..=self.m)
            .map(|j| {
                let price = self.oracle_price_local(omega, self.c(j))?;
                let baseline_price = self.baseline_price(j);
                let shift = price - baseline_price;
                let sign = omega[j - 1] as f64;
                Ok(ShiftReport {
                    j,
                    baseline_price,
                    price,
                    ratio: sign * shift / scale,
                    sign_matches: shift != 0.0 && shift.signum() == sign,
                })
            })
            .collect()
    }
}

/// Summary of the family checks over a set of sign vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct HardInstanceReport {
    pub w: f64,
    pub m: usize,
    pub mu0: f64,
    pub sign_vectors: usize,
    /// Largest `|mean(omega) - mu0|` over the sign vectors.
    pub max_mean_deviation: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub signs_match: bool,
    pub tails_valid: bool,
}

impl HardInstanceReport {
    pub fn passed(&self) -> bool {
        self.signs_match && self.tails_valid && self.max_mean_deviation <= 1e-8
    }

    pub fn to_text(&self) -> String {
        [
            format!("w = {:.16e}", self.w),
            format!("M = {}", self.m),
            format!("mu0 = {:.16e}", self.mu0),
            format!("sign_vectors = {}", self.sign_vectors),
            format!("max_mean_deviation = {:.16e}", self.max_mean_deviation),
            format!("shift_ratio_min = {:.16e}", self.ratio_min),
            format!("shift_ratio_max = {:.16e}", self.ratio_max),
            format!("signs_match = {}", self.signs_match),
            format!("tails_valid = {}", self.tails_valid),
            format!("passed = {}", self.passed()),
        ]
        .join("\n")
            + "\n"
    }
}

/// Runs the tail, mean and oracle-shift checks for every sign vector.
pub fn hard_instance_report(family: &HardFamily, omegas: &[Vec<i8>]) -> Result<HardInstanceReport> {
    if omegas.is_empty() {
        return Err(OrbitError::contract("need at least one sign vector"));
    }
    let mut report = HardInstanceReport {
        w: family.w(),
        m: family.m(),
        mu0: family.mu0(),
        sign_vectors: omegas.len(),
        max_mean_deviation: 0.0,
        ratio_min: f64::INFINITY,
        ratio_max: f64::NEG_INFINITY,
        signs_match: true,
        tails_valid: true,
    };
    for omega in omegas {
        report.tails_valid &= family.perturbed_tail(omega).is_ok();
        report.max_mean_deviation = report
            .max_mean_deviation
            .max((family.mean(omega)? - family.mu0()).abs());
        for s in family.shift_check(omega)? {
            report.ratio_min = report.ratio_min.min(s.ratio);
            report.ratio_max = report.ratio_max.max(s.ratio);
            report.signs_match &= s.sign_matches;
        }
    }
    Ok(report)
}
