use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{OrbitError, Result};

type TailFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Survival function `g = 1 - F` of the valuation noise, with the support
/// boundaries pinned: `g = 1` left of `support_lo` and `g = 0` right of
/// `support_hi` regardless of what the wrapped closure returns there.
#[derive(Clone)]
pub struct TailModel {
    eval: TailFn,
    support_lo: f64,
    support_hi: f64,
    beta: f64,
    lipschitz_bound: f64,
    inverse_cdf_tol: f64,
}

impl fmt::Debug for TailModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TailModel")
            .field("support_lo", &self.support_lo)
            .field("support_hi", &self.support_hi)
            .field("beta", &self.beta)
            .field("lipschitz_bound", &self.lipschitz_bound)
            .field("inverse_cdf_tol", &self.inverse_cdf_tol)
            .finish_non_exhaustive()
    }
}

pub const DEFAULT_INVERSE_CDF_TOL: f64 = 1e-10;
const MAX_BISECTION_STEPS: usize = 200;

impl TailModel {
    /// Wraps `eval` as a tail on `[support_lo, support_hi]`.
    ///
    /// The Lipschitz bound is estimated from a 10^4-point difference scan.
    pub fn new<F>(eval: F, support_lo: f64, support_hi: f64, beta: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(support_lo < support_hi) || !support_lo.is_finite() || !support_hi.is_finite() {
            return Err(OrbitError::config(format!(
                "tail support [{support_lo}, {support_hi}] is not a finite nonempty interval"
            )));
        }
        if !(beta >= 2.0) {
            return Err(OrbitError::config(format!(
                "tail smoothness beta = {beta} must be at least 2"
            )));
        }
        let mut tail = TailModel {
            eval: Arc::new(eval),
            support_lo,
            support_hi,
            beta,
            lipschitz_bound: 0.0,
            inverse_cdf_tol: DEFAULT_INVERSE_CDF_TOL,
        };
        let n = 10_000;
        let step = (support_hi - support_lo) / n as f64;
        let mut lip: f64 = 0.0;
        let mut prev = tail.eval(support_lo);
        for i in 1..=n {
            let cur = tail.eval(support_lo + i as f64 * step);
            lip = lip.max((prev - cur).abs() / step);
            prev = cur;
        }
        tail.lipschitz_bound = lip;
        Ok(tail)
    }

    pub fn with_inverse_cdf_tol(mut self, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(OrbitError::config("inverse_cdf_tol must be positive"));
        }
        self.inverse_cdf_tol = tol;
        Ok(self)
    }

    pub fn eval(&self, z: f64) -> f64 {
        if z <= self.support_lo {
            1.0
        } else if z >= self.support_hi {
            0.0
        } else {
            (self.eval)(z).clamp(0.0, 1.0)
        }
    }

    /// Noise CDF `1 - g(z)`.
    pub fn cdf(&self, z: f64) -> f64 {
        1.0 - self.eval(z)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.support_lo, self.support_hi)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn lipschitz_bound(&self) -> f64 {
        self.lipschitz_bound
    }

    pub fn inverse_cdf_tol(&self) -> f64 {
        self.inverse_cdf_tol
    }

    /// Checks monotonicity (slack 1e-12), range and boundary pinning on
    /// `n` equispaced points spanning the support.
    pub fn validate(&self, n: usize) -> Result<()> {
        let n = n.max(2);
        let (lo, hi) = self.support();
        if self.eval(lo) != 1.0 || self.eval(hi) != 0.0 {
            return Err(OrbitError::InvalidTail(
                "support boundaries are not pinned".into(),
            ));
        }
        let step = (hi - lo) / (n - 1) as f64;
        let mut prev = f64::INFINITY;
        for i in 0..n {
            let z = lo + i as f64 * step;
            let raw = (self.eval)(z);
            if !raw.is_finite() {
                return Err(OrbitError::InvalidTail(format!(
                    "non-finite value at z = {z}"
                )));
            }
            let g = self.eval(z);
            if !(-1e-12..=1.0 + 1e-12).contains(&raw) {
                return Err(OrbitError::InvalidTail(format!(
                    "value {raw} outside [0,1] at z = {z}"
                )));
            }
            if g > prev + 1e-12 {
                return Err(OrbitError::InvalidTail(format!(
                    "tail increases near z = {z}"
                )));
            }
            prev = g;
        }
        Ok(())
    }

    /// Inverse CDF: the noise value whose CDF equals `v`, by bisection.
    pub fn quantile(&self, v: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&v) {
            return Err(OrbitError::contract(format!(
                "uniform draw {v} outside [0,1]"
            )));
        }
        let (mut lo, mut hi) = self.support();
        if v <= 0.0 {
            return Ok(lo);
        }
        if v >= 1.0 {
            return Ok(hi);
        }
        let (mut f_lo, mut f_hi) = (0.0, 1.0);
        for _ in 0..MAX_BISECTION_STEPS {
            if hi - lo <= self.inverse_cdf_tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let f_mid = self.cdf(mid);
            if f_mid < f_lo - 1e-12 || f_mid > f_hi + 1e-12 {
                return Err(OrbitError::InvalidTail(format!(
                    "non-monotone CDF detected at z = {mid}"
                )));
            }
            if f_mid < v {
                lo = mid;
                f_lo = f_mid;
            } else {
                hi = mid;
                f_hi = f_mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    pub fn sample_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        self.quantile(rng.random::<f64>())
    }

    /// Purchase indicator `1{u + xi >= p}` for the noise `xi = quantile(v)`.
    ///
    /// Evaluated as `v >= 1 - g(p - u)`, which is the same event without the
    /// bisection.
    pub fn purchase_from_uniform(&self, gap: f64, v: f64) -> bool {
        v >= self.cdf(gap)
    }
}

/// `0` for `t <= 0`, `1` for `t >= 1`, and a C-infinity monotone transition
/// in between with `phi(t) + phi(1 - t) = 1`.
pub fn smooth_cutoff(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        // e^{-1/t} / (e^{-1/t} + e^{-1/(1-t)}) written without underflow.
        1.0 / (1.0 + (1.0 / t - 1.0 / (1.0 - t)).exp())
    }
}

pub const EXPERIMENT_HALF_WIDTH: f64 = 0.3;

/// Survival value of the simulation tail, `1 - phi((z + 0.3)/0.6)`.
pub fn experiment_tail_value(z: f64) -> f64 {
    1.0 - smooth_cutoff((z + EXPERIMENT_HALF_WIDTH) / (2.0 * EXPERIMENT_HALF_WIDTH))
}

/// The smooth-cutoff tail supported on `[-0.3, 0.3]`. It is C-infinity, so
/// the smoothness metadata is set to infinity.
pub fn experiment_tail() -> TailModel {
    TailModel::new(
        experiment_tail_value,
        -EXPERIMENT_HALF_WIDTH,
        EXPERIMENT_HALF_WIDTH,
        f64::INFINITY,
    )
    .expect("experiment tail parameters are valid")
}

/// Uniform-valuation tail `1 - z/b` on `[0, b]`.
pub fn truncated_linear_tail(b: f64) -> Result<TailModel> {
    if !(b > 0.0) {
        return Err(OrbitError::config(
            "truncated-linear tail needs a positive width",
        ));
    }
    TailModel::new(move |z| 1.0 - z / b, 0.0, b, 2.0)
}
