use super::growth::GrowthEstimate;
use super::{RevenueCurve, DIFF_STEP};
use crate::env::TailModel;

/// Density floor below which the CDF-shape assumption is declared to fail.
const DENSITY_FLOOR: f64 = 1e-8;

/// CDF-shape constants on a gap range and the quadratic-growth bracket
/// they imply: `sigma >= c_l c_phi` and `L <= c_u (2 + M_f / c_l^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfReport {
    pub gap_range: (f64, f64),
    pub c_l: f64,
    pub c_u: f64,
    pub m_f: f64,
    pub c_phi: f64,
    /// False when the density drops below the floor on the range.
    pub applicable: bool,
}

impl CdfReport {
    pub fn sigma_lower(&self) -> f64 {
        self.c_l * self.c_phi
    }

    pub fn l_upper(&self) -> f64 {
        self.c_u * (2.0 + self.m_f / (self.c_l * self.c_l))
    }

    pub fn contains(&self, growth: &GrowthEstimate) -> bool {
        self.applicable && self.sigma_lower() <= growth.sigma && growth.l <= self.l_upper()
    }
}

/// Gaps `p - u` reachable with `u` in the index interval and `p` in
/// `[0, p_max]`, intersected with the tail support shrunk by 10% of its
/// width on each side (the density of a smooth tail vanishes at the ends).
pub fn reachable_gap_range<C: RevenueCurve + ?Sized>(curve: &C, tail: &TailModel) -> (f64, f64) {
    let (u_lo, u_hi) = curve.index_interval();
    let (s_lo, s_hi) = tail.support();
    let trim = 0.1 * (s_hi - s_lo);
    (
        (-u_hi).max(s_lo + trim),
        (curve.p_max() - u_lo).min(s_hi - trim),
    )
}

/// Estimates `f = -g'`, `f'` and `phi'(v) = 2 + g f'/f^2` by central
/// differences on 2001 points of `gap_range`.
pub fn cdf_shape_constants(tail: &TailModel, gap_range: (f64, f64)) -> CdfReport {
    let h = DIFF_STEP;
    let n = 2001;
    let (lo, hi) = gap_range;
    let mut c_l = f64::INFINITY;
    let mut c_u: f64 = 0.0;
    let mut m_f: f64 = 0.0;
    let mut c_phi = f64::INFINITY;
    for i in 0..n {
        let v = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let g = tail.eval(v);
        let f = (tail.eval(v - h) - tail.eval(v + h)) / (2.0 * h);
        let fp = -(tail.eval(v + h) - 2.0 * g + tail.eval(v - h)) / (h * h);
        c_l = c_l.min(f);
        c_u = c_u.max(f);
        m_f = m_f.max(fp.abs());
        if f > DENSITY_FLOOR {
            c_phi = c_phi.min(2.0 + g * fp / (f * f));
        }
    }
    let applicable = lo < hi && c_l > DENSITY_FLOOR && c_phi > 0.0;
    CdfReport {
        gap_range,
        c_l,
        c_u,
        m_f,
        c_phi,
        applicable,
    }
}
