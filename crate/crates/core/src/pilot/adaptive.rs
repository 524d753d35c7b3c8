use nalgebra::{DMatrix, DVector};

use crate::error::{OrbitError, Result};

/// Rank-one updates between full inverse recomputations.
const RECOMPUTE_EVERY: u64 = 256;

/// The confidence multiplier `32 (C_theta + p_max) sqrt(ln(e T))`.
pub fn confidence_multiplier(c_theta: f64, p_max: f64, t: u64) -> f64 {
    32.0 * (c_theta + p_max) * (1.0 + (t.max(1) as f64).ln()).sqrt()
}

/// Target pilot accuracy `min(1/2, c_eta (d/T)^{1/4})`.
pub fn default_eta(d: usize, t: u64, c_eta: f64) -> f64 {
    (c_eta * (d as f64 / t as f64).powf(0.25)).min(0.5)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PilotDecision {
    Explore,
    /// Pilot value projected onto the index interval.
    Orbit(f64),
}

/// Ridge estimate built from exploration rounds only.
#[derive(Debug, Clone)]
pub struct RidgeState {
    a: DMatrix<f64>,
    a_inv: DMatrix<f64>,
    b: DVector<f64>,
    theta_hat: DVector<f64>,
    n_explore: u64,
    eta: f64,
    c_w: f64,
    since_recompute: u64,
    awaiting_update: bool,
}

impl RidgeState {
    pub fn new(d: usize, eta: f64, c_w: f64) -> Result<Self> {
        if d == 0 {
            return Err(OrbitError::config("context dimension must be positive"));
        }
        if !(eta > 0.0 && eta <= 0.5) {
            return Err(OrbitError::config(format!(
                "pilot accuracy eta = {eta} must lie in (0, 1/2]"
            )));
        }
        if !(c_w > 0.0) || !c_w.is_finite() {
            return Err(OrbitError::config(format!(
                "confidence multiplier {c_w} must be positive"
            )));
        }
        Ok(RidgeState {
            a: DMatrix::identity(d, d),
            a_inv: DMatrix::identity(d, d),
            b: DVector::zeros(d),
            theta_hat: DVector::zeros(d),
            n_explore: 0,
            eta,
            c_w,
            since_recompute: 0,
            awaiting_update: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn c_w(&self) -> f64 {
        self.c_w
    }

    pub fn n_explore(&self) -> u64 {
        self.n_explore
    }

    pub fn theta_hat(&self) -> &[f64] {
        self.theta_hat.as_slice()
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn design_inverse(&self) -> &DMatrix<f64> {
        &self.a_inv
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(OrbitError::contract(format!(
                "context has length {} but d = {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// `C_w * sqrt(x' A^{-1} x)`.
    pub fn uncertainty(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let xv = DVector::from_column_slice(x);
        let q = xv.dot(&(&self.a_inv * &xv));
        if !(q >= -1e-10) {
            return Err(OrbitError::Numerical(format!(
                "design matrix lost positive definiteness (x'A^-1 x = {q})"
            )));
        }
        Ok(self.c_w * q.max(0.0).sqrt())
    }

    /// Explore when the uncertainty exceeds `eta`; otherwise hand the
    /// projected estimate `x' theta_hat` to the pricing policy.
    pub fn decide(&mut self, x: &[f64], index_interval: (f64, f64)) -> Result<PilotDecision> {
        let w = self.uncertainty(x)?;
        if w > self.eta {
            self.awaiting_update = true;
            return Ok(PilotDecision::Explore);
        }
        self.awaiting_update = false;
        let raw: f64 = self.theta_hat.iter().zip(x).map(|(t, v)| t * v).sum();
        Ok(PilotDecision::Orbit(
            raw.clamp(index_interval.0, index_interval.1),
        ))
    }

    /// Adds an exploration round: `A += x x'`, `b += p_max y x`.
    pub fn update(&mut self, x: &[f64], p_max: f64, purchase: bool) -> Result<()> {
        self.check_dim(x)?;
        if !self.awaiting_update {
            return Err(OrbitError::Protocol(
                "ridge update outside an exploration round".into(),
            ));
        }
        self.awaiting_update = false;
        let xv = DVector::from_column_slice(x);
        self.a += &xv * xv.transpose();
        if purchase {
            self.b.axpy(p_max, &xv, 1.0);
        }
        self.n_explore += 1;
        self.since_recompute += 1;
        if self.since_recompute >= RECOMPUTE_EVERY {
            self.recompute()?;
        } else {
            let ax = &self.a_inv * &xv;
            let denom = 1.0 + xv.dot(&ax);
            self.a_inv -= (&ax * ax.transpose()) / denom;
        }
        self.theta_hat = &self.a_inv * &self.b;
        Ok(())
    }

    fn recompute(&mut self) -> Result<()> {
        let chol = self.a.clone().cholesky().ok_or_else(|| {
            OrbitError::Numerical("design matrix is not positive definite".into())
        })?;
        self.a_inv = chol.inverse();
        self.since_recompute = 0;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn eta_examples() {
        assert_abs_diff_eq!(default_eta(1, 16, 1.0), 0.5);
        assert_abs_diff_eq!(default_eta(4, 4, 1.0), 0.5);
        assert_abs_diff_eq!(
            default_eta(5, 100_000, 0.1),
            0.1 * (5e-5f64).powf(0.25),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(default_eta(5, 100_000, 0.1), 0.00841, epsilon = 1e-5);
    }

    #[test]
    fn uncertainty_examples() {
        let mut s = RidgeState::new(3, 0.1, 2.0).unwrap();
        let x = [0.6, 0.8, 0.0];
        assert_abs_diff_eq!(s.uncertainty(&x).unwrap(), 2.0, epsilon = 1e-15);
        assert_eq!(s.uncertainty(&[0.0; 3]).unwrap(), 0.0);
        let x = [1.0, 2.0, 2.0];
        assert_eq!(s.decide(&x, (1.0, 3.0)).unwrap(), PilotDecision::Explore);
        s.update(&x, 3.5, false).unwrap();
        // Sherman-Morrison closed form for a single added context.
        assert_abs_diff_eq!(
            s.uncertainty(&x).unwrap(),
            2.0 * 3.0 / (1.0f64 + 9.0).sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn single_exploration_estimate() {
        let mut s = RidgeState::new(3, 0.1, 2.0).unwrap();
        s.decide(&[1.0, 0.0, 0.0], (1.0, 3.0)).unwrap();
        s.update(&[1.0, 0.0, 0.0], 3.5, true).unwrap();
        assert_abs_diff_eq!(s.theta_hat()[0], 1.75, epsilon = 1e-15);
        assert_eq!(&s.theta_hat()[1..], &[0.0, 0.0]);
    }

    #[test]
    fn projection_and_protocol() {
        let mut s = RidgeState::new(1, 0.5, 1e-3).unwrap();
        assert!(matches!(
            s.update(&[1.0], 3.5, true),
            Err(OrbitError::Protocol(_))
        ));
        s.theta_hat[0] = 5.0;
        assert_eq!(
            s.decide(&[1.0], (1.0, 3.0)).unwrap(),
            PilotDecision::Orbit(3.0)
        );
        assert!(matches!(
            s.update(&[1.0], 3.5, true),
            Err(OrbitError::Protocol(_))
        ));
        assert!(RidgeState::new(2, 0.6, 1.0).unwrap_err().is_configuration());
    }

    #[test]
    fn repeated_context_stops_exploring_in_time() {
        let (c_w, eta) = (3.0, 0.4);
        let mut s = RidgeState::new(2, eta, c_w).unwrap();
        let x = [0.0, 1.0];
        let mut explorations = 0;
        while s.decide(&x, (0.0, 1.0)).unwrap() == PilotDecision::Explore {
            s.update(&x, 1.0, false).unwrap();
            explorations += 1;
            assert!(explorations < 1000);
        }
        assert!(explorations as f64 <= (c_w * c_w / (eta * eta)).ceil());
    }

    #[test]
    fn periodic_recompute_agrees_with_rank_one_updates() {
        let mut s = RidgeState::new(3, 0.01, 1.0).unwrap();
        for k in 0..600 {
            let t = k as f64 * 0.37;
            let x = [t.sin(), t.cos(), 1.0];
            s.decide(&x, (0.0, 1.0)).unwrap();
            s.update(&x, 2.0, k % 3 == 0).unwrap();
        }
        let direct = s.a.clone().try_inverse().unwrap();
        assert!((direct - &s.a_inv).abs().max() < 1e-10);
    }

    proptest! {
        #[test]
        fn uncertainty_never_increases(xs in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 1..20),
                                       probe in prop::collection::vec(-1.0f64..1.0, 3)) {
            let mut s = RidgeState::new(3, 1e-6, 1.0).unwrap();
            let mut prev = s.uncertainty(&probe).unwrap();
            for x in &xs {
                s.decide(x, (0.0, 1.0)).unwrap();
                if s.awaiting_update {
                    s.update(x, 1.0, true).unwrap();
                }
                let w = s.uncertainty(&probe).unwrap();
                prop_assert!(w <= prev + 1e-12);
                prev = w;
            }
        }
    }
}
