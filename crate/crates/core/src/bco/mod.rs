//! Anytime zeroth-order refinement generator.
//!
//! Raw coefficient vectors live in the l1 ball of radius `trust_radius`
//! around `a_ctr`; the inner routine works in normalized coordinates where
//! that ball is the unit l1 ball and feedback is shifted into `[0, 1]`.
//! Epochs have lengths `1, 2, 4, ...`, each running a fresh projected
//! gradient descent with a one-point spherical gradient estimate.

mod l1;

pub use l1::{l1_norm, l1_project};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::env::sphere_into;
use crate::error::{OrbitError, Result};

/// Tuning of the inner routine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcoParams {
    /// Upper cap on the smoothing radius.
    pub delta_cap: f64,
    /// Multiplier on the per-epoch step size `n_r^{-3/4}`.
    pub step_scale: f64,
    /// Budget used only to cap epoch growth.
    pub horizon: u64,
}

impl Default for BcoParams {
    fn default() -> Self {
        BcoParams {
            delta_cap: 0.25,
            step_scale: 1.0,
            horizon: u64::MAX,
        }
    }
}

/// Maps raw coefficients to normalized coordinates and back.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    center: Vec<f64>,
    radius: f64,
    p_max: f64,
}

impl Normalizer {
    pub fn new(center: Vec<f64>, radius: f64, p_max: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(OrbitError::config(format!(
                "trust radius {radius} must be positive"
            )));
        }
        if !(p_max > 0.0) {
            return Err(OrbitError::config("p_max must be positive"));
        }
        Ok(Normalizer {
            center,
            radius,
            p_max,
        })
    }

    pub fn normalize(&self, a: &[f64]) -> Vec<f64> {
        a.iter()
            .zip(&self.center)
            .map(|(x, c)| (x - c) / self.radius)
            .collect()
    }

    pub fn denormalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.center)
            .map(|(v, c)| c + self.radius * v)
            .collect()
    }

    /// Shifts a raw loss in `[-p_max, 0]` to `[0, 1]`.
    pub fn shift_feedback(&self, raw_loss: f64) -> f64 {
        (raw_loss + self.p_max) / self.p_max
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

#[derive(Debug, Clone)]
struct Pending {
    direction: Vec<f64>,
    action: Vec<f64>,
}

/// Refinement generator state for one bin.
#[derive(Debug, Clone)]
pub struct RefinementGenerator {
    normalizer: Normalizer,
    params: BcoParams,
    dim: usize,
    epoch: u32,
    max_epoch: u32,
    step_in_epoch: u64,
    iterate: Vec<f64>,
    delta: f64,
    eta: f64,
    rng: ChaCha8Rng,
    pending: Option<Pending>,
    history_len: u64,
}

impl RefinementGenerator {
    pub fn new(
        a_ctr: Vec<f64>,
        trust_radius: f64,
        p_max: f64,
        params: BcoParams,
        seed: u64,
    ) -> Result<Self> {
        if a_ctr.is_empty() {
            return Err(OrbitError::config("coefficient dimension must be positive"));
        }
        if !(params.delta_cap > 0.0 && params.delta_cap < 1.0) {
            return Err(OrbitError::config("delta_cap must lie in (0, 1)"));
        }
        if !(params.step_scale > 0.0) {
            return Err(OrbitError::config("step_scale must be positive"));
        }
        let dim = a_ctr.len();
        let normalizer = Normalizer::new(a_ctr, trust_radius, p_max)?;
        let max_epoch = if params.horizon <= 1 {
            0
        } else {
            (64 - (params.horizon - 1).leading_zeros()).min(62)
        };
        let mut gen = RefinementGenerator {
            normalizer,
            params,
            dim,
            epoch: 0,
            max_epoch,
            step_in_epoch: 0,
            iterate: vec![0.0; dim],
            delta: 0.0,
            eta: 0.0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            pending: None,
            history_len: 0,
        };
        gen.start_epoch();
        Ok(gen)
    }

    fn start_epoch(&mut self) {
        let n = self.epoch_length() as f64;
        // The ceiling on delta keeps the perturbed action inside the ball:
        // the unit l1 ball contains the l2 ball of radius 1/sqrt(dim).
        let feasible_cap = 0.5 / (self.dim as f64).sqrt();
        self.delta = self.params.delta_cap.min(n.powf(-0.25)).min(feasible_cap);
        self.eta = self.params.step_scale * n.powf(-0.75);
        self.iterate.iter_mut().for_each(|x| *x = 0.0);
        self.step_in_epoch = 0;
    }

    pub fn epoch_length(&self) -> u64 {
        1u64 << self.epoch.min(self.max_epoch)
    }

    pub fn epoch(&self) -> u32 {
        self.epoch
    }

    pub fn step_in_epoch(&self) -> u64 {
        self.step_in_epoch
    }

    pub fn smoothing_radius(&self) -> f64 {
        self.delta
    }

    pub fn step_size(&self) -> f64 {
        self.eta
    }

    /// Current iterate in normalized coordinates.
    pub fn iterate(&self) -> &[f64] {
        &self.iterate
    }

    /// Current iterate as raw coefficients.
    pub fn raw_iterate(&self) -> Vec<f64> {
        self.normalizer.denormalize(&self.iterate)
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.normalizer
    }

    pub fn history_len(&self) -> u64 {
        self.history_len
    }

    pub fn has_pending(&self) -> bool {
        self.pending.is_some()
    }

    /// Next raw coefficient vector. A repeated call before feedback returns
    /// the same pending action.
    pub fn next_action(&mut self) -> Vec<f64> {
        if let Some(p) = &self.pending {
            return p.action.clone();
        }
        let mut direction = vec![0.0; self.dim];
        sphere_into(&mut self.rng, &mut direction);
        let shrink = 1.0 - self.delta * (self.dim as f64).sqrt();
        let normalized: Vec<f64> = self
            .iterate
            .iter()
            .zip(&direction)
            .map(|(x, s)| shrink * x + self.delta * s)
            .collect();
        let action = self.normalizer.denormalize(&normalized);
        self.pending = Some(Pending {
            direction,
            action: action.clone(),
        });
        action
    }

    /// Consumes the raw loss `-p*y` of the pending action.
    pub fn update_feedback(&mut self, raw_loss: f64) -> Result<()> {
        let Some(pending) = self.pending.take() else {
            return Err(OrbitError::Protocol(
                "feedback without a pending action".into(),
            ));
        };
        if !raw_loss.is_finite() {
            return Err(OrbitError::Numerical(format!(
                "non-finite feedback {raw_loss}"
            )));
        }
        let shifted = self.normalizer.shift_feedback(raw_loss);
        let scale = self.eta * self.dim as f64 / self.delta * shifted;
        let stepped: Vec<f64> = self
            .iterate
            .iter()
            .zip(&pending.direction)
            .map(|(x, s)| x - scale * s)
            .collect();
        self.iterate = l1_project(&stepped, 1.0);
        self.history_len += 1;
        self.step_in_epoch += 1;
        if self.step_in_epoch == self.epoch_length() {
            self.epoch += 1;
            self.start_epoch();
        }
        Ok(())
    }
}
