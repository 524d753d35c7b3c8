use std::fmt;
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::oracle::OraclePriceTable;
use super::tail::{experiment_tail, TailModel};
use crate::error::{OrbitError, Result};

/// Context distributions used by the simulation designs.
#[derive(Debug, Clone)]
pub enum ContextLaw {
    /// `(s, 1)` with `s` uniform on the unit sphere of `R^{d-1}`.
    SphereIntercept { d: usize },
    /// `(R s, 1)` with `s` as above and a fixed `(d-1)x(d-1)` transform `R`
    /// (row-major).
    TransformedSphere { d: usize, transform: Vec<f64> },
    /// `(c, 1)` with `c` uniform on `[-1, 1]^{d-1}`.
    CubeIntercept { d: usize },
    /// Uniform over a finite list of contexts.
    Discrete { points: Vec<Vec<f64>> },
}

impl ContextLaw {
    pub fn dim(&self) -> usize {
        match self {
            ContextLaw::SphereIntercept { d }
            | ContextLaw::TransformedSphere { d, .. }
            | ContextLaw::CubeIntercept { d } => *d,
            ContextLaw::Discrete { points } => points.first().map_or(0, Vec::len),
        }
    }

    /// Writes one draw into `out`, which must have length `dim()`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            ContextLaw::SphereIntercept { d } => {
                sphere_into(rng, &mut out[..d - 1]);
                out[d - 1] = 1.0;
            }
            ContextLaw::TransformedSphere { d, transform } => {
                let k = d - 1;
                let mut s = vec![0.0; k];
                sphere_into(rng, &mut s);
                for (i, o) in out[..k].iter_mut().enumerate() {
                    *o = transform[i * k..(i + 1) * k]
                        .iter()
                        .zip(&s)
                        .map(|(a, b)| a * b)
                        .sum();
                }
                out[k] = 1.0;
            }
            ContextLaw::CubeIntercept { d } => {
                for o in &mut out[..d - 1] {
                    *o = rng.random_range(-1.0..=1.0);
                }
                out[d - 1] = 1.0;
            }
            ContextLaw::Discrete { points } => {
                out.copy_from_slice(points.choose(rng).expect("discrete law is nonempty"));
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.sample_into(rng, &mut out);
        out
    }
}

/// Uniform direction on the unit sphere, by normalizing a Gaussian vector.
pub fn sphere_into<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    loop {
        let mut norm2 = 0.0;
        for o in out.iter_mut() {
            let g: f64 = StandardNormal.sample(rng);
            *o = g;
            norm2 += g * g;
        }
        if norm2 > 1e-300 {
            let inv = norm2.sqrt().recip();
            out.iter_mut().for_each(|o| *o *= inv);
            return;
        }
    }
}

/// Arbitrary index function of the context.
pub type IndexFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Context-to-index map.
#[derive(Clone)]
pub enum Utility {
    Linear(Vec<f64>),
    Function(IndexFn),
}

impl fmt::Debug for Utility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Utility::Linear(theta) => f.debug_tuple("Linear").field(theta).finish(),
            Utility::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl Utility {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Utility::Linear(theta) => dot(theta, x),
            Utility::Function(f) => f(x),
        }
    }

    pub fn theta(&self) -> Option<&[f64]> {
        match self {
            Utility::Linear(theta) => Some(theta),
            Utility::Function(_) => None,
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A pricing environment.
#[derive(Debug, Clone)]
pub struct Instance {
    pub utility: Utility,
    pub contexts: ContextLaw,
    pub tail: TailModel,
    pub p_max: f64,
    pub index_interval: (f64, f64),
    pub dim: usize,
}

impl Instance {
    pub fn new(
        utility: Utility,
        contexts: ContextLaw,
        tail: TailModel,
        p_max: f64,
        index_interval: (f64, f64),
    ) -> Result<Self> {
        if !(p_max > 0.0) {
            return Err(OrbitError::config(format!(
                "p_max = {p_max} must be positive"
            )));
        }
        let (lo, hi) = index_interval;
        if !(lo < hi) {
            return Err(OrbitError::config(format!(
                "index interval [{lo}, {hi}] is empty"
            )));
        }
        let dim = contexts.dim();
        if dim == 0 {
            return Err(OrbitError::config("contexts must have positive dimension"));
        }
        if let Some(theta) = utility.theta() {
            if theta.len() != dim {
                return Err(OrbitError::config(format!(
                    "parameter has length {} but contexts have dimension {dim}",
                    theta.len()
                )));
            }
        }
        Ok(Instance {
            utility,
            contexts,
            tail,
            p_max,
            index_interval,
            dim,
        })
    }

    pub fn index(&self, x: &[f64]) -> f64 {
        self.utility.eval(x)
    }

    pub fn revenue(&self, u: f64, p: f64) -> f64 {
        revenue(u, p, &self.tail)
    }

    pub fn oracle_price(&self, u: f64) -> Result<f64> {
        if u < self.index_interval.0 - 1e-12 || u > self.index_interval.1 + 1e-12 {
            return Err(OrbitError::contract(format!(
                "index {u} outside the index interval"
            )));
        }
        Ok(super::oracle::oracle_price_for(|p| self.revenue(u, p), self.p_max).price)
    }

    pub fn oracle_table(&self, resolution: f64) -> Result<OraclePriceTable> {
        OraclePriceTable::build(self, resolution)
    }

    pub fn project_index(&self, u: f64) -> f64 {
        u.clamp(self.index_interval.0, self.index_interval.1)
    }

    /// Samples `n` contexts and noise draws and checks that every index lies
    /// in the index interval and every valuation in `[0, p_max]`.
    pub fn check_by_sampling<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<()> {
        let (lo, hi) = self.index_interval;
        let mut x = vec![0.0; self.dim];
        for _ in 0..n {
            self.contexts.sample_into(rng, &mut x);
            let u = self.index(&x);
            if u < lo - 1e-9 || u > hi + 1e-9 {
                return Err(OrbitError::Structure(format!(
                    "sampled index {u} outside [{lo}, {hi}]"
                )));
            }
            let v = u + self.tail.sample_noise(rng)?;
            if v < -1e-9 || v > self.p_max + 1e-9 {
                return Err(OrbitError::Structure(format!(
                    "sampled valuation {v} outside [0, p_max]"
                )));
            }
        }
        Ok(())
    }
}

/// Expected revenue `p * g(p - u)`.
pub fn revenue(u: f64, p: f64, tail: &TailModel) -> f64 {
    p * tail.eval(p - u)
}

/// The simulation designs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExperimentKind {
    SphereIid,
    Anisotropic { epsilon: f64 },
    SparseCube { sparsity: usize },
}

pub const EXPERIMENT_P_MAX: f64 = 3.5;
pub const EXPERIMENT_INTERVAL: (f64, f64) = (1.0, 3.0);
const INTERCEPT: f64 = 2.0;

/// Builds one of the simulation instances in dimension `d` (intercept last).
///
/// `rng` is only consumed by the sparse design, which draws its support and
/// signs.
pub fn make_experiment_instance<R: Rng + ?Sized>(
    kind: ExperimentKind,
    d: usize,
    rng: &mut R,
) -> Result<Instance> {
    if d < 2 {
        return Err(OrbitError::config(format!(
            "dimension d = {d} must be at least 2"
        )));
    }
    let k = d - 1;
    let (theta, contexts) = match kind {
        ExperimentKind::SphereIid => (sphere_theta(d), ContextLaw::SphereIntercept { d }),
        ExperimentKind::Anisotropic { epsilon } => {
            if !(epsilon > 0.0 && epsilon <= 1.0) {
                return Err(OrbitError::config(format!(
                    "anisotropy epsilon = {epsilon} must lie in (0, 1]"
                )));
            }
            if d < 3 {
                return Err(OrbitError::config("the anisotropic design needs d >= 3"));
            }
            (
                sphere_theta(d),
                ContextLaw::TransformedSphere {
                    d,
                    transform: anisotropic_root(k, epsilon),
                },
            )
        }
        ExperimentKind::SparseCube { sparsity } => {
            if sparsity < 1 || sparsity > k {
                return Err(OrbitError::config(format!(
                    "sparsity s = {sparsity} must lie in [1, {k}]"
                )));
            }
            let mut theta = vec![0.0; d];
            let support = rand::seq::index::sample(rng, k, sparsity);
            for j in support.iter() {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                theta[j] = sign / sparsity as f64;
            }
            theta[k] = INTERCEPT;
            (theta, ContextLaw::CubeIntercept { d })
        }
    };
    Instance::new(
        Utility::Linear(theta),
        contexts,
        experiment_tail(),
        EXPERIMENT_P_MAX,
        EXPERIMENT_INTERVAL,
    )
}

fn sphere_theta(d: usize) -> Vec<f64> {
    let k = d - 1;
    let mut theta = vec![1.0 / (k as f64).sqrt(); d];
    theta[k] = INTERCEPT;
    theta
}

/// Square root of `(1 - eps) v v' + eps I` for `v = (e_1 - e_2)/sqrt(2)`,
/// a unit vector orthogonal to the all-ones direction.
pub fn anisotropic_root(k: usize, epsilon: f64) -> Vec<f64> {
    let mut v = vec![0.0; k];
    v[0] = std::f64::consts::FRAC_1_SQRT_2;
    v[1] = -std::f64::consts::FRAC_1_SQRT_2;
    let s = epsilon.sqrt();
    let mut r = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            r[i * k + j] = (1.0 - s) * v[i] * v[j] + if i == j { s } else { 0.0 };
        }
    }
    r
}

/// Sphere-with-intercept instance for a user parameter, using the simulation
/// tail. The index interval is the exact range of `x'theta`.
pub fn make_custom_instance(theta: Vec<f64>, p_max: f64) -> Result<Instance> {
    let d = theta.len();
    if d < 2 {
        return Err(OrbitError::config(
            "custom theta needs at least two entries",
        ));
    }
    let radius = theta[..d - 1].iter().map(|t| t * t).sum::<f64>().sqrt();
    let center = theta[d - 1];
    Instance::new(
        Utility::Linear(theta),
        ContextLaw::SphereIntercept { d },
        experiment_tail(),
        p_max,
        (center - radius, center + radius),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::{Purpose, SeedStream};
    use approx::assert_abs_diff_eq;

    fn rng() -> rand_chacha::ChaCha8Rng {
        SeedStream::new(11, 0).rng(Purpose::Auxiliary)
    }

    #[test]
    fn revenue_examples() {
        let g = experiment_tail();
        assert_eq!(revenue(1.0, 0.0, &g), 0.0);
        assert_abs_diff_eq!(revenue(1.0, 0.7, &g), 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(revenue(2.0, 2.0, &g), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn sphere_indices_stay_in_interval() {
        let mut r = rng();
        let inst = make_experiment_instance(ExperimentKind::SphereIid, 5, &mut r).unwrap();
        inst.check_by_sampling(20_000, &mut r).unwrap();
    }

    #[test]
    fn sparse_design_has_unit_three_l1_norm() {
        let mut r = rng();
        let inst =
            make_experiment_instance(ExperimentKind::SparseCube { sparsity: 5 }, 200, &mut r)
                .unwrap();
        let l1: f64 = inst.utility.theta().unwrap().iter().map(|t| t.abs()).sum();
        assert_abs_diff_eq!(l1, 3.0, epsilon = 1e-12);
        inst.check_by_sampling(5_000, &mut r).unwrap();
    }

    #[test]
    fn anisotropic_identity_limit_matches_sphere_covariance() {
        let root = anisotropic_root(4, 1.0);
        for i in 0..4 {
            for j in 0..4 {
                assert_abs_diff_eq!(
                    root[i * 4 + j],
                    if i == j { 1.0 } else { 0.0 },
                    epsilon = 1e-15
                );
            }
        }
        // Squaring the root recovers the target covariance.
        let eps = 0.05;
        let r = anisotropic_root(4, eps);
        let s = 0.5f64;
        for i in 0..4 {
            for j in 0..4 {
                let sq: f64 = (0..4).map(|k| r[i * 4 + k] * r[k * 4 + j]).sum();
                let v = |a: usize| match a {
                    0 => s.sqrt(),
                    1 => -s.sqrt(),
                    _ => 0.0,
                };
                let target = (1.0 - eps) * v(i) * v(j) + if i == j { eps } else { 0.0 };
                assert_abs_diff_eq!(sq, target, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn invalid_parameters_are_configuration_errors() {
        let mut r = rng();
        for kind in [
            ExperimentKind::Anisotropic { epsilon: 0.0 },
            ExperimentKind::Anisotropic { epsilon: 1.5 },
            ExperimentKind::SparseCube { sparsity: 0 },
            ExperimentKind::SparseCube { sparsity: 5 },
        ] {
            let err = make_experiment_instance(kind, 5, &mut r).unwrap_err();
            assert!(err.is_configuration(), "{kind:?}");
        }
        assert!(make_experiment_instance(ExperimentKind::SphereIid, 1, &mut r).is_err());
    }
}
