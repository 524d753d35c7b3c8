use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::error::{OrbitError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKindName {
    LinearIid,
    Anisotropic,
    Sparse,
    HardInstance,
    Custom,
}

impl ExperimentKindName {
    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "linear_iid" => Self::LinearIid,
            "anisotropic" => Self::Anisotropic,
            "sparse" => Self::Sparse,
            "hard_instance" => Self::HardInstance,
            "custom" => Self::Custom,
            other => {
                return Err(OrbitError::config(format!(
                    "unknown experiment kind '{other}'"
                )))
            }
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::LinearIid => "linear_iid",
            Self::Anisotropic => "anisotropic",
            Self::Sparse => "sparse",
            Self::HardInstance => "hard_instance",
            Self::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    OrbitAdaptive,
    ExploreThenOrbitLasso,
    ExploreThenOrbitLocpoly,
    UniformRandom,
    /// ORBIT fed the true index; a diagnostic upper reference.
    OrbitExact,
}

impl PolicyKind {
    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "orbit_adaptive" => Self::OrbitAdaptive,
            "explore_then_orbit_lasso" => Self::ExploreThenOrbitLasso,
            "explore_then_orbit_locpoly" => Self::ExploreThenOrbitLocpoly,
            "uniform_random" => Self::UniformRandom,
            "orbit_exact" => Self::OrbitExact,
            other => return Err(OrbitError::config(format!("unknown policy '{other}'"))),
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::OrbitAdaptive => "orbit_adaptive",
            Self::ExploreThenOrbitLasso => "explore_then_orbit_lasso",
            Self::ExploreThenOrbitLocpoly => "explore_then_orbit_locpoly",
            Self::UniformRandom => "uniform_random",
            Self::OrbitExact => "orbit_exact",
        }
    }
}

/// Keys accepted in a configuration file. Every key is optional except
/// `experiment`, `policy` and one of `T` / `horizons`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Option<String>,
    policy: Option<String>,
    #[serde(rename = "T")]
    t: Option<i64>,
    horizons: Option<Vec<i64>>,
    d: Option<i64>,
    s: Option<i64>,
    epsilon: Option<f64>,
    beta: Option<f64>,
    repetitions: Option<i64>,
    master_seed: Option<i64>,
    // ORBIT
    bin_width: Option<f64>,
    bin_width_scale: Option<f64>,
    eta_grid: Option<f64>,
    m0: Option<f64>,
    delta_cap: Option<f64>,
    step_scale: Option<f64>,
    // adaptive pilot
    c_w_multiplier: Option<f64>,
    c_theta: Option<f64>,
    c_eta: Option<f64>,
    eta: Option<f64>,
    // offline pilot
    c_lambda: Option<f64>,
    n_exp_scale: Option<f64>,
    n_exp: Option<i64>,
    gamma: Option<f64>,
    // hard instance
    hard_gamma: Option<f64>,
    hard_kappa: Option<f64>,
    hard_t_nominal: Option<f64>,
    hard_epsilon0: Option<f64>,
    // custom instance
    theta: Option<Vec<f64>>,
    p_max: Option<f64>,
    // accounting and output
    oracle_resolution: Option<f64>,
    write_transcripts: Option<bool>,
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKindName,
    pub policy: PolicyKind,
    pub horizons: Vec<u64>,
    pub d: usize,
    pub s: usize,
    pub epsilon: f64,
    pub beta: f64,
    pub repetitions: usize,
    pub master_seed: u64,
    /// Absolute bin width; when absent, `bin_width_scale * T^{-1/(4 beta - 3)}`.
    pub bin_width: Option<f64>,
    pub bin_width_scale: f64,
    pub eta_grid: f64,
    pub m0: f64,
    pub delta_cap: f64,
    pub step_scale: f64,
    pub c_w_multiplier: f64,
    /// Parameter-norm bound; defaults to the instance's `|theta|_2`.
    pub c_theta: Option<f64>,
    pub c_eta: f64,
    /// Fixed pilot accuracy overriding `min(1/2, c_eta (d/T)^{1/4})`.
    pub eta: Option<f64>,
    pub c_lambda: f64,
    pub n_exp_scale: f64,
    pub n_exp: Option<u64>,
    /// Hölder exponent of the local-polynomial oracle.
    pub gamma: f64,
    pub hard_gamma: f64,
    pub hard_kappa: f64,
    pub hard_t_nominal: Option<f64>,
    pub hard_epsilon0: f64,
    pub theta: Option<Vec<f64>>,
    pub p_max: Option<f64>,
    pub oracle_resolution: Option<f64>,
    pub write_transcripts: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: ExperimentKindName::LinearIid,
            policy: PolicyKind::OrbitAdaptive,
            horizons: vec![10_000],
            d: 5,
            s: 5,
            epsilon: 1.0,
            beta: 2.0,
            repetitions: 1,
            master_seed: 0,
            bin_width: None,
            bin_width_scale: 1.0,
            eta_grid: 0.04,
            m0: 2.0,
            delta_cap: 0.25,
            step_scale: 1.0,
            c_w_multiplier: 0.05,
            c_theta: None,
            c_eta: 1.0,
            eta: None,
            c_lambda: 1.0,
            n_exp_scale: 1.0,
            n_exp: None,
            gamma: 2.0,
            hard_gamma: 0.1,
            hard_kappa: 0.05,
            hard_t_nominal: None,
            hard_epsilon0: 0.01,
            theta: None,
            p_max: None,
            oracle_resolution: None,
            write_transcripts: true,
        }
    }
}

fn positive_int(name: &str, v: i64) -> Result<u64> {
    if v < 1 {
        return Err(OrbitError::config(format!(
            "{name} = {v} must be a positive integer"
        )));
    }
    Ok(v as u64)
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(OrbitError::config(format!("{name} = {v} must be positive")));
    }
    Ok(v)
}

impl ExperimentConfig {
    #[allow(clippy::field_reassign_with_default)]
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| OrbitError::config(e.message().to_string()))?;
        let mut c = ExperimentConfig::default();
        c.experiment = ExperimentKindName::parse(
            raw.experiment
                .as_deref()
                .ok_or_else(|| OrbitError::config("missing key 'experiment'"))?,
        )?;
        c.policy = PolicyKind::parse(
            raw.policy
                .as_deref()
                .ok_or_else(|| OrbitError::config("missing key 'policy'"))?,
        )?;
        c.horizons = match (raw.t, raw.horizons) {
            (Some(_), Some(_)) => {
                return Err(OrbitError::config(
                    "give either 'T' or 'horizons', not both",
                ))
            }
            (Some(t), None) => vec![positive_int("T", t)?],
            (None, Some(hs)) if !hs.is_empty() => hs
                .iter()
                .map(|&t| positive_int("horizons", t))
                .collect::<Result<_>>()?,
            _ => {
                return Err(OrbitError::config(
                    "missing key 'T' (or a nonempty 'horizons' list)",
                ))
            }
        };
        if let Some(v) = raw.d {
            c.d = positive_int("d", v)? as usize;
        }
        if let Some(v) = raw.s {
            c.s = positive_int("s", v)? as usize;
        }
        if let Some(v) = raw.epsilon {
            c.epsilon = v;
        }
        if let Some(v) = raw.beta {
            c.beta = v;
        }
        if let Some(v) = raw.repetitions {
            c.repetitions = positive_int("repetitions", v)? as usize;
        }
        if let Some(v) = raw.master_seed {
            if v < 0 {
                return Err(OrbitError::config("master_seed must be nonnegative"));
            }
            c.master_seed = v as u64;
        }
        c.bin_width = raw
            .bin_width
            .map(|v| positive("bin_width", v))
            .transpose()?;
        macro_rules! set_positive {
            ($($field:ident),*) => {$(
                if let Some(v) = raw.$field {
                    c.$field = positive(stringify!($field), v)?;
                }
            )*};
        }
        set_positive!(
            bin_width_scale,
            eta_grid,
            m0,
            delta_cap,
            step_scale,
            c_w_multiplier,
            c_eta,
            c_lambda,
            n_exp_scale,
            gamma,
            hard_gamma,
            hard_epsilon0
        );
        if let Some(v) = raw.hard_kappa {
            if !(v >= 0.0) {
                return Err(OrbitError::config("hard_kappa must be nonnegative"));
            }
            c.hard_kappa = v;
        }
        c.c_theta = raw.c_theta.map(|v| positive("c_theta", v)).transpose()?;
        c.eta = raw.eta.map(|v| positive("eta", v)).transpose()?;
        c.n_exp = raw.n_exp.map(|v| positive_int("n_exp", v)).transpose()?;
        c.hard_t_nominal = raw
            .hard_t_nominal
            .map(|v| positive("hard_t_nominal", v))
            .transpose()?;
        c.theta = raw.theta;
        c.p_max = raw.p_max.map(|v| positive("p_max", v)).transpose()?;
        c.oracle_resolution = raw
            .oracle_resolution
            .map(|v| positive("oracle_resolution", v))
            .transpose()?;
        if let Some(v) = raw.write_transcripts {
            c.write_transcripts = v;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| OrbitError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Cross-field checks that do not need an instance.
    pub fn validate(&self) -> Result<()> {
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            return Err(OrbitError::config("every horizon T must be positive"));
        }
        if self.repetitions == 0 {
            return Err(OrbitError::config("repetitions must be positive"));
        }
        if !(self.beta >= 2.0) || !self.beta.is_finite() {
            return Err(OrbitError::config(format!(
                "beta = {} must be a finite value >= 2",
                self.beta
            )));
        }
        if self.experiment == ExperimentKindName::Anisotropic
            && !(self.epsilon > 0.0 && self.epsilon <= 1.0)
        {
            return Err(OrbitError::config(format!(
                "epsilon = {} must lie in (0, 1]",
                self.epsilon
            )));
        }
        if self.experiment == ExperimentKindName::Custom && self.theta.is_none() {
            return Err(OrbitError::config("the custom experiment needs 'theta'"));
        }
        if let Some(eta) = self.eta {
            if eta > 0.5 {
                return Err(OrbitError::config("eta must not exceed 1/2"));
            }
        }
        if self.delta_cap >= 1.0 {
            return Err(OrbitError::config("delta_cap must be below 1"));
        }
        if self.horizons.iter().any(|&t| t < 4)
            && matches!(
                self.policy,
                PolicyKind::ExploreThenOrbitLasso | PolicyKind::ExploreThenOrbitLocpoly
            )
        {
            return Err(OrbitError::config(
                "explore-then-commit policies need T >= 4",
            ));
        }
        Ok(())
    }

    /// Bin width used at horizon `t`.
    pub fn bin_width_for(&self, t: u64) -> f64 {
        self.bin_width.unwrap_or_else(|| {
            (self.bin_width_scale * crate::orbit::default_bin_width(self.beta, t)).min(1.0)
        })
    }

    /// Resolved configuration as `key = value` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let opt = |v: Option<f64>| v.map_or("default".to_string(), |x| format!("{x:.16e}"));
        let _ = writeln!(s, "experiment = {}", self.experiment.as_str());
        let _ = writeln!(s, "policy = {}", self.policy.as_str());
        let hs: Vec<String> = self.horizons.iter().map(u64::to_string).collect();
        let _ = writeln!(s, "horizons = [{}]", hs.join(", "));
        let _ = writeln!(s, "d = {}", self.d);
        let _ = writeln!(s, "s = {}", self.s);
        let _ = writeln!(s, "epsilon = {:.16e}", self.epsilon);
        let _ = writeln!(s, "beta = {:.16e}", self.beta);
        let _ = writeln!(s, "repetitions = {}", self.repetitions);
        let _ = writeln!(s, "master_seed = {}", self.master_seed);
        let _ = writeln!(s, "bin_width = {}", opt(self.bin_width));
        let _ = writeln!(s, "bin_width_scale = {:.16e}", self.bin_width_scale);
        let _ = writeln!(s, "eta_grid = {:.16e}", self.eta_grid);
        let _ = writeln!(s, "m0 = {:.16e}", self.m0);
        let _ = writeln!(s, "delta_cap = {:.16e}", self.delta_cap);
        let _ = writeln!(s, "step_scale = {:.16e}", self.step_scale);
        let _ = writeln!(s, "c_w_multiplier = {:.16e}", self.c_w_multiplier);
        let _ = writeln!(s, "c_theta = {}", opt(self.c_theta));
        let _ = writeln!(s, "c_eta = {:.16e}", self.c_eta);
        let _ = writeln!(s, "eta = {}", opt(self.eta));
        let _ = writeln!(s, "c_lambda = {:.16e}", self.c_lambda);
        let _ = writeln!(s, "n_exp_scale = {:.16e}", self.n_exp_scale);
        let _ = writeln!(
            s,
            "n_exp = {}",
            self.n_exp.map_or("default".to_string(), |v| v.to_string())
        );
        let _ = writeln!(s, "gamma = {:.16e}", self.gamma);
        let _ = writeln!(s, "hard_gamma = {:.16e}", self.hard_gamma);
        let _ = writeln!(s, "hard_kappa = {:.16e}", self.hard_kappa);
        let _ = writeln!(s, "hard_t_nominal = {}", opt(self.hard_t_nominal));
        let _ = writeln!(s, "hard_epsilon0 = {:.16e}", self.hard_epsilon0);
        let theta = self.theta.as_ref().map_or("none".to_string(), |t| {
            format!(
                "[{}]",
                t.iter()
                    .map(|x| format!("{x:.16e}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            )
        });
        let _ = writeln!(s, "theta = {theta}");
        let _ = writeln!(s, "p_max = {}", opt(self.p_max));
        let _ = writeln!(s, "oracle_resolution = {}", opt(self.oracle_resolution));
        let _ = writeln!(s, "write_transcripts = {}", self.write_transcripts);
        s
    }
}
