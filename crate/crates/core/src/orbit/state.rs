use super::grid::{build_grid, PriceGrid};
use super::partition::{build_bins, BinPartition};
use super::policy_map::poly_price;
use crate::bco::{BcoParams, RefinementGenerator};
use crate::env::OraclePriceTable;
use crate::error::{OrbitError, Result};
use crate::seed::derive;

/// Tuning inputs of the policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitConfig {
    /// Smoothness level; the polynomial degree is `floor(beta - 1)`.
    pub beta: f64,
    pub target_h: f64,
    /// Upper bound on the number of pilot values the policy will receive.
    pub horizon: u64,
    pub m0: f64,
    pub eta_grid: f64,
    pub bco: BcoParams,
}

impl OrbitConfig {
    /// Default tuning for horizon `t`: `h = t^{-1/(4 beta - 3)}`, grid
    /// spacing 0.04 and `m0 = 2`.
    pub fn for_horizon(beta: f64, t: u64) -> Self {
        OrbitConfig {
            beta,
            target_h: default_bin_width(beta, t),
            horizon: t,
            m0: 2.0,
            eta_grid: 0.04,
            bco: BcoParams {
                horizon: t,
                ..BcoParams::default()
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 2.0) || !self.beta.is_finite() {
            return Err(OrbitError::config(format!(
                "beta = {} must be a finite value >= 2",
                self.beta
            )));
        }
        if self.horizon == 0 {
            return Err(OrbitError::config("the pilot budget must be positive"));
        }
        if !(self.m0 > 0.0) {
            return Err(OrbitError::config(format!(
                "m0 = {} must be positive",
                self.m0
            )));
        }
        if !(self.eta_grid > 0.0) {
            return Err(OrbitError::config(format!(
                "eta_grid = {} must be positive",
                self.eta_grid
            )));
        }
        Ok(())
    }

    pub fn rho_loc(&self) -> f64 {
        self.eta_grid.sqrt()
    }

    pub fn degree(&self) -> usize {
        (self.beta - 1.0).floor() as usize
    }

    /// Trust radius `rho_loc / 4`.
    pub fn trust_radius(&self) -> f64 {
        self.rho_loc() / 4.0
    }

    /// `ceil(m0 * ln(e H))`.
    pub fn m_coarse(&self) -> u64 {
        (self.m0 * (1.0 + (self.horizon as f64).ln()))
            .ceil()
            .max(1.0) as u64
    }
}

/// `T^{-1/(4 beta - 3)}`, capped at 1.
pub fn default_bin_width(beta: f64, t: u64) -> f64 {
    (t.max(1) as f64).powf(-1.0 / (4.0 * beta - 3.0)).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OrbitPhase {
    Coarse,
    Refine,
}

impl OrbitPhase {
    pub fn as_str(self) -> &'static str {
        match self {
            OrbitPhase::Coarse => "coarse",
            OrbitPhase::Refine => "refine",
        }
    }
}

/// Local state of one bin.
#[derive(Debug, Clone)]
pub struct BinState {
    tau: u64,
    counts: Vec<u64>,
    means: Vec<f64>,
    anchor: Option<f64>,
    trust_center: Option<Vec<f64>>,
    generator: Option<RefinementGenerator>,
    refine_count: u64,
}

impl BinState {
    fn new(grid_len: usize) -> Self {
        BinState {
            tau: 0,
            counts: vec![0; grid_len],
            means: vec![0.0; grid_len],
            anchor: None,
            trust_center: None,
            generator: None,
            refine_count: 0,
        }
    }

    pub fn visits(&self) -> u64 {
        self.tau
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Empirical revenue means per grid price.
    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn anchor(&self) -> Option<f64> {
        self.anchor
    }

    pub fn trust_center(&self) -> Option<&[f64]> {
        self.trust_center.as_deref()
    }

    pub fn generator(&self) -> Option<&RefinementGenerator> {
        self.generator.as_ref()
    }

    pub fn refine_count(&self) -> u64 {
        self.refine_count
    }
}

/// Smallest grid index attaining the largest mean.
pub fn anchor_index(means: &[f64]) -> usize {
    let mut best = 0;
    for (i, &m) in means.iter().enumerate() {
        if m > means[best] {
            best = i;
        }
    }
    best
}

/// What the policy posts for one pilot value.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub bin: usize,
    pub phase: OrbitPhase,
    /// Posted price, inside `[0, p_max]`.
    pub price: f64,
    /// Candidate price before projection onto `[0, p_max]`.
    pub raw_price: f64,
    /// Refinement coefficients, absent in the coarse phase.
    pub coefficients: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
struct PendingStep {
    bin: usize,
    grid_index: Option<usize>,
    price: f64,
}

/// Full policy state.
#[derive(Debug, Clone)]
pub struct OrbitState {
    config: OrbitConfig,
    partition: BinPartition,
    grid: PriceGrid,
    bins: Vec<BinState>,
    p_max: f64,
    seed: u64,
    calls: u64,
    m_coarse: u64,
    pending: Option<PendingStep>,
}

impl OrbitState {
    /// Builds the policy for pilot values in `index_interval` and prices in
    /// `[0, p_max]`. `seed` drives the refinement generators only.
    pub fn new(
        config: OrbitConfig,
        index_interval: (f64, f64),
        p_max: f64,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        let partition = build_bins(index_interval.0, index_interval.1, config.target_h)?;
        let grid = build_grid(p_max, config.eta_grid)?;
        let bins = (0..partition.len())
            .map(|_| BinState::new(grid.len()))
            .collect();
        Ok(OrbitState {
            m_coarse: config.m_coarse(),
            config,
            partition,
            grid,
            bins,
            p_max,
            seed,
            calls: 0,
            pending: None,
        })
    }

    pub fn config(&self) -> &OrbitConfig {
        &self.config
    }

    pub fn partition(&self) -> &BinPartition {
        &self.partition
    }

    pub fn grid(&self) -> &PriceGrid {
        &self.grid
    }

    pub fn bins(&self) -> &[BinState] {
        &self.bins
    }

    pub fn calls(&self) -> u64 {
        self.calls
    }

    pub fn m_coarse(&self) -> u64 {
        self.m_coarse
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    /// Coarse pulls each bin makes before selecting its anchor.
    pub fn coarse_length(&self) -> u64 {
        self.grid.len() as u64 * self.m_coarse
    }

    /// Chooses the price for pilot value `u_tilde`. Must be followed by
    /// [`observe`](Self::observe) before the next call.
    pub fn propose(&mut self, u_tilde: f64) -> Result<Proposal> {
        if self.pending.is_some() {
            return Err(OrbitError::Protocol(
                "previous price still awaits feedback".into(),
            ));
        }
        if self.calls >= self.config.horizon {
            return Err(OrbitError::Budget {
                budget: self.config.horizon,
            });
        }
        let j = self.partition.assign(u_tilde)?;
        let coarse_length = self.coarse_length();
        let m_coarse = self.m_coarse;
        let bin = &mut self.bins[j];
        bin.tau += 1;
        let proposal = if bin.tau <= coarse_length {
            let m = ((bin.tau - 1) / m_coarse) as usize;
            let price = self.grid.points()[m];
            self.pending = Some(PendingStep {
                bin: j,
                grid_index: Some(m),
                price,
            });
            Proposal {
                bin: j,
                phase: OrbitPhase::Coarse,
                price,
                raw_price: price,
                coefficients: None,
            }
        } else {
            if bin.anchor.is_none() {
                let anchor = self.grid.points()[anchor_index(&bin.means)];
                let mut center = vec![0.0; self.config.degree() + 1];
                center[0] = anchor;
                let generator = RefinementGenerator::new(
                    center.clone(),
                    self.config.trust_radius(),
                    self.p_max,
                    self.config.bco,
                    derive(&[self.seed, j as u64]),
                )
                .map_err(|e| OrbitError::Generator {
                    bin: j,
                    source: Box::new(e),
                })?;
                bin.anchor = Some(anchor);
                bin.trust_center = Some(center);
                bin.generator = Some(generator);
            }
            let generator = bin
                .generator
                .as_mut()
                .expect("generator exists once the anchor is set");
            let a = generator.next_action();
            let raw_price = poly_price(
                self.partition.midpoint(j),
                self.partition.bar_h(),
                &a,
                u_tilde,
            );
            let price = raw_price.clamp(0.0, self.p_max);
            bin.refine_count += 1;
            self.pending = Some(PendingStep {
                bin: j,
                grid_index: None,
                price,
            });
            Proposal {
                bin: j,
                phase: OrbitPhase::Refine,
                price,
                raw_price,
                coefficients: Some(a),
            }
        };
        self.calls += 1;
        Ok(proposal)
    }

    /// Records the purchase outcome of the pending price.
    pub fn observe(&mut self, purchase: bool) -> Result<()> {
        let Some(step) = self.pending.take() else {
            return Err(OrbitError::Protocol(
                "feedback without a pending price".into(),
            ));
        };
        let bin = &mut self.bins[step.bin];
        let reward = if purchase { step.price } else { 0.0 };
        match step.grid_index {
            Some(m) => {
                bin.counts[m] += 1;
                bin.means[m] += (reward - bin.means[m]) / bin.counts[m] as f64;
                Ok(())
            }
            None => bin
                .generator
                .as_mut()
                .expect("refinement steps have a generator")
                .update_feedback(-reward)
                .map_err(|e| OrbitError::Generator {
                    bin: step.bin,
                    source: Box::new(e),
                }),
        }
    }

    /// One full call: propose, query `feedback` with the posted price, observe.
    pub fn step<F>(&mut self, u_tilde: f64, feedback: F) -> Result<Proposal>
    where
        F: FnOnce(f64) -> Result<bool>,
    {
        let proposal = self.propose(u_tilde)?;
        let y = feedback(proposal.price)?;
        self.observe(y)?;
        Ok(proposal)
    }

    /// Replaces the coarse means of bin `j` by `values` and marks its coarse
    /// phase complete, so the next visit selects the anchor from them.
    pub fn complete_coarse_with(&mut self, j: usize, values: &[f64]) -> Result<()> {
        if values.len() != self.grid.len() {
            return Err(OrbitError::contract("one value per grid price is required"));
        }
        let coarse_length = self.coarse_length();
        let m_coarse = self.m_coarse;
        let bin = self
            .bins
            .get_mut(j)
            .ok_or_else(|| OrbitError::contract(format!("bin {j} does not exist")))?;
        if bin.anchor.is_some() {
            return Err(OrbitError::Protocol(format!(
                "bin {j} already selected its anchor"
            )));
        }
        bin.means.copy_from_slice(values);
        bin.counts.iter_mut().for_each(|c| *c = m_coarse);
        self.calls += coarse_length - bin.tau.min(coarse_length);
        bin.tau = bin.tau.max(coarse_length);
        Ok(())
    }
}

/// Localization status of one bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorEvent {
    NotReady,
    Holds,
    Fails,
}

/// Checks `|anchor - p*(u)| <= rho_loc/8` at 32 equispaced points of each
/// bin. Diagnostic only.
pub fn anchor_event_check(state: &OrbitState, table: &OraclePriceTable) -> Vec<AnchorEvent> {
    let tol = state.config.rho_loc() / 8.0;
    state
        .bins
        .iter()
        .enumerate()
        .map(|(j, bin)| match bin.anchor {
            None => AnchorEvent::NotReady,
            Some(anchor) => {
                let (l, r) = state.partition.edges(j);
                let holds = (0..32).all(|k| {
                    let u = l + (r - l) * k as f64 / 31.0;
                    (anchor - table.price(u)).abs() <= tol
                });
                if holds {
                    AnchorEvent::Holds
                } else {
                    AnchorEvent::Fails
                }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{make_experiment_instance, ExperimentKind, Instance};
    use crate::numeric::bisect;
    use crate::seed::{Purpose, SeedStream};

    fn config(h: f64, eta: f64) -> OrbitConfig {
        OrbitConfig {
            beta: 2.0,
            target_h: h,
            horizon: 1_000_000,
            m0: 0.1,
            eta_grid: eta,
            bco: BcoParams::default(),
        }
    }

    fn instance() -> Instance {
        let mut rng = SeedStream::new(0, 0).rng(Purpose::Parameters);
        make_experiment_instance(ExperimentKind::SphereIid, 5, &mut rng).unwrap()
    }

    #[test]
    fn derived_constants() {
        let c = config(0.25, 0.04);
        assert!((c.rho_loc() - 0.2).abs() < 1e-15);
        assert_eq!(c.degree(), 1);
        assert_eq!(OrbitConfig { beta: 3.0, ..c }.degree(), 2);
        assert_eq!(
            OrbitConfig {
                m0: 2.0,
                horizon: 100,
                ..c
            }
            .m_coarse(),
            12
        );
        assert!(OrbitConfig { beta: 1.5, ..c }
            .validate()
            .unwrap_err()
            .is_configuration());
    }

    #[test]
    fn fresh_bin_posts_zero_first_and_cycles_the_grid() {
        let c = config(1.0, 0.5);
        let mut s = OrbitState::new(c, (1.0, 3.0), 3.5, 1).unwrap();
        let mc = s.m_coarse();
        let mut posted = Vec::new();
        for _ in 0..s.coarse_length() {
            let p = s.step(2.0, |_| Ok(true)).unwrap();
            assert_eq!(p.phase, OrbitPhase::Coarse);
            posted.push(p.price);
        }
        assert_eq!(posted[0], 0.0);
        for (k, chunk) in posted.chunks(mc as usize).enumerate() {
            assert!(chunk.iter().all(|&p| p == s.grid().points()[k]));
        }
        assert!(s.bins()[1].anchor().is_none());
        let p = s.step(2.0, |_| Ok(true)).unwrap();
        assert_eq!(p.phase, OrbitPhase::Refine);
        // Always buying makes the top grid price the anchor.
        assert_eq!(s.bins()[1].anchor(), Some(3.5));
        assert!(p.price <= 3.5);
        assert!((p.raw_price - 3.5).abs() <= s.config().trust_radius() + 1e-12);
    }

    #[test]
    fn tied_means_pick_the_smallest_price() {
        let mut s = OrbitState::new(config(1.0, 0.3), (0.0, 1.0), 1.0, 1).unwrap();
        let mut values = vec![0.0; s.grid().len()];
        values[1] = 0.5;
        values[2] = 0.5;
        s.complete_coarse_with(0, &values).unwrap();
        s.step(0.5, |_| Ok(false)).unwrap();
        assert!((s.bins()[0].anchor().unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn exact_means_anchor_near_oracle_price() {
        let inst = instance();
        let u = bisect(
            |u| inst.oracle_price(u).unwrap() - 1.55,
            1.0,
            3.0,
            1e-12,
            200,
        )
        .unwrap();
        let c = config(0.05, 0.16);
        let mut s = OrbitState::new(c, (u - 0.025, u + 0.025), 3.5, 1).unwrap();
        let values: Vec<f64> = s
            .grid()
            .points()
            .iter()
            .map(|&p| inst.revenue(u, p))
            .collect();
        s.complete_coarse_with(0, &values).unwrap();
        s.step(u, |_| Ok(false)).unwrap();
        let anchor = s.bins()[0].anchor().unwrap();
        assert!((anchor - 1.55).abs() <= 0.05 + 1e-9, "{anchor}");
    }

    #[test]
    fn anchor_events() {
        let inst = instance();
        let table = OraclePriceTable::build_default(&inst).unwrap();
        // Bin width and grid spacing small enough for the event to hold
        // across whole bins under exact means.
        let c = config(0.01, 0.01);
        let mut s = OrbitState::new(c, (1.0, 3.0), 3.5, 3).unwrap();
        for j in 0..s.partition().len() {
            let mid = s.partition().midpoint(j);
            let values: Vec<f64> = s
                .grid()
                .points()
                .iter()
                .map(|&p| inst.revenue(mid, p))
                .collect();
            s.complete_coarse_with(j, &values).unwrap();
        }
        let before = anchor_event_check(&s, &table);
        assert!(before.iter().all(|e| *e == AnchorEvent::NotReady));
        s.step(2.1, |_| Ok(true)).unwrap();
        let j = s.partition().assign(2.1).unwrap();
        let events = anchor_event_check(&s, &table);
        assert_eq!(events[j], AnchorEvent::Holds);
        assert_eq!(events[0], AnchorEvent::NotReady);
        s.bins[j].anchor = Some(s.bins[j].anchor.unwrap() + c.rho_loc());
        assert_eq!(anchor_event_check(&s, &table)[j], AnchorEvent::Fails);
    }

    #[test]
    fn protocol_and_budget_errors() {
        let c = OrbitConfig {
            horizon: 2,
            ..config(1.0, 0.5)
        };
        let mut s = OrbitState::new(c, (1.0, 3.0), 3.5, 1).unwrap();
        assert!(matches!(s.observe(true), Err(OrbitError::Protocol(_))));
        s.propose(2.0).unwrap();
        assert!(matches!(s.propose(2.0), Err(OrbitError::Protocol(_))));
        s.observe(true).unwrap();
        s.step(2.0, |_| Ok(true)).unwrap();
        assert!(matches!(
            s.propose(2.0),
            Err(OrbitError::Budget { budget: 2 })
        ));
        assert!(matches!(s.propose(5.0), Err(OrbitError::Budget { .. })));
    }
}
