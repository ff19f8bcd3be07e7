//! Continuous-time simulation of branching random walks on a finite arena.
//!
//! Every particle dies at rate 1. In edge mode a particle at `x` breeds onto
//! `y` at rate `λ·n_xy`; in site mode it breeds at rate `λ` and the child
//! jumps according to a kernel `P`. Offspring landing outside a truncated
//! ball are discarded, so survival numbers on families are lower estimates
//! at the truncation radius.

mod arena;
mod estimate;
mod fenwick;
mod project;
pub mod rng;
pub mod stats;
mod trial;

use std::sync::Arc;

use serde::Serialize;

pub use arena::Arena;
pub use estimate::{estimate_survival, pilot_radius, sweep_lambda, SurvivalEstimate, TrialSummary, PILOT_KILL_FRACTION};
pub use fenwick::Fenwick;
pub use project::{project, ProjectedTrajectory};
pub use stats::{ks_critical, ks_statistic, wilson, Proportion};
pub use trial::{run_coupled_trial, run_trial, CoupledOutcome, Coupling};

use crate::error::{config, Result};

pub const DEFAULT_POP_CAP: u64 = 100_000;
pub const DEFAULT_T_MAX: f64 = 100.0;
pub const DEFAULT_SAMPLE_SPACING: f64 = 1.0;
/// Largest total event rate a trial may reach.
pub const RATE_GUARD: f64 = 1e15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BreedingMode {
    /// Breeding onto each neighbor `y` at rate `λ·n_xy`.
    Edge,
    /// Breeding at rate `λ`, child placed by the arena's site kernel.
    Site,
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub arena: Arc<Arena>,
    pub mode: BreedingMode,
    pub lambda: f64,
    /// Initial particles as (arena index, count).
    pub init: Vec<(usize, u32)>,
    pub t_max: f64,
    pub pop_cap: u64,
    pub seed: u64,
    /// Sorted times at which population and root occupancy are recorded.
    pub sample_times: Vec<f64>,
    /// Keep per-site counts at every sample time.
    pub record_sites: bool,
}

/// `0, spacing, 2·spacing, … ≤ t_max`.
pub fn uniform_samples(t_max: f64, spacing: f64) -> Vec<f64> {
    let k = (t_max / spacing + 1e-9).floor() as usize;
    (0..=k).map(|i| i as f64 * spacing).collect()
}

impl SimConfig {
    /// One particle at the root, default horizon, cap and unit sample spacing.
    pub fn new(arena: Arc<Arena>, mode: BreedingMode, lambda: f64) -> Self {
        let root = arena.root();
        SimConfig {
            arena,
            mode,
            lambda,
            init: vec![(root, 1)],
            t_max: DEFAULT_T_MAX,
            pop_cap: DEFAULT_POP_CAP,
            seed: 0,
            sample_times: uniform_samples(DEFAULT_T_MAX, DEFAULT_SAMPLE_SPACING),
            record_sites: false,
        }
    }

    /// Sets `t_max` and resamples at unit spacing.
    pub fn with_horizon(mut self, t_max: f64) -> Self {
        self.t_max = t_max;
        self.sample_times = uniform_samples(t_max, DEFAULT_SAMPLE_SPACING);
        self
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.pop_cap = cap;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_samples(mut self, times: Vec<f64>) -> Self {
        self.sample_times = times;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(config(format!("lambda must be finite and nonnegative, got {}", self.lambda)));
        }
        if self.pop_cap < 1 || self.pop_cap > u32::MAX as u64 {
            return Err(config(format!("pop_cap must be in 1..={}", u32::MAX)));
        }
        if !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return Err(config(format!("t_max must be positive and finite, got {}", self.t_max)));
        }
        if self.init.is_empty() || self.init.iter().any(|&(x, _)| x >= self.arena.len()) {
            return Err(config("initial configuration must name arena sites"));
        }
        if self.sample_times.windows(2).any(|w| !(w[0] <= w[1])) || self.sample_times.iter().any(|t| !(*t >= 0.0)) {
            return Err(config("sample times must be nonnegative and sorted"));
        }
        let w = match self.mode {
            BreedingMode::Edge => self.arena.max_degree(),
            BreedingMode::Site => 1.0,
        };
        let peak = self.pop_cap as f64 * (1.0 + self.lambda * w);
        if !(peak <= RATE_GUARD) {
            return Err(config(format!(
                "total event rate could reach {peak:.3e}, above the guard {RATE_GUARD:.0e}; use a smaller pop_cap"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Status {
    Extinct { t: f64 },
    CapHit { t: f64 },
    HorizonEnd,
}

impl Status {
    /// Global survival indicator; a cap hit counts as survival.
    pub fn survived(&self) -> bool {
        !matches!(self, Status::Extinct { .. })
    }
}

/// Occupied sites with their counts at one sample time.
pub type Snapshot = Vec<(u32, u32)>;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimOutcome {
    pub status: Status,
    /// Sample times covered; cut short by a cap hit.
    pub sample_times: Vec<f64>,
    pub population_at: Vec<u64>,
    pub root_samples: Vec<bool>,
    /// Latest time the root held a particle.
    pub root_occupied_after: Option<f64>,
    /// Root occupied when the trial stopped.
    pub root_occupied_at_end: bool,
    pub events_processed: u64,
    pub births: u64,
    pub deaths: u64,
    pub births_killed: u64,
    pub snapshots: Option<Vec<Snapshot>>,
}
