use rayon::prelude::*;
use serde::Serialize;

use super::rng::derive_seed;
use super::stats::{wilson, Proportion};
use super::trial::run_trial;
use super::{SimConfig, SimOutcome, Status};
use std::sync::Arc;

use super::Arena;
use crate::error::{config, Error, Result};
use crate::graph::GraphFamily;

/// What one trial contributes to a survival estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrialSummary {
    pub survived: bool,
    pub cap_hit: bool,
    pub local: bool,
    pub events: u64,
    pub births_killed: u64,
    pub births: u64,
}

impl TrialSummary {
    /// Local survival proxy: the root is occupied at some sample time in
    /// `[t0, t_max]`. After a cap hit the root's occupancy at the cap time
    /// stands in for the samples that were not taken.
    pub fn from_outcome(out: &SimOutcome, t0: f64, t_max: f64) -> Self {
        let sampled = out
            .sample_times
            .iter()
            .zip(&out.root_samples)
            .any(|(&s, &occ)| occ && s >= t0 && s <= t_max);
        let cap_hit = matches!(out.status, Status::CapHit { .. });
        TrialSummary {
            survived: out.status.survived(),
            cap_hit,
            local: sampled || (cap_hit && out.root_occupied_at_end),
            events: out.events_processed,
            births_killed: out.births_killed,
            births: out.births,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurvivalEstimate {
    pub lambda: f64,
    pub trials: usize,
    pub global: Proportion,
    pub local: Proportion,
    /// Local survival among globally surviving trials.
    pub local_among_survivors: Proportion,
    pub cap_hits: usize,
    pub t0: f64,
    pub t_max: f64,
    pub cap: u64,
    /// Truncation radius; survival at a finite radius is a lower estimate.
    pub radius: Option<usize>,
    pub seed: u64,
    pub events: u64,
    /// Fraction of births discarded at the boundary.
    pub killed_fraction: f64,
}

/// Runs `trials` independent trials in parallel and reports Wilson 95%
/// intervals for global and local survival.
pub fn estimate_survival(cfg: &SimConfig, trials: usize, t0: Option<f64>) -> Result<SurvivalEstimate> {
    cfg.validate()?;
    if trials == 0 {
        return Err(config("trials must be at least 1"));
    }
    let t0 = t0.unwrap_or(cfg.t_max / 2.0);
    if !(t0 >= 0.0 && t0 < cfg.t_max) {
        return Err(config(format!("t0 must lie in [0, t_max), got {t0}")));
    }
    let summaries: Vec<TrialSummary> = (0..trials as u64)
        .into_par_iter()
        .map(|i| run_trial(cfg, i).map(|o| TrialSummary::from_outcome(&o, t0, cfg.t_max)))
        .collect::<Result<_>>()?;
    Ok(summarize(cfg, &summaries, t0))
}

fn summarize(cfg: &SimConfig, s: &[TrialSummary], t0: f64) -> SurvivalEstimate {
    let survived = s.iter().filter(|x| x.survived).count();
    let local = s.iter().filter(|x| x.local).count();
    let local_surv = s.iter().filter(|x| x.local && x.survived).count();
    let births: u64 = s.iter().map(|x| x.births + x.births_killed).sum();
    let killed: u64 = s.iter().map(|x| x.births_killed).sum();
    SurvivalEstimate {
        lambda: cfg.lambda,
        trials: s.len(),
        global: wilson(survived, s.len()),
        local: wilson(local, s.len()),
        local_among_survivors: wilson(local_surv, survived),
        cap_hits: s.iter().filter(|x| x.cap_hit).count(),
        t0,
        t_max: cfg.t_max,
        cap: cfg.pop_cap,
        radius: cfg.arena.radius(),
        seed: cfg.seed,
        events: s.iter().map(|x| x.events).sum(),
        killed_fraction: if births == 0 { 0.0 } else { killed as f64 / births as f64 },
    }
}

/// One estimate per `λ` of a sorted grid; grid point `i` uses the master
/// seed `derive_seed(seed, i)`.
pub fn sweep_lambda(template: &SimConfig, grid: &[f64], trials: usize, t0: Option<f64>) -> Result<Vec<SurvivalEstimate>> {
    if grid.is_empty() {
        return Err(config("lambda grid is empty"));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(config("lambda grid must be strictly increasing"));
    }
    grid.iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let mut cfg = template.clone();
            cfg.lambda = lambda;
            cfg.seed = derive_seed(template.seed, i as u64);
            let mut est = estimate_survival(&cfg, trials, t0)?;
            est.seed = template.seed;
            Ok(est)
        })
        .collect()
}

pub const PILOT_TRIALS: usize = 100;
pub const PILOT_KILL_FRACTION: f64 = 1e-3;
pub const PILOT_BALL_BUDGET: usize = 1_000_000;
const PILOT_CAP: u64 = 10_000;

/// Truncation radius for a family: the smallest even radius whose pilot
/// run discards fewer than [`PILOT_KILL_FRACTION`] of all births, or the
/// largest even radius whose ball fits in [`PILOT_BALL_BUDGET`]. Returns the
/// radius and the pilot's discarded fraction.
pub fn pilot_radius(family: &GraphFamily, template: &SimConfig) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for r in (2..).step_by(2) {
        let ball = match family.ball_with_budget(&family.root(), r, PILOT_BALL_BUDGET) {
            Ok(b) => b,
            Err(Error::Resource(msg)) => {
                return best.ok_or(Error::Resource(msg));
            }
            Err(e) => return Err(e),
        };
        let arena = Arc::new(Arena::from_ball(&ball));
        let mut cfg = template.clone();
        cfg.init = vec![(arena.root(), 1)];
        cfg.arena = arena;
        cfg.pop_cap = cfg.pop_cap.min(PILOT_CAP);
        cfg.seed = derive_seed(template.seed, u64::MAX);
        let est = estimate_survival(&cfg, PILOT_TRIALS, None)?;
        best = Some((r, est.killed_fraction));
        if est.killed_fraction < PILOT_KILL_FRACTION {
            break;
        }
    }
    Ok(best.expect("loop runs at least once"))
}
