//! Galton–Watson extinction probabilities and the finite-collection bound
//! used for the generalized branching process.
//!
//! For an offspring law with pgf `G`, the iterates `s_{k+1} = G(s_k)` from
//! `s_0 = 0` are the probabilities of extinction by generation `k` and
//! increase to the smallest fixed point `δ` of `G` in `[0, 1]`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::sim::rng::trial_rng;

pub const DEFAULT_FIXED_POINT_TOL: f64 = 1e-14;
pub const FIXED_POINT_MAX_ITER: usize = 1_000_000;
/// Laws with `|mean − 1|` below this are flagged as near-critical.
pub const NEAR_CRITICAL: f64 = 1e-6;
const SUM_TOL: f64 = 1e-12;

type Pgf = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Offspring distribution `ν` with pgf `G(s) = Σ_k ν(k) s^k`.
#[derive(Clone)]
pub enum OffspringLaw {
    /// `ν(0), ν(1), …, ν(K)`.
    Finite(Vec<f64>),
    /// A pgf and its derivative given as functions on `[0, 1]`.
    Pgf { g: Pgf, dg: Pgf, mean: f64 },
}

impl fmt::Debug for OffspringLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OffspringLaw::Finite(p) => f.debug_tuple("Finite").field(p).finish(),
            OffspringLaw::Pgf { mean, .. } => f.debug_struct("Pgf").field("mean", mean).finish(),
        }
    }
}

impl OffspringLaw {
    pub fn finite(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(domain("offspring law needs at least one coefficient"));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(domain(format!("offspring probability {p} is not in [0, 1]")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(domain(format!("offspring probabilities sum to {sum}, not 1")));
        }
        Ok(OffspringLaw::Finite(probs))
    }

    /// Parses `"c0,c1,..."`.
    pub fn parse(text: &str) -> Result<Self> {
        let probs = text
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| domain(format!("cannot parse pgf coefficient {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::finite(probs)
    }

    /// A law given by its pgf; checks `G(1) = 1` and monotonicity and
    /// convexity on a grid.
    pub fn from_pgf(g: Pgf, dg: Pgf) -> Result<Self> {
        if (g(1.0) - 1.0).abs() > SUM_TOL {
            return Err(domain(format!("pgf has G(1) = {}", g(1.0))));
        }
        let grid: Vec<f64> = (0..=64).map(|i| i as f64 / 64.0).collect();
        for w in grid.windows(3) {
            let (a, b, c) = (g(w[0]), g(w[1]), g(w[2]));
            if a > b + SUM_TOL || a + c < 2.0 * b - SUM_TOL || a < -SUM_TOL {
                return Err(domain("pgf is not nonnegative, nondecreasing and convex on [0, 1]"));
            }
        }
        let mean = dg(1.0);
        Ok(OffspringLaw::Pgf { g, dg, mean })
    }

    pub fn pgf(&self, s: f64) -> f64 {
        match self {
            OffspringLaw::Finite(p) => p.iter().rev().fold(0.0, |acc, &c| acc * s + c),
            OffspringLaw::Pgf { g, .. } => g(s),
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match self {
            OffspringLaw::Finite(p) => p
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, &c)| acc * s + k as f64 * c),
            OffspringLaw::Pgf { dg, .. } => dg(s),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            OffspringLaw::Finite(_) => self.derivative(1.0),
            OffspringLaw::Pgf { mean, .. } => *mean,
        }
    }

    pub fn probabilities(&self) -> Option<&[f64]> {
        match self {
            OffspringLaw::Finite(p) => Some(p),
            OffspringLaw::Pgf { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FixedPoint {
    pub delta: f64,
    pub iterations: usize,
    pub mean: f64,
    /// `|mean − 1| < 1e-6`: the iteration converges slowly.
    pub near_critical: bool,
    /// False if the iteration cap was hit first.
    pub converged: bool,
}

/// The smallest fixed point of `G` in `[0, 1]`, by iteration from 0.
///
/// When `G(0) = 0` the iteration is stationary and `δ = 0`. When
/// `G(0) > 0` and the mean is at most 1, `δ = 1` is returned directly, since
/// the iterates only creep towards 1.
pub fn smallest_fixed_point(law: &OffspringLaw, tol: f64) -> Result<FixedPoint> {
    if !(tol > 0.0) {
        return Err(domain(format!("tolerance must be positive, got {tol}")));
    }
    let mean = law.mean();
    let near_critical = (mean - 1.0).abs() < NEAR_CRITICAL;
    let g0 = law.pgf(0.0);
    if g0 == 0.0 {
        return Ok(FixedPoint { delta: 0.0, iterations: 0, mean, near_critical, converged: true });
    }
    if mean <= 1.0 {
        return Ok(FixedPoint { delta: 1.0, iterations: 0, mean, near_critical, converged: true });
    }
    let mut s = 0.0;
    for it in 1..=FIXED_POINT_MAX_ITER {
        let next = law.pgf(s).min(1.0);
        if (next - s).abs() < tol {
            return Ok(FixedPoint { delta: next, iterations: it, mean, near_critical, converged: true });
        }
        s = next;
    }
    Ok(FixedPoint {
        delta: s,
        iterations: FIXED_POINT_MAX_ITER,
        mean,
        near_critical,
        converged: false,
    })
}

/// `s_0 = 0, s_1, …, s_n`: extinction-by-generation-`k` probabilities.
pub fn extinction_iterates(law: &OffspringLaw, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut s = 0.0;
    out.push(s);
    for _ in 0..n {
        s = law.pgf(s);
        out.push(s);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub law: usize,
    pub delta: f64,
    /// `G_i(δ_max)`, which is at most `δ_max`.
    pub g_at_delta_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PowerhouseBound {
    /// `G_i(δ_max) ≤ δ_max` for every law, so a process drawing its
    /// offspring laws from the collection dies out with probability at most
    /// `δ_max`.
    Certified { delta_max: f64, certificates: Vec<Certificate> },
    /// Some laws have `δ_i = 1`; no `δ < 1` works for all of them.
    NoBound { subcritical: Vec<usize> },
}

/// `δ_max = max_i δ_i` over a finite collection, with the checked
/// inequalities `G_i(δ_max) ≤ δ_max`.
pub fn powerhouse_bound(laws: &[OffspringLaw]) -> Result<PowerhouseBound> {
    if laws.is_empty() {
        return Err(domain("need at least one offspring law"));
    }
    let deltas = laws
        .iter()
        .map(|l| smallest_fixed_point(l, DEFAULT_FIXED_POINT_TOL).map(|f| f.delta))
        .collect::<Result<Vec<_>>>()?;
    let subcritical: Vec<usize> = (0..laws.len()).filter(|&i| deltas[i] >= 1.0).collect();
    if !subcritical.is_empty() {
        return Ok(PowerhouseBound::NoBound { subcritical });
    }
    let delta_max = deltas.iter().cloned().fold(0.0, f64::max);
    let mut certificates = Vec::with_capacity(laws.len());
    for (i, law) in laws.iter().enumerate() {
        let g = law.pgf(delta_max);
        if g > delta_max + SUM_TOL {
            return Err(crate::error::Error::Numeric(format!(
                "certificate failed for law {i}: G({delta_max}) = {g}"
            )));
        }
        certificates.push(Certificate { law: i, delta: deltas[i], g_at_delta_max: g });
    }
    Ok(PowerhouseBound::Certified { delta_max, certificates })
}

/// Empirical extinction-by-generation frequencies.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GwSimulation {
    /// `extinct_by[n]` = fraction of trials with an empty generation `n`.
    pub extinct_by: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Populations reaching this size are treated as surviving for good.
    pub threshold: u64,
}

impl GwSimulation {
    /// Binomial standard error of the final frequency.
    pub fn standard_error(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

pub const DEFAULT_GW_THRESHOLD: u64 = 1_000_000;

/// Simulates `trials` independent processes started from one individual.
///
/// A generation of size `Z` is drawn as a multinomial split of `Z` over the
/// offspring sizes (by successive binomials), so each generation costs
/// `O(K)`. Populations reaching `threshold` are counted as never going
/// extinct; the resulting bias is at most `δ^threshold`.
pub fn simulate_gw(
    law: &OffspringLaw,
    generations: usize,
    trials: usize,
    seed: u64,
    threshold: u64,
) -> Result<GwSimulation> {
    let probs = law
        .probabilities()
        .ok_or_else(|| domain("simulation needs a finite-support law"))?
        .to_vec();
    let threshold = threshold.max(1);
    let extinct_at: Vec<Option<usize>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t as u64);
            run_gw(&probs, generations, threshold, &mut rng)
        })
        .collect();
    let mut counts = vec![0usize; generations + 1];
    for n in extinct_at.into_iter().flatten() {
        counts[n] += 1;
    }
    let mut acc = 0;
    let extinct_by = counts
        .into_iter()
        .map(|c| {
            acc += c;
            acc as f64 / trials.max(1) as f64
        })
        .collect();
    Ok(GwSimulation { extinct_by, trials, seed, threshold })
}

fn run_gw<R: Rng + ?Sized>(probs: &[f64], generations: usize, threshold: u64, rng: &mut R) -> Option<usize> {
    let mut z: u64 = 1;
    for n in 1..=generations {
        let mut remaining = z;
        let mut mass = 1.0;
        let mut next: u64 = 0;
        for (k, &p) in probs.iter().enumerate() {
            if remaining == 0 {
                break;
            }
            let nk = if mass <= p || k + 1 == probs.len() {
                remaining
            } else {
                Binomial::new(remaining, (p / mass).clamp(0.0, 1.0))
                    .expect("valid binomial")
                    .sample(rng)
            };
            next += nk * k as u64;
            remaining -= nk;
            mass -= p;
        }
        z = next;
        if z == 0 {
            return Some(n);
        }
        if z >= threshold {
            return None;
        }
    }
    None
}
