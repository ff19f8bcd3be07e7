use serde::Serialize;

use super::{Arena, SimOutcome};
use crate::error::{domain, Error, Result};
use crate::quotient::QuotientMap;

/// `ξ_t(y) = Σ_{φ(x) = y} η_t(x)` at every recorded sample time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProjectedTrajectory {
    pub sample_times: Vec<f64>,
    /// One row per sample time, one entry per vertex of `Y`.
    pub counts: Vec<Vec<u64>>,
}

impl ProjectedTrajectory {
    pub fn totals(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }
}

/// Projects a trajectory recorded with per-site counts through a verified
/// quotient map.
pub fn project(outcome: &SimOutcome, arena: &Arena, map: &QuotientMap) -> Result<ProjectedTrajectory> {
    if !map.is_verified() {
        return Err(domain("refusing to project through an unverified quotient map"));
    }
    let snaps = outcome
        .snapshots
        .as_ref()
        .ok_or_else(|| domain("trajectory was recorded without per-site counts"))?;
    let classes: Vec<usize> = arena
        .vertices()
        .iter()
        .map(|v| map.class_of(v))
        .collect::<Result<_>>()?;
    let k = map.codomain().len();
    let mut counts = Vec::with_capacity(snaps.len());
    for (i, snap) in snaps.iter().enumerate() {
        let mut row = vec![0u64; k];
        for &(x, c) in snap {
            row[classes[x as usize]] += c as u64;
        }
        let total: u64 = row.iter().sum();
        if total != outcome.population_at[i] {
            return Err(Error::Numeric(format!(
                "projection lost particles at sample {i}: {total} vs {}",
                outcome.population_at[i]
            )));
        }
        counts.push(row);
    }
    Ok(ProjectedTrajectory {
        sample_times: outcome.sample_times.clone(),
        counts,
    })
}
