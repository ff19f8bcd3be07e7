use rand::Rng;
use serde::Serialize;

use super::fenwick::Fenwick;
use super::rng::trial_rng;
use super::{BreedingMode, SimConfig, SimOutcome, Snapshot, Status};
use crate::error::{config, Result};

const CHECK_EVERY: u64 = 1_000;

/// A sub-process carried along a trial by tagging particles: tagged
/// parents have tagged children with probability `lambda_sub / λ`, and only
/// inside `radius_sub` when given. The tagged particles form a BRW with
/// parameter `lambda_sub` on the smaller ball.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coupling {
    pub lambda_sub: f64,
    pub radius_sub: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoupledOutcome {
    pub full: Status,
    pub sub: Status,
}

impl CoupledOutcome {
    pub fn full_survived(&self) -> bool {
        self.full.survived()
    }

    pub fn sub_survived(&self) -> bool {
        self.sub.survived()
    }
}

/// Runs trial `trial` of `config`, drawing from stream `trial` of the
/// master seed.
pub fn run_trial(config: &SimConfig, trial: u64) -> Result<SimOutcome> {
    config.validate()?;
    Ok(Engine::new(config, trial, None).run())
}

/// Runs the trial together with the tagged sub-process of `coupling`.
pub fn run_coupled_trial(config: &SimConfig, trial: u64, coupling: Coupling) -> Result<CoupledOutcome> {
    config.validate()?;
    if !(coupling.lambda_sub >= 0.0 && coupling.lambda_sub <= config.lambda) {
        return Err(config_err(coupling.lambda_sub, config.lambda));
    }
    let mut e = Engine::new(config, trial, Some(coupling));
    let out = e.run();
    let sub = e.sub_status.unwrap_or(out.status);
    Ok(CoupledOutcome { full: out.status, sub })
}

fn config_err(sub: f64, lambda: f64) -> crate::error::Error {
    config(format!("coupled sub-process needs 0 <= lambda_sub <= lambda, got {sub} and {lambda}"))
}

struct Engine<'a> {
    cfg: &'a SimConfig,
    rng: rand_chacha::ChaCha8Rng,
    /// Breeding weight per site: `deg(x)` in edge mode, 1 in site mode.
    w: Vec<f64>,
    eta: Vec<u32>,
    index: Fenwick,
    pop: u64,
    coupling: Option<Coupling>,
    tag: Vec<u32>,
    tagged: u64,
    sub_status: Option<Status>,
}

impl<'a> Engine<'a> {
    fn new(cfg: &'a SimConfig, trial: u64, coupling: Option<Coupling>) -> Self {
        let arena = &cfg.arena;
        let n = arena.len();
        let w = match cfg.mode {
            BreedingMode::Edge => (0..n).map(|x| arena.degree(x)).collect(),
            BreedingMode::Site => vec![1.0; n],
        };
        let mut e = Engine {
            cfg,
            rng: trial_rng(cfg.seed, trial),
            w,
            eta: vec![0; n],
            index: Fenwick::new(n),
            pop: 0,
            coupling,
            tag: if coupling.is_some() { vec![0; n] } else { Vec::new() },
            tagged: 0,
            sub_status: None,
        };
        for &(x, k) in &cfg.init {
            e.eta[x] += k;
            e.pop += k as u64;
            if coupling.is_some() {
                e.tag[x] += k;
                e.tagged += k as u64;
            }
        }
        for x in 0..n {
            if e.eta[x] > 0 {
                e.refresh(x);
            }
        }
        e
    }

    #[inline]
    fn refresh(&mut self, x: usize) {
        let r = self.eta[x] as f64 * (1.0 + self.cfg.lambda * self.w[x]);
        self.index.set(x, r);
    }

    fn recomputed_rate(&self) -> f64 {
        self.eta
            .iter()
            .zip(&self.w)
            .map(|(&k, &w)| k as f64 * (1.0 + self.cfg.lambda * w))
            .sum()
    }

    fn snapshot(&self) -> Snapshot {
        self.eta
            .iter()
            .enumerate()
            .filter(|(_, &k)| k > 0)
            .map(|(x, &k)| (x as u32, k))
            .collect()
    }

    /// Whether a particle picked uniformly at `x` is tagged.
    fn draw_tagged(&mut self, x: usize) -> bool {
        let k = self.tag[x];
        k > 0 && (k == self.eta[x] || self.rng.random_range(0..self.eta[x]) < k)
    }

    fn run(&mut self) -> SimOutcome {
        let cfg = self.cfg;
        let lambda = cfg.lambda;
        let root = cfg.arena.root();
        let times = &cfg.sample_times;
        let mut next_sample = 0;
        let mut out = SimOutcome {
            status: Status::HorizonEnd,
            sample_times: Vec::new(),
            population_at: Vec::new(),
            root_samples: Vec::new(),
            root_occupied_after: (self.eta[root] > 0).then_some(0.0),
            root_occupied_at_end: false,
            events_processed: 0,
            births: 0,
            deaths: 0,
            births_killed: 0,
            snapshots: cfg.record_sites.then(Vec::new),
        };
        let mut t = 0.0;
        loop {
            if self.pop == 0 {
                out.status = Status::Extinct { t };
                break;
            }
            if self.pop >= cfg.pop_cap {
                out.status = Status::CapHit { t };
                break;
            }
            let rate = self.index.total();
            let u: f64 = self.rng.random();
            let t_next = t + -(1.0 - u).ln() / rate;
            while next_sample < times.len() && times[next_sample] < t_next && times[next_sample] <= cfg.t_max {
                out.sample_times.push(times[next_sample]);
                out.population_at.push(self.pop);
                out.root_samples.push(self.eta[root] > 0);
                if let Some(s) = out.snapshots.as_mut() {
                    s.push(self.snapshot());
                }
                next_sample += 1;
            }
            if t_next > cfg.t_max {
                if self.eta[root] > 0 {
                    out.root_occupied_after = Some(cfg.t_max);
                }
                break;
            }
            t = t_next;
            let root_was = self.eta[root] > 0;

            let x = self.index.find(self.rng.random::<f64>() * rate);
            let wx = self.w[x];
            let v = self.rng.random::<f64>() * (1.0 + lambda * wx);
            if v < 1.0 {
                if self.coupling.is_some() && self.draw_tagged(x) {
                    self.tag[x] -= 1;
                    self.tagged -= 1;
                }
                self.eta[x] -= 1;
                self.pop -= 1;
                out.deaths += 1;
                self.refresh(x);
            } else {
                // (v − 1)/λ is uniform on [0, w(x)) given a birth
                let u = ((v - 1.0) / lambda).min(wx * (1.0 - f64::EPSILON));
                let target = match cfg.mode {
                    BreedingMode::Edge => cfg.arena.edge_target(x, u),
                    BreedingMode::Site => cfg.arena.site_target(x, u),
                };
                let parent_tagged = self.coupling.is_some() && self.draw_tagged(x);
                match target {
                    Some(y) => {
                        self.eta[y] += 1;
                        self.pop += 1;
                        out.births += 1;
                        if let (true, Some(c)) = (parent_tagged, self.coupling) {
                            let inside = c.radius_sub.is_none_or(|r| cfg.arena.depth(y) <= r);
                            if inside && self.rng.random::<f64>() * lambda < c.lambda_sub {
                                self.tag[y] += 1;
                                self.tagged += 1;
                            }
                        }
                        self.refresh(y);
                    }
                    None => out.births_killed += 1,
                }
            }
            out.events_processed += 1;
            if root_was && self.eta[root] == 0 {
                out.root_occupied_after = Some(t);
            }
            if self.coupling.is_some() && self.tagged == 0 && self.sub_status.is_none() {
                self.sub_status = Some(Status::Extinct { t });
            }
            if cfg!(debug_assertions) && out.events_processed % CHECK_EVERY == 0 {
                let exact = self.recomputed_rate();
                debug_assert!(
                    (self.index.total() - exact).abs() <= 1e-9 * exact.max(1.0),
                    "rate index drifted: {} vs {exact}",
                    self.index.total()
                );
            }
        }
        match out.status {
            Status::Extinct { .. } => {
                while next_sample < times.len() && times[next_sample] <= cfg.t_max {
                    out.sample_times.push(times[next_sample]);
                    out.population_at.push(0);
                    out.root_samples.push(false);
                    if let Some(s) = out.snapshots.as_mut() {
                        s.push(Vec::new());
                    }
                    next_sample += 1;
                }
            }
            Status::CapHit { t } => {
                if self.eta[root] > 0 {
                    out.root_occupied_after = Some(t);
                }
            }
            Status::HorizonEnd => {}
        }
        out.root_occupied_at_end = self.eta[root] > 0;
        out
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::graph::{make_family, FamilySpec, WeightedMultigraph};
    use crate::sim::Arena;

    fn loops(k: f64) -> Arc<Arena> {
        let g = WeightedMultigraph::new(1, vec![(0, 0, k)], false).unwrap();
        Arc::new(Arena::from_graph(&g, 0).unwrap())
    }

    #[test]
    fn reproducible_and_stepwise() {
        let z = make_family(&FamilySpec::Lattice { d: 1 }).unwrap();
        let arena = Arc::new(Arena::from_family(&z, 10).unwrap());
        let mut cfg = SimConfig::new(arena, BreedingMode::Edge, 0.6).with_horizon(20.0).with_seed(3);
        cfg.record_sites = true;
        for trial in 0..20 {
            let a = run_trial(&cfg, trial).unwrap();
            let b = run_trial(&cfg, trial).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.births + a.deaths + a.births_killed, a.events_processed);
            let snaps = a.snapshots.as_ref().unwrap();
            for (p, s) in a.population_at.iter().zip(snaps) {
                assert_eq!(*p, s.iter().map(|&(_, k)| k as u64).sum::<u64>());
            }
            if let Status::Extinct { .. } = a.status {
                assert_eq!(a.population_at.len(), 21);
                assert_eq!(*a.population_at.last().unwrap(), 0);
            }
        }
    }

    #[test]
    fn pure_death_extinction_time() {
        let mut cfg = SimConfig::new(loops(3.0), BreedingMode::Edge, 0.0).with_horizon(1e6);
        cfg.init = vec![(0, 3)];
        cfg.sample_times.clear();
        let n = 20_000;
        let mean: f64 = (0..n)
            .map(|i| match run_trial(&cfg, i).unwrap().status {
                Status::Extinct { t } => t,
                s => panic!("{s:?}"),
            })
            .sum::<f64>()
            / n as f64;
        let expect = 1.0 + 0.5 + 1.0 / 3.0;
        // sd of the extinction time is sqrt(1 + 1/4 + 1/9)
        assert!((mean - expect).abs() < 4.0 * 1.167 / (n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn cap_and_guard() {
        let cfg = SimConfig::new(loops(3.0), BreedingMode::Edge, 5.0).with_cap(50);
        let hit = (0..50).any(|i| matches!(run_trial(&cfg, i).unwrap().status, Status::CapHit { .. }));
        assert!(hit);
        let bad = SimConfig::new(loops(3.0), BreedingMode::Edge, 1e12).with_cap(1 << 20);
        assert!(matches!(run_trial(&bad, 0), Err(crate::Error::Config(_))));
        let neg = SimConfig::new(loops(3.0), BreedingMode::Edge, -1.0);
        assert!(run_trial(&neg, 0).is_err());
    }

    #[test]
    fn coupling_is_monotone() {
        let z = make_family(&FamilySpec::Lattice { d: 1 }).unwrap();
        let arena = Arc::new(Arena::from_family(&z, 8).unwrap());
        let cfg = SimConfig::new(arena, BreedingMode::Edge, 0.8).with_horizon(15.0).with_cap(2000);
        let c = Coupling { lambda_sub: 0.55, radius_sub: Some(4) };
        for trial in 0..200 {
            let o = run_coupled_trial(&cfg, trial, c).unwrap();
            assert!(!o.sub_survived() || o.full_survived());
        }
    }
}
