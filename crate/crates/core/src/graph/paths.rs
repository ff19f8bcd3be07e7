//! Walk counting: `γⁿ_{x,y}`, totals `Tⁿ_x`, first-passage counts
//! `φⁿ_{x,y}` and simple-random-walk first returns.
//!
//! Integer-weighted inputs are counted in `u128` and transparently redone
//! with big integers if any intermediate value overflows, so exact results
//! never wrap. Float-weighted inputs are counted in `f64`.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};

use super::{encode_vertex, parse_vertex, Counts, GraphFamily, Vertex, WeightedMultigraph};
use crate::error::{domain, Error, Result};

/// Cap on `(n_max + 1) · |V|` cells for full `γ` tables.
pub const TABLE_CELL_BUDGET: usize = 50_000_000;

pub(crate) trait Tally: Clone {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_nil(&self) -> bool;
    /// `self += a · w`; false on overflow.
    fn add_product(&mut self, a: &Self, w: f64) -> bool;
}

impl Tally for u128 {
    fn zero() -> Self {
        0
    }
    fn one() -> Self {
        1
    }
    fn is_nil(&self) -> bool {
        *self == 0
    }
    fn add_product(&mut self, a: &Self, w: f64) -> bool {
        match a.checked_mul(w as u128).and_then(|p| self.checked_add(p)) {
            Some(s) => {
                *self = s;
                true
            }
            None => false,
        }
    }
}

impl Tally for BigUint {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_nil(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add_product(&mut self, a: &Self, w: f64) -> bool {
        if w == 1.0 {
            *self += a;
        } else {
            *self += a * BigUint::from(w as u64);
        }
        true
    }
}

impl Tally for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn is_nil(&self) -> bool {
        *self == 0.0
    }
    fn add_product(&mut self, a: &Self, w: f64) -> bool {
        *self += a * w;
        true
    }
}

/// One step `next = cur · N`, with each row of `N` optionally scaled.
fn step<C: Tally>(g: &WeightedMultigraph, cur: &[C], next: &mut [C], scale: Option<&[f64]>) -> bool {
    for c in next.iter_mut() {
        *c = C::zero();
    }
    for (z, cz) in cur.iter().enumerate() {
        if cz.is_nil() {
            continue;
        }
        let (targets, weights) = g.row(z);
        let s = scale.map_or(1.0, |s| s[z]);
        for (&y, &w) in targets.iter().zip(weights) {
            if !next[y as usize].add_product(cz, w * s) {
                return false;
            }
        }
    }
    true
}

/// Counts of walks from `s` that end at `t` after `n` steps, `n = 0..=n_max`.
///
/// With `taboo` the mass at `t` is recorded and then removed after every
/// step, giving first-passage counts (entry 0 is then 0). `prune` drops mass
/// that can no longer get back to `t = s` in time, given distances from `s`.
pub(crate) fn passage_kernel<C: Tally>(
    g: &WeightedMultigraph,
    s: usize,
    t: usize,
    n_max: usize,
    taboo: bool,
    prune: Option<&[u32]>,
    scale: Option<&[f64]>,
) -> Option<Vec<C>> {
    let n = g.len();
    let mut cur = vec![C::zero(); n];
    let mut next = vec![C::zero(); n];
    cur[s] = C::one();
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(if !taboo && s == t { C::one() } else { C::zero() });
    for k in 1..=n_max {
        if !step(g, &cur, &mut next, scale) {
            return None;
        }
        out.push(next[t].clone());
        if taboo {
            next[t] = C::zero();
        }
        if let Some(dist) = prune {
            let room = (n_max - k) as u32;
            for (y, c) in next.iter_mut().enumerate() {
                if dist[y] > room {
                    *c = C::zero();
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Some(out)
}

/// `T^0..T^n_max` from `s`, using the last step's row sums from `degree`.
pub(crate) fn totals_kernel<C: Tally>(
    g: &WeightedMultigraph,
    degree: &[f64],
    s: usize,
    n_max: usize,
) -> Option<Vec<C>> {
    let n = g.len();
    let mut cur = vec![C::zero(); n];
    let mut next = vec![C::zero(); n];
    cur[s] = C::one();
    let mut out = vec![C::one()];
    for k in 1..=n_max {
        let mut total = C::zero();
        for (z, c) in cur.iter().enumerate() {
            if !c.is_nil() && !total.add_product(c, degree[z]) {
                return None;
            }
        }
        out.push(total);
        if k < n_max && !step(g, &cur, &mut next, None) {
            return None;
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Some(out)
}

/// Full rows `γⁿ_{s,·}` for `n = 0..=n_max`.
pub(crate) fn rows_kernel<C: Tally>(g: &WeightedMultigraph, s: usize, n_max: usize) -> Option<Vec<Vec<C>>> {
    let n = g.len();
    let mut rows = Vec::with_capacity(n_max + 1);
    let mut first = vec![C::zero(); n];
    first[s] = C::one();
    rows.push(first);
    for _ in 1..=n_max {
        let mut next = vec![C::zero(); n];
        if !step(g, rows.last().unwrap(), &mut next, None) {
            return None;
        }
        rows.push(next);
    }
    Some(rows)
}

fn widen(v: Vec<u128>) -> Vec<BigUint> {
    v.into_iter().map(BigUint::from).collect()
}

/// Runs a kernel exactly (u128, then BigUint on overflow) for integral
/// graphs and in doubles otherwise.
macro_rules! counted {
    ($integral:expr, $kernel:ident ( $($arg:expr),* $(,)? )) => {
        if $integral {
            match $kernel::<u128>($($arg),*) {
                Some(v) => Counts::Exact(widen(v)),
                None => Counts::Exact($kernel::<BigUint>($($arg),*).expect("big integers do not overflow")),
            }
        } else {
            Counts::Float($kernel::<f64>($($arg),*).expect("floats do not overflow"))
        }
    };
}

/// `γⁿ_{x,y}` and `Tⁿ_x` for one source and every `n ≤ n_max`.
#[derive(Clone, Debug)]
pub struct PathCountTable {
    source: String,
    horizon: usize,
    vertices: Vec<String>,
    /// `gamma[n][y]`.
    gamma: Vec<Counts>,
    totals: Counts,
}

impl PathCountTable {
    fn from_graph(g: &WeightedMultigraph, s: usize, n_max: usize, vertices: Vec<String>, degree: &[f64]) -> Result<Self> {
        let cells = (n_max + 1).saturating_mul(g.len());
        if cells > TABLE_CELL_BUDGET {
            return Err(Error::Resource(format!(
                "path table with {} vertices exceeds {TABLE_CELL_BUDGET} cells at horizon {n_max}",
                g.len()
            )));
        }
        let gamma: Vec<Counts> = if g.is_integral() {
            match rows_kernel::<u128>(g, s, n_max) {
                Some(rows) => rows.into_iter().map(|r| Counts::Exact(widen(r))).collect(),
                None => rows_kernel::<BigUint>(g, s, n_max)
                    .expect("big integers do not overflow")
                    .into_iter()
                    .map(Counts::Exact)
                    .collect(),
            }
        } else {
            rows_kernel::<f64>(g, s, n_max)
                .expect("floats do not overflow")
                .into_iter()
                .map(Counts::Float)
                .collect()
        };
        let totals = counted!(g.is_integral(), totals_kernel(g, degree, s, n_max));
        Ok(PathCountTable {
            source: vertices[s].clone(),
            horizon: n_max,
            vertices,
            gamma,
            totals,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Vertex names in column order (labels or family encodings).
    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == name)
    }

    /// The row `γⁿ_{x,·}`.
    pub fn gamma_row(&self, n: usize) -> &Counts {
        &self.gamma[n]
    }

    pub fn gamma(&self, n: usize, y: usize) -> f64 {
        self.gamma[n].get_f64(y)
    }

    /// `Tⁿ_x` for `n = 0..=horizon`.
    pub fn totals(&self) -> &Counts {
        &self.totals
    }
}

/// The gcd of return times seen up to a horizon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PeriodEstimate {
    /// `gcd{n ≤ horizon : γⁿ_{x,x} > 0}`; can only shrink as the horizon
    /// grows.
    Estimate { d: usize, horizon: usize },
    /// No closed walk through `x` of length ≤ horizon.
    Inconclusive { horizon: usize },
}

impl PeriodEstimate {
    pub fn value(&self) -> Option<usize> {
        match self {
            PeriodEstimate::Estimate { d, .. } => Some(*d),
            PeriodEstimate::Inconclusive { .. } => None,
        }
    }
}

/// A vertex together with the graph it lives in.
#[derive(Clone, Debug)]
pub enum Rooted<'a> {
    Graph { graph: &'a WeightedMultigraph, vertex: usize },
    Family { family: &'a GraphFamily, vertex: Vertex },
}

impl<'a> Rooted<'a> {
    pub fn graph(graph: &'a WeightedMultigraph, vertex: usize) -> Result<Self> {
        graph.neighbors_of(vertex)?;
        Ok(Rooted::Graph { graph, vertex })
    }

    pub fn family(family: &'a GraphFamily, vertex: Vertex) -> Result<Self> {
        family.neighbors(&vertex)?;
        Ok(Rooted::Family { family, vertex })
    }

    pub fn family_root(family: &'a GraphFamily) -> Self {
        Rooted::Family {
            vertex: family.root(),
            family,
        }
    }

    /// Resolves a vertex name: a label of a finite graph or an encoding of
    /// a family vertex.
    pub fn resolve(&self, name: &str) -> Result<Rooted<'a>> {
        match *self {
            Rooted::Graph { graph, .. } => Rooted::graph(graph, graph.index_of(name)?),
            Rooted::Family { family, .. } => Rooted::family(family, parse_vertex(name)?),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Rooted::Graph { graph, vertex } => graph.label(*vertex).into_owned(),
            Rooted::Family { family, vertex } => format!("{}:{}", family.name(), encode_vertex(vertex)),
        }
    }

    pub fn is_oriented(&self) -> bool {
        match self {
            Rooted::Graph { graph, .. } => graph.is_oriented(),
            Rooted::Family { family, .. } => family.is_oriented(),
        }
    }

    /// `M`, or the family's declared degree bound.
    pub fn degree_bound(&self) -> f64 {
        match self {
            Rooted::Graph { graph, .. } => graph.max_degree(),
            Rooted::Family { family, .. } => family.degree_bound(),
        }
    }

    /// `|B(x, r)|`.
    pub fn ball_size(&self, r: usize) -> Result<usize> {
        match self {
            Rooted::Graph { graph, vertex } => {
                Ok(graph.distances_from(*vertex).iter().filter(|&&d| d <= r).count())
            }
            Rooted::Family { family, vertex } => Ok(family.ball(vertex, r)?.len()),
        }
    }

    /// Returns `γⁿ_{x,x}` (`taboo = false`) or `φⁿ_{x,x}` (`taboo = true`)
    /// for `n = 0..=n_max`.
    fn closed_walks(&self, n_max: usize, taboo: bool) -> Result<Counts> {
        match self {
            Rooted::Graph { graph, vertex } => Ok(counted!(
                graph.is_integral(),
                passage_kernel(graph, *vertex, *vertex, n_max, taboo, None, None)
            )),
            Rooted::Family { family, vertex } => {
                let (radius, prune) = closed_walk_radius(family, n_max);
                let ball = family.ball(vertex, radius)?;
                let g = ball.graph();
                let dist = prune.then(|| ball.distances());
                Ok(counted!(g.is_integral(), passage_kernel(g, 0, 0, n_max, taboo, dist, None)))
            }
        }
    }

    /// `γⁿ_{x,x}` for `n = 0..=n_max`.
    pub fn return_counts(&self, n_max: usize) -> Result<Counts> {
        self.closed_walks(n_max, false)
    }

    /// `φⁿ_{x,x}` for `n = 0..=n_max` (entry 0 is 0).
    pub fn first_returns(&self, n_max: usize) -> Result<Counts> {
        self.closed_walks(n_max, true)
    }

    /// `φⁿ_{x,y}` for `n = 0..=n_max`, where `target` names `y` in the same
    /// graph.
    pub fn first_passage(&self, target: &Rooted<'_>, n_max: usize) -> Result<Counts> {
        match (self, target) {
            (Rooted::Graph { graph, vertex }, Rooted::Graph { graph: g2, vertex: y })
                if std::ptr::eq(*graph, *g2) =>
            {
                Ok(counted!(
                    graph.is_integral(),
                    passage_kernel(graph, *vertex, *y, n_max, true, None, None)
                ))
            }
            (Rooted::Family { family, vertex }, Rooted::Family { vertex: y, .. }) => {
                let ball = family.ball(vertex, n_max)?;
                let g = ball.graph();
                match ball.index_of(y) {
                    Some(t) => Ok(counted!(g.is_integral(), passage_kernel(g, 0, t, n_max, true, None, None))),
                    None => {
                        let zeros = n_max + 1;
                        Ok(if g.is_integral() {
                            Counts::Exact(vec![BigUint::default(); zeros])
                        } else {
                            Counts::Float(vec![0.0; zeros])
                        })
                    }
                }
            }
            _ => Err(domain("first passage needs both vertices in the same graph")),
        }
    }

    /// `Tⁿ_x` for `n = 0..=n_max`.
    pub fn walk_totals(&self, n_max: usize) -> Result<Counts> {
        match self {
            Rooted::Graph { graph, vertex } => {
                let degree: Vec<f64> = (0..graph.len()).map(|z| graph.degree(z)).collect();
                Ok(counted!(graph.is_integral(), totals_kernel(graph, &degree, *vertex, n_max)))
            }
            Rooted::Family { family, vertex } => {
                let ball = family.ball(vertex, n_max.saturating_sub(1))?;
                let g = ball.graph();
                let integral = g.is_integral() && ball.full_degrees().iter().all(|d| d.fract() == 0.0);
                Ok(counted!(integral, totals_kernel(g, ball.full_degrees(), 0, n_max)))
            }
        }
    }

    /// Full table of `γⁿ_{x,·}` and `Tⁿ_x`. For families the columns are the
    /// vertices of `B(x, n_max)`.
    pub fn path_counts(&self, n_max: usize) -> Result<PathCountTable> {
        match self {
            Rooted::Graph { graph, vertex } => {
                let degree: Vec<f64> = (0..graph.len()).map(|z| graph.degree(z)).collect();
                PathCountTable::from_graph(graph, *vertex, n_max, graph.labels(), &degree)
            }
            Rooted::Family { family, vertex } => {
                let ball = family.ball(vertex, n_max)?;
                let names = ball.members().iter().map(encode_vertex).collect();
                PathCountTable::from_graph(ball.graph(), 0, n_max, names, ball.full_degrees())
            }
        }
    }

    /// `gcd{n ≤ n_max : γⁿ_{x,x} > 0}`.
    pub fn period(&self, n_max: usize) -> Result<PeriodEstimate> {
        let counts = self.return_counts(n_max)?;
        let d = (1..=n_max)
            .filter(|&n| counts.is_positive(n))
            .fold(0usize, |acc, n| acc.gcd(&n));
        Ok(if d == 0 {
            PeriodEstimate::Inconclusive { horizon: n_max }
        } else {
            PeriodEstimate::Estimate { d, horizon: n_max }
        })
    }

    /// First-return probabilities `f⁽ⁿ⁾(x,x)` of the simple random walk
    /// `p(x,y) = n_xy / deg(x)`, `n = 0..=n_max`.
    pub fn srw_first_returns(&self, n_max: usize) -> Result<Vec<f64>> {
        match self {
            Rooted::Graph { graph, vertex } => {
                let scale: Vec<f64> = (0..graph.len()).map(|z| 1.0 / graph.degree(z)).collect();
                Ok(passage_kernel::<f64>(graph, *vertex, *vertex, n_max, true, None, Some(&scale)).unwrap())
            }
            Rooted::Family { family, vertex } => {
                let (radius, prune) = closed_walk_radius(family, n_max);
                let ball = family.ball(vertex, radius)?;
                let scale: Vec<f64> = ball.full_degrees().iter().map(|d| 1.0 / d).collect();
                let dist = prune.then(|| ball.distances());
                Ok(passage_kernel::<f64>(ball.graph(), 0, 0, n_max, true, dist, Some(&scale)).unwrap())
            }
        }
    }
}

/// Radius of the ball that determines closed walks up to `n_max`, and
/// whether distance pruning is valid (non-oriented graphs only).
fn closed_walk_radius(family: &GraphFamily, n_max: usize) -> (usize, bool) {
    if family.is_oriented() {
        (n_max, false)
    } else {
        (n_max / 2, true)
    }
}
