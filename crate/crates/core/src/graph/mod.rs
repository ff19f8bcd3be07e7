//! Finite multigraphs, lazily generated infinite families and exact path
//! counting.

mod ball;
pub mod families;
pub mod io;
mod multigraph;
pub mod paths;
pub mod random;

use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde_json::Value;
use smallvec::SmallVec;

use crate::error::{domain, Result};
use crate::quotient::QuotientMap;

pub use ball::{Ball, DEFAULT_BALL_BUDGET};
pub use families::{make_family, FamilySpec};
pub use multigraph::WeightedMultigraph;
pub use paths::{PathCountTable, PeriodEstimate, Rooted};

/// Canonical vertex encoding of a family: a short tuple of integers.
///
/// Tuples compare lexicographically, which is the canonical neighbor order.
pub type Vertex = SmallVec<[i64; 4]>;

/// Formats a vertex as comma-separated integers, e.g. `"0,3,1"`.
pub fn encode_vertex(v: &Vertex) -> String {
    let parts: Vec<String> = v.iter().map(|c| c.to_string()).collect();
    parts.join(",")
}

pub fn parse_vertex(s: &str) -> Result<Vertex> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<i64>()
                .map_err(|_| domain(format!("cannot parse vertex {s:?}")))
        })
        .collect()
}

/// Neighbor oracle of a possibly infinite graph.
///
/// Implementations must be deterministic. For non-oriented families the
/// relation must be symmetric with equal weights; ball construction checks
/// this on every pair it materializes.
pub trait NeighborOracle: Send + Sync {
    fn root(&self) -> Vertex;

    /// Pairs `(y, n_xy)` with `n_xy > 0`. Invalid vertices are a domain
    /// error.
    fn neighbors(&self, v: &Vertex) -> Result<Vec<(Vertex, f64)>>;

    fn is_oriented(&self) -> bool {
        false
    }

    /// An upper bound on `Σ_y n_xy` over all vertices.
    fn degree_bound(&self) -> f64;
}

/// A possibly infinite multigraph presented by its neighbor oracle.
#[derive(Clone)]
pub struct GraphFamily {
    name: String,
    params: Value,
    oracle: Arc<dyn NeighborOracle>,
    known_quotient: Option<QuotientMap>,
}

impl fmt::Debug for GraphFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GraphFamily")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("known_quotient", &self.known_quotient.is_some())
            .finish()
    }
}

impl GraphFamily {
    pub fn new(name: impl Into<String>, params: Value, oracle: Arc<dyn NeighborOracle>) -> Self {
        GraphFamily {
            name: name.into(),
            params,
            oracle,
            known_quotient: None,
        }
    }

    pub fn with_quotient(mut self, map: QuotientMap) -> Self {
        self.known_quotient = Some(map);
        self
    }

    /// Presents a finite graph as a family with vertices `[i]`.
    pub fn from_graph(graph: WeightedMultigraph, root: usize) -> Result<Self> {
        if root >= graph.len() {
            return Err(domain(format!("root {root} out of range")));
        }
        let params = serde_json::json!({ "vertices": graph.len(), "root": root });
        Ok(GraphFamily::new(
            "finite",
            params,
            Arc::new(FiniteOracle { graph, root }),
        ))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &Value {
        &self.params
    }

    /// The distinguished vertex `o`.
    pub fn root(&self) -> Vertex {
        self.oracle.root()
    }

    pub fn is_oriented(&self) -> bool {
        self.oracle.is_oriented()
    }

    pub fn degree_bound(&self) -> f64 {
        self.oracle.degree_bound()
    }

    pub fn known_quotient(&self) -> Option<&QuotientMap> {
        self.known_quotient.as_ref()
    }

    pub(crate) fn set_known_quotient(&mut self, map: QuotientMap) {
        self.known_quotient = Some(map);
    }

    /// Neighbors of `v` in canonical (lexicographic) order, duplicates
    /// merged and zero weights dropped.
    pub fn neighbors(&self, v: &Vertex) -> Result<Vec<(Vertex, f64)>> {
        let mut list = self.oracle.neighbors(v)?;
        list.retain(|(_, w)| *w > 0.0);
        list.sort_by(|a, b| a.0.cmp(&b.0));
        list.dedup_by(|later, earlier| {
            if later.0 == earlier.0 {
                earlier.1 += later.1;
                true
            } else {
                false
            }
        });
        Ok(list)
    }

    pub fn degree(&self, v: &Vertex) -> Result<f64> {
        Ok(self.oracle.neighbors(v)?.iter().map(|(_, w)| w).sum())
    }

    /// Materializes `B(center, radius)` with the default size budget.
    pub fn ball(&self, center: &Vertex, radius: usize) -> Result<Ball> {
        Ball::build(self, center, radius, DEFAULT_BALL_BUDGET)
    }

    pub fn ball_with_budget(&self, center: &Vertex, radius: usize, budget: usize) -> Result<Ball> {
        Ball::build(self, center, radius, budget)
    }
}

struct FiniteOracle {
    graph: WeightedMultigraph,
    root: usize,
}

impl NeighborOracle for FiniteOracle {
    fn root(&self) -> Vertex {
        SmallVec::from_slice(&[self.root as i64])
    }

    fn neighbors(&self, v: &Vertex) -> Result<Vec<(Vertex, f64)>> {
        let x = match v.as_slice() {
            [x] if *x >= 0 => *x as usize,
            _ => return Err(domain(format!("unknown vertex {}", encode_vertex(v)))),
        };
        Ok(self
            .graph
            .neighbors_of(x)?
            .into_iter()
            .map(|(y, w)| (SmallVec::from_slice(&[y as i64]), w))
            .collect())
    }

    fn is_oriented(&self) -> bool {
        self.graph.is_oriented()
    }

    fn degree_bound(&self) -> f64 {
        self.graph.max_degree()
    }
}

/// A sequence of walk counts: exact big integers for integer weights,
/// doubles otherwise.
#[derive(Clone, Debug, PartialEq)]
pub enum Counts {
    Exact(Vec<BigUint>),
    Float(Vec<f64>),
}

impl Counts {
    pub fn len(&self) -> usize {
        match self {
            Counts::Exact(v) => v.len(),
            Counts::Float(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Counts::Exact(_))
    }

    /// Entry `i` as a double (may round, may be `inf` for huge integers).
    pub fn get_f64(&self, i: usize) -> f64 {
        match self {
            Counts::Exact(v) => v[i].to_f64().unwrap_or(f64::INFINITY),
            Counts::Float(v) => v[i],
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.get_f64(i)).collect()
    }

    pub fn is_positive(&self, i: usize) -> bool {
        match self {
            Counts::Exact(v) => !v[i].is_zero(),
            Counts::Float(v) => v[i] > 0.0,
        }
    }

    /// Exact entries, if this is an integer sequence.
    pub fn exact(&self) -> Option<&[BigUint]> {
        match self {
            Counts::Exact(v) => Some(v),
            Counts::Float(_) => None,
        }
    }

    /// Decimal rendering: integers verbatim, floats in shortest round-trip
    /// form.
    pub fn render(&self, i: usize) -> String {
        match self {
            Counts::Exact(v) => v[i].to_string(),
            Counts::Float(v) => format!("{}", v[i]),
        }
    }
}
