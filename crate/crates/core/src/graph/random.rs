//! Seeded random connected multigraphs for property checks and
//! benchmarks.

use rand::Rng;

use super::WeightedMultigraph;
use crate::error::Result;

/// Parameters of [`random_multigraph`].
#[derive(Clone, Copy, Debug)]
pub struct RandomGraphSpec {
    pub vertices: usize,
    pub max_weight: u32,
    /// Probability that a given ordered pair (or unordered, if not oriented)
    /// carries an edge beyond the spanning structure.
    pub density: f64,
    pub oriented: bool,
}

impl Default for RandomGraphSpec {
    fn default() -> Self {
        RandomGraphSpec {
            vertices: 8,
            max_weight: 3,
            density: 0.3,
            oriented: false,
        }
    }
}

/// A connected multigraph with integer weights in `1..=max_weight`.
///
/// Non-oriented graphs get a random spanning tree plus extra edges;
/// oriented graphs get a random Hamiltonian cycle plus extra arcs, so they
/// are strongly connected (irreducible).
pub fn random_multigraph<R: Rng + ?Sized>(rng: &mut R, spec: RandomGraphSpec) -> Result<WeightedMultigraph> {
    let n = spec.vertices.max(1);
    let weight = |rng: &mut R| rng.random_range(1..=spec.max_weight.max(1)) as f64;
    let mut edges = Vec::new();
    if spec.oriented {
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        for i in 0..n {
            edges.push((order[i], order[(i + 1) % n], weight(rng)));
        }
        for x in 0..n {
            for y in 0..n {
                if rng.random_bool(spec.density) {
                    edges.push((x, y, weight(rng)));
                }
            }
        }
        WeightedMultigraph::new(n, edges, true)
    } else {
        for y in 1..n {
            let x = rng.random_range(0..y);
            edges.push((x, y, weight(rng)));
        }
        for x in 0..n {
            for y in x..n {
                if rng.random_bool(spec.density) {
                    edges.push((x, y, weight(rng)));
                }
            }
        }
        if n == 1 && edges.is_empty() {
            edges.push((0, 0, weight(rng)));
        }
        WeightedMultigraph::from_undirected_edges(n, edges)
    }
}
