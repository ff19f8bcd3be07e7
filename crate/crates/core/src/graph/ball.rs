use std::collections::VecDeque;

use rustc_hash::FxHashMap;

use super::{encode_vertex, GraphFamily, Vertex, WeightedMultigraph};
use crate::error::{domain, Error, Result};

/// Default cap on the number of vertices a ball may hold.
pub const DEFAULT_BALL_BUDGET: usize = 4_000_000;

/// The induced subgraph on `B(x, r) = {y : ρ(x, y) ≤ r}` of a family.
///
/// Vertices are indexed in breadth-first order (center first). Interior
/// vertices (`ρ < r`) keep their full neighbor rows; rows of boundary
/// vertices are restricted to the ball, but their full degree in the family
/// is kept in [`full_degree`](Self::full_degree).
#[derive(Clone, Debug)]
pub struct Ball {
    graph: WeightedMultigraph,
    members: Vec<Vertex>,
    index: FxHashMap<Vertex, u32>,
    distance: Vec<u32>,
    full_degree: Vec<f64>,
    radius: usize,
}

impl Ball {
    pub(crate) fn build(
        family: &GraphFamily,
        center: &Vertex,
        radius: usize,
        budget: usize,
    ) -> Result<Ball> {
        let mut index: FxHashMap<Vertex, u32> = FxHashMap::default();
        let mut members: Vec<Vertex> = Vec::new();
        let mut distance: Vec<u32> = Vec::new();
        let mut rows: Vec<Vec<(Vertex, f64)>> = Vec::new();

        index.insert(center.clone(), 0);
        members.push(center.clone());
        distance.push(0);
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            let nbrs = family.neighbors(&members[i])?;
            let d = distance[i] as usize;
            if d < radius {
                for (y, _) in &nbrs {
                    if !index.contains_key(y) {
                        if members.len() >= budget {
                            return Err(Error::Resource(format!(
                                "ball B({}, {radius}) exceeds {budget} vertices at horizon {}",
                                encode_vertex(center),
                                d + 1
                            )));
                        }
                        index.insert(y.clone(), members.len() as u32);
                        members.push(y.clone());
                        distance.push(d as u32 + 1);
                        queue.push_back(members.len() - 1);
                    }
                }
            }
            rows.push(nbrs);
        }

        let full_degree: Vec<f64> = rows.iter().map(|r| r.iter().map(|(_, w)| w).sum()).collect();
        let csr_rows: Vec<Vec<(u32, f64)>> = rows
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .filter_map(|(y, w)| index.get(&y).map(|&j| (j, w)))
                    .collect()
            })
            .collect();
        let graph = WeightedMultigraph::from_rows(csr_rows, family.is_oriented()).map_err(|e| {
            match e {
                Error::Domain(msg) => domain(format!(
                    "family {:?} is inconsistent on B({}, {radius}): {msg}",
                    family.name(),
                    encode_vertex(center)
                )),
                other => other,
            }
        })?;
        Ok(Ball {
            graph,
            members,
            index,
            distance,
            full_degree,
            radius,
        })
    }

    pub fn graph(&self) -> &WeightedMultigraph {
        &self.graph
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn members(&self) -> &[Vertex] {
        &self.members
    }

    pub fn vertex(&self, i: usize) -> &Vertex {
        &self.members[i]
    }

    pub fn index_of(&self, v: &Vertex) -> Option<usize> {
        self.index.get(v).map(|&i| i as usize)
    }

    /// `ρ(center, members[i])`.
    pub fn distance(&self, i: usize) -> usize {
        self.distance[i] as usize
    }

    pub fn distances(&self) -> &[u32] {
        &self.distance
    }

    /// Degree of `members[i]` in the whole family.
    pub fn full_degree(&self, i: usize) -> f64 {
        self.full_degree[i]
    }

    pub fn full_degrees(&self) -> &[f64] {
        &self.full_degree
    }

    pub fn is_interior(&self, i: usize) -> bool {
        self.distance(i) < self.radius
    }

    /// Vertices at exactly distance `r`.
    pub fn sphere(&self, r: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| self.distance(i) == r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{make_family, FamilySpec};

    #[test]
    fn line_ball() {
        let z = make_family(&FamilySpec::Lattice { d: 1 }).unwrap();
        let b = z.ball(&z.root(), 2).unwrap();
        assert_eq!(b.len(), 5);
        let two = b.index_of(&smallvec::smallvec![2]).unwrap();
        let minus_two = b.index_of(&smallvec::smallvec![-2]).unwrap();
        assert_eq!(b.distance(two), 2);
        assert_eq!(b.distance(minus_two), 2);
        assert_eq!(b.graph().degree(two), 1.0);
        assert_eq!(b.full_degree(two), 2.0);
    }

    #[test]
    fn tree_ball_size() {
        let t = make_family(&FamilySpec::RegularTree { k: 3 }).unwrap();
        assert_eq!(t.ball(&t.root(), 2).unwrap().len(), 10);
        let zero = t.ball(&t.root(), 0).unwrap();
        assert_eq!(zero.len(), 1);
        assert_eq!(zero.distance(0), 0);
    }

    #[test]
    fn budget_is_enforced() {
        let t = make_family(&FamilySpec::RegularTree { k: 3 }).unwrap();
        let err = t.ball_with_budget(&t.root(), 10, 100).unwrap_err();
        assert!(matches!(err, Error::Resource(ref m) if m.contains("horizon")));
    }

    #[test]
    fn invalid_center() {
        let t = make_family(&FamilySpec::RegularTree { k: 3 }).unwrap();
        assert!(t.ball(&smallvec::smallvec![-4], 1).is_err());
    }
}
