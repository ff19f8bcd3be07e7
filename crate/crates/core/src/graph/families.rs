//! Generators for the standard infinite (and a few finite) families.
//!
//! Every family is addressed by integer-tuple vertices and, where the graph
//! is locally isomorphic to a finite multigraph by construction, carries that
//! quotient as an (unverified) [`QuotientMap`].

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use smallvec::{smallvec, SmallVec};

use super::{encode_vertex, GraphFamily, NeighborOracle, Vertex, WeightedMultigraph};
use crate::error::{config, domain, Error, Result};
use crate::quotient::QuotientMap;

/// Deepest level a tree-like family will address.
const MAX_LEVELS: usize = 1 << 16;

/// Family description as accepted by `make_family` and the `--family-json`
/// flag: `{"family": "<name>", ...params}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    /// One vertex with `k` loops.
    Loops { k: u32 },
    /// The cycle `C_n`.
    Cycle { n: u32 },
    /// The integer lattice `Z^d`, `1 ≤ d ≤ 4`.
    Lattice { d: u32 },
    /// The `k`-regular tree.
    RegularTree { k: u32 },
    /// Rooted tree whose vertices at distance `j` from the root have degree
    /// `period[j mod len] + 1`.
    RadialTree { period: Vec<u32> },
    /// A cycle of length `len(period)` with copies of shifted radial trees
    /// hanging off each cycle vertex; locally isomorphic to a cyclic
    /// `len(period)`-vertex multigraph.
    RadialComposite { period: Vec<u32> },
    /// A square with a binary branch at every corner (a 3-regular graph)
    /// and one pendant edge at every vertex.
    PendantTree3,
    /// A `k`-regular tree whose vertices are paired off, each pair joined
    /// through a new middle vertex.
    Bridge { k: u32 },
}

impl FamilySpec {
    pub fn from_json(value: &Value) -> Result<Self> {
        serde_json::from_value(value.clone()).map_err(|e| config(format!("bad family spec: {e}")))
    }

    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::Loops { .. } => "loops",
            FamilySpec::Cycle { .. } => "cycle",
            FamilySpec::Lattice { .. } => "lattice",
            FamilySpec::RegularTree { .. } => "regular_tree",
            FamilySpec::RadialTree { .. } => "radial_tree",
            FamilySpec::RadialComposite { .. } => "radial_composite",
            FamilySpec::PendantTree3 => "pendant_tree3",
            FamilySpec::Bridge { .. } => "bridge",
        }
    }
}

/// Builds the family described by `spec`.
pub fn make_family(spec: &FamilySpec) -> Result<GraphFamily> {
    let params = serde_json::to_value(spec)?;
    let name = spec.name();
    let family = match spec {
        FamilySpec::Loops { k } => {
            let k = positive(*k, "loops: k")?;
            let oracle = Arc::new(LoopsOracle { k });
            GraphFamily::new(name, params, oracle).with_quotient(constant_quotient(k)?)
        }
        FamilySpec::Cycle { n } => {
            if *n < 3 {
                return Err(config(format!("cycle: n must be at least 3, got {n}")));
            }
            let oracle = Arc::new(CycleOracle { n: *n as i64 });
            GraphFamily::new(name, params, oracle).with_quotient(constant_quotient(2.0)?)
        }
        FamilySpec::Lattice { d } => {
            if !(1..=4).contains(d) {
                return Err(config(format!("lattice: d must be in 1..=4, got {d}")));
            }
            let oracle = Arc::new(LatticeOracle { d: *d as usize });
            GraphFamily::new(name, params, oracle)
                .with_quotient(constant_quotient(2.0 * *d as f64)?)
        }
        FamilySpec::RegularTree { k } => {
            let k = positive(*k, "regular_tree: k")? as u64;
            let tree = LevelTree::new(k, vec![k - 1])?;
            let oracle = Arc::new(TreeOracle { tree, degree: k as f64 });
            GraphFamily::new(name, params, oracle).with_quotient(constant_quotient(k as f64)?)
        }
        FamilySpec::RadialTree { period } => radial_tree(params, period)?,
        FamilySpec::RadialComposite { period } => radial_composite(params, period)?,
        FamilySpec::PendantTree3 => {
            let y = WeightedMultigraph::from_matrix(&[vec![3.0, 1.0], vec![1.0, 0.0]])?;
            let map = QuotientMap::from_oracle(y, Arc::new(|v: &Vertex| Ok(v[2] as usize)));
            GraphFamily::new(name, params, Arc::new(PendantOracle)).with_quotient(map)
        }
        FamilySpec::Bridge { k } => {
            let k = positive(*k, "bridge: k")? as u64;
            let tree = LevelTree::new(k, vec![k - 1])?;
            let y = WeightedMultigraph::from_matrix(&[vec![k as f64, 1.0], vec![2.0, 0.0]])?;
            let map = QuotientMap::from_oracle(y, Arc::new(|v: &Vertex| Ok(v[1] as usize)));
            GraphFamily::new(name, params, Arc::new(BridgeOracle { tree, k })).with_quotient(map)
        }
    };
    Ok(family)
}

fn positive(k: u32, what: &str) -> Result<f64> {
    if k == 0 {
        return Err(config(format!("{what} must be positive")));
    }
    Ok(k as f64)
}

fn constant_quotient(k: f64) -> Result<QuotientMap> {
    let y = WeightedMultigraph::new(1, [(0, 0, k)], false)?;
    Ok(QuotientMap::from_oracle(y, Arc::new(|_: &Vertex| Ok(0))))
}

fn check_period(period: &[u32], what: &str) -> Result<Vec<u64>> {
    if period.is_empty() || period.contains(&0) {
        return Err(config(format!(
            "{what}: period must be a nonempty sequence of positive integers"
        )));
    }
    Ok(period.iter().map(|&p| p as u64).collect())
}

fn radial_tree(params: Value, period: &[u32]) -> Result<GraphFamily> {
    let p = check_period(period, "radial_tree")?;
    let d = p.len();
    // level j >= 1 has p[j mod d] children; the root has p[0] + 1
    let cyc: Vec<u64> = (0..d).map(|i| p[(i + 1) % d]).collect();
    let tree = LevelTree::new(p[0] + 1, cyc)?;
    let degree = p.iter().max().copied().unwrap_or(0) as f64 + 1.0;
    let oracle = Arc::new(TreeOracle { tree, degree });
    let mut family = GraphFamily::new("radial_tree", params, oracle.clone());
    // Level parity (or nothing) is a local isomorphism only for d <= 2: for
    // longer periods the root has no parent and breaks the cyclic pattern.
    match d {
        1 => family.set_known_quotient(constant_quotient(p[0] as f64 + 1.0)?),
        2 => {
            let y = WeightedMultigraph::new(
                2,
                [(0, 1, p[0] as f64 + 1.0), (1, 0, p[1] as f64 + 1.0)],
                true,
            )?;
            let map = QuotientMap::from_oracle(
                y,
                Arc::new(move |v: &Vertex| match v.as_slice() {
                    [id] => Ok(oracle.tree.level(*id)? % 2),
                    _ => Err(unknown(v)),
                }),
            );
            family.set_known_quotient(map);
        }
        _ => {}
    }
    Ok(family)
}

fn radial_composite(params: Value, period: &[u32]) -> Result<GraphFamily> {
    let p = check_period(period, "radial_composite")?;
    let d = p.len();
    let trees = (0..d)
        .map(|c| {
            let cyc: Vec<u64> = (0..d).map(|i| p[(c + 2 + i) % d]).collect();
            LevelTree::new(p[(c + 1) % d], cyc)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut y_edges = Vec::new();
    for i in 0..d {
        y_edges.push((i, (i + 1) % d, p[i] as f64));
        y_edges.push(((i + 1) % d, i, 1.0));
    }
    let y = WeightedMultigraph::new(d, y_edges, true)?;
    let oracle = Arc::new(CompositeOracle {
        period: p.clone(),
        trees,
    });
    let classes = oracle.clone();
    let map = QuotientMap::from_oracle(y, Arc::new(move |v: &Vertex| classes.class_of(v)));
    Ok(GraphFamily::new("radial_composite", params, oracle).with_quotient(map))
}

/// A rooted tree addressed by breadth-first ids. The root has
/// `root_children` children; a vertex at level `L ≥ 1` has
/// `cyc[(L - 1) mod len]` children. Children of a vertex receive consecutive
/// ids, so parent and children are computed arithmetically from the table of
/// level offsets.
#[derive(Clone, Debug)]
pub(crate) struct LevelTree {
    root_children: u64,
    cyc: Vec<u64>,
    /// `offsets[L]` is the first id on level `L`; the last entry closes the
    /// deepest addressable level.
    offsets: Vec<i64>,
}

impl LevelTree {
    pub(crate) fn new(root_children: u64, cyc: Vec<u64>) -> Result<Self> {
        let mut t = LevelTree {
            root_children,
            cyc,
            offsets: vec![0, 1],
        };
        let mut size: u64 = 1;
        for level in 0..MAX_LEVELS {
            let next = match size.checked_mul(t.children_at(level)) {
                Some(s) => s,
                None => break,
            };
            let last = *t.offsets.last().unwrap();
            match (last as u64).checked_add(next) {
                Some(end) if end <= i64::MAX as u64 => t.offsets.push(end as i64),
                _ => break,
            }
            if next == 0 {
                break;
            }
            size = next;
        }
        Ok(t)
    }

    fn children_at(&self, level: usize) -> u64 {
        if level == 0 {
            self.root_children
        } else {
            self.cyc[(level - 1) % self.cyc.len()]
        }
    }

    /// Number of fully addressable levels.
    fn depth(&self) -> usize {
        self.offsets.len() - 1
    }

    pub(crate) fn level(&self, id: i64) -> Result<usize> {
        if id < 0 || id >= *self.offsets.last().unwrap() {
            return Err(if id < 0 {
                domain(format!("unknown tree vertex {id}"))
            } else {
                Error::Resource(format!(
                    "tree vertex {id} lies beyond the {} addressable levels",
                    self.depth()
                ))
            });
        }
        Ok(self.offsets.partition_point(|&o| o <= id) - 1)
    }

    fn parent(&self, id: i64, level: usize) -> Option<i64> {
        if level == 0 {
            return None;
        }
        let c = self.children_at(level - 1) as i64;
        Some(self.offsets[level - 1] + (id - self.offsets[level]) / c)
    }

    /// Children ids; a resource error if they are not addressable.
    fn children(&self, id: i64, level: usize) -> Result<std::ops::Range<i64>> {
        let c = self.children_at(level) as i64;
        if c == 0 {
            return Ok(0..0);
        }
        if level + 1 >= self.depth() {
            return Err(Error::Resource(format!(
                "tree level {} is beyond the {} addressable levels",
                level + 1,
                self.depth()
            )));
        }
        let first = self.offsets[level + 1] + (id - self.offsets[level]) * c;
        Ok(first..first + c)
    }

    /// Tree neighbors of `id`: parent first, then children.
    fn neighbors(&self, id: i64) -> Result<Vec<i64>> {
        let level = self.level(id)?;
        let mut out: Vec<i64> = self.parent(id, level).into_iter().collect();
        out.extend(self.children(id, level)?);
        Ok(out)
    }
}

struct LoopsOracle {
    k: f64,
}

impl NeighborOracle for LoopsOracle {
    fn root(&self) -> Vertex {
        smallvec![0]
    }

    fn neighbors(&self, v: &Vertex) -> Result<Vec<(Vertex, f64)>> {
        if v.as_slice() != [0] {
            return Err(unknown(v));
        }
        Ok(vec![(smallvec![0], self.k)])
    }

    fn degree_bound(&self) -> f64 {
        self.k
    }
}

struct CycleOracle {
    n: i64,
}

impl NeighborOracle for CycleOracle {
    fn root(&self) -> Vertex {
        smallvec![0]
    }

    fn neighbors(&self, v: &Vertex) -> Result<Vec<(Vertex, f64)>> {
        match v.as_slice() {
            [i] if (0..self.n).contains(i) => Ok(vec![
                (smallvec![(i + self.n - 1) % self.n], 1.0),
                (smallvec![(i + 1) % self.n], 1.0),
            ]),
            _ => Err(unknown(v)),
        }
    }

    fn degree_bound(&self) -> f64 {
        2.0
    }
}

struct LatticeOracle {
    d: usize,
}

impl NeighborOracle for LatticeOracle {
    fn root(&self) -> Vertex {
        SmallVec::from_elem(0, self.d)
    }

    fn neighbors(&self, v: &Vertex) -> Result<Vec<(Vertex, f64)>> {
        if v.len() != self.d {
            return Err(unknown(v));
        }
        let mut out = Vec::with_capacity(2 * self.d);
        for i in 0..self.d {
            for step in [-1, 1] {
                let mut w = v.clone();
                w[i] = w[i]
                    .checked_add(step)
                    .ok_or_else(|| Error::Resource("lattice coordinate overflow".into()))?;
                out.push((w, 1.0));
            }
        }
        Ok(out)
    }

    fn degree_bound(&self) -> f64 {
        2.0 * self.d as f64
    }
}

struct TreeOracle {
    tree: LevelTree,
    degree: f64,
}

impl NeighborOracle for TreeOracle {
    fn root(&self) -> Vertex {
        smallvec![0]
    }

    fn neighbors(&self, v: &Vertex) -> Result<Vec<(Vertex, f64)>> {
        match v.as_slice() {
            [id] => Ok(self
                .tree
                .neighbors(*id)?
                .into_iter()
                .map(|u| (smallvec![u], 1.0))
                .collect()),
            _ => Err(unknown(v)),
        }
    }

    fn degree_bound(&self) -> f64 {
        self.degree
    }
}

/// Square corners `[c, 0, 0]`, branch vertices `[c, j, 0]` numbered as a
/// binary heap from `j = 1` (attached to the corner), and the pendant of any
/// such vertex `[c, j, 1]`.
struct PendantOracle;

impl NeighborOracle for PendantOracle {
    fn root(&self) -> Vertex {
        smallvec![0, 0, 0]
    }

    fn neighbors(&self, v: &Vertex) -> Result<Vec<(Vertex, f64)>> {
        let (c, j, p) = match v.as_slice() {
            [c, j, p] if (0..4).contains(c) && *j >= 0 && (0..=1).contains(p) => (*c, *j, *p),
            _ => return Err(unknown(v)),
        };
        if p == 1 {
            return Ok(vec![(smallvec![c, j, 0], 1.0)]);
        }
        let mut out: Vec<(Vertex, f64)> = Vec::with_capacity(4);
        if j == 0 {
            out.push((smallvec![(c + 3) % 4, 0, 0], 1.0));
            out.push((smallvec![(c + 1) % 4, 0, 0], 1.0));
            out.push((smallvec![c, 1, 0], 1.0));
        } else {
            if j > i64::MAX / 2 - 1 {
                return Err(Error::Resource(format!(
                    "branch vertex {} is too deep to address",
                    encode_vertex(v)
                )));
            }
            out.push((smallvec![c, j / 2, 0], 1.0));
            out.push((smallvec![c, 2 * j, 0], 1.0));
            out.push((smallvec![c, 2 * j + 1, 0], 1.0));
        }
        out.push((smallvec![c, j, 1], 1.0));
        Ok(out)
    }

    fn degree_bound(&self) -> f64 {
        4.0
    }
}

/// Base vertices `[v, 0]` of a `k`-regular tree (breadth-first ids) and
/// middle vertices `[2i, 1]` joining the base pair `{2i, 2i + 1}`.
struct BridgeOracle {
    tree: LevelTree,
    k: u64,
}

impl NeighborOracle for BridgeOracle {
    fn root(&self) -> Vertex {
        smallvec![0, 0]
    }

    fn neighbors(&self, v: &Vertex) -> Result<Vec<(Vertex, f64)>> {
        match v.as_slice() {
            [id, 0] => {
                let mut out: Vec<(Vertex, f64)> = self
                    .tree
                    .neighbors(*id)?
                    .into_iter()
                    .map(|u| (smallvec![u, 0], 1.0))
                    .collect();
                out.push((smallvec![id & !1, 1], 1.0));
                Ok(out)
            }
            [id, 1] if id % 2 == 0 => {
                self.tree.level(*id + 1)?;
                Ok(vec![(smallvec![*id, 0], 1.0), (smallvec![*id + 1, 0], 1.0)])
            }
            _ => Err(unknown(v)),
        }
    }

    fn degree_bound(&self) -> f64 {
        self.k as f64 + 1.0
    }
}

/// Cycle vertices `[c]` and tree vertices `[c, j, id]`: vertex `id` of the
/// `j`-th tree copy hanging off cycle vertex `c`.
struct CompositeOracle {
    period: Vec<u64>,
    trees: Vec<LevelTree>,
}

impl CompositeOracle {
    fn d(&self) -> i64 {
        self.period.len() as i64
    }

    fn check(&self, v: &Vertex) -> Result<(i64, Option<(i64, i64)>)> {
        let d = self.d();
        match v.as_slice() {
            [c] if (0..d).contains(c) => Ok((*c, None)),
            [c, j, id] if (0..d).contains(c) && *j >= 0 && *j + 1 < self.period[*c as usize] as i64 => {
                self.trees[*c as usize].level(*id)?;
                Ok((*c, Some((*j, *id))))
            }
            _ => Err(unknown(v)),
        }
    }

    fn class_of(&self, v: &Vertex) -> Result<usize> {
        let d = self.d() as usize;
        match self.check(v)? {
            (c, None) => Ok(c as usize),
            (c, Some((_, id))) => {
                let level = self.trees[c as usize].level(id)?;
                Ok((c as usize + 1 + level) % d)
            }
        }
    }
}

impl NeighborOracle for CompositeOracle {
    fn root(&self) -> Vertex {
        smallvec![0]
    }

    fn neighbors(&self, v: &Vertex) -> Result<Vec<(Vertex, f64)>> {
        let d = self.d();
        let mut out: Vec<(Vertex, f64)> = Vec::new();
        match self.check(v)? {
            (c, None) => {
                match d {
                    1 => out.push((smallvec![c], 2.0)),
                    2 => out.push((smallvec![1 - c], 2.0)),
                    _ => {
                        out.push((smallvec![(c + d - 1) % d], 1.0));
                        out.push((smallvec![(c + 1) % d], 1.0));
                    }
                }
                for j in 0..self.period[c as usize] as i64 - 1 {
                    out.push((smallvec![c, j, 0], 1.0));
                }
            }
            (c, Some((j, id))) => {
                let tree = &self.trees[c as usize];
                if id == 0 {
                    out.push((smallvec![c], 1.0));
                }
                for u in tree.neighbors(id)? {
                    out.push((smallvec![c, j, u], 1.0));
                }
            }
        }
        Ok(out)
    }

    fn degree_bound(&self) -> f64 {
        self.period.iter().max().copied().unwrap_or(0) as f64 + 1.0
    }
}

fn unknown(v: &Vertex) -> Error {
    domain(format!("unknown vertex {}", encode_vertex(v)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(spec: FamilySpec) -> GraphFamily {
        make_family(&spec).unwrap()
    }

    fn v(c: &[i64]) -> Vertex {
        SmallVec::from_slice(c)
    }

    #[test]
    fn loops_neighbors() {
        let f = fam(FamilySpec::Loops { k: 3 });
        assert_eq!(f.neighbors(&f.root()).unwrap(), vec![(v(&[0]), 3.0)]);
        assert!(f.known_quotient().is_some());
    }

    #[test]
    fn integer_line_neighbors() {
        let f = fam(FamilySpec::Lattice { d: 1 });
        assert_eq!(
            f.neighbors(&v(&[0])).unwrap(),
            vec![(v(&[-1]), 1.0), (v(&[1]), 1.0)]
        );
    }

    #[test]
    fn pendant_vertex_has_only_its_anchor() {
        let f = fam(FamilySpec::PendantTree3);
        assert_eq!(
            f.neighbors(&v(&[2, 5, 1])).unwrap(),
            vec![(v(&[2, 5, 0]), 1.0)]
        );
        assert_eq!(f.degree(&v(&[0, 0, 0])).unwrap(), 4.0);
        assert_eq!(f.degree(&v(&[1, 3, 0])).unwrap(), 4.0);
    }

    #[test]
    fn radial_tree_degrees_alternate() {
        let f = fam(FamilySpec::RadialTree { period: vec![2, 1] });
        let ball = f.ball(&f.root(), 5).unwrap();
        for i in 0..ball.len() {
            let r = ball.distance(i);
            if r < 5 {
                let expect = if r % 2 == 0 { 3.0 } else { 2.0 };
                assert_eq!(ball.full_degree(i), expect, "level {r}");
            }
        }
    }

    #[test]
    fn level_tree_arithmetic() {
        let t = LevelTree::new(3, vec![2]).unwrap();
        assert_eq!(t.neighbors(0).unwrap(), vec![1, 2, 3]);
        assert_eq!(t.neighbors(1).unwrap(), vec![0, 4, 5]);
        assert_eq!(t.neighbors(3).unwrap(), vec![0, 8, 9]);
        assert_eq!(t.neighbors(9).unwrap(), vec![3, 20, 21]);
        assert!(t.neighbors(-1).is_err());
        let finite = LevelTree::new(1, vec![0]).unwrap();
        assert_eq!(finite.neighbors(1).unwrap(), vec![0]);
        assert!(finite.neighbors(2).is_err());
    }

    #[test]
    fn deep_addresses_are_resource_errors() {
        let f = fam(FamilySpec::RegularTree { k: 3 });
        let err = f.neighbors(&v(&[i64::MAX - 1])).unwrap_err();
        assert!(matches!(err, Error::Resource(_)));
    }

    #[test]
    fn invalid_parameters_are_config_errors() {
        for spec in [
            FamilySpec::Loops { k: 0 },
            FamilySpec::Cycle { n: 2 },
            FamilySpec::Lattice { d: 5 },
            FamilySpec::RadialTree { period: vec![] },
            FamilySpec::RadialComposite { period: vec![1, 0] },
        ] {
            assert!(matches!(make_family(&spec), Err(Error::Config(_))), "{spec:?}");
        }
        let bad = serde_json::json!({"family": "moebius"});
        assert!(matches!(FamilySpec::from_json(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = FamilySpec::from_json(&serde_json::json!({"family": "radial_tree", "period": [2, 1]})).unwrap();
        assert_eq!(spec, FamilySpec::RadialTree { period: vec![2, 1] });
        let text = serde_json::to_string(&FamilySpec::PendantTree3).unwrap();
        assert_eq!(text, r#"{"family":"pendant_tree3"}"#);
    }

    #[test]
    fn families_are_symmetric_on_balls() {
        // Ball construction rejects asymmetric oracles.
        for spec in [
            FamilySpec::PendantTree3,
            FamilySpec::Bridge { k: 3 },
            FamilySpec::Bridge { k: 4 },
            FamilySpec::RadialComposite { period: vec![1] },
            FamilySpec::RadialComposite { period: vec![2, 1] },
            FamilySpec::RadialComposite { period: vec![2, 1, 3] },
            FamilySpec::Lattice { d: 3 },
            FamilySpec::Cycle { n: 5 },
        ] {
            let f = fam(spec);
            f.ball(&f.root(), 5).unwrap();
        }
    }
}
