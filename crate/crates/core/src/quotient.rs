//! Local isomorphisms onto finite multigraphs.
//!
//! A map `φ: X → Y` is a local isomorphism when for every `x` and every
//! vertex `y` of `Y`
//!
//! ```text
//! Σ_{z : φ(z) = y} n_xz = n^Y_{φ(x) y}.
//! ```
//!
//! On finite graphs such maps are exactly the quotients by equitable
//! partitions, found by [`refine_partition`]. Infinite families carry a
//! constructed map which [`verify_local_isomorphism`] checks on a ball.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::graph::paths::Rooted;
use crate::graph::{encode_vertex, Counts, GraphFamily, Vertex, WeightedMultigraph};

/// Tolerance for comparing weight sums of float-weighted graphs.
pub const FLOAT_TOLERANCE: f64 = 1e-9;

/// A partition of `0..n` into blocks, kept in canonical order: blocks sorted
/// by (size, smallest member), members ascending.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n];
        for b in &blocks {
            if b.is_empty() {
                return Err(domain("partition has an empty block"));
            }
            for &x in b {
                if x >= n || std::mem::replace(&mut seen[x], true) {
                    return Err(domain(format!("vertex {x} is out of range or in two blocks")));
                }
            }
        }
        if let Some(x) = seen.iter().position(|s| !s) {
            return Err(domain(format!("vertex {x} is in no block")));
        }
        Ok(Self::canonical(blocks))
    }

    /// Blocks from a class label per vertex (labels need not be dense).
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (x, &l) in labels.iter().enumerate() {
            groups.entry(l).or_default().push(x);
        }
        Self::canonical(groups.into_values().collect())
    }

    pub fn single_block(n: usize) -> Self {
        Partition {
            blocks: vec![(0..n).collect()],
        }
    }

    fn canonical(mut blocks: Vec<Vec<usize>>) -> Self {
        for b in blocks.iter_mut() {
            b.sort_unstable();
        }
        blocks.sort_by_key(|b| (b.len(), b[0]));
        Partition { blocks }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Block index of every vertex.
    pub fn block_of(&self) -> Vec<usize> {
        let n = self.blocks.iter().map(|b| b.len()).sum();
        let mut out = vec![0; n];
        for (i, b) in self.blocks.iter().enumerate() {
            for &x in b {
                out[x] = i;
            }
        }
        out
    }

    /// Every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        let of = coarser.block_of();
        self.blocks.iter().all(|b| b.iter().all(|&x| of[x] == of[b[0]]))
    }
}

/// Key for a weight sum: exact bits for integral graphs, a 1e-9 grid
/// otherwise.
fn weight_key(w: f64, integral: bool) -> i64 {
    if integral {
        w as i64
    } else {
        (w / FLOAT_TOLERANCE).round() as i64
    }
}

/// Coarsest equitable partition refining `seed` (default: one block).
///
/// Each round splits blocks by the signature "own block, plus the summed
/// weight into every block"; the fixed point is independent of processing
/// order. Float weights are compared on a 1e-9 grid.
pub fn refine_partition(g: &WeightedMultigraph, seed: Option<&Partition>) -> Partition {
    let n = g.len();
    let mut color: Vec<usize> = match seed {
        Some(p) => p.block_of(),
        None => vec![0; n],
    };
    let integral = g.is_integral();
    let mut count = color.iter().collect::<std::collections::BTreeSet<_>>().len();
    loop {
        let signatures: Vec<(usize, Vec<(usize, i64)>)> = (0..n)
            .map(|x| {
                let mut sums: BTreeMap<usize, f64> = BTreeMap::new();
                for (y, w) in g.neighbors(x) {
                    *sums.entry(color[y]).or_default() += w;
                }
                let sig = sums.into_iter().map(|(c, w)| (c, weight_key(w, integral))).collect();
                (color[x], sig)
            })
            .collect();
        let mut ids: BTreeMap<&(usize, Vec<(usize, i64)>), usize> = BTreeMap::new();
        for s in &signatures {
            let next = ids.len();
            ids.entry(s).or_insert(next);
        }
        let next_color: Vec<usize> = signatures.iter().map(|s| ids[s]).collect();
        let next_count = ids.len();
        color = next_color;
        if next_count == count {
            break;
        }
        count = next_count;
    }
    Partition::from_labels(&color)
}

/// How a vertex is sent to its class.
#[derive(Clone)]
pub enum Assignment {
    /// Class index per vertex of a finite graph.
    Table(Vec<usize>),
    /// Class of a family vertex.
    Oracle(Arc<dyn Fn(&Vertex) -> Result<usize> + Send + Sync>),
}

impl fmt::Debug for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Assignment::Table(t) => f.debug_tuple("Table").field(t).finish(),
            Assignment::Oracle(_) => f.write_str("Oracle(..)"),
        }
    }
}

/// What has been established about a [`QuotientMap`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verification {
    Unverified,
    /// Checked at every vertex of a finite domain.
    Exact,
    /// Checked at every interior vertex of the ball of this radius.
    Radius(usize),
}

/// A local isomorphism `φ` onto the finite multigraph `Y`.
#[derive(Clone, Debug)]
pub struct QuotientMap {
    codomain: WeightedMultigraph,
    assignment: Assignment,
    verification: Verification,
    approximate: bool,
}

impl QuotientMap {
    pub fn from_table(codomain: WeightedMultigraph, table: Vec<usize>) -> Result<Self> {
        let k = codomain.len();
        let mut hit = vec![false; k];
        for &c in &table {
            if c >= k {
                return Err(domain(format!("class {c} out of range for a {k}-vertex quotient")));
            }
            hit[c] = true;
        }
        if let Some(c) = hit.iter().position(|h| !h) {
            return Err(domain(format!("quotient map misses class {c}")));
        }
        Ok(QuotientMap {
            codomain,
            assignment: Assignment::Table(table),
            verification: Verification::Unverified,
            approximate: false,
        })
    }

    pub fn from_oracle(
        codomain: WeightedMultigraph,
        oracle: Arc<dyn Fn(&Vertex) -> Result<usize> + Send + Sync>,
    ) -> Self {
        QuotientMap {
            codomain,
            assignment: Assignment::Oracle(oracle),
            verification: Verification::Unverified,
            approximate: false,
        }
    }

    /// The finite multigraph `Y`.
    pub fn codomain(&self) -> &WeightedMultigraph {
        &self.codomain
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        self.codomain.matrix()
    }

    pub fn assignment(&self) -> &Assignment {
        &self.assignment
    }

    pub fn verification(&self) -> Verification {
        self.verification
    }

    pub fn is_verified(&self) -> bool {
        self.verification != Verification::Unverified
    }

    /// Weight sums were compared within [`FLOAT_TOLERANCE`] rather than
    /// exactly.
    pub fn is_approximate(&self) -> bool {
        self.approximate
    }

    pub(crate) fn mark(&mut self, v: Verification) {
        self.verification = v;
    }

    /// `φ(v)`; table maps accept the vertex `[i]`.
    pub fn class_of(&self, v: &Vertex) -> Result<usize> {
        match &self.assignment {
            Assignment::Oracle(f) => {
                let c = f(v)?;
                if c >= self.codomain.len() {
                    return Err(domain(format!("class {c} out of range")));
                }
                Ok(c)
            }
            Assignment::Table(t) => match v.as_slice() {
                [i] if *i >= 0 && (*i as usize) < t.len() => Ok(t[*i as usize]),
                _ => Err(domain(format!("unknown vertex {}", encode_vertex(v)))),
            },
        }
    }

    /// `φ(x)` for a vertex index of a finite domain.
    pub fn class_of_index(&self, x: usize) -> Result<usize> {
        match &self.assignment {
            Assignment::Table(t) => t
                .get(x)
                .copied()
                .ok_or_else(|| domain(format!("unknown vertex {x}"))),
            Assignment::Oracle(_) => self.class_of(&smallvec::smallvec![x as i64]),
        }
    }
}

/// Quotient `Y` of a finite graph by an equitable partition, with the map.
///
/// `n^Y_{AB} = Σ_{z∈B} n_xz` for any `x ∈ A`; every representative is checked.
pub fn build_quotient(g: &WeightedMultigraph, partition: &Partition) -> Result<(WeightedMultigraph, QuotientMap)> {
    let block_of = partition.block_of();
    if block_of.len() != g.len() {
        return Err(domain(format!(
            "partition covers {} vertices, graph has {}",
            block_of.len(),
            g.len()
        )));
    }
    let k = partition.len();
    let integral = g.is_integral();
    let sums = |x: usize| {
        let mut row = vec![0.0; k];
        for (y, w) in g.neighbors(x) {
            row[block_of[y]] += w;
        }
        row
    };
    let mut matrix = Vec::with_capacity(k);
    for block in partition.blocks() {
        let rep = block[0];
        let row = sums(rep);
        for &x in &block[1..] {
            let other = sums(x);
            for (b, (&a, &o)) in row.iter().zip(&other).enumerate() {
                let equal = if integral { a == o } else { (a - o).abs() <= FLOAT_TOLERANCE };
                if !equal {
                    return Err(domain(format!(
                        "partition is not equitable: vertices {} and {} send {a} and {o} into block {b}",
                        g.label(rep),
                        g.label(x)
                    )));
                }
            }
        }
        matrix.push(row);
    }
    let edges = matrix
        .iter()
        .enumerate()
        .flat_map(|(a, row)| row.iter().enumerate().map(move |(b, &w)| (a, b, w)))
        .collect::<Vec<_>>();
    let symmetric = (0..k).all(|a| (0..k).all(|b| matrix[a][b] == matrix[b][a]));
    let labels = (0..k).map(|i| format!("B{i}")).collect();
    let y = WeightedMultigraph::new(k, edges, !symmetric)?.with_labels(labels)?;
    let mut map = QuotientMap::from_table(y.clone(), block_of)?;
    map.mark(Verification::Exact);
    map.approximate = !integral;
    Ok((y, map))
}

/// First failure found by [`verify_local_isomorphism`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub vertex: String,
    pub message: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub passed: bool,
    pub radius: usize,
    pub interior_vertices_checked: usize,
    /// `T^n` at the root compared for `n = 0..=totals_checked_to`.
    pub totals_checked_to: usize,
    pub classes_seen: usize,
    pub approximate: bool,
    pub violation: Option<Violation>,
}

/// Checks the local-isomorphism condition at every interior vertex of
/// `B(o, radius)` and `T^n_o(X) = T^n_{φ(o)}(Y)` for `n ≤ radius − 1`.
///
/// Violations are reported, not raised; errors come only from the oracles.
pub fn verify_local_isomorphism(family: &GraphFamily, map: &QuotientMap, radius: usize) -> Result<VerificationReport> {
    let radius = radius.max(1);
    let ball = family.ball(&family.root(), radius)?;
    let y = map.codomain();
    let integral = ball.graph().is_integral() && y.is_integral();
    let classes: Vec<usize> = ball
        .members()
        .iter()
        .map(|v| map.class_of(v))
        .collect::<Result<_>>()?;
    let mut report = VerificationReport {
        passed: true,
        radius,
        interior_vertices_checked: 0,
        totals_checked_to: 0,
        classes_seen: 0,
        approximate: !integral,
        violation: None,
    };
    let mut seen = vec![false; y.len()];
    for &c in &classes {
        seen[c] = true;
    }
    report.classes_seen = seen.iter().filter(|&&s| s).count();

    for x in 0..ball.len() {
        if !ball.is_interior(x) {
            continue;
        }
        report.interior_vertices_checked += 1;
        let mut sums = vec![0.0; y.len()];
        for (z, w) in ball.graph().neighbors(x) {
            sums[classes[z]] += w;
        }
        let cx = classes[x];
        for (c, &s) in sums.iter().enumerate() {
            let expect = y.weight(cx, c);
            let ok = if integral { s == expect } else { (s - expect).abs() <= FLOAT_TOLERANCE };
            if !ok {
                report.passed = false;
                report.violation = Some(Violation {
                    vertex: encode_vertex(ball.vertex(x)),
                    message: format!(
                        "vertex in class {cx} sends {s} into class {c}, quotient has {expect}"
                    ),
                });
                return Ok(report);
            }
        }
    }
    if let Some(c) = seen.iter().position(|s| !s) {
        report.passed = false;
        report.violation = Some(Violation {
            vertex: encode_vertex(&family.root()),
            message: format!("class {c} is not reached within radius {radius}"),
        });
        return Ok(report);
    }

    let horizon = radius - 1;
    let tx = Rooted::family_root(family).walk_totals(horizon)?;
    let ty = Rooted::graph(y, classes[0])?.walk_totals(horizon)?;
    for n in 0..=horizon {
        let equal = match (&tx, &ty) {
            (Counts::Exact(a), Counts::Exact(b)) => a[n] == b[n],
            _ => (tx.get_f64(n) - ty.get_f64(n)).abs() <= FLOAT_TOLERANCE * tx.get_f64(n).max(1.0),
        };
        if !equal {
            report.passed = false;
            report.violation = Some(Violation {
                vertex: encode_vertex(&family.root()),
                message: format!("T^{n} differs: {} on the graph, {} on the quotient", tx.render(n), ty.render(n)),
            });
            return Ok(report);
        }
        report.totals_checked_to = n;
    }
    Ok(report)
}

/// Verifies the family's known quotient and records the radius on success.
pub fn certify_known_quotient(family: &mut GraphFamily, radius: usize) -> Result<VerificationReport> {
    let map = family
        .known_quotient()
        .cloned()
        .ok_or_else(|| domain(format!("family {:?} has no known quotient", family.name())))?;
    let report = verify_local_isomorphism(family, &map, radius)?;
    if report.passed {
        let mut map = map;
        map.mark(Verification::Radius(report.radius));
        map.approximate = report.approximate;
        family.set_known_quotient(map);
    }
    Ok(report)
}

/// `Σ_{z : φ(z) = y} γⁿ_{x,z}` for every class `y`, from an exact path table
/// of a finite graph (used to check quotient transport).
pub fn class_sums(row: &[BigUint], map: &QuotientMap) -> Result<Vec<BigUint>> {
    let mut out = vec![BigUint::default(); map.codomain().len()];
    for (z, c) in row.iter().enumerate() {
        out[map.class_of_index(z)?] += c;
    }
    Ok(out)
}
