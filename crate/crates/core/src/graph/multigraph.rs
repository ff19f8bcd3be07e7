use std::borrow::Cow;
use std::collections::{HashMap, VecDeque};

use crate::error::{domain, Result};

/// Weights up to 2^53 are exactly representable and count as integers.
const MAX_EXACT_WEIGHT: f64 = 9_007_199_254_740_992.0;

/// A finite, connected multigraph with nonnegative edge weights `n_xy`.
///
/// Integer weights are edge multiplicities; arbitrary nonnegative weights
/// give a weighted graph. Loops (`x == y`) are allowed and are traversed once
/// per step of a walk. Rows are stored in compressed form and sorted by
/// target index, so neighbor order is canonical.
///
/// All exactness guarantees of the path counters apply only when
/// [`is_integral`](Self::is_integral) holds; float-weighted graphs are
/// counted in double precision.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedMultigraph {
    labels: Option<Vec<String>>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<f64>,
    oriented: bool,
    integral: bool,
    max_degree: f64,
}

impl WeightedMultigraph {
    /// Builds a graph on `n` vertices from directed weighted edges.
    ///
    /// Repeated `(x, y)` pairs are summed and zero weights dropped. When
    /// `oriented` is false the edge list must already be symmetric.
    pub fn new(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
        oriented: bool,
    ) -> Result<Self> {
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        for (x, y, w) in edges {
            if x >= n || y >= n {
                return Err(domain(format!("edge ({x}, {y}) out of range for {n} vertices")));
            }
            check_weight(w)?;
            if w > 0.0 {
                rows[x].push((y as u32, w));
            }
        }
        Self::from_rows(rows, oriented)
    }

    /// Builds a non-oriented graph from a list that names every undirected
    /// edge once; each `(x, y, w)` with `x != y` also adds `(y, x, w)`.
    pub fn from_undirected_edges(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut all = Vec::new();
        for (x, y, w) in edges {
            all.push((x, y, w));
            if x != y {
                all.push((y, x, w));
            }
        }
        Self::new(n, all, false)
    }

    /// Builds a graph from a dense square matrix; the result is oriented
    /// exactly when the matrix is not symmetric.
    pub fn from_matrix(matrix: &[Vec<f64>]) -> Result<Self> {
        let n = matrix.len();
        if matrix.iter().any(|row| row.len() != n) {
            return Err(domain("adjacency matrix is not square"));
        }
        let symmetric = (0..n).all(|i| (0..n).all(|j| matrix[i][j] == matrix[j][i]));
        let edges = (0..n).flat_map(|i| (0..n).map(move |j| (i, j, matrix[i][j])));
        Self::new(n, edges, !symmetric)
    }

    /// Attaches vertex labels (must be unique, one per vertex).
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(domain(format!(
                "{} labels for {} vertices",
                labels.len(),
                self.len()
            )));
        }
        let mut seen = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if let Some(j) = seen.insert(l.as_str(), i) {
                return Err(domain(format!("duplicate vertex label {l:?} (vertices {j} and {i})")));
            }
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub(crate) fn from_rows(mut rows: Vec<Vec<(u32, f64)>>, oriented: bool) -> Result<Self> {
        let n = rows.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0);
        for row in rows.iter_mut() {
            row.sort_by_key(|&(y, _)| y);
            let mut last: Option<u32> = None;
            for &(y, w) in row.iter() {
                if last == Some(y) {
                    *weights.last_mut().unwrap() += w;
                } else {
                    targets.push(y);
                    weights.push(w);
                    last = Some(y);
                }
            }
            offsets.push(targets.len());
        }
        Self::from_csr(offsets, targets, weights, oriented)
    }

    /// Assembles a graph from compressed rows whose targets are already
    /// sorted and distinct within each row.
    pub(crate) fn from_csr(
        offsets: Vec<usize>,
        targets: Vec<u32>,
        weights: Vec<f64>,
        oriented: bool,
    ) -> Result<Self> {
        let n = offsets.len().saturating_sub(1);
        if n == 0 {
            return Err(domain("a multigraph needs at least one vertex"));
        }
        let integral = weights
            .iter()
            .all(|&w| w.fract() == 0.0 && w <= MAX_EXACT_WEIGHT);
        let mut g = WeightedMultigraph {
            labels: None,
            offsets,
            targets,
            weights,
            oriented,
            integral,
            max_degree: 0.0,
        };
        g.max_degree = (0..n).map(|x| g.degree(x)).fold(0.0, f64::max);
        if !oriented {
            g.check_symmetric()?;
        }
        if !g.is_weakly_connected() {
            return Err(domain("multigraph is not connected"));
        }
        Ok(g)
    }

    fn check_symmetric(&self) -> Result<()> {
        for x in 0..self.len() {
            for (y, w) in self.neighbors(x) {
                let back = self.weight(y, x);
                if back != w {
                    return Err(domain(format!(
                        "non-oriented graph has n[{x}][{y}] = {w} but n[{y}][{x}] = {back}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn is_weakly_connected(&self) -> bool {
        let n = self.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut components = n;
        for x in 0..n {
            for (y, _) in self.neighbors(x) {
                let (a, b) = (find(&mut parent, x), find(&mut parent, y));
                if a != b {
                    parent[a] = b;
                    components -= 1;
                }
            }
        }
        components == 1
    }

    /// True when every vertex reaches every other along oriented edges
    /// (irreducibility of the adjacency matrix).
    pub fn is_strongly_connected(&self) -> bool {
        let n = self.len();
        let forward = self.reachable_from(0, false);
        if forward.iter().any(|r| !r) {
            return false;
        }
        if !self.oriented {
            return true;
        }
        let backward = self.reachable_from(0, true);
        backward.iter().all(|&r| r) && n > 0
    }

    fn reachable_from(&self, start: usize, reversed: bool) -> Vec<bool> {
        let n = self.len();
        let mut seen = vec![false; n];
        let reverse_rows: Vec<Vec<usize>> = if reversed {
            let mut rr = vec![Vec::new(); n];
            for x in 0..n {
                for (y, _) in self.neighbors(x) {
                    rr[y].push(x);
                }
            }
            rr
        } else {
            Vec::new()
        };
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(x) = queue.pop_front() {
            let next: Vec<usize> = if reversed {
                reverse_rows[x].clone()
            } else {
                self.neighbors(x).map(|(y, _)| y).collect()
            };
            for y in next {
                if !seen[y] {
                    seen[y] = true;
                    queue.push_back(y);
                }
            }
        }
        seen
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_oriented(&self) -> bool {
        self.oriented
    }

    /// All weights are integers (multiplicities), so path counts are exact.
    pub fn is_integral(&self) -> bool {
        self.integral
    }

    /// `M = max_x Σ_y n_xy`.
    pub fn max_degree(&self) -> f64 {
        self.max_degree
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    /// Out-neighbors of `x` with positive weight, sorted by index.
    ///
    /// Panics if `x` is out of range; see [`neighbors_of`](Self::neighbors_of)
    /// for the checked form.
    pub fn neighbors(&self, x: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[x]..self.offsets[x + 1];
        self.targets[range.clone()]
            .iter()
            .zip(&self.weights[range])
            .map(|(&y, &w)| (y as usize, w))
    }

    pub fn neighbors_of(&self, x: usize) -> Result<Vec<(usize, f64)>> {
        if x >= self.len() {
            return Err(domain(format!("unknown vertex {x} (graph has {} vertices)", self.len())));
        }
        Ok(self.neighbors(x).collect())
    }

    pub(crate) fn row(&self, x: usize) -> (&[u32], &[f64]) {
        let range = self.offsets[x]..self.offsets[x + 1];
        (&self.targets[range.clone()], &self.weights[range])
    }

    /// `n_xy`, zero when absent.
    pub fn weight(&self, x: usize, y: usize) -> f64 {
        let (t, w) = self.row(x);
        match t.binary_search(&(y as u32)) {
            Ok(i) => w[i],
            Err(_) => 0.0,
        }
    }

    pub fn degree(&self, x: usize) -> f64 {
        self.row(x).1.iter().sum()
    }

    pub fn label(&self, x: usize) -> Cow<'_, str> {
        match &self.labels {
            Some(l) => Cow::Borrowed(l[x].as_str()),
            None => Cow::Owned(x.to_string()),
        }
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.len()).map(|x| self.label(x).into_owned()).collect()
    }

    /// Resolves a vertex label; unlabeled graphs accept decimal indices.
    pub fn index_of(&self, label: &str) -> Result<usize> {
        let found = match &self.labels {
            Some(l) => l.iter().position(|s| s == label),
            None => label.parse::<usize>().ok().filter(|&i| i < self.len()),
        };
        found.ok_or_else(|| domain(format!("unknown vertex {label:?}")))
    }

    /// Dense adjacency matrix `N = (n_xy)`.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut m = vec![vec![0.0; n]; n];
        for (x, row) in m.iter_mut().enumerate() {
            for (y, w) in self.neighbors(x) {
                row[y] = w;
            }
        }
        m
    }

    /// Breadth-first distances `ρ(x, ·)` along oriented edges; unreachable
    /// vertices get `usize::MAX`.
    pub fn distances_from(&self, x: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.len()];
        dist[x] = 0;
        let mut queue = VecDeque::from([x]);
        while let Some(v) = queue.pop_front() {
            for (y, _) in self.neighbors(v) {
                if dist[y] == usize::MAX {
                    dist[y] = dist[v] + 1;
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    /// Row sums of `p(x, ·) = n_xy` all equal 1 within `tol`.
    pub fn is_stochastic(&self, tol: f64) -> bool {
        (0..self.len()).all(|x| (self.degree(x) - 1.0).abs() <= tol)
    }
}

fn check_weight(w: f64) -> Result<()> {
    if !w.is_finite() || w < 0.0 {
        return Err(domain(format!("edge weight {w} is not a finite nonnegative number")));
    }
    Ok(())
}
