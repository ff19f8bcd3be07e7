//! The finite set of sites a simulation runs on.

use smallvec::smallvec;

use crate::error::{config, domain, Result};
use crate::graph::{Ball, GraphFamily, Vertex, WeightedMultigraph};

const STOCHASTIC_TOL: f64 = 1e-9;

/// Sites with cumulative transition rows.
///
/// Edge rows hold the cumulative weights `n_xy` inside the arena; a
/// particle at `x` breeds at rate `λ·deg(x)` where `deg` is the full degree,
/// so the missing mass `deg(x) − Σ_y n_xy` is the rate of births discarded at
/// the boundary. Site rows hold cumulative probabilities of a kernel `P`;
/// missing mass is again discarded.
#[derive(Clone, Debug)]
pub struct Arena {
    vertices: Vec<Vertex>,
    depth: Vec<u32>,
    root: usize,
    radius: Option<usize>,
    degree: Vec<f64>,
    edge_off: Vec<usize>,
    edge_to: Vec<u32>,
    edge_cum: Vec<f64>,
    site_off: Vec<usize>,
    site_to: Vec<u32>,
    site_cum: Vec<f64>,
}

fn cumulate(rows: impl Iterator<Item = Vec<(u32, f64)>>) -> (Vec<usize>, Vec<u32>, Vec<f64>) {
    let mut off = vec![0];
    let mut to = Vec::new();
    let mut cum = Vec::new();
    for row in rows {
        let mut acc = 0.0;
        for (y, w) in row {
            acc += w;
            to.push(y);
            cum.push(acc);
        }
        off.push(to.len());
    }
    (off, to, cum)
}

impl Arena {
    fn assemble(
        g: &WeightedMultigraph,
        vertices: Vec<Vertex>,
        depth: Vec<u32>,
        degree: Vec<f64>,
        root: usize,
        radius: Option<usize>,
    ) -> Arena {
        let n = g.len();
        let row = |x: usize| g.neighbors(x).map(|(y, w)| (y as u32, w)).collect::<Vec<_>>();
        let (edge_off, edge_to, edge_cum) = cumulate((0..n).map(row));
        let (site_off, site_to, site_cum) = cumulate((0..n).map(|x| {
            let d = degree[x];
            row(x).into_iter().map(|(y, w)| (y, w / d)).collect()
        }));
        Arena {
            vertices,
            depth,
            root,
            radius,
            degree,
            edge_off,
            edge_to,
            edge_cum,
            site_off,
            site_to,
            site_cum,
        }
    }

    /// A finite graph; the site kernel defaults to the simple random walk.
    pub fn from_graph(g: &WeightedMultigraph, root: usize) -> Result<Arena> {
        if root >= g.len() {
            return Err(domain(format!("root {root} out of range")));
        }
        let depth = g
            .distances_from(root)
            .into_iter()
            .map(|d| d.min(u32::MAX as usize) as u32)
            .collect();
        let vertices = (0..g.len()).map(|i| smallvec![i as i64]).collect();
        let degree = (0..g.len()).map(|x| g.degree(x)).collect();
        Ok(Self::assemble(g, vertices, depth, degree, root, None))
    }

    /// The ball `B(o, radius)` of a family, with births leaving it killed.
    pub fn from_family(family: &GraphFamily, radius: usize) -> Result<Arena> {
        if radius < 1 {
            return Err(config("truncation radius must be at least 1"));
        }
        let ball = family.ball(&family.root(), radius)?;
        Ok(Self::from_ball(&ball))
    }

    pub(crate) fn from_ball(ball: &Ball) -> Arena {
        let radius = ball.radius();
        Self::assemble(
            ball.graph(),
            ball.members().to_vec(),
            ball.distances().to_vec(),
            ball.full_degrees().to_vec(),
            0,
            Some(radius),
        )
    }

    /// Replaces the site kernel by `P` (rows over arena indices, each
    /// summing to 1).
    pub fn with_kernel(mut self, rows: &[Vec<(usize, f64)>]) -> Result<Arena> {
        if rows.len() != self.len() {
            return Err(domain(format!("kernel has {} rows, arena has {} sites", rows.len(), self.len())));
        }
        for (x, row) in rows.iter().enumerate() {
            let mut s = 0.0;
            for &(y, p) in row {
                if y >= self.len() || !(p >= 0.0) || !p.is_finite() {
                    return Err(domain(format!("kernel row {x} has an invalid entry ({y}, {p})")));
                }
                s += p;
            }
            if (s - 1.0).abs() > STOCHASTIC_TOL {
                return Err(domain(format!("kernel row {x} sums to {s}, not 1")));
            }
        }
        let (off, to, cum) = cumulate(rows.iter().map(|r| r.iter().map(|&(y, p)| (y as u32, p)).collect()));
        self.site_off = off;
        self.site_to = to;
        self.site_cum = cum;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    /// Truncation radius, `None` for a finite graph.
    pub fn radius(&self) -> Option<usize> {
        self.radius
    }

    pub fn vertex(&self, i: usize) -> &Vertex {
        &self.vertices[i]
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn index_of(&self, v: &Vertex) -> Option<usize> {
        self.vertices.iter().position(|u| u == v)
    }

    /// Graph distance from the root.
    pub fn depth(&self, i: usize) -> usize {
        self.depth[i] as usize
    }

    /// Full degree `deg(x)`, counting edges that leave the arena.
    pub fn degree(&self, i: usize) -> f64 {
        self.degree[i]
    }

    pub fn max_degree(&self) -> f64 {
        self.degree.iter().cloned().fold(0.0, f64::max)
    }

    /// Offspring site for an edge-mode birth at `x`, given `u` uniform in
    /// `[0, deg(x))`; `None` when the offspring lands outside.
    #[inline]
    pub(crate) fn edge_target(&self, x: usize, u: f64) -> Option<usize> {
        pick(&self.edge_to, &self.edge_cum, self.edge_off[x], self.edge_off[x + 1], u)
    }

    /// Offspring site for a site-mode birth at `x`, given `u` uniform in
    /// `[0, 1)`.
    #[inline]
    pub(crate) fn site_target(&self, x: usize, u: f64) -> Option<usize> {
        pick(&self.site_to, &self.site_cum, self.site_off[x], self.site_off[x + 1], u)
    }
}

#[inline]
fn pick(to: &[u32], cum: &[f64], a: usize, b: usize, u: f64) -> Option<usize> {
    let k = cum[a..b].partition_point(|&c| c <= u);
    (k < b - a).then(|| to[a + k] as usize)
}
