//! Randomized invariant checks shared by the property suite and the
//! acceptance harness. Each check takes plain parameters (seeds, rates) and
//! returns a description of the first violation.

#![allow(dead_code)]

use std::sync::Arc;

use brw::graph::random::{random_multigraph, RandomGraphSpec};
use brw::quotient::{build_quotient, class_sums, refine_partition};
use brw::sim::{run_coupled_trial, Arena, BreedingMode, Coupling, SimConfig};
use brw::spectral::{perron_root, PERRON_TOL};
use brw::{Counts, Partition, Rooted, WeightedMultigraph};
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<(), String>;

pub fn random_graph(seed: u64, oriented: bool) -> WeightedMultigraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = RandomGraphSpec {
        vertices: rng.random_range(1..=8),
        max_weight: 3,
        density: rng.random_range(0.1..0.6),
        oriented,
    };
    random_multigraph(&mut rng, spec).expect("generator builds valid graphs")
}

fn exact(c: &Counts) -> Vec<BigUint> {
    c.exact().expect("integer weights give exact counts").to_vec()
}

/// `gamma[x][n][y]`.
fn all_tables(g: &WeightedMultigraph, n_max: usize) -> Vec<Vec<Vec<BigUint>>> {
    (0..g.len())
        .map(|x| {
            let t = Rooted::graph(g, x).unwrap().path_counts(n_max).unwrap();
            (0..=n_max).map(|n| exact(t.gamma_row(n))).collect()
        })
        .collect()
}

pub fn composition(g: &WeightedMultigraph) -> Check {
    let n_max = 10;
    let gamma = all_tables(g, n_max);
    let k = g.len();
    for x in 0..k {
        for n in 0..=n_max {
            for m in 0..=n_max - n {
                for y in 0..k {
                    let sum: BigUint = (0..k).map(|w| &gamma[x][n][w] * &gamma[w][m][y]).sum();
                    if sum != gamma[x][n + m][y] {
                        return Err(format!("composition fails at x={x} y={y} n={n} m={m}"));
                    }
                }
            }
        }
    }
    Ok(())
}

pub fn first_passage(g: &WeightedMultigraph) -> Check {
    let n_max = 10;
    let gamma = all_tables(g, n_max);
    for x in 0..g.len() {
        let rx = Rooted::graph(g, x).unwrap();
        for y in 0..g.len() {
            let ry = Rooted::graph(g, y).unwrap();
            let phi = exact(&rx.first_passage(&ry, n_max).unwrap());
            if phi[0] != BigUint::default() {
                return Err("phi^0 must vanish".into());
            }
            for n in 0..=n_max {
                let rhs: BigUint = (1..=n).map(|i| &phi[i] * &gamma[y][n - i][y]).sum();
                let lhs = &gamma[x][n][y];
                let ok = if x == y && n == 0 { *lhs == BigUint::from(1u8) } else { *lhs == rhs };
                if !ok {
                    return Err(format!("first-passage decomposition fails at x={x} y={y} n={n}"));
                }
            }
        }
    }
    Ok(())
}

pub fn cauchy_schwarz(g: &WeightedMultigraph) -> Check {
    for x in 0..g.len() {
        let r = Rooted::graph(g, x).unwrap();
        let ret = exact(&r.return_counts(16).unwrap());
        let tot = exact(&r.walk_totals(8).unwrap());
        let dist = g.distances_from(x);
        for n in 0..=8 {
            let ball = dist.iter().filter(|&&d| d <= n).count();
            if &ret[2 * n] * BigUint::from(ball) < &tot[n] * &tot[n] {
                return Err(format!("γ^{}_xx·|B| < (T^{n})² at x={x}", 2 * n));
            }
        }
    }
    Ok(())
}

fn is_equitable(g: &WeightedMultigraph, p: &Partition) -> bool {
    build_quotient(g, p).is_ok()
}

fn relabel(g: &WeightedMultigraph, perm: &[usize]) -> WeightedMultigraph {
    let mut edges = Vec::new();
    for x in 0..g.len() {
        for (y, w) in g.neighbors(x) {
            edges.push((perm[x], perm[y], w));
        }
    }
    WeightedMultigraph::new(g.len(), edges, g.is_oriented()).unwrap()
}

pub fn refinement(g: &WeightedMultigraph, shuffle_seed: u64) -> Check {
    let p = refine_partition(g, None);
    if refine_partition(g, Some(&p)) != p {
        return Err("refinement is not idempotent".into());
    }
    if !is_equitable(g, &p) {
        return Err("refined partition is not equitable".into());
    }
    // processing order must not matter
    let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
    let mut perm: Vec<usize> = (0..g.len()).collect();
    for i in (1..perm.len()).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    let h = relabel(g, &perm);
    let q = refine_partition(&h, None);
    let back: Vec<Vec<usize>> = q
        .blocks()
        .iter()
        .map(|b| b.iter().map(|&v| perm.iter().position(|&p| p == v).unwrap()).collect())
        .collect();
    let back = Partition::new(g.len(), back).unwrap();
    if back != p {
        return Err(format!("relabeling changed the partition: {:?} vs {:?}", back.blocks(), p.blocks()));
    }
    Ok(())
}

/// A random `m`-fold permutation lift of a random base graph together with
/// its fiber partition, which is equitable by construction.
pub fn random_lift(seed: u64) -> Option<(WeightedMultigraph, Partition, WeightedMultigraph)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = {
        let spec = RandomGraphSpec {
            vertices: rng.random_range(1..=4),
            max_weight: 3,
            density: 0.4,
            oriented: false,
        };
        random_multigraph(&mut rng, spec).unwrap()
    };
    let m = rng.random_range(1..=3);
    let k = base.len();
    let id = |b: usize, i: usize| b * m + i;
    let mut edges = Vec::new();
    for a in 0..k {
        for (b, w) in base.neighbors(a) {
            if b < a {
                continue;
            }
            if a == b {
                for i in 0..m {
                    edges.push((id(a, i), id(a, i), w));
                }
                continue;
            }
            let mut perm: Vec<usize> = (0..m).collect();
            for i in (1..m).rev() {
                perm.swap(i, rng.random_range(0..=i));
            }
            for i in 0..m {
                edges.push((id(a, i), id(b, perm[i]), w));
            }
        }
    }
    let x = WeightedMultigraph::from_undirected_edges(k * m, edges).ok()?;
    let fibers = Partition::new(k * m, (0..k).map(|b| (0..m).map(|i| id(b, i)).collect()).collect()).unwrap();
    Some((x, fibers, base))
}

pub fn coarsest(seed: u64) -> Check {
    let Some((x, fibers, _)) = random_lift(seed) else { return Ok(()) };
    if !is_equitable(&x, &fibers) {
        return Err("fiber partition of a lift must be equitable".into());
    }
    let p = refine_partition(&x, None);
    if !fibers.refines(&p) {
        return Err(format!("equitable {:?} does not refine output {:?}", fibers.blocks(), p.blocks()));
    }
    Ok(())
}

pub fn quotient_transport(g: &WeightedMultigraph) -> Check {
    let p = refine_partition(g, None);
    let (y, map) = build_quotient(g, &p).map_err(|e| e.to_string())?;
    let n_max = 10;
    let gx = all_tables(g, n_max);
    let gy = all_tables(&y, n_max);
    for x in 0..g.len() {
        let cx = map.class_of_index(x).unwrap();
        for n in 0..=n_max {
            let sums = class_sums(&gx[x][n], &map).unwrap();
            if sums != gy[cx][n] {
                return Err(format!("class sums differ at x={x} n={n}"));
            }
        }
        let tx = exact(&Rooted::graph(g, x).unwrap().walk_totals(n_max).unwrap());
        let ty = exact(&Rooted::graph(&y, cx).unwrap().walk_totals(n_max).unwrap());
        if tx != ty {
            return Err(format!("walk totals differ at x={x}"));
        }
    }
    Ok(())
}

pub fn perron_monotone(seed: u64) -> Check {
    let g = random_graph(seed, true);
    let mut m = g.matrix();
    let base = perron_root(&m, PERRON_TOL).map_err(|e| e.to_string())?.value;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let k = m.len();
    let (i, j) = (rng.random_range(0..k), rng.random_range(0..k));
    m[i][j] += rng.random_range(1..=3) as f64;
    let bigger = perron_root(&m, PERRON_TOL).map_err(|e| e.to_string())?.value;
    if bigger < base - 1e-9 {
        return Err(format!("adding weight lowered the Perron root: {base} -> {bigger}"));
    }
    Ok(())
}

pub fn eigenvector_transport(seed: u64) -> Check {
    let Some((x, fibers, _)) = random_lift(seed) else { return Ok(()) };
    let (y, map) = build_quotient(&x, &fibers).map_err(|e| e.to_string())?;
    let p = perron_root(&y.matrix(), PERRON_TOL).map_err(|e| e.to_string())?;
    let lifted: Vec<f64> = (0..x.len()).map(|v| p.right[map.class_of_index(v).unwrap()]).collect();
    for v in 0..x.len() {
        let applied: f64 = x.neighbors(v).map(|(u, w)| w * lifted[u]).sum();
        if (applied - p.value * lifted[v]).abs() > 1e-9 * p.value.max(1.0) {
            return Err(format!("lifted eigenvector fails at {v}: {applied} vs {}", p.value * lifted[v]));
        }
    }
    Ok(())
}

/// Shared-randomness coupling: survival of the smaller process (lower
/// rate, smaller radius) never exceeds survival of the larger one.
pub fn monotone_coupling(seed: u64, lambda_lo: f64, lambda_hi: f64, shrink: bool) -> Check {
    let g = random_graph(seed, false);
    let arena = Arc::new(Arena::from_graph(&g, 0).unwrap());
    let radius_sub = shrink.then(|| (seed % 3) as usize);
    let cfg = SimConfig::new(arena, BreedingMode::Edge, lambda_hi)
        .with_horizon(10.0)
        .with_cap(2_000)
        .with_seed(seed);
    let c = Coupling {
        lambda_sub: lambda_lo.min(lambda_hi),
        radius_sub,
    };
    for trial in 0..4 {
        let o = run_coupled_trial(&cfg, trial, c).map_err(|e| e.to_string())?;
        if o.sub_survived() && !o.full_survived() {
            return Err(format!("coupled sub-process outlived the full one in trial {trial}"));
        }
    }
    Ok(())
}
