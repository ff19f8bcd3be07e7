//! Perron roots, ball operator norms and the amenability classifier.
//!
//! For a non-oriented graph the adjacency operator has norm `M_s`, and the
//! largest eigenvalue of its restriction to a ball `B(o, r)` is a lower
//! bound that increases to `M_s` with `r`. When the graph has a finite
//! quotient `Y`, `M_w` is the Perron root of `Y`. The graph is nonamenable
//! exactly when `M_s < M_w`, i.e. when the BRW has a pure weak phase
//! `λ_w < λ < λ_s`.

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::genfun::{mw_growth_estimate, GROWTH_BALL_BUDGET};
use crate::graph::paths::Rooted;
use crate::graph::{GraphFamily, WeightedMultigraph};
use crate::quotient::{certify_known_quotient, Verification};

pub const PERRON_TOL: f64 = 1e-12;
pub const PERRON_MAX_ITER: usize = 1_000_000;
pub const DEFAULT_MARGIN: f64 = 0.05;
/// Radius at which a family's known quotient is verified before use.
pub const QUOTIENT_CHECK_RADIUS: usize = 6;
const LANCZOS_MAX_STEPS: usize = 600;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerronRoot {
    pub value: f64,
    /// Positive right eigenvector, max entry 1.
    pub right: Vec<f64>,
    /// Positive left eigenvector, max entry 1.
    pub left: Vec<f64>,
    pub iterations: usize,
}

fn check_square(m: &[Vec<f64>]) -> Result<usize> {
    let n = m.len();
    if n == 0 || m.iter().any(|r| r.len() != n) {
        return Err(domain("matrix must be square and nonempty"));
    }
    if m.iter().flatten().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(domain("matrix entries must be finite and nonnegative"));
    }
    Ok(n)
}

fn reaches_all(m: &[Vec<f64>], transpose: bool) -> bool {
    let n = m.len();
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut queue = VecDeque::from([0]);
    while let Some(i) = queue.pop_front() {
        for j in 0..n {
            let w = if transpose { m[j][i] } else { m[i][j] };
            if w > 0.0 && !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Shifted power iteration on `A + I` (primitive for irreducible `A`),
/// stopped when the Collatz–Wielandt bracket is narrower than `tol`.
fn power_vector(m: &[Vec<f64>], transpose: bool, tol: f64) -> Result<(f64, Vec<f64>, usize)> {
    let n = m.len();
    let entry = |i: usize, j: usize| if transpose { m[j][i] } else { m[i][j] };
    let mut x = vec![1.0; n];
    let mut y = vec![0.0; n];
    let mut last = (0.0, 0.0);
    for it in 1..=PERRON_MAX_ITER {
        for i in 0..n {
            y[i] = x[i] + (0..n).map(|j| entry(i, j) * x[j]).sum::<f64>();
        }
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            let r = y[i] / x[i];
            lo = lo.min(r);
            hi = hi.max(r);
        }
        let top = y.iter().cloned().fold(0.0, f64::max);
        for i in 0..n {
            x[i] = y[i] / top;
        }
        if hi - lo <= tol * hi.max(1.0) || (it > 100 && (lo, hi) == last) {
            return Ok((0.5 * (lo + hi) - 1.0, x, it));
        }
        last = (lo, hi);
    }
    Err(Error::Numeric(format!(
        "power iteration did not converge in {PERRON_MAX_ITER} steps (bracket [{}, {}])",
        last.0 - 1.0,
        last.1 - 1.0
    )))
}

/// Perron root of a nonnegative irreducible square matrix with its positive
/// right and left eigenvectors.
pub fn perron_root(matrix: &[Vec<f64>], tol: f64) -> Result<PerronRoot> {
    check_square(matrix)?;
    if !reaches_all(matrix, false) || !reaches_all(matrix, true) {
        return Err(domain("matrix is reducible"));
    }
    let (value, right, iterations) = power_vector(matrix, false, tol)?;
    let (_, left, _) = power_vector(matrix, true, tol)?;
    Ok(PerronRoot {
        value,
        right,
        left,
        iterations,
    })
}

/// How `λ_w` relates to `1/M_w`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaWRelation {
    /// `λ_w = 1/M_w` (finite graphs and graphs with a verified quotient).
    Equal,
    /// Only `λ_w ≥ 1/M_w` is known.
    AtLeast,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MwSource {
    Finite,
    Quotient { verified_radius: usize },
    Estimate { horizon: usize, oscillation: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MwValue {
    pub value: f64,
    pub source: MwSource,
    pub eigenvector: Option<Vec<f64>>,
    pub lambda_w: f64,
    pub lambda_w_relation: LambdaWRelation,
}

/// `M_w` of a finite irreducible multigraph: its Perron root.
pub fn mw_of_graph(g: &WeightedMultigraph) -> Result<MwValue> {
    let p = perron_root(&g.matrix(), PERRON_TOL)?;
    Ok(MwValue {
        value: p.value,
        source: MwSource::Finite,
        eigenvector: Some(p.right),
        lambda_w: 1.0 / p.value,
        lambda_w_relation: LambdaWRelation::Equal,
    })
}

/// `M_w` of a family: the Perron root of its known quotient after
/// verification, otherwise a growth estimate labeled as such.
pub fn mw_of_family(family: &GraphFamily) -> Result<MwValue> {
    let mut f = family.clone();
    if let Some(map) = f.known_quotient() {
        let radius = match map.verification() {
            Verification::Radius(r) if r >= 3 => Some(r),
            Verification::Exact => Some(usize::MAX),
            _ => {
                let report = certify_known_quotient(&mut f, QUOTIENT_CHECK_RADIUS)?;
                report.passed.then_some(report.radius)
            }
        };
        if let Some(r) = radius {
            let y = f.known_quotient().expect("present").codomain();
            let p = perron_root(&y.matrix(), PERRON_TOL)?;
            return Ok(MwValue {
                value: p.value,
                source: MwSource::Quotient { verified_radius: r },
                eigenvector: Some(p.right),
                lambda_w: 1.0 / p.value,
                lambda_w_relation: LambdaWRelation::Equal,
            });
        }
    }
    let horizon = affordable_radius(family, crate::genfun::DEFAULT_NMAX, GROWTH_BALL_BUDGET)?.max(1) + 1;
    let est = mw_growth_estimate(&Rooted::family_root(family), horizon)?;
    Ok(MwValue {
        value: est.value,
        source: MwSource::Estimate {
            horizon,
            oscillation: est.oscillation,
        },
        eigenvector: None,
        lambda_w: 1.0 / est.value,
        lambda_w_relation: LambdaWRelation::AtLeast,
    })
}

/// Largest `r ≤ max_r` whose ball around the root fits in `budget`.
fn affordable_radius(family: &GraphFamily, max_r: usize, budget: usize) -> Result<usize> {
    let mut best = 0;
    for r in 1..=max_r {
        match family.ball_with_budget(&family.root(), r, budget) {
            Ok(_) => best = r,
            Err(Error::Resource(_)) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(best)
}

/// Largest eigenvalue of a symmetric tridiagonal matrix, by Sturm bisection.
fn tridiagonal_top(alpha: &[f64], beta: &[f64]) -> f64 {
    let k = alpha.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..k {
        let r = beta.get(i).map_or(0.0, |b| b.abs()) + if i > 0 { beta[i - 1].abs() } else { 0.0 };
        lo = lo.min(alpha[i] - r);
        hi = hi.max(alpha[i] + r);
    }
    // number of eigenvalues below x
    let below = |x: f64| {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..k {
            let off = if i > 0 { beta[i - 1] * beta[i - 1] } else { 0.0 };
            d = alpha[i] - x - if i > 0 { off / d } else { 0.0 };
            if d == 0.0 {
                d = -f64::EPSILON * (x.abs() + 1.0);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if below(mid) >= k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

/// Largest eigenvalue of a symmetric nonnegative matrix given by its rows,
/// via Lanczos from the all-ones vector. Ritz values never exceed the true
/// eigenvalue.
pub(crate) fn symmetric_top_eigenvalue(g: &WeightedMultigraph) -> f64 {
    let n = g.len();
    let matvec = |x: &[f64], y: &mut [f64]| {
        for (i, yi) in y.iter_mut().enumerate() {
            let (t, w) = g.row(i);
            *yi = t.iter().zip(w).map(|(&j, &wij)| wij * x[j as usize]).sum();
        }
    };
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut v_prev = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut history: Vec<f64> = Vec::new();
    let steps = LANCZOS_MAX_STEPS.min(n);
    for k in 0..steps {
        matvec(&v, &mut w);
        let a: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        alpha.push(a);
        let b_prev = if k > 0 { beta[k - 1] } else { 0.0 };
        for i in 0..n {
            w[i] -= a * v[i] + b_prev * v_prev[i];
        }
        let b = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let theta = tridiagonal_top(&alpha, &beta);
        history.push(theta);
        let scale = theta.abs().max(1.0);
        if b <= 1e-13 * scale {
            break;
        }
        if k >= 10 && (theta - history[k - 10]).abs() <= 1e-13 * scale {
            break;
        }
        beta.push(b);
        for i in 0..n {
            v_prev[i] = v[i];
            v[i] = w[i] / b;
        }
    }
    history.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Largest eigenvalue of the adjacency operator restricted to `B(o, r)`
/// (zero boundary condition) for each radius; forced nondecreasing by a
/// running maximum, which is valid because balls are nested.
pub fn ms_lower_bounds(family: &GraphFamily, radii: &[usize]) -> Result<Vec<f64>> {
    if family.is_oriented() {
        return Err(domain(
            "ball norms bound M_s only for non-oriented graphs; use ms_growth_estimate instead",
        ));
    }
    let mut out = Vec::with_capacity(radii.len());
    let mut best = f64::NEG_INFINITY;
    for &r in radii {
        let ball = family.ball(&family.root(), r)?;
        best = best.max(symmetric_top_eigenvalue(ball.graph()));
        out.push(best);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Nonamenable,
    Amenable,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralReport {
    pub family: String,
    pub mw: MwValue,
    pub ms_radii: Vec<usize>,
    pub ms_sequence: Vec<f64>,
    pub ms_final: f64,
    /// `mw − ms_final`.
    pub gap: f64,
    pub margin: f64,
    pub stabilized: bool,
    pub verdict: Verdict,
    /// `[1/M_w, 1/ms_final]`, which contains `λ_s = 1/M_s`.
    pub lambda_s_bracket: [f64; 2],
    pub lambda_w: f64,
    pub lambda_w_relation: LambdaWRelation,
    pub basis: String,
}

/// Amenability verdict for a non-oriented family with a finite quotient.
///
/// Nonamenable when `M_w − ms_final > margin` and the ball norms have
/// stabilized (last two increments below `margin/10`); amenable when they
/// stabilized within `margin` of `M_w`; inconclusive otherwise.
pub fn classify(family: &GraphFamily, radius_max: usize, margin: f64) -> Result<SpectralReport> {
    if family.is_oriented() {
        return Err(domain("amenability classification needs a non-oriented graph"));
    }
    if family.known_quotient().is_none() {
        return Err(domain(format!(
            "family {:?} has no finite quotient; classification needs one",
            family.name()
        )));
    }
    if radius_max < 3 {
        return Err(crate::error::config("radius_max must be at least 3"));
    }
    let mw = mw_of_family(family)?;
    if !matches!(mw.source, MwSource::Quotient { .. }) {
        return Err(domain("the family's quotient failed verification"));
    }
    let radii: Vec<usize> = (1..=radius_max).collect();
    let ms = ms_lower_bounds(family, &radii)?;
    let k = ms.len();
    let ms_final = ms[k - 1];
    let stabilized = k >= 3 && ms[k - 1] - ms[k - 2] < margin / 10.0 && ms[k - 2] - ms[k - 3] < margin / 10.0;
    let gap = mw.value - ms_final;
    let verdict = if stabilized && gap > margin {
        Verdict::Nonamenable
    } else if stabilized && gap.abs() < margin {
        Verdict::Amenable
    } else {
        Verdict::Inconclusive
    };
    Ok(SpectralReport {
        family: family.name().to_string(),
        ms_radii: radii,
        ms_final,
        gap,
        margin,
        stabilized,
        verdict,
        lambda_s_bracket: [1.0 / mw.value, 1.0 / ms_final],
        lambda_w: mw.lambda_w,
        lambda_w_relation: mw.lambda_w_relation,
        basis: "non-oriented graph with a verified finite quotient: nonamenable iff M_s < M_w, \
                i.e. iff lambda_w < lambda_s"
            .to_string(),
        ms_sequence: ms,
        mw,
    })
}
