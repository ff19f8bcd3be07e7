//! The `brw` command-line front end.
//!
//! Every subcommand writes CSV (with a header row) or JSON to stdout or to
//! the file named by `--out`. JSON documents embed a [`RunManifest`]
//! without a timestamp; files get a stamped `<out>.manifest.json` sidecar.
//! Errors are printed as one line, `error kind=<kind> message="<text>"`,
//! with exit code 2 for configuration and domain errors and 3 for numeric
//! and resource failures.

mod manifest;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde_json::{json, Map, Number, Value};

pub use manifest::{InputDigest, RunManifest};

use crate::branching::{
    powerhouse_bound, simulate_gw, smallest_fixed_point, OffspringLaw, DEFAULT_FIXED_POINT_TOL, DEFAULT_GW_THRESHOLD,
};
use crate::error::{config, domain, Error, Result};
use crate::genfun::{
    lambda_s_bracket, lambda_s_from_phi, ms_growth_estimate, mw_growth_estimate, phi_series, srw_return_series,
    modified_lambda_s, SeriesRoot, DEFAULT_NMAX, DEFAULT_TOL,
};
use crate::graph::io;
use crate::graph::random::{random_multigraph, RandomGraphSpec};
use crate::graph::{encode_vertex, make_family, Counts, FamilySpec, GraphFamily, Rooted, WeightedMultigraph};
use crate::quotient::{build_quotient, certify_known_quotient, refine_partition, Partition};
use crate::sim::rng::trial_rng;
use crate::sim::{
    estimate_survival, pilot_radius, sweep_lambda, Arena, BreedingMode, SimConfig, SurvivalEstimate,
};
use crate::spectral::{classify, DEFAULT_MARGIN, QUOTIENT_CHECK_RADIUS};

#[derive(Debug, Parser)]
#[command(name = "brw", version, about = "Critical values and simulation of branching random walks on multigraphs")]
pub struct Cli {
    /// Worker threads for simulations (falls back to BRW_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a graph file: a ball of a family or a random multigraph.
    Gen(GenArgs),
    /// Closed-walk, first-return and total walk counts.
    Paths(PathsArgs),
    /// Truncated first-return roots and growth estimates.
    Critical(CriticalArgs),
    /// Quotient by the coarsest equitable partition, or a family's verified quotient.
    Quotient(QuotientArgs),
    /// Amenability verdict from ball norms and the quotient's Perron root.
    Classify(ClassifyArgs),
    /// Galton-Watson extinction probability.
    Gw(GwArgs),
    /// Monte Carlo survival estimate at one lambda.
    Simulate(SimulateArgs),
    /// Survival estimates over a lambda grid.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args, Clone)]
struct OutputArgs {
    /// `csv`, `json` (both to stdout) or an output path.
    #[arg(long)]
    out: Option<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Args, Clone, Default)]
struct SourceArgs {
    /// Graph file in brw-graph-v1 format.
    #[arg(long, conflicts_with = "family")]
    graph: Option<PathBuf>,
    /// Family name, inline JSON spec, or path to a JSON spec file.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    d: Option<u32>,
    /// Radial period, e.g. `2,1`.
    #[arg(long, value_delimiter = ',')]
    period: Option<Vec<u32>>,
    /// Vertex label (graphs) or encoding such as `0,1` (families); defaults
    /// to the first vertex or the family root.
    #[arg(long)]
    vertex: Option<String>,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Ball radius for families.
    #[arg(long, default_value_t = 4)]
    radius: usize,
    /// Generate a random connected multigraph instead.
    #[arg(long)]
    random: bool,
    #[arg(long, default_value_t = 8)]
    vertices: usize,
    #[arg(long, default_value_t = 3)]
    max_weight: u32,
    #[arg(long, default_value_t = 0.3)]
    density: f64,
    #[arg(long)]
    oriented: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct PathsArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, default_value_t = 10)]
    nmax: usize,
    /// Also count walks to and first passages at this vertex.
    #[arg(long)]
    target: Option<String>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct CriticalArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, default_value_t = DEFAULT_NMAX)]
    nmax: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Also report R for the simple random walk.
    #[arg(long)]
    srw: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct QuotientArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Initial partition as `|`-separated blocks of comma-separated labels.
    #[arg(long)]
    seed_partition: Option<String>,
    /// Verification radius for families.
    #[arg(long, default_value_t = QUOTIENT_CHECK_RADIUS)]
    radius: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, default_value_t = 12)]
    radius_max: usize,
    #[arg(long, default_value_t = DEFAULT_MARGIN)]
    margin: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct GwArgs {
    /// Offspring probabilities `c0,c1,...`; repeat for a collection.
    #[arg(long, required = true)]
    pgf: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_FIXED_POINT_TOL)]
    tol: f64,
    /// Cross-check by simulating this many trials.
    #[arg(long)]
    simulate: Option<usize>,
    #[arg(long, default_value_t = 50)]
    generations: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Edge,
    Site,
}

#[derive(Debug, Args, Clone)]
struct SimCommon {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, value_enum, default_value_t = Mode::Edge)]
    mode: Mode,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 100.0)]
    tmax: f64,
    #[arg(long, default_value_t = 100_000)]
    cap: u64,
    /// Truncation radius for families (default: pilot-run choice).
    #[arg(long)]
    radius: Option<usize>,
    /// Start of the local-survival window (default tmax/2).
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    lambda: f64,
    #[command(flatten)]
    common: SimCommon,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// `a:b:step`, or an explicit comma-separated list.
    #[arg(long)]
    lambda_grid: String,
    #[command(flatten)]
    common: SimCommon,
}

/// Parses `argv` (program name first), runs, and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let text = e.to_string();
            let line = text.lines().next().unwrap_or("bad arguments").trim_start_matches("error: ");
            report(&config(line.to_string()));
            return 2;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            report(&e);
            e.exit_code()
        }
    }
}

fn report(e: &Error) {
    let msg = match e {
        Error::Domain(m) | Error::Config(m) | Error::Numeric(m) | Error::Resource(m) => m.clone(),
        other => other.to_string(),
    };
    let quoted = serde_json::to_string(&msg).unwrap_or_else(|_| "\"?\"".into());
    eprintln!("error kind={} message={quoted}", e.kind());
}

fn configure_threads(threads: Option<usize>) -> Result<()> {
    let n = match threads {
        Some(n) => Some(n),
        None => match std::env::var("BRW_THREADS") {
            Ok(s) => Some(s.trim().parse().map_err(|_| config(format!("BRW_THREADS={s:?} is not a number")))?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(config("thread count must be positive"));
        }
        // a second configuration in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(a) => gen(a),
        Command::Paths(a) => paths(a),
        Command::Critical(a) => critical(a),
        Command::Quotient(a) => quotient(a),
        Command::Classify(a) => classify_cmd(a),
        Command::Gw(a) => gw(a),
        Command::Simulate(a) => {
            configure_threads(cli.threads)?;
            simulate(a)
        }
        Command::Sweep(a) => {
            configure_threads(cli.threads)?;
            sweep(a)
        }
    }
}

// ---- inputs ----

enum Source {
    Graph { graph: WeightedMultigraph, path: PathBuf },
    Family { family: GraphFamily, spec: FamilySpec },
}

impl SourceArgs {
    fn family_spec(&self) -> Result<Option<FamilySpec>> {
        let Some(name) = &self.family else { return Ok(None) };
        let trimmed = name.trim();
        let value: Value = if trimmed.starts_with('{') {
            serde_json::from_str(trimmed).map_err(|e| config(format!("bad inline family spec: {e}")))?
        } else if trimmed.ends_with(".json") {
            let text = std::fs::read_to_string(trimmed)?;
            serde_json::from_str(&text).map_err(|e| config(format!("bad family spec file {trimmed}: {e}")))?
        } else {
            let mut m = Map::new();
            m.insert("family".into(), json!(trimmed));
            if let Some(k) = self.k {
                m.insert("k".into(), json!(k));
            }
            if let Some(n) = self.n {
                m.insert("n".into(), json!(n));
            }
            if let Some(d) = self.d {
                m.insert("d".into(), json!(d));
            }
            if let Some(p) = &self.period {
                m.insert("period".into(), json!(p));
            }
            Value::Object(m)
        };
        FamilySpec::from_json(&value).map(Some)
    }

    fn load(&self) -> Result<Source> {
        if let Some(path) = &self.graph {
            return Ok(Source::Graph {
                graph: io::load(path)?,
                path: path.clone(),
            });
        }
        match self.family_spec()? {
            Some(spec) => Ok(Source::Family {
                family: make_family(&spec)?,
                spec,
            }),
            None => Err(config("one of --graph or --family is required")),
        }
    }
}

impl Source {
    fn rooted(&self, vertex: Option<&str>) -> Result<Rooted<'_>> {
        let base = match self {
            Source::Graph { graph, .. } => Rooted::graph(graph, 0)?,
            Source::Family { family, .. } => Rooted::family_root(family),
        };
        match vertex {
            Some(v) => base.resolve(v),
            None => Ok(base),
        }
    }

    fn describe(&self) -> Value {
        match self {
            Source::Graph { path, .. } => json!({ "graph": path.display().to_string() }),
            Source::Family { spec, .. } => serde_json::to_value(spec).unwrap_or(Value::Null),
        }
    }

    fn manifest(&self, sub: &str, mut params: Value, seed: Option<u64>) -> Result<RunManifest> {
        if let Value::Object(m) = &mut params {
            m.insert("source".into(), self.describe());
        }
        let mut man = RunManifest::new(sub, params, seed);
        if let Source::Graph { path, .. } = self {
            man.add_input(path)?;
        }
        Ok(man)
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s: u64 = rand::rng().random();
        eprintln!("seed={s}");
        s
    })
}

// ---- outputs ----

fn exact_number(text: &str) -> Value {
    text.parse::<Number>().map(Value::Number).unwrap_or_else(|_| json!(text))
}

fn count_value(c: &Counts, i: usize) -> Value {
    exact_number(&c.render(i))
}

fn float_cell(x: Option<f64>) -> String {
    x.map(|v| format!("{v}")).unwrap_or_default()
}

fn emit(output: &OutputArgs, csv: impl FnOnce() -> String, mut doc: Value, manifest: &RunManifest) -> Result<()> {
    let (path, format) = match output.out.as_deref() {
        None => (None, output.format.unwrap_or(Format::Csv)),
        Some("csv") => (None, output.format.unwrap_or(Format::Csv)),
        Some("json") => (None, output.format.unwrap_or(Format::Json)),
        Some(p) => {
            let by_ext = if p.ends_with(".json") { Format::Json } else { Format::Csv };
            (Some(PathBuf::from(p)), output.format.unwrap_or(by_ext))
        }
    };
    let body = match format {
        Format::Csv => csv(),
        Format::Json => {
            if let Value::Object(m) = &mut doc {
                m.insert("manifest".into(), serde_json::to_value(manifest)?);
            }
            let mut s = serde_json::to_string_pretty(&doc)?;
            s.push('\n');
            s
        }
    };
    write_output(path.as_deref(), &body, manifest)
}

fn write_output(path: Option<&Path>, body: &str, manifest: &RunManifest) -> Result<()> {
    match path {
        None => {
            print!("{body}");
            Ok(())
        }
        Some(p) => {
            std::fs::write(p, body)?;
            let mut side = p.as_os_str().to_owned();
            side.push(".manifest.json");
            let mut text = serde_json::to_string_pretty(&manifest.stamped())?;
            text.push('\n');
            std::fs::write(PathBuf::from(side), text)?;
            Ok(())
        }
    }
}

// ---- subcommands ----

fn gen(a: GenArgs) -> Result<()> {
    let (graph, manifest) = if a.random {
        let seed = resolve_seed(a.seed);
        let spec = RandomGraphSpec {
            vertices: a.vertices,
            max_weight: a.max_weight,
            density: a.density,
            oriented: a.oriented,
        };
        if a.vertices == 0 || !(0.0..=1.0).contains(&a.density) {
            return Err(config("random graphs need vertices ≥ 1 and density in [0, 1]"));
        }
        let g = random_multigraph(&mut trial_rng(seed, 0), spec)?;
        let params = json!({ "random": true, "vertices": a.vertices, "max_weight": a.max_weight,
                             "density": a.density, "oriented": a.oriented });
        (g, RunManifest::new("gen", params, Some(seed)))
    } else {
        let source = a.source.load()?;
        let Source::Family { family, .. } = &source else {
            return Err(config("gen needs --family or --random"));
        };
        let center = match &a.source.vertex {
            Some(v) => crate::graph::parse_vertex(v)?,
            None => family.root(),
        };
        let ball = family.ball(&center, a.radius)?;
        let labels = ball.members().iter().map(encode_vertex).collect();
        let g = ball.graph().clone().with_labels(labels)?;
        let params = json!({ "radius": a.radius, "center": encode_vertex(&center) });
        (g, source.manifest("gen", params, None)?)
    };
    let mut body = serde_json::to_string_pretty(&io::to_json_value(&graph))?;
    body.push('\n');
    let path = a.output.out.as_deref().filter(|o| *o != "json").map(Path::new);
    if a.output.format == Some(Format::Csv) || a.output.out.as_deref() == Some("csv") {
        return Err(config("gen writes brw-graph-v1 JSON only"));
    }
    write_output(path, &body, &manifest)
}

fn paths(a: PathsArgs) -> Result<()> {
    let source = a.source.load()?;
    let x = source.rooted(a.source.vertex.as_deref())?;
    let returns = x.return_counts(a.nmax)?;
    let first = x.first_returns(a.nmax)?;
    let totals = x.walk_totals(a.nmax)?;
    let period = x.period(a.nmax)?;
    let target = match &a.target {
        Some(t) => {
            let y = x.resolve(t)?;
            let table = x.path_counts(a.nmax)?;
            let yi = table
                .index_of(&match &y {
                    Rooted::Graph { graph, vertex } => graph.label(*vertex).into_owned(),
                    Rooted::Family { vertex, .. } => encode_vertex(vertex),
                })
                .map(|i| (0..=a.nmax).map(|n| table.gamma_row(n).render(i)).collect::<Vec<_>>())
                .unwrap_or_else(|| vec!["0".to_string(); a.nmax + 1]);
            let fp = x.first_passage(&y, a.nmax)?;
            Some((t.clone(), yi, fp))
        }
        None => None,
    };
    let params = json!({ "nmax": a.nmax, "vertex": x.describe(), "target": a.target });
    let manifest = source.manifest("paths", params, None)?;
    let rows: Vec<Value> = (0..=a.nmax)
        .map(|n| {
            let mut r = json!({
                "n": n,
                "gamma_xx": count_value(&returns, n),
                "phi_xx": count_value(&first, n),
                "total": count_value(&totals, n),
            });
            if let Some((_, g, fp)) = &target {
                r["gamma_xy"] = exact_number(&g[n]);
                r["phi_xy"] = count_value(fp, n);
            }
            r
        })
        .collect();
    let doc = json!({
        "source": x.describe(),
        "target": target.as_ref().map(|t| t.0.clone()),
        "horizon": a.nmax,
        "exact": totals.is_exact(),
        "period": period,
        "rows": rows,
    });
    let csv = || {
        let mut s = String::from("n,gamma_xx,phi_xx,total");
        if target.is_some() {
            s.push_str(",gamma_xy,phi_xy");
        }
        s.push('\n');
        for n in 0..=a.nmax {
            let _ = write!(s, "{n},{},{},{}", returns.render(n), first.render(n), totals.render(n));
            if let Some((_, g, fp)) = &target {
                let _ = write!(s, ",{},{}", g[n], fp.render(n));
            }
            s.push('\n');
        }
        s
    };
    emit(&a.output, csv, doc, &manifest)
}

fn root_json(r: &std::result::Result<SeriesRoot, String>) -> Value {
    match r {
        Ok(root) => serde_json::to_value(root).unwrap_or(Value::Null),
        Err(msg) => json!({ "kind": "unavailable", "reason": msg }),
    }
}

fn critical(a: CriticalArgs) -> Result<()> {
    if a.nmax < 1 {
        return Err(config("nmax must be at least 1"));
    }
    let source = a.source.load()?;
    let x = source.rooted(a.source.vertex.as_deref())?;
    let phi = phi_series(&x, a.nmax)?;
    let roots: Vec<Option<SeriesRoot>> = (1..=a.nmax)
        .map(|n| lambda_s_from_phi(&phi.truncate(n), a.tol).ok())
        .collect();
    let ms = ms_growth_estimate(&x, a.nmax)?;
    let mw = match mw_growth_estimate(&x, a.nmax) {
        Ok(m) => Ok(m),
        Err(Error::Resource(msg)) => Err(msg),
        Err(e) => return Err(e),
    };
    let bracket = lambda_s_bracket(&x, a.nmax, a.tol)?;
    let srw = if a.srw {
        let f = srw_return_series(&x, a.nmax)?;
        Some(modified_lambda_s(&f, a.tol).map_err(|e| e.to_string()))
    } else {
        None
    };
    let ms_at = |n: usize| -> Option<f64> {
        let d = ms.period?;
        let j = n / d;
        (j >= 1).then(|| ms.values.get(j - 1).copied()).flatten()
    };
    let mw_at = |n: usize| -> Option<f64> { mw.as_ref().ok().and_then(|m| m.trajectory.get(n - 1).copied()) };
    let params = json!({ "nmax": a.nmax, "tol": a.tol, "vertex": x.describe(), "srw": a.srw });
    let manifest = source.manifest("critical", params, None)?;
    let rows: Vec<Value> = (1..=a.nmax)
        .map(|n| {
            let (lo, hi) = match roots[n - 1].and_then(|r| r.bracket()) {
                Some((lo, hi)) => (Some(lo), Some(hi)),
                None => (None, None),
            };
            json!({ "horizon": n, "phi_root_lo": lo, "phi_root_hi": hi,
                    "ms_growth": ms_at(n), "mw_growth": mw_at(n) })
        })
        .collect();
    let doc = json!({
        "source": x.describe(),
        "horizon": a.nmax,
        "tol": a.tol,
        "phi_root": root_json(&lambda_s_from_phi(&phi, a.tol).map_err(|e| e.to_string())),
        "lambda_s_bracket": bracket,
        "period": ms.period,
        "ms_growth": ms.last(),
        "mw_growth": match &mw {
            Ok(m) => serde_json::to_value(m)?,
            Err(msg) => json!({ "unavailable": msg }),
        },
        "srw_root": srw.as_ref().map(root_json),
        "rows": rows,
    });
    let csv = || {
        let mut s = String::from("horizon,phi_root_lo,phi_root_hi,ms_growth,mw_growth\n");
        for n in 1..=a.nmax {
            let b = roots[n - 1].and_then(|r| r.bracket());
            let _ = writeln!(
                s,
                "{n},{},{},{},{}",
                float_cell(b.map(|b| b.0)),
                float_cell(b.map(|b| b.1)),
                float_cell(ms_at(n)),
                float_cell(mw_at(n))
            );
        }
        s
    };
    emit(&a.output, csv, doc, &manifest)
}

fn parse_partition(text: &str, g: &WeightedMultigraph) -> Result<Partition> {
    let mut blocks = Vec::new();
    for block in text.split('|') {
        let members = block
            .split(',')
            .map(|l| g.index_of(l.trim()))
            .collect::<Result<Vec<_>>>()?;
        blocks.push(members);
    }
    Partition::new(g.len(), blocks).map_err(|e| config(format!("bad seed partition: {e}")))
}

fn quotient(a: QuotientArgs) -> Result<()> {
    let source = a.source.load()?;
    let (blocks, matrix, verified_radius, verification) = match &source {
        Source::Graph { graph, .. } => {
            let seed = a.seed_partition.as_deref().map(|t| parse_partition(t, graph)).transpose()?;
            let p = refine_partition(graph, seed.as_ref());
            let (y, _) = build_quotient(graph, &p)?;
            let blocks: Vec<Vec<String>> = p
                .blocks()
                .iter()
                .map(|b| b.iter().map(|&i| graph.label(i).into_owned()).collect())
                .collect();
            (blocks, y.matrix(), None, "exact")
        }
        Source::Family { family, .. } => {
            if a.seed_partition.is_some() {
                return Err(config("--seed-partition applies to finite graphs only"));
            }
            let mut f = family.clone();
            let report = certify_known_quotient(&mut f, a.radius)?;
            if !report.passed {
                let v = report.violation.map(|v| format!("{} at {}", v.message, v.vertex)).unwrap_or_default();
                return Err(domain(format!("quotient failed verification at radius {}: {v}", a.radius)));
            }
            let map = f.known_quotient().expect("certified");
            let ball = f.ball(&f.root(), a.radius)?;
            let mut blocks = vec![Vec::new(); map.codomain().len()];
            for v in ball.members() {
                blocks[map.class_of(v)?].push(encode_vertex(v));
            }
            (blocks, map.matrix(), Some(report.radius), "radius")
        }
    };
    let params = json!({ "radius": a.radius, "seed_partition": a.seed_partition });
    let manifest = source.manifest("quotient", params, None)?;
    let int_matrix: Value = matrix
        .iter()
        .map(|r| r.iter().map(|&w| weight_value(w)).collect::<Vec<_>>())
        .collect();
    let doc = json!({
        "blocks": blocks,
        "matrix": int_matrix,
        "verified_radius": verified_radius,
        "verification": verification,
    });
    let csv = || {
        let k = matrix.len();
        let mut s = String::from("block");
        for j in 0..k {
            let _ = write!(s, ",B{j}");
        }
        s.push('\n');
        for (i, row) in matrix.iter().enumerate() {
            let _ = write!(s, "B{i}");
            for w in row {
                let _ = write!(s, ",{}", weight_value(*w));
            }
            s.push('\n');
        }
        s
    };
    emit(&a.output, csv, doc, &manifest)
}

fn weight_value(w: f64) -> Value {
    if w.fract() == 0.0 && w.abs() <= 9_007_199_254_740_992.0 {
        json!(w as i64)
    } else {
        json!(w)
    }
}

fn classify_cmd(a: ClassifyArgs) -> Result<()> {
    let source = a.source.load()?;
    let Source::Family { family, .. } = &source else {
        return Err(config("classify needs --family"));
    };
    let report = classify(family, a.radius_max, a.margin)?;
    let params = json!({ "radius_max": a.radius_max, "margin": a.margin });
    let manifest = source.manifest("classify", params, None)?;
    let doc = serde_json::to_value(&report)?;
    let csv = || {
        let mut s = String::from("radius,ms_lower_bound,mw\n");
        for (r, m) in report.ms_radii.iter().zip(&report.ms_sequence) {
            let _ = writeln!(s, "{r},{m},{}", report.mw.value);
        }
        s
    };
    emit(&a.output, csv, doc, &manifest)
}

fn gw(a: GwArgs) -> Result<()> {
    if !(a.tol > 0.0) {
        return Err(config("tol must be positive"));
    }
    let laws = a.pgf.iter().map(|t| OffspringLaw::parse(t)).collect::<Result<Vec<_>>>()?;
    let fixed = laws.iter().map(|l| smallest_fixed_point(l, a.tol)).collect::<Result<Vec<_>>>()?;
    let bound = powerhouse_bound(&laws)?;
    let seed = a.simulate.map(|_| resolve_seed(a.seed));
    let sims = match (a.simulate, seed) {
        (Some(trials), Some(seed)) => Some(
            laws.iter()
                .enumerate()
                .map(|(i, l)| {
                    simulate_gw(l, a.generations, trials, crate::sim::rng::derive_seed(seed, i as u64), DEFAULT_GW_THRESHOLD)
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        _ => None,
    };
    let params = json!({ "pgf": a.pgf, "tol": a.tol, "simulate": a.simulate, "generations": a.generations });
    let manifest = RunManifest::new("gw", params, seed);
    let laws_json: Vec<Value> = fixed
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let mut v = serde_json::to_value(f).unwrap_or(Value::Null);
            v["law"] = json!(i);
            v["pgf"] = json!(a.pgf[i]);
            v["g_at_delta"] = json!(laws[i].pgf(f.delta));
            if let Some(s) = &sims {
                let p = *s[i].extinct_by.last().unwrap_or(&0.0);
                v["simulated"] = json!({ "frequency": p, "standard_error": s[i].standard_error(p),
                                         "trials": s[i].trials, "generations": a.generations });
            }
            v
        })
        .collect();
    let doc = json!({ "laws": laws_json, "bound": bound });
    let csv = || {
        let mut s = String::from("law,delta,mean,iterations,converged,near_critical,g_at_delta");
        if sims.is_some() {
            s.push_str(",sim_frequency,sim_standard_error,sim_trials");
        }
        s.push('\n');
        for (i, f) in fixed.iter().enumerate() {
            let _ = write!(
                s,
                "{i},{},{},{},{},{},{}",
                f.delta,
                f.mean,
                f.iterations,
                f.converged,
                f.near_critical,
                laws[i].pgf(f.delta)
            );
            if let Some(sv) = &sims {
                let p = *sv[i].extinct_by.last().unwrap_or(&0.0);
                let _ = write!(s, ",{p},{},{}", sv[i].standard_error(p), sv[i].trials);
            }
            s.push('\n');
        }
        s
    };
    emit(&a.output, csv, doc, &manifest)
}

const SIM_CSV_HEADER: &str =
    "lambda,trials,global_freq,global_lo,global_hi,local_freq,local_lo,local_hi,radius,cap,seed\n";

fn sim_csv_row(e: &SurvivalEstimate) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}\n",
        e.lambda,
        e.trials,
        e.global.freq,
        e.global.lo,
        e.global.hi,
        e.local.freq,
        e.local.lo,
        e.local.hi,
        e.radius.map(|r| r.to_string()).unwrap_or_default(),
        e.cap,
        e.seed
    )
}

fn conventions(c: &SimCommon, t0: f64) -> Value {
    json!({
        "global_survival": "not extinct by t_max; reaching the population cap counts as survival",
        "local_survival": format!("root occupied at some unit-spaced sample time in [{t0}, {}]", c.tmax),
        "truncation": "offspring placed outside the ball are discarded; survival at finite radius is a lower estimate",
    })
}

/// Builds the simulation template; `lambda` is used for the pilot run.
fn sim_template(c: &SimCommon, lambda: f64, seed: u64) -> Result<(SimConfig, Source, Option<f64>)> {
    let source = c.source.load()?;
    let mode = match c.mode {
        Mode::Edge => BreedingMode::Edge,
        Mode::Site => BreedingMode::Site,
    };
    let (arena, pilot) = match &source {
        Source::Graph { graph, .. } => {
            let root = match &c.source.vertex {
                Some(v) => graph.index_of(v)?,
                None => 0,
            };
            (Arena::from_graph(graph, root)?, None)
        }
        Source::Family { family, .. } => match c.radius {
            Some(r) => (Arena::from_family(family, r)?, None),
            None => {
                let probe = SimConfig::new(Arc::new(Arena::from_family(family, 1)?), mode, lambda)
                    .with_horizon(c.tmax)
                    .with_cap(c.cap)
                    .with_seed(seed);
                probe.validate()?;
                let (r, killed) = pilot_radius(family, &probe)?;
                (Arena::from_family(family, r)?, Some(killed))
            }
        },
    };
    let cfg = SimConfig::new(Arc::new(arena), mode, lambda)
        .with_horizon(c.tmax)
        .with_cap(c.cap)
        .with_seed(seed);
    Ok((cfg, source, pilot))
}

fn sim_params(c: &SimCommon, cfg: &SimConfig, t0: f64, pilot: Option<f64>) -> Value {
    json!({
        "mode": cfg.mode, "trials": c.trials, "tmax": c.tmax, "cap": c.cap,
        "radius": cfg.arena.radius(), "radius_from_pilot": pilot.is_some(),
        "pilot_killed_fraction": pilot, "t0": t0,
    })
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let c = &a.common;
    let seed = resolve_seed(c.seed);
    let (cfg, source, pilot) = sim_template(c, a.lambda, seed)?;
    let t0 = c.t0.unwrap_or(c.tmax / 2.0);
    let est = estimate_survival(&cfg, c.trials, Some(t0))?;
    let mut params = sim_params(c, &cfg, t0, pilot);
    params["lambda"] = json!(a.lambda);
    let manifest = source.manifest("simulate", params, Some(seed))?;
    let doc = json!({ "estimate": est, "conventions": conventions(c, t0) });
    let csv = || format!("{SIM_CSV_HEADER}{}", sim_csv_row(&est));
    emit(&c.output, csv, doc, &manifest)
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || config(format!("bad lambda grid {text:?}; use a:b:step or a comma-separated list"));
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [a, b, step] => {
            let (a, b, step): (f64, f64, f64) = (
                a.trim().parse().map_err(|_| bad())?,
                b.trim().parse().map_err(|_| bad())?,
                step.trim().parse().map_err(|_| bad())?,
            );
            if !(step > 0.0) || !(b >= a) {
                return Err(bad());
            }
            let k = ((b - a) / step + 1e-9).floor() as usize;
            Ok((0..=k).map(|i| a + i as f64 * step).collect())
        }
        [_] => text.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect(),
        _ => Err(bad()),
    }
}

fn sweep(a: SweepArgs) -> Result<()> {
    let c = &a.common;
    let grid = parse_grid(&a.lambda_grid)?;
    let seed = resolve_seed(c.seed);
    let top = grid.last().copied().ok_or_else(|| config("lambda grid is empty"))?;
    let (cfg, source, pilot) = sim_template(c, top, seed)?;
    let t0 = c.t0.unwrap_or(c.tmax / 2.0);
    let rows = sweep_lambda(&cfg, &grid, c.trials, Some(t0))?;
    let mut params = sim_params(c, &cfg, t0, pilot);
    params["lambda_grid"] = json!(grid);
    let manifest = source.manifest("sweep", params, Some(seed))?;
    let doc = json!({ "rows": rows, "conventions": conventions(c, t0) });
    let csv = || {
        let mut s = String::from(SIM_CSV_HEADER);
        for r in &rows {
            s.push_str(&sim_csv_row(r));
        }
        s
    };
    emit(&c.output, csv, doc, &manifest)
}
