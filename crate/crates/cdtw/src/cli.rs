// SPDX-License-Identifier: Apache-2.0 OR MIT

//! The `cdtw` command line: `compute`, `oracle`, `check`, `plot` and
//! `bench`.
//!
//! Results go to stdout as JSON, messages to stderr. Exit codes: 0 on
//! success, 1 for bad input, 2 when a numeric guard trips, 3 when `check`
//! finds a violated property.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CdtwError, Result};
use crate::geometry::PolygonalCurve;
use crate::io::{self, NormSpec, ResolvedNorm};
use crate::norms::{GaugePolygon, NormHandle};
use crate::oracle::{self, GridConfig, NumericIntegrator};
use crate::plot::{self, PlotOptions};
use crate::propagate::cdtw_approx;
use crate::pwq::CONTINUITY_TOL;
use crate::random;

/// Exit code for a violated property in `check`.
pub const EXIT_CHECK_FAILED: i32 = 3;

/// Slack on both sides of the grid sandwich.
pub const SANDWICH_SLACK: f64 = 1e-3;
/// Relative gap allowed between a witness path's cost and the value.
pub const WITNESS_TOL: f64 = 1e-5;
/// Relative gap allowed between the two argument orders.
pub const SYMMETRY_TOL: f64 = 1e-7;
/// Absolute slack in the border-travel inequality.
pub const TRAVEL_TOL: f64 = 1e-6;
/// Sampled parameter pairs per border for the border-travel inequality.
pub const TRAVEL_PAIRS: usize = 100;
/// Slack on the bound `1/5 <= ratio <= 5` for bend swaps.
pub const BEND_SWAP_TOL: f64 = 1e-6;

/// Side of the square that random curves are drawn from.
const CURVE_SIDE: f64 = 10.0;

#[derive(Debug, Parser)]
#[command(name = "cdtw", version, about = "Approximate continuous dynamic time warping in the plane")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Approximate the distance between two curves.
    Compute(ComputeArgs),
    /// Grid dynamic program for comparison.
    Oracle(OracleArgs),
    /// Randomized property checks against the oracle.
    Check(CheckArgs),
    /// Draw the parameter space as SVG.
    Plot(PlotArgs),
    /// Time the propagation on a ladder of sizes.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct CurveArgs {
    /// First curve (CSV or JSON).
    #[arg(long)]
    p: PathBuf,
    /// Second curve (CSV or JSON).
    #[arg(long)]
    q: PathBuf,
    /// l1, l2, linf, inline JSON or a JSON file.
    #[arg(long, default_value = "l1")]
    norm: String,
    /// Accuracy for norms that need a polygonal replacement.
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Debug, Args)]
struct ComputeArgs {
    #[command(flatten)]
    curves: CurveArgs,
    /// Include per-border statistics.
    #[arg(long)]
    diagnostics: bool,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[command(flatten)]
    curves: CurveArgs,
    /// Subdivisions per segment.
    #[arg(long, default_value_t = 64)]
    grid: usize,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Only sweep bend swaps, `trials` cases per norm.
    #[arg(long, alias = "lemma1")]
    bend_swap: bool,
    /// Segments of the first random curve.
    #[arg(long, default_value_t = 5)]
    n: usize,
    /// Segments of the second random curve.
    #[arg(long, default_value_t = 5)]
    m: usize,
    #[arg(long, default_value = "l1")]
    norm: String,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Oracle subdivisions per segment.
    #[arg(long, default_value_t = 128)]
    grid: usize,
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[command(flatten)]
    curves: CurveArgs,
    #[arg(long)]
    out: PathBuf,
    /// Heatmap samples per axis.
    #[arg(long, default_value_t = 48)]
    heat: usize,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, default_value = "l1")]
    norm: String,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, value_delimiter = ',', default_value = "5,10,20,40")]
    sizes: Vec<usize>,
    /// Vertex counts of regular gauges timed at fixed size.
    #[arg(long, value_delimiter = ',', default_value = "4,8,16,32")]
    ks: Vec<usize>,
    /// Size used for the vertex-count ladder.
    #[arg(long, default_value_t = 20)]
    k_size: usize,
    /// Runs per measurement; the fastest is kept.
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Runs the command line `args` (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                1
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    let res = match cli.command {
        Command::Compute(a) => cmd_compute(&a),
        Command::Oracle(a) => cmd_oracle(&a),
        Command::Check(a) => cmd_check(&a, err),
        Command::Plot(a) => cmd_plot(&a),
        Command::Bench(a) => cmd_bench(&a, err),
    };
    match res {
        Ok((v, code)) => {
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("serializable"));
            code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn load(a: &CurveArgs) -> Result<(PolygonalCurve, PolygonalCurve, NormSpec)> {
    let p = io::load_curve(&a.p).map_err(|e| in_file(e, &a.p))?;
    let q = io::load_curve(&a.q).map_err(|e| in_file(e, &a.q))?;
    let spec = io::parse_norm_spec(&a.norm)?;
    Ok((p, q, spec))
}

fn in_file(e: CdtwError, path: &std::path::Path) -> CdtwError {
    match e {
        CdtwError::Parse { line, message } => CdtwError::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        CdtwError::InvalidCurve(m) => CdtwError::InvalidCurve(format!("{}: {m}", path.display())),
        other => other,
    }
}

fn cmd_compute(a: &ComputeArgs) -> Result<(Value, i32)> {
    let (p, q, spec) = load(&a.curves)?;
    let norm = io::resolve_norm(&spec, a.curves.epsilon)?;
    let r = cdtw_approx(&p, &q, &norm.handle)?;
    let mut diag = serde_json::to_value(&r.diagnostics)?;
    if let Some(d) = diag.as_object_mut() {
        d.remove("value");
        if !a.diagnostics {
            d.remove("per_border");
        }
    }
    let witness: Vec<[f64; 2]> = r.witness.waypoints.iter().map(|w| [w.x, w.y]).collect();
    Ok((
        json!({
            "value": r.value,
            "factor_bound": norm.factor_bound,
            "norm": norm.to_json(),
            "diagnostics": diag,
            "witness": witness,
        }),
        0,
    ))
}

fn cmd_oracle(a: &OracleArgs) -> Result<(Value, i32)> {
    let (p, q, spec) = load(&a.curves)?;
    let norm = io::exact_norm(&spec)?;
    let r = oracle::grid_cdtw(&p, &q, &norm, GridConfig::new(a.grid)?)?;
    Ok((
        json!({
            "value": r.value,
            "lower_hint": r.lower_hint,
            "nodes": r.nodes,
            "grid": a.grid,
            "norm": serde_json::to_value(&spec)?,
        }),
        0,
    ))
}

fn cmd_plot(a: &PlotArgs) -> Result<(Value, i32)> {
    let (p, q, spec) = load(&a.curves)?;
    let norm = io::resolve_norm(&spec, a.curves.epsilon)?;
    let r = cdtw_approx(&p, &q, &norm.handle)?;
    let svg = plot::render_svg(&p, &q, &norm.handle, &r, PlotOptions { heat: a.heat })?;
    std::fs::write(&a.out, svg).map_err(|e| {
        CdtwError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", a.out.display())))
    })?;
    Ok((json!({"out": a.out.display().to_string(), "value": r.value}), 0))
}

/// Everything measured on one pair of curves.
#[derive(Clone, Debug, Serialize)]
pub struct PairReport {
    pub n: usize,
    pub m: usize,
    pub value: f64,
    pub factor_bound: f64,
    pub grid_value: f64,
    pub lower_hint: f64,
    pub witness_cost: f64,
    pub witness_rel_err: f64,
    pub witness_monotone: bool,
    pub reverse_value: f64,
    pub symmetry_rel_err: f64,
    pub max_rank: usize,
    /// Largest relative breakpoint jump, before and after repair.
    pub max_jump: f64,
    pub travel_probes: usize,
    /// Largest `apx(t') - apx(t) - opt(t, t')` seen.
    pub travel_max_excess: f64,
    pub seconds: f64,
}

impl PairReport {
    /// Names of the violated properties.
    pub fn failures(&self) -> Vec<&'static str> {
        // NaN fails every comparison, so it counts as a violation.
        let le = |a: f64, b: f64| a <= b;
        let mut f = Vec::new();
        if !le(self.lower_hint - SANDWICH_SLACK, self.value) {
            f.push("sandwich_lower");
        }
        if !le(self.value, self.factor_bound * (self.grid_value + SANDWICH_SLACK)) {
            f.push("sandwich_upper");
        }
        if !le(self.witness_rel_err, WITNESS_TOL) || !self.witness_monotone {
            f.push("witness");
        }
        if !le(self.symmetry_rel_err, SYMMETRY_TOL) {
            f.push("symmetry");
        }
        if self.max_rank > self.n.max(self.m) {
            f.push("rank");
        }
        if self.max_jump.is_nan() || self.max_jump >= CONTINUITY_TOL {
            f.push("continuity");
        }
        if !le(self.travel_max_excess, TRAVEL_TOL) {
            f.push("border_travel");
        }
        f
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Runs every per-pair check on `p` and `q`.
///
/// `norm` drives the propagation, `exact` the grid oracle.
pub fn check_pair(
    p: &PolygonalCurve,
    q: &PolygonalCurve,
    norm: &ResolvedNorm,
    exact: &NormHandle,
    grid: GridConfig,
    rng: &mut impl Rng,
) -> Result<PairReport> {
    let start = Instant::now();
    let r = cdtw_approx(p, q, &norm.handle)?;
    let seconds = start.elapsed().as_secs_f64();
    let back = cdtw_approx(q, p, &norm.handle)?;
    let g = oracle::grid_cdtw(p, q, exact, grid)?;
    let w = oracle::path_cost_numeric(p, q, &r.witness, &norm.handle, NumericIntegrator::default())?;

    let mut max_jump: f64 = 0.0;
    let mut probes = 0;
    let mut excess = f64::NEG_INFINITY;
    for b in r.borders() {
        max_jump = max_jump.max(b.repaired_jump).max(b.apx.max_jump());
        let (lo, hi) = b.apx.domain();
        if hi - lo <= 0.0 {
            continue;
        }
        for _ in 0..TRAVEL_PAIRS {
            let (x, y) = (rng.gen_range(lo..=hi), rng.gen_range(lo..=hi));
            let (x, y) = (x.min(y), x.max(y));
            let d = b.apx.value(y) - b.apx.value(x) - r.border_travel_cost(b, x, y);
            excess = excess.max(d);
            probes += 1;
        }
    }
    Ok(PairReport {
        n: p.segment_count(),
        m: q.segment_count(),
        value: r.value,
        factor_bound: norm.factor_bound,
        grid_value: g.value,
        lower_hint: g.lower_hint,
        witness_cost: w,
        witness_rel_err: rel(w, r.value),
        witness_monotone: r.witness.is_monotone(1e-12),
        reverse_value: back.value,
        symmetry_rel_err: rel(r.value, back.value),
        max_rank: r.diagnostics.max_rank,
        max_jump,
        travel_probes: probes,
        travel_max_excess: if probes == 0 { 0.0 } else { excess },
        seconds,
    })
}

/// L1, L∞ and five random gauges, as used by the bend-swap sweep.
pub fn sweep_norms(rng: &mut impl Rng) -> Vec<NormHandle> {
    let mut v = vec![NormHandle::L1, NormHandle::Linf];
    for _ in 0..5 {
        let half = rng.gen_range(3..=8);
        v.push(random::random_gauge(rng, half).into());
    }
    v
}

fn bend_swap_json(rng: &mut random::Rng64, per_norm: usize) -> Result<(Value, bool)> {
    let norms = sweep_norms(rng);
    let integ = NumericIntegrator::default();
    let rep = oracle::bend_swap_sweep(rng, per_norm, &norms, integ, BEND_SWAP_TOL)?;
    let (p, q, x, y) = oracle::golden_ratio_fixture();
    let fixture = oracle::bend_swap_ratio(&p, &q, &NormHandle::L1, x, y, integ)?;
    let ok = rep.violations.is_empty() && fixture <= 5.0 + BEND_SWAP_TOL;
    Ok((
        json!({
            "norms": norms.len(),
            "count": rep.count,
            "skipped": rep.skipped,
            "min_ratio": rep.min_ratio,
            "max_ratio": rep.max_ratio.max(fixture),
            "random_max_ratio": rep.max_ratio,
            "fixture_ratio": fixture,
            "violations": rep.violations,
        }),
        ok,
    ))
}

fn cmd_check(a: &CheckArgs, err: &mut dyn Write) -> Result<(Value, i32)> {
    if a.n == 0 || a.m == 0 {
        return Err(CdtwError::Config("--n and --m must be positive".into()));
    }
    let spec = io::parse_norm_spec(&a.norm)?;
    let mut rng = random::rng(a.seed);
    if a.bend_swap {
        let (bend_swap, ok) = bend_swap_json(&mut rng, a.trials)?;
        let _ = writeln!(
            err,
            "bend swaps: {} cases, ratios in [{:.6}, {:.6}]",
            bend_swap["count"], bend_swap["min_ratio"], bend_swap["max_ratio"]
        );
        let code = if ok { 0 } else { EXIT_CHECK_FAILED };
        return Ok((json!({"seed": a.seed, "ok": ok, "bend_swap": bend_swap}), code));
    }

    let norm = io::resolve_norm(&spec, a.epsilon)?;
    let exact = io::exact_norm(&spec)?;
    let grid = GridConfig::new(a.grid)?;
    let mut failures = Vec::new();
    let mut worst = json!({
        "max_value_over_grid": 0.0,
        "min_value_minus_lower_hint": f64::INFINITY,
        "witness_rel_err": 0.0,
        "symmetry_rel_err": 0.0,
        "max_rank": 0,
        "max_jump": 0.0,
        "travel_max_excess": f64::NEG_INFINITY,
        "travel_probes": 0,
    });
    for trial in 0..a.trials {
        let p = random::random_curve(&mut rng, a.n, CURVE_SIDE);
        let q = random::random_curve(&mut rng, a.m, CURVE_SIDE);
        let r = check_pair(&p, &q, &norm, &exact, grid, &mut rng)?;
        let up = |key: &str, v: f64, max: bool, w: &mut Value| {
            let old = w[key].as_f64().unwrap_or(v);
            w[key] = json!(if max { old.max(v) } else { old.min(v) });
        };
        up("max_value_over_grid", r.value / r.grid_value.max(1e-300), true, &mut worst);
        up("min_value_minus_lower_hint", r.value - r.lower_hint, false, &mut worst);
        up("witness_rel_err", r.witness_rel_err, true, &mut worst);
        up("symmetry_rel_err", r.symmetry_rel_err, true, &mut worst);
        up("max_jump", r.max_jump, true, &mut worst);
        up("travel_max_excess", r.travel_max_excess, true, &mut worst);
        worst["max_rank"] = json!(worst["max_rank"].as_u64().unwrap_or(0).max(r.max_rank as u64));
        worst["travel_probes"] = json!(worst["travel_probes"].as_u64().unwrap_or(0) + r.travel_probes as u64);
        for f in r.failures() {
            let _ = writeln!(err, "trial {trial}: {f} violated");
            failures.push(json!({
                "property": f,
                "trial": trial,
                "p": io::curve_to_json(&p),
                "q": io::curve_to_json(&q),
                "report": serde_json::to_value(&r)?,
            }));
        }
    }
    let (bend_swap, bend_swap_ok) = bend_swap_json(&mut rng, 100)?;
    if !bend_swap_ok {
        failures.push(json!({"property": "bend_swap", "report": bend_swap.clone()}));
    }
    let ok = failures.is_empty();
    let _ = writeln!(
        err,
        "{} trials, {} violations",
        a.trials,
        failures.len()
    );
    Ok((
        json!({
            "seed": a.seed,
            "trials": a.trials,
            "n": a.n,
            "m": a.m,
            "norm": norm.to_json(),
            "factor_bound": norm.factor_bound,
            "ok": ok,
            "worst": worst,
            "bend_swap": bend_swap,
            "failures": failures,
        }),
        if ok { 0 } else { EXIT_CHECK_FAILED },
    ))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let k = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Fastest of `repeats` runs, with piece count and rank.
fn time_run(
    p: &PolygonalCurve,
    q: &PolygonalCurve,
    norm: &NormHandle,
    repeats: usize,
) -> Result<(f64, usize, usize)> {
    let mut best = f64::INFINITY;
    let mut stats = (0, 0);
    for _ in 0..repeats.max(1) {
        let t = Instant::now();
        let r = cdtw_approx(p, q, norm)?;
        best = best.min(t.elapsed().as_secs_f64());
        stats = (r.diagnostics.total_pieces, r.diagnostics.max_rank);
    }
    Ok((best, stats.0, stats.1))
}

/// Timings of the size ladder and the gauge vertex-count ladder.
#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub sizes: Vec<BenchRow>,
    pub time_slope: f64,
    pub piece_slope: f64,
    pub k_size: usize,
    pub k_ladder: Vec<BenchRow>,
    pub k_slope: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub k: usize,
    pub seconds: f64,
    pub total_pieces: usize,
    pub max_rank: usize,
}

/// Runs both ladders on random curves drawn from `seed`.
pub fn bench(
    norm: &NormHandle,
    sizes: &[usize],
    ks: &[usize],
    k_size: usize,
    repeats: usize,
    seed: u64,
) -> Result<BenchReport> {
    let mut rng = random::rng(seed);
    let k_norm = norm.to_gauge().map_or(0, |g| g.vertices().len());
    let mut rows = Vec::new();
    for &n in sizes {
        if n == 0 {
            return Err(CdtwError::Config("sizes must be positive".into()));
        }
        let p = random::random_curve(&mut rng, n, CURVE_SIDE);
        let q = random::random_curve(&mut rng, n, CURVE_SIDE);
        let (seconds, total_pieces, max_rank) = time_run(&p, &q, norm, repeats)?;
        rows.push(BenchRow { n, k: k_norm, seconds, total_pieces, max_rank });
    }
    let mut k_rows = Vec::new();
    if !ks.is_empty() {
        let p = random::random_curve(&mut rng, k_size.max(1), CURVE_SIDE);
        let q = random::random_curve(&mut rng, k_size.max(1), CURVE_SIDE);
        // Warm-up so the first rung is not charged for cold caches.
        time_run(&p, &q, &GaugePolygon::regular(ks[0])?.into(), 1)?;
        for &k in ks {
            let g: NormHandle = GaugePolygon::regular(k)?.into();
            let (seconds, total_pieces, max_rank) = time_run(&p, &q, &g, repeats)?;
            k_rows.push(BenchRow { n: k_size, k, seconds, total_pieces, max_rank });
        }
    }
    let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let k_xs: Vec<f64> = k_rows.iter().map(|r| r.k as f64).collect();
    Ok(BenchReport {
        time_slope: log_log_slope(&ns, &rows.iter().map(|r| r.seconds).collect::<Vec<_>>()),
        piece_slope: log_log_slope(&ns, &rows.iter().map(|r| r.total_pieces as f64).collect::<Vec<_>>()),
        k_slope: log_log_slope(&k_xs, &k_rows.iter().map(|r| r.seconds).collect::<Vec<_>>()),
        sizes: rows,
        k_size,
        k_ladder: k_rows,
    })
}

fn cmd_bench(a: &BenchArgs, err: &mut dyn Write) -> Result<(Value, i32)> {
    let spec = io::parse_norm_spec(&a.norm)?;
    let norm = io::resolve_norm(&spec, a.epsilon)?;
    let rep = bench(&norm.handle, &a.sizes, &a.ks, a.k_size, a.repeats, a.seed)?;
    let _ = writeln!(err, "{:>5} {:>5} {:>12} {:>8} {:>5}", "n", "k", "seconds", "pieces", "rank");
    for r in rep.sizes.iter().chain(&rep.k_ladder) {
        let _ = writeln!(
            err,
            "{:>5} {:>5} {:>12.6} {:>8} {:>5}",
            r.n, r.k, r.seconds, r.total_pieces, r.max_rank
        );
    }
    let _ = writeln!(
        err,
        "slopes: time vs n {:.3}, pieces vs n {:.3}, time vs k {:.3}",
        rep.time_slope, rep.piece_slope, rep.k_slope
    );
    let mut v = serde_json::to_value(&rep)?;
    v["norm"] = norm.to_json();
    Ok((v, 0))
}
