// SPDX-License-Identifier: Apache-2.0 OR MIT

//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any
//! criterion fails.

use std::time::{Duration, Instant};

use cdtw::cli::{bench, check_pair, sweep_norms, PairReport};
use cdtw::io::{resolve_norm, NormSpec};
use cdtw::norms::{approximate_norm, ApproxConfig, NormHandle};
use cdtw::oracle::{golden_ratio_fixture, bend_swap_ratio, bend_swap_sweep, path_cost_numeric, GridConfig, NumericIntegrator};
use cdtw::pwq::{PiecewiseQuadratic, Quad};
use cdtw::random::{random_curve, rng};
use cdtw::Point2;
use rand::Rng;

// Pinned tolerances and budgets.
const GOLDEN_VALUE: f64 = 4.2361;
const GOLDEN_TOL: f64 = 1e-4;
const GOLDEN_BUDGET: Duration = Duration::from_secs(1);

const BEND_SWAP_CASES: usize = 10_000;
const BEND_SWAP_TOL: f64 = 1e-6;
const BEND_SWAP_BUDGET: Duration = Duration::from_secs(30);

const SANDWICH_PAIRS: usize = 50;
const SANDWICH_MAX_SEGMENTS: usize = 6;
const SANDWICH_GRID: usize = 128;
const SANDWICH_SLACK: f64 = 1e-3;
const SANDWICH_BUDGET: Duration = Duration::from_secs(120);

const WITNESS_TOL: f64 = 1e-5;

const NORM_EPSILONS: [f64; 3] = [1.0, 0.1, 0.01];
const NORM_DIRECTIONS: usize = 10_000;
const NORM_FLOAT_TOL: f64 = 1e-12;

const ENVELOPE_INSTANCES: usize = 200;
const ENVELOPE_MAX_PIECES: usize = 50;
const ENVELOPE_SAMPLES: usize = 1000;
const ENVELOPE_TOL: f64 = 1e-9;
const MINIMA_SAMPLES: usize = 4000;

const CONTINUITY_TOL: f64 = 1e-7;
const TRAVEL_TOL: f64 = 1e-6;
const TRAVEL_PAIRS: usize = 100;

const SYMMETRY_TOL: f64 = 1e-7;

const LADDER: [usize; 4] = [5, 10, 20, 40];
const LADDER_N20_BUDGET: f64 = 5.0;
const K_LADDER: [usize; 4] = [4, 8, 16, 32];
const K_LADDER_SIZE: usize = 20;
const K_SLOPE_RANGE: (f64, f64) = (0.5, 1.5);
const BENCH_REPEATS: usize = 7;

const SEED: u64 = 20_240_601;

struct Outcome {
    failed: usize,
}

impl Outcome {
    fn report(&mut self, name: &str, pass: bool, detail: String, elapsed: Duration) {
        if !pass {
            self.failed += 1;
        }
        println!(
            "{} {name}: {detail} [{:.3}s]",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
}

fn golden_ratio(out: &mut Outcome) {
    let t = Instant::now();
    let (p, q, x, y) = golden_ratio_fixture();
    let r = bend_swap_ratio(&p, &q, &NormHandle::L1, x, y, NumericIntegrator::default()).unwrap();
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let el = t.elapsed();
    out.report(
        "golden_ratio_fixture",
        (r - GOLDEN_VALUE).abs() <= GOLDEN_TOL && (r - (2.0 * phi + 1.0)).abs() <= GOLDEN_TOL && el < GOLDEN_BUDGET,
        format!("ratio {r:.6}, 2φ+1 = {:.6}, tol {GOLDEN_TOL:e}, budget {GOLDEN_BUDGET:?}", 2.0 * phi + 1.0),
        el,
    );
}

fn bend_swap(out: &mut Outcome) {
    let t = Instant::now();
    let mut r = rng(SEED);
    let norms = sweep_norms(&mut r);
    let rep = bend_swap_sweep(&mut r, BEND_SWAP_CASES, &norms, NumericIntegrator::default(), BEND_SWAP_TOL).unwrap();
    let el = t.elapsed();
    let pass = rep.violations.is_empty()
        && rep.count >= BEND_SWAP_CASES * norms.len() * 99 / 100
        && rep.min_ratio >= 0.2 - BEND_SWAP_TOL
        && rep.max_ratio <= 5.0 + BEND_SWAP_TOL
        && el < BEND_SWAP_BUDGET;
    out.report(
        "bend_swap_sweep",
        pass,
        format!(
            "{} cases over {} norms ({} skipped), ratios in [{:.4}, {:.4}], {} violations, budget {BEND_SWAP_BUDGET:?}",
            rep.count,
            norms.len(),
            rep.skipped,
            rep.min_ratio,
            rep.max_ratio,
            rep.violations.len()
        ),
        el,
    );
}

/// The sandwich suite; its reports feed several criteria.
fn sandwich(out: &mut Outcome) -> Vec<PairReport> {
    let t = Instant::now();
    let mut r = rng(SEED + 1);
    let norm = resolve_norm(&NormSpec::L1, None).unwrap();
    let grid = GridConfig::new(SANDWICH_GRID).unwrap();
    let mut reports = Vec::new();
    for _ in 0..SANDWICH_PAIRS {
        let n = r.gen_range(1..=SANDWICH_MAX_SEGMENTS);
        let m = r.gen_range(1..=SANDWICH_MAX_SEGMENTS);
        let p = random_curve(&mut r, n, 10.0);
        let q = random_curve(&mut r, m, 10.0);
        reports.push(check_pair(&p, &q, &norm, &NormHandle::L1, grid, &mut r).unwrap());
    }
    let el = t.elapsed();
    let bad = reports
        .iter()
        .filter(|x| !(x.value >= x.lower_hint - SANDWICH_SLACK && x.value <= 5.0 * (x.grid_value + SANDWICH_SLACK)))
        .count();
    let worst = reports.iter().map(|x| x.value / x.grid_value.max(1e-300)).fold(0.0, f64::max);
    let margin = reports.iter().map(|x| x.value - x.lower_hint).fold(f64::INFINITY, f64::min);
    out.report(
        "factor_sandwich",
        bad == 0 && el < SANDWICH_BUDGET,
        format!(
            "{SANDWICH_PAIRS} L1 pairs, n,m <= {SANDWICH_MAX_SEGMENTS}, g = {SANDWICH_GRID}: {bad} outside, \
             max value/grid {worst:.4}, min value - lower_hint {margin:.4}, budget {SANDWICH_BUDGET:?}"
        ),
        el,
    );
    reports
}

fn witness(out: &mut Outcome, reports: &[PairReport]) {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut monotone = true;
    for r in reports {
        worst = worst.max(r.witness_rel_err);
        monotone &= r.witness_monotone;
    }
    // Larger runs under other norms.
    let mut g = rng(SEED + 4);
    let mut extra = 0;
    for norm in sweep_norms(&mut g).into_iter().take(3) {
        let p = random_curve(&mut g, 20, 10.0);
        let q = random_curve(&mut g, 15, 10.0);
        let a = cdtw::cdtw_approx(&p, &q, &norm).unwrap();
        let w = path_cost_numeric(&p, &q, &a.witness, &norm, NumericIntegrator::default()).unwrap();
        worst = worst.max((a.value - w).abs() / a.value.abs().max(1.0));
        monotone &= a.witness.is_monotone(0.0);
        extra += 1;
    }
    out.report(
        "witness_realizability",
        worst <= WITNESS_TOL && monotone,
        format!(
            "{} values, max relative gap {worst:.3e} (tol {WITNESS_TOL:e}), monotone {monotone}",
            reports.len() + extra
        ),
        t.elapsed(),
    );
}

fn norm_approx(out: &mut Outcome) {
    let t = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for eps in NORM_EPSILONS {
        let k = approximate_norm(&NormHandle::L2, ApproxConfig::new(eps).unwrap()).unwrap();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for d in 0..NORM_DIRECTIONS {
            let a = std::f64::consts::TAU * (d as f64 + 0.5) / NORM_DIRECTIONS as f64;
            let g = k.eval(Point2::new(a.cos(), a.sin()));
            lo = lo.min(g);
            hi = hi.max(g);
        }
        let cap = 8.0 / eps.sqrt() + 8.0;
        let count = k.vertices().len();
        pass &= lo >= 1.0 - NORM_FLOAT_TOL && hi <= 1.0 + eps + NORM_FLOAT_TOL && count as f64 <= cap;
        parts.push(format!("ε={eps}: {count} vertices (cap {cap:.1}), G in [{lo:.6}, {hi:.6}]"));
    }
    out.report("norm_approximation", pass, parts.join("; "), t.elapsed());
}

/// Random pieces on `[0, 10]`; with `continuous` each piece starts where
/// the previous one ended.
fn random_pwq(r: &mut impl Rng, max_pieces: usize, continuous: bool) -> PiecewiseQuadratic {
    let k = r.gen_range(1..=max_pieces);
    let mut cuts: Vec<f64> = (0..k - 1).map(|_| r.gen_range(0.01..9.99)).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
    let mut br = vec![0.0];
    br.extend(cuts);
    br.push(10.0);
    let mut quads: Vec<Quad> = Vec::new();
    for &x in &br[..br.len() - 1] {
        let mut q = Quad {
            a: r.gen_range(-2.0..2.0),
            b: r.gen_range(-5.0..5.0),
            c: r.gen_range(-10.0..10.0),
        };
        if let (true, Some(prev)) = (continuous, quads.last()) {
            q.c += prev.eval(x) - q.eval(x);
        }
        quads.push(q);
    }
    PiecewiseQuadratic::new(br, quads).unwrap()
}

fn envelope(out: &mut Outcome) {
    let t = Instant::now();
    let mut r = rng(SEED + 2);
    let mut worst: f64 = 0.0;
    let mut minima_ok = true;
    for _ in 0..ENVELOPE_INSTANCES {
        let f = random_pwq(&mut r, ENVELOPE_MAX_PIECES, false);
        let g = random_pwq(&mut r, ENVELOPE_MAX_PIECES, false);
        let e = PiecewiseQuadratic::lower_envelope(&f, &g).unwrap();
        for k in 0..ENVELOPE_SAMPLES {
            let t = 10.0 * (k as f64 + 0.5) / ENVELOPE_SAMPLES as f64;
            let want = f.value(t).min(g.value(t));
            worst = worst.max((e.value(t) - want).abs() / want.abs().max(1.0));
        }

        // Minima of a continuous envelope against a dense sample: no sample
        // beats the global minimum, every sampled dip sits next to a
        // reported minimum, and every reported minimum is a local one.
        let f = random_pwq(&mut r, ENVELOPE_MAX_PIECES, true);
        let g = random_pwq(&mut r, ENVELOPE_MAX_PIECES, true);
        let e = PiecewiseQuadratic::lower_envelope(&f, &g).unwrap();
        let mins = e.semistrict_local_minima().points;
        let (_, gv) = e.global_min();
        let ts: Vec<f64> = (0..=MINIMA_SAMPLES).map(|k| 10.0 * k as f64 / MINIMA_SAMPLES as f64).collect();
        let vs: Vec<f64> = ts.iter().map(|&t| e.value(t)).collect();
        let h = 10.0 / MINIMA_SAMPLES as f64;
        let tol = |v: f64| ENVELOPE_TOL * v.abs().max(1.0);
        minima_ok &= vs.iter().all(|&v| gv <= v + tol(v));
        minima_ok &= mins.iter().any(|m| (m.1 - gv).abs() <= tol(gv));
        for k in 1..ts.len() - 1 {
            if vs[k] < vs[k - 1] - tol(vs[k]) && vs[k] < vs[k + 1] - tol(vs[k]) {
                minima_ok &= mins.iter().any(|m| (m.0 - ts[k]).abs() <= 2.0 * h);
            }
        }
        for &(t, v) in &mins {
            for s in [t - 1e-6, t + 1e-6] {
                if (0.0..=10.0).contains(&s) {
                    minima_ok &= e.value(s) >= v - 1e-6 * v.abs().max(1.0);
                }
            }
        }
    }
    out.report(
        "envelope_oracle",
        worst <= ENVELOPE_TOL && minima_ok,
        format!(
            "{ENVELOPE_INSTANCES} instances, <= {ENVELOPE_MAX_PIECES} pieces, {ENVELOPE_SAMPLES} samples: \
             max relative gap {worst:.3e} (tol {ENVELOPE_TOL:e}), minima agree {minima_ok}"
        ),
        t.elapsed(),
    );
}

fn border_invariants(out: &mut Outcome, reports: &[PairReport]) {
    let jump = reports.iter().map(|r| r.max_jump).fold(0.0, f64::max);
    let excess = reports.iter().map(|r| r.travel_max_excess).fold(f64::NEG_INFINITY, f64::max);
    let probes: usize = reports.iter().map(|r| r.travel_probes).sum();
    // The harness must sample as many pairs as pinned here.
    let per_border_ok = cdtw::cli::TRAVEL_PAIRS == TRAVEL_PAIRS;
    out.report(
        "border_invariants",
        jump < CONTINUITY_TOL && excess <= TRAVEL_TOL && per_border_ok,
        format!(
            "max breakpoint jump {jump:.3e} (tol {CONTINUITY_TOL:e}); {probes} travel probes \
             ({TRAVEL_PAIRS} per border), max excess {excess:.3e} (tol {TRAVEL_TOL:e})"
        ),
        Duration::ZERO,
    );
}

fn symmetry(out: &mut Outcome, reports: &[PairReport]) {
    let worst = reports.iter().map(|r| r.symmetry_rel_err).fold(0.0, f64::max);
    out.report(
        "symmetry",
        worst <= SYMMETRY_TOL,
        format!("max relative gap {worst:.3e} over {} pairs (tol {SYMMETRY_TOL:e})", reports.len()),
        Duration::ZERO,
    );
}

/// Returns `(rank, bound)` for every timed run.
fn scaling(out: &mut Outcome) -> Vec<(usize, usize)> {
    let t = Instant::now();
    let rep = bench(&NormHandle::L1, &LADDER, &K_LADDER, K_LADDER_SIZE, BENCH_REPEATS, SEED + 3).unwrap();
    let n20 = rep.sizes.iter().find(|r| r.n == 20).map_or(f64::INFINITY, |r| r.seconds);
    let pass = rep.sizes.len() == LADDER.len()
        && n20 < LADDER_N20_BUDGET
        && rep.k_slope >= K_SLOPE_RANGE.0
        && rep.k_slope <= K_SLOPE_RANGE.1;
    let ladder: Vec<String> = rep.sizes.iter().map(|r| format!("n={} {:.4}s", r.n, r.seconds)).collect();
    let kl: Vec<String> = rep.k_ladder.iter().map(|r| format!("k={} {:.4}s", r.k, r.seconds)).collect();
    out.report(
        "scaling",
        pass,
        format!(
            "L1 ladder [{}] (n=20 budget {LADDER_N20_BUDGET}s), time slope {:.2}, piece slope {:.2}; \
             k ladder at n={K_LADDER_SIZE} [{}], slope {:.3} in [{}, {}]",
            ladder.join(", "),
            rep.time_slope,
            rep.piece_slope,
            kl.join(", "),
            rep.k_slope,
            K_SLOPE_RANGE.0,
            K_SLOPE_RANGE.1
        ),
        t.elapsed(),
    );
    rep.sizes.iter().chain(&rep.k_ladder).map(|r| (r.max_rank, r.n)).collect()
}

fn ranks(out: &mut Outcome, reports: &[PairReport], ladder: &[(usize, usize)]) {
    let mut runs = 0;
    let mut over = 0;
    let mut worst = (0, 0);
    for (rank, bound) in reports.iter().map(|r| (r.max_rank, r.n.max(r.m))).chain(ladder.iter().copied()) {
        runs += 1;
        if rank > bound {
            over += 1;
        }
        if rank * worst.1.max(1) > worst.0 * bound.max(1) {
            worst = (rank, bound);
        }
    }
    out.report(
        "rank_bound",
        over == 0,
        format!("{runs} runs, {over} over max(n, m); highest rank/bound {}/{}", worst.0, worst.1),
        Duration::ZERO,
    );
}

fn main() {
    let mut out = Outcome { failed: 0 };
    golden_ratio(&mut out);
    bend_swap(&mut out);
    let reports = sandwich(&mut out);
    witness(&mut out, &reports);
    norm_approx(&mut out);
    envelope(&mut out);
    border_invariants(&mut out, &reports);
    symmetry(&mut out, &reports);
    let ladder_ranks = scaling(&mut out);
    ranks(&mut out, &reports, &ladder_ranks);
    println!("{} criteria failed", out.failed);
    if out.failed > 0 {
        std::process::exit(1);
    }
}
