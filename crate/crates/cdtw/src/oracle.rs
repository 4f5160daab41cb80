// SPDX-License-Identifier: Apache-2.0 OR MIT

//! Reference computations that share no code with the cell machinery:
//! quadrature of path costs, a grid dynamic program, and the harness for
//! comparing the two single-bend paths through a box.

use rand::Rng;
use serde::Serialize;

use crate::error::{CdtwError, Result};
use crate::geometry::{build_arc_table, point_at_unchecked, ArcTable, Point2, PolygonalCurve};
use crate::norms::NormHandle;
use crate::cell::MonotonePath;

/// Default memory budget for [`grid_cdtw`], in MiB.
pub const DEFAULT_MEM_LIMIT_MB: u64 = 1024;
/// Bytes charged per grid node by the memory guard.
const BYTES_PER_NODE: u64 = 16;

/// Composite trapezoid rule.
///
/// Path segments are first cut where either curve passes a vertex and,
/// for polygonal norms, where the difference vector changes cone; between
/// cuts the integrand is linear under a polygonal norm, so the rule is exact
/// up to rounding there.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NumericIntegrator {
    pub steps: usize,
}

impl NumericIntegrator {
    pub fn new(steps: usize) -> Result<Self> {
        if steps < 16 {
            return Err(CdtwError::Config(format!("steps must be >= 16, got {steps}")));
        }
        Ok(NumericIntegrator { steps })
    }
}

impl Default for NumericIntegrator {
    fn default() -> Self {
        NumericIntegrator { steps: 64 }
    }
}

/// An integral with a Richardson error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NumericCost {
    pub value: f64,
    pub error_estimate: f64,
}

struct Curves<'a> {
    p: &'a PolygonalCurve,
    q: &'a PolygonalCurve,
    tp: ArcTable,
    tq: ArcTable,
    norm: &'a NormHandle,
    rays: Vec<Point2>,
}

impl<'a> Curves<'a> {
    fn new(p: &'a PolygonalCurve, q: &'a PolygonalCurve, norm: &'a NormHandle) -> Self {
        let rays = norm
            .to_gauge()
            .map(|g| g.vertices().to_vec())
            .unwrap_or_default();
        Curves {
            p,
            q,
            tp: build_arc_table(p, norm),
            tq: build_arc_table(q, norm),
            norm,
            rays,
        }
    }

    fn diff(&self, s: f64, t: f64) -> Point2 {
        point_at_unchecked(self.p, &self.tp, s) - point_at_unchecked(self.q, &self.tq, t)
    }

    /// Trapezoid sums with `n` and `n / 2` panels over a segment.
    fn segment(&self, a: Point2, b: Point2, n: usize) -> (f64, f64) {
        let len = (b.x - a.x) + (b.y - a.y);
        if len <= 0.0 {
            return (0.0, 0.0);
        }
        let mut cuts = vec![0.0, 1.0];
        for (tab, lo, hi) in [(&self.tp, a.x, b.x), (&self.tq, a.y, b.y)] {
            if hi > lo {
                for &v in tab.prefix_lengths() {
                    let r = (v - lo) / (hi - lo);
                    if r > 0.0 && r < 1.0 {
                        cuts.push(r);
                    }
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        let mut fine = vec![0.0];
        for w in cuts.windows(2) {
            let (r0, r1) = (w[0], w[1]);
            if r1 <= r0 {
                continue;
            }
            // Between curve vertices the difference vector is affine in r.
            let at = |r: f64| self.diff(a.x + r * (b.x - a.x), a.y + r * (b.y - a.y));
            let z0 = at(r0);
            let dz = (at(r1) - z0) * (1.0 / (r1 - r0));
            for k in &self.rays {
                let den = k.cross(dz);
                if den != 0.0 {
                    let r = r0 - k.cross(z0) / den;
                    if r > r0 && r < r1 {
                        fine.push(r);
                    }
                }
            }
            fine.push(r1);
        }
        fine.sort_by(f64::total_cmp);
        let f = |r: f64| self.norm.eval(self.diff(a.x + r * (b.x - a.x), a.y + r * (b.y - a.y)));
        let (mut ih, mut i2h) = (0.0, 0.0);
        for w in fine.windows(2) {
            let (r0, r1) = (w[0], w[1]);
            let h = (r1 - r0) / n as f64;
            let vals: Vec<f64> = (0..=n).map(|k| f(r0 + k as f64 * h)).collect();
            let sum = |step: usize| -> f64 {
                let mut acc = 0.5 * (vals[0] + vals[n]);
                let mut k = step;
                while k < n {
                    acc += vals[k];
                    k += step;
                }
                acc * h * step as f64
            };
            ih += sum(1);
            i2h += sum(2);
        }
        (ih * len, i2h * len)
    }
}

fn check_path(c: &Curves<'_>, path: &MonotonePath) -> Result<()> {
    let tol = 1e-9 * c.tp.total().max(c.tq.total()).max(1.0);
    if !path.is_monotone(tol) {
        return Err(CdtwError::Precondition("path is not monotone".into()));
    }
    for w in &path.waypoints {
        if w.x < -tol || w.y < -tol || w.x > c.tp.total() + tol || w.y > c.tq.total() + tol {
            return Err(CdtwError::Precondition(format!(
                "waypoint {w:?} outside the parameter space"
            )));
        }
    }
    Ok(())
}

/// Numeric cost of a monotone path in the parameter space of `P` and `Q`.
pub fn path_cost_numeric(
    p: &PolygonalCurve,
    q: &PolygonalCurve,
    path: &MonotonePath,
    norm: &NormHandle,
    integ: NumericIntegrator,
) -> Result<f64> {
    Ok(path_cost_with_error(p, q, path, norm, integ)?.value)
}

pub fn path_cost_with_error(
    p: &PolygonalCurve,
    q: &PolygonalCurve,
    path: &MonotonePath,
    norm: &NormHandle,
    integ: NumericIntegrator,
) -> Result<NumericCost> {
    NumericIntegrator::new(integ.steps)?;
    let c = Curves::new(p, q, norm);
    check_path(&c, path)?;
    let n = integ.steps + integ.steps % 2;
    let (mut ih, mut i2h) = (0.0, 0.0);
    for w in path.waypoints.windows(2) {
        let a = Point2::new(w[0].x.max(0.0), w[0].y.max(0.0));
        let b = Point2::new(w[1].x.min(c.tp.total()).max(a.x), w[1].y.min(c.tq.total()).max(a.y));
        let (x, y) = c.segment(a, b, n);
        ih += x;
        i2h += y;
    }
    Ok(NumericCost {
        value: ih,
        error_estimate: (ih - i2h).abs() / 3.0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridConfig {
    pub g: usize,
}

impl GridConfig {
    pub fn new(g: usize) -> Result<Self> {
        if g < 2 {
            return Err(CdtwError::Config(format!("grid subdivision must be >= 2, got {g}")));
        }
        Ok(GridConfig { g })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridResult {
    pub value: f64,
    /// `value` minus the worst-case discretisation error, a heuristic
    /// lower bound on the true distance.
    pub lower_hint: f64,
    pub nodes: u64,
}

/// The grid memory cap: `CDTW_MEM_LIMIT_MB`, or 1024.
pub fn mem_limit_mb() -> u64 {
    std::env::var("CDTW_MEM_LIMIT_MB")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MEM_LIMIT_MB)
}

fn subdivide(curve: &PolygonalCurve, table: &ArcTable, g: usize) -> (Vec<f64>, Vec<Point2>, f64) {
    let n = curve.segment_count();
    let mut params = Vec::with_capacity(n * g + 1);
    let mut points = Vec::with_capacity(n * g + 1);
    let mut mesh: f64 = 0.0;
    for i in 0..n {
        let (s0, s1) = table.segment_range(i);
        let (a, b) = curve.segment(i);
        mesh = mesh.max((s1 - s0) / g as f64);
        for k in 0..g {
            let r = k as f64 / g as f64;
            params.push(s0 + r * (s1 - s0));
            points.push(a.lerp(b, r));
        }
    }
    params.push(table.total());
    points.push(*curve.vertices().last().unwrap());
    (params, points, mesh)
}

/// Cheapest monotone path through a grid that splits every segment into
/// `g` pieces. Memory is capped by `CDTW_MEM_LIMIT_MB`.
///
/// Moves are `(1, 0)`, `(0, 1)`, `(1, 1)`, `(1, 2)` and `(2, 1)` and never
/// cross a curve vertex, so each edge's trapezoid overestimates its
/// integral and `value` bounds the distance from above.
pub fn grid_cdtw(
    p: &PolygonalCurve,
    q: &PolygonalCurve,
    norm: &NormHandle,
    cfg: GridConfig,
) -> Result<GridResult> {
    grid_cdtw_with_limit(p, q, norm, cfg, mem_limit_mb())
}

/// [`grid_cdtw`] with an explicit memory cap in megabytes.
pub fn grid_cdtw_with_limit(
    p: &PolygonalCurve,
    q: &PolygonalCurve,
    norm: &NormHandle,
    cfg: GridConfig,
    limit_mb: u64,
) -> Result<GridResult> {
    GridConfig::new(cfg.g)?;
    let tp = build_arc_table(p, norm);
    let tq = build_arc_table(q, norm);
    let rows = (p.segment_count() * cfg.g + 1) as u64;
    let cols = (q.segment_count() * cfg.g + 1) as u64;
    let nodes = rows * cols;
    if nodes.saturating_mul(BYTES_PER_NODE) > limit_mb.saturating_mul(1 << 20) {
        return Err(CdtwError::MemoryLimit { nodes, limit_mb });
    }
    let (sv, sp, mesh_p) = subdivide(p, &tp, cfg.g);
    let (tv, tpts, mesh_q) = subdivide(q, &tq, cfg.g);
    let cols = tv.len();
    const MOVES: [(usize, usize); 5] = [(1, 0), (0, 1), (1, 1), (1, 2), (2, 1)];

    // Rolling rows: index 0 is the current row, 1 and 2 the previous ones.
    let mut dist = vec![vec![0.0; cols]; 3];
    let mut dp = vec![vec![f64::INFINITY; cols]; 3];
    for (a, &pa) in sp.iter().enumerate() {
        dist.rotate_right(1);
        dp.rotate_right(1);
        for b in 0..cols {
            dist[0][b] = norm.eval(pa - tpts[b]);
        }
        for b in 0..cols {
            if a == 0 && b == 0 {
                dp[0][0] = 0.0;
                continue;
            }
            let mut best = f64::INFINITY;
            for &(da, db) in &MOVES {
                if da > a || db > b {
                    continue;
                }
                // Stay inside one cell, where the trapezoid bounds the
                // convex integrand from above.
                if (da == 2 && (a - 1) % cfg.g == 0) || (db == 2 && (b - 1) % cfg.g == 0) {
                    continue;
                }
                let prev = dp[da][b - db];
                if !prev.is_finite() {
                    continue;
                }
                let len = (sv[a] - sv[a - da]) + (tv[b] - tv[b - db]);
                let cost = prev + 0.5 * (dist[da][b - db] + dist[0][b]) * len;
                best = best.min(cost);
            }
            dp[0][b] = best;
        }
    }
    let value = dp[0][cols - 1];
    let mesh = mesh_p.max(mesh_q);
    Ok(GridResult {
        value,
        lower_hint: value - 2.0 * mesh * (tp.total() + tq.total()),
        nodes,
    })
}

/// Alias of [`bend_swap_ratio`].
pub use self::bend_swap_ratio as lemma1_ratio;

/// `cost(γ_xy) / cost(γ_yx)`, where `γ_xy` bends at `(x.x, y.y)` and `γ_yx`
/// at `(y.x, x.y)`.
pub fn bend_swap_ratio(
    p: &PolygonalCurve,
    q: &PolygonalCurve,
    norm: &NormHandle,
    x: Point2,
    y: Point2,
    integ: NumericIntegrator,
) -> Result<f64> {
    if !x.precedes(y, 0.0) {
        return Err(CdtwError::Precondition(format!("{y:?} does not dominate {x:?}")));
    }
    let xy = MonotonePath::new(vec![x, Point2::new(x.x, y.y), y]);
    let yx = MonotonePath::new(vec![x, Point2::new(y.x, x.y), y]);
    let a = path_cost_numeric(p, q, &xy, norm, integ)?;
    let b = path_cost_numeric(p, q, &yx, norm, integ)?;
    if b <= 0.0 {
        return Err(CdtwError::Numeric(format!(
            "undefined ratio: costs {a} and {b}"
        )));
    }
    Ok(a / b)
}

/// The golden-ratio configuration on which the two bends differ by
/// `2φ + 1`: both segments lie on the x-axis, `P` from 0 to `φ + 1` and `Q`
/// from `φ` to `2φ + 1`.
pub fn golden_ratio_fixture() -> (PolygonalCurve, PolygonalCurve, Point2, Point2) {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let p = PolygonalCurve::from_xy(&[(0.0, 0.0), (phi + 1.0, 0.0)]).unwrap();
    let q = PolygonalCurve::from_xy(&[(phi, 0.0), (2.0 * phi + 1.0, 0.0)]).unwrap();
    (p, q, Point2::ORIGIN, Point2::new(phi + 1.0, phi + 1.0))
}

/// A random single-segment instance and a random ordered point pair.
#[derive(Clone, Debug, Serialize)]
pub struct BendSwapCase {
    pub p: [[f64; 2]; 2],
    pub q: [[f64; 2]; 2],
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub count: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub violations: Vec<BendSwapCase>,
    pub skipped: usize,
}

/// Runs `trials` random cases per norm and collects ratios outside
/// `[1/5 - tol, 5 + tol]`.
pub fn bend_swap_sweep(
    rng: &mut impl Rng,
    trials: usize,
    norms: &[NormHandle],
    integ: NumericIntegrator,
    tol: f64,
) -> Result<SweepReport> {
    let mut rep = SweepReport {
        count: 0,
        min_ratio: f64::INFINITY,
        max_ratio: 0.0,
        violations: Vec::new(),
        skipped: 0,
    };
    for norm in norms {
        for _ in 0..trials {
            let mut pt = || Point2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let (pa, pb, qa, qb) = (pt(), pt(), pt(), pt());
            let (Ok(p), Ok(q)) = (
                PolygonalCurve::new(vec![pa, pb]),
                PolygonalCurve::new(vec![qa, qb]),
            ) else {
                rep.skipped += 1;
                continue;
            };
            let lp = norm.eval(pb - pa);
            let lq = norm.eval(qb - qa);
            let (mut s, mut t) = ([rng.gen_range(0.0..lp), rng.gen_range(0.0..lp)], [rng.gen_range(0.0..lq), rng.gen_range(0.0..lq)]);
            s.sort_by(f64::total_cmp);
            t.sort_by(f64::total_cmp);
            let x = Point2::new(s[0], t[0]);
            let y = Point2::new(s[1], t[1]);
            let ratio = match bend_swap_ratio(&p, &q, norm, x, y, integ) {
                Ok(r) => r,
                Err(_) => {
                    rep.skipped += 1;
                    continue;
                }
            };
            rep.count += 1;
            rep.min_ratio = rep.min_ratio.min(ratio);
            rep.max_ratio = rep.max_ratio.max(ratio);
            if !(ratio >= 0.2 - tol && ratio <= 5.0 + tol) {
                rep.violations.push(BendSwapCase {
                    p: [[pa.x, pa.y], [pb.x, pb.y]],
                    q: [[qa.x, qa.y], [qb.x, qb.y]],
                    x: [x.x, x.y],
                    y: [y.x, y.y],
                    ratio,
                });
            }
        }
    }
    Ok(rep)
}
