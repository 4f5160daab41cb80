// SPDX-License-Identifier: Apache-2.0 OR MIT

//! One cell of the parameter space: the rectangle of parameter pairs
//! `(s, t)` where `s` runs over a segment of `P` and `t` over a segment of
//! `Q`.
//!
//! Inside a cell, `P(s) - Q(t)` is affine, so the distance terrain
//! `d(s, t) = G(P(s) - Q(t))` is a convex piecewise-linear function. It has
//! one of two shapes:
//!
//! - when the segments are not parallel, `d` is positively homogeneous
//!   around the apex where `P(s) = Q(t)` (possibly outside the cell), so its
//!   restriction to any axis-parallel line is a rescaled copy of one of four
//!   fixed profiles;
//! - when they are parallel, `d` only depends on `s - t` or `s + t`.
//!
//! Either way there is a line of positive slope (the valley) along which the
//! terrain is minimal on every anti-diagonal, and an optimal path between two
//! points moves straight to the valley, follows it, and leaves it straight.
//! All segment integrals below are exact for the polygonal norm.

use std::sync::Arc;

use crate::error::{CdtwError, Result};
use crate::geometry::Point2;
use crate::norms::GaugePolygon;
use crate::pwq::{Label, PiecewiseQuadratic};

/// Cells with `|u × v| <= PARALLEL_TOL · |u| |v|` use the parallel model.
pub const PARALLEL_TOL: f64 = 1e-7;

/// Relative tolerance of point-on-line and point-order checks.
pub const GEOM_TOL: f64 = 1e-9;

/// One of the four sides of a cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    N,
    E,
    S,
    W,
}

impl Side {
    /// The parallel side.
    pub fn opp(self) -> Side {
        match self {
            Side::N => Side::S,
            Side::S => Side::N,
            Side::E => Side::W,
            Side::W => Side::E,
        }
    }

    /// The input or output side sharing a corner with this one across the
    /// cell's NW–SE diagonal: `N.adj = W`, `E.adj = S`.
    pub fn adj(self) -> Side {
        match self {
            Side::N => Side::W,
            Side::W => Side::N,
            Side::E => Side::S,
            Side::S => Side::E,
        }
    }

    pub fn is_horizontal(self) -> bool {
        matches!(self, Side::N | Side::S)
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::N => "N",
            Side::E => "E",
            Side::S => "S",
            Side::W => "W",
        }
    }
}

/// A side of a specific cell with its parameter interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BorderRef {
    pub side: Side,
    pub lo: f64,
    pub hi: f64,
    /// The fixed coordinate: `t` for N and S, `s` for E and W.
    pub at: f64,
}

impl BorderRef {
    /// Parameter-space point at border parameter `λ`.
    pub fn point(&self, lambda: f64) -> Point2 {
        if self.side.is_horizontal() {
            Point2::new(lambda, self.at)
        } else {
            Point2::new(self.at, lambda)
        }
    }

    /// Border parameter of a point.
    pub fn param(&self, p: Point2) -> f64 {
        if self.side.is_horizontal() {
            p.x
        } else {
            p.y
        }
    }
}

/// A monotone polyline in parameter space.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MonotonePath {
    pub waypoints: Vec<Point2>,
}

impl MonotonePath {
    pub fn new(waypoints: Vec<Point2>) -> Self {
        MonotonePath { waypoints }
    }

    pub fn is_monotone(&self, tol: f64) -> bool {
        self.waypoints.windows(2).all(|w| w[0].precedes(w[1], tol))
    }

    /// Sum of 1-norm segment lengths.
    pub fn l1_length(&self) -> f64 {
        self.waypoints
            .windows(2)
            .map(|w| (w[1].x - w[0].x).abs() + (w[1].y - w[0].y).abs())
            .sum()
    }

    /// Swaps the roles of the two curves.
    pub fn transposed(&self) -> MonotonePath {
        MonotonePath::new(
            self.waypoints
                .iter()
                .map(|p| Point2::new(p.y, p.x))
                .collect(),
        )
    }

    /// Appends `p` unless it repeats the last waypoint.
    pub fn push(&mut self, p: Point2) {
        if self.waypoints.last() != Some(&p) {
            self.waypoints.push(p);
        }
    }
}

/// The valley line through `point` with direction `dir`.
///
/// Both components of `dir` are positive and sum to 1, so a step along the
/// valley has 1-norm length equal to its change in the line parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Valley {
    pub point: Point2,
    pub dir: Point2,
    /// Set when a direction component had to be clamped away from zero.
    pub degenerate: bool,
}

impl Valley {
    pub fn slope(&self) -> f64 {
        self.dir.y / self.dir.x
    }

    pub fn intercept(&self) -> f64 {
        self.point.y - self.slope() * self.point.x
    }

    /// `t` on the valley above parameter `s`.
    pub fn t_at(&self, s: f64) -> f64 {
        self.point.y + (s - self.point.x) * self.dir.y / self.dir.x
    }

    /// `s` on the valley at parameter `t`.
    pub fn s_at(&self, t: f64) -> f64 {
        self.point.x + (t - self.point.y) * self.dir.x / self.dir.y
    }

    /// Positive above the valley, negative below.
    pub fn side(&self, p: Point2) -> f64 {
        self.dir.x * (p.y - self.point.y) - self.dir.y * (p.x - self.point.x)
    }
}

/// A convex piecewise-linear function of one variable with exact integrals.
#[derive(Clone, Debug)]
struct Profile {
    xs: Vec<f64>,
    ys: Vec<f64>,
    left_slope: f64,
    right_slope: f64,
    /// `prefix[i]` is the integral from `xs[0]` to `xs[i]`.
    prefix: Vec<f64>,
}

impl Profile {
    fn new(mut xs: Vec<f64>, f: impl Fn(f64) -> f64) -> Profile {
        xs.retain(|x| x.is_finite());
        xs.sort_by(f64::total_cmp);
        xs.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * (1.0 + b.abs()));
        assert!(!xs.is_empty(), "profile without breakpoints");
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let first = xs[0];
        let last = *xs.last().unwrap();
        let left_slope = ys[0] - f(first - 1.0);
        let right_slope = f(last + 1.0) - ys[ys.len() - 1];
        let mut prefix = Vec::with_capacity(xs.len());
        prefix.push(0.0);
        for i in 1..xs.len() {
            let area = 0.5 * (ys[i - 1] + ys[i]) * (xs[i] - xs[i - 1]);
            prefix.push(prefix[i - 1] + area);
        }
        Profile {
            xs,
            ys,
            left_slope,
            right_slope,
            prefix,
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let k = self.xs.len();
        let i = self.xs.partition_point(|&b| b <= x);
        if i == 0 {
            self.ys[0] + self.left_slope * (x - self.xs[0])
        } else if i == k {
            self.ys[k - 1] + self.right_slope * (x - self.xs[k - 1])
        } else {
            let (x0, x1) = (self.xs[i - 1], self.xs[i]);
            let r = (x - x0) / (x1 - x0);
            self.ys[i - 1] + r * (self.ys[i] - self.ys[i - 1])
        }
    }

    /// Integral over `[a, b]`, where `width` is `b - a` computed by the
    /// caller without cancellation.
    fn integral(&self, a: f64, b: f64, width: f64) -> f64 {
        if width <= 0.0 {
            return 0.0;
        }
        let i = self.xs.partition_point(|&x| x <= a);
        let j = self.xs.partition_point(|&x| x < b);
        let (ga, gb) = (self.eval(a), self.eval(b));
        if i >= j {
            return 0.5 * (ga + gb) * width;
        }
        let inner = if j - 1 - i <= 8 {
            (i + 1..j)
                .map(|p| 0.5 * (self.ys[p - 1] + self.ys[p]) * (self.xs[p] - self.xs[p - 1]))
                .sum()
        } else {
            self.prefix[j - 1] - self.prefix[i]
        };
        0.5 * (ga + self.ys[i]) * (self.xs[i] - a) + inner + 0.5 * (self.ys[j - 1] + gb) * (b - self.xs[j - 1])
    }

    /// Minimiser of the profile; the midpoint of the flat bottom if any.
    fn argmin(&self) -> f64 {
        let best = self.ys.iter().copied().fold(f64::INFINITY, f64::min);
        let tol = 1e-12 * (1.0 + best.abs());
        let lo = self.ys.iter().position(|&y| y <= best + tol).unwrap();
        let hi = self.ys.iter().rposition(|&y| y <= best + tol).unwrap();
        0.5 * (self.xs[lo] + self.xs[hi])
    }
}

#[allow(clippy::large_enum_variant)]
#[derive(Clone, Debug)]
enum Terrain {
    /// `d(s, t) = N(s - apex.x, t - apex.y)` for a homogeneous `N`.
    Cross {
        apex: Point2,
        /// `N(μ, 1)`, `N(μ, -1)`, `N(1, ν)`, `N(-1, ν)`.
        hp: Profile,
        hm: Profile,
        vp: Profile,
        vm: Profile,
        /// Directions (in parameter space) where `N` has a kink, one per
        /// pair of opposite gauge vertices.
        rays: Vec<Point2>,
        n_pos_s: f64,
        n_neg_s: f64,
        n_pos_t: f64,
        n_neg_t: f64,
        /// `N(valley.dir)`.
        valley_rate: f64,
    },
    /// `d(s, t) = h(σ - κτ)` with `σ = s - s0`, `τ = t - t0`.
    Parallel {
        kappa: f64,
        h: Profile,
    },
}

/// A line in parameter space, used to collect kink locations.
#[derive(Clone, Copy, Debug)]
struct Line {
    p: Point2,
    d: Point2,
}

impl Line {
    /// `s` where the line meets the horizontal line at height `t`.
    fn s_at(&self, t: f64) -> Option<f64> {
        (self.d.y != 0.0).then(|| self.p.x + (t - self.p.y) * self.d.x / self.d.y)
    }

    /// `t` where the line meets the vertical line at `s`.
    fn t_at(&self, s: f64) -> Option<f64> {
        (self.d.x != 0.0).then(|| self.p.y + (s - self.p.x) * self.d.y / self.d.x)
    }

    fn meet(&self, o: &Line) -> Option<Point2> {
        let den = self.d.cross(o.d);
        if den.abs() <= 1e-14 * self.d.hypot() * o.d.hypot() {
            return None;
        }
        let k = (o.p - self.p).cross(o.d) / den;
        Some(self.p + self.d * k)
    }
}

/// Split of an opposing-border cost into a start term and an end term.
#[derive(Clone, Debug)]
pub struct RhoSplit {
    pub rho_in: PiecewiseQuadratic,
    pub rho_out: PiecewiseQuadratic,
}

/// Shape of an optimal path inside a cell.
#[derive(Clone, Copy, Debug)]
struct Route {
    pts: [Point2; 4],
    /// 2 for a straight segment, 3 for one bend, 4 for a valley detour.
    len: usize,
}

#[derive(Clone, Debug)]
pub struct Cell {
    /// One-based segment indices.
    pub i: usize,
    pub j: usize,
    pub s0: f64,
    pub s1: f64,
    pub t0: f64,
    pub t1: f64,
    p0: Point2,
    u: Point2,
    q0: Point2,
    v: Point2,
    gauge: Arc<GaugePolygon>,
    terrain: Terrain,
    valley: Valley,
    fit_refinements: std::cell::Cell<usize>,
}

impl Cell {
    /// Cell for segment `p_seg` of `P` (parameters `s_range`) against
    /// segment `q_seg` of `Q` (parameters `t_range`).
    pub fn new(
        (i, j): (usize, usize),
        s_range: (f64, f64),
        t_range: (f64, f64),
        p_seg: (Point2, Point2),
        q_seg: (Point2, Point2),
        gauge: Arc<GaugePolygon>,
    ) -> Cell {
        let (s0, s1) = s_range;
        let (t0, t1) = t_range;
        assert!(s0 < s1 && t0 < t1, "empty cell");
        let u = (p_seg.1 - p_seg.0) * (1.0 / (s1 - s0));
        let v = (q_seg.1 - q_seg.0) * (1.0 / (t1 - t0));
        let c = p_seg.0 - q_seg.0;
        let g = &*gauge;
        let cr = u.cross(v);
        let (terrain, valley) = if cr.abs() <= PARALLEL_TOL * u.hypot() * v.hypot() {
            let kappa = if u.dot(v) >= 0.0 { 1.0 } else { -1.0 };
            let mut xs: Vec<f64> = g
                .vertices()
                .iter()
                .filter_map(|&k| {
                    let den = k.cross(u);
                    (den != 0.0).then(|| -k.cross(c) / den)
                })
                .collect();
            xs.push(-c.dot(u) / u.dot(u));
            let h = Profile::new(xs, |xi| g.eval(c + u * xi));
            let (ls, lt) = (s1 - s0, t1 - t0);
            // Anchor on the anti-diagonal through the cell centre.
            let mid = 0.5 * (ls + lt);
            let point = if kappa > 0.0 {
                let xi = h.argmin();
                Point2::new(s0 + 0.5 * (mid + xi), t0 + 0.5 * (mid - xi))
            } else {
                Point2::new(s0 + 0.5 * ls, t0 + 0.5 * lt)
            };
            let valley = Valley {
                point,
                dir: Point2::new(0.5, 0.5),
                degenerate: false,
            };
            (Terrain::Parallel { kappa, h }, valley)
        } else {
            let sigma = -c.cross(v) / cr;
            let tau = u.cross(c) / cr;
            let apex = Point2::new(s0 + sigma, t0 + tau);
            let n = |dx: f64, dy: f64| g.eval(u * dx - v * dy);
            let half = g.cone_count() / 2;
            let rays: Vec<Point2> = g.vertices()[..half]
                .iter()
                .map(|&k| Point2::new(k.cross(v) / cr, -u.cross(k) / cr))
                .collect();
            let ratios = |f: fn(Point2) -> Option<f64>| -> Vec<f64> {
                rays.iter().filter_map(|&r| f(r)).collect()
            };
            let mu = ratios(|r| (r.y != 0.0).then(|| r.x / r.y));
            let nu = ratios(|r| (r.x != 0.0).then(|| r.y / r.x));
            let hp = Profile::new(mu.clone(), |m| n(m, 1.0));
            let hm = Profile::new(mu.iter().map(|m| -m).collect(), |m| n(m, -1.0));
            let vp = Profile::new(nu.clone(), |m| n(1.0, m));
            let vm = Profile::new(nu.iter().map(|m| -m).collect(), |m| n(-1.0, m));

            // Minimise N along the anti-diagonal (λ, 1 - λ).
            let mut cands: Vec<f64> = vec![0.0, 1.0];
            cands.extend(rays.iter().filter_map(|r| {
                let den = r.x + r.y;
                let l = r.x / den;
                (den != 0.0 && l > 0.0 && l < 1.0).then_some(l)
            }));
            let vals: Vec<f64> = cands.iter().map(|&l| n(l, 1.0 - l)).collect();
            let best = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let tol = 1e-12 * (1.0 + best);
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for (l, val) in cands.iter().zip(&vals) {
                if *val <= best + tol {
                    lo = lo.min(*l);
                    hi = hi.max(*l);
                }
            }
            let mut lambda = 0.5 * (lo + hi);
            let degenerate = !(1e-9..=1.0 - 1e-9).contains(&lambda);
            lambda = lambda.clamp(1e-9, 1.0 - 1e-9);
            let dir = Point2::new(lambda, 1.0 - lambda);
            let valley = Valley {
                point: apex,
                dir,
                degenerate,
            };
            let terrain = Terrain::Cross {
                apex,
                hp,
                hm,
                vp,
                vm,
                rays,
                n_pos_s: n(1.0, 0.0),
                n_neg_s: n(-1.0, 0.0),
                n_pos_t: n(0.0, 1.0),
                n_neg_t: n(0.0, -1.0),
                valley_rate: n(dir.x, dir.y),
            };
            (terrain, valley)
        };
        Cell {
            i,
            j,
            s0,
            s1,
            t0,
            t1,
            p0: p_seg.0,
            u,
            q0: q_seg.0,
            v,
            gauge,
            terrain,
            valley,
            fit_refinements: std::cell::Cell::new(0),
        }
    }

    pub fn valley(&self) -> &Valley {
        &self.valley
    }

    pub fn is_parallel(&self) -> bool {
        matches!(self.terrain, Terrain::Parallel { .. })
    }

    /// Number of bisections the sampled fits needed so far.
    pub fn fit_refinements(&self) -> usize {
        self.fit_refinements.get()
    }

    pub fn sw(&self) -> Point2 {
        Point2::new(self.s0, self.t0)
    }

    pub fn ne(&self) -> Point2 {
        Point2::new(self.s1, self.t1)
    }

    pub fn nw(&self) -> Point2 {
        Point2::new(self.s0, self.t1)
    }

    pub fn se(&self) -> Point2 {
        Point2::new(self.s1, self.t0)
    }

    pub fn border(&self, side: Side) -> BorderRef {
        let (lo, hi, at) = match side {
            Side::N => (self.s0, self.s1, self.t1),
            Side::S => (self.s0, self.s1, self.t0),
            Side::E => (self.t0, self.t1, self.s1),
            Side::W => (self.t0, self.t1, self.s0),
        };
        BorderRef { side, lo, hi, at }
    }

    fn tol(&self) -> f64 {
        GEOM_TOL * 1f64.max(self.s1.abs()).max(self.t1.abs())
    }

    /// Distance between the matched curve points.
    pub fn dist(&self, p: Point2) -> f64 {
        let d = self.p0 + self.u * (p.x - self.s0) - self.q0 - self.v * (p.y - self.t0);
        self.gauge.eval(d)
    }

    /// `∫ d(s, t) ds` for `s` from `sa` to `sb >= sa`.
    fn horiz(&self, t: f64, sa: f64, sb: f64) -> f64 {
        let w = sb - sa;
        if w <= 0.0 {
            return 0.0;
        }
        match &self.terrain {
            Terrain::Cross {
                apex,
                hp,
                hm,
                n_pos_s,
                n_neg_s,
                ..
            } => {
                let h = t - apex.y;
                let (a, b) = (sa - apex.x, sb - apex.x);
                if h.abs() <= 1e-13 * a.abs().max(b.abs()) || h == 0.0 {
                    return abs_integral(a, b, w, *n_neg_s, *n_pos_s);
                }
                let ah = h.abs();
                let prof = if h > 0.0 { hp } else { hm };
                h * h * prof.integral(a / ah, b / ah, w / ah)
            }
            Terrain::Parallel { kappa, h } => {
                let shift = kappa * (t - self.t0);
                h.integral(sa - self.s0 - shift, sb - self.s0 - shift, w)
            }
        }
    }

    /// `∫ d(s, t) dt` for `t` from `ta` to `tb >= ta`.
    fn vert(&self, s: f64, ta: f64, tb: f64) -> f64 {
        let w = tb - ta;
        if w <= 0.0 {
            return 0.0;
        }
        match &self.terrain {
            Terrain::Cross {
                apex,
                vp,
                vm,
                n_pos_t,
                n_neg_t,
                ..
            } => {
                let h = s - apex.x;
                let (a, b) = (ta - apex.y, tb - apex.y);
                if h.abs() <= 1e-13 * a.abs().max(b.abs()) || h == 0.0 {
                    return abs_integral(a, b, w, *n_neg_t, *n_pos_t);
                }
                let ah = h.abs();
                let prof = if h > 0.0 { vp } else { vm };
                h * h * prof.integral(a / ah, b / ah, w / ah)
            }
            Terrain::Parallel { kappa, h } => {
                let sigma = s - self.s0;
                let (a, b) = (ta - self.t0, tb - self.t0);
                if *kappa > 0.0 {
                    h.integral(sigma - b, sigma - a, w)
                } else {
                    h.integral(sigma + a, sigma + b, w)
                }
            }
        }
    }

    /// Integral along the valley from `p` to `q`, both on it, `p ⪯ q`.
    fn along(&self, p: Point2, q: Point2) -> f64 {
        let w = (q.x - p.x) + (q.y - p.y);
        if w <= 0.0 {
            return 0.0;
        }
        match &self.terrain {
            Terrain::Cross {
                apex, valley_rate, ..
            } => {
                let dir = self.valley.dir;
                let lp = if dir.x >= dir.y {
                    (p.x - apex.x) / dir.x
                } else {
                    (p.y - apex.y) / dir.y
                };
                let lq = lp + w;
                valley_rate * abs_integral(lp, lq, w, 1.0, 1.0)
            }
            Terrain::Parallel { kappa, h } => {
                let xi = (p.x - self.s0) - kappa * (p.y - self.t0);
                if *kappa > 0.0 {
                    h.eval(xi) * w
                } else {
                    h.integral(xi, xi + w, w)
                }
            }
        }
    }

    fn axis(&self, p: Point2, q: Point2) -> f64 {
        if p.x == q.x {
            self.vert(p.x, p.y, q.y)
        } else {
            self.horiz(p.y, p.x, q.x)
        }
    }

    /// Cost of a straight segment that is horizontal, vertical, or on the
    /// valley.
    pub fn segment_cost(&self, from: Point2, to: Point2) -> Result<f64> {
        let tol = self.tol();
        if !from.precedes(to, tol) {
            return Err(CdtwError::Precondition(format!(
                "segment end {to:?} does not dominate start {from:?}"
            )));
        }
        let (dx, dy) = (to.x - from.x, to.y - from.y);
        if dx.abs() <= tol && dy.abs() <= tol {
            Ok(0.0)
        } else if dy.abs() <= tol {
            Ok(self.horiz(from.y, from.x, to.x))
        } else if dx.abs() <= tol {
            Ok(self.vert(from.x, from.y, to.y))
        } else if self.valley.side(from).abs() <= tol && self.valley.side(to).abs() <= tol {
            Ok(self.along(from, to))
        } else {
            Err(CdtwError::Precondition(format!(
                "segment {from:?} -> {to:?} is neither axis-parallel nor on the valley"
            )))
        }
    }

    fn route(&self, x: Point2, y: Point2) -> Route {
        let ul = Point2::new(x.x, y.y);
        let lr = Point2::new(y.x, x.y);
        let vl = &self.valley;
        if x == y {
            return Route {
                pts: [x; 4],
                len: 1,
            };
        }
        if x.x == y.x || x.y == y.y {
            return Route {
                pts: [x, y, y, y],
                len: 2,
            };
        }
        if vl.side(ul) < 0.0 {
            return Route {
                pts: [x, ul, y, y],
                len: 3,
            };
        }
        if vl.side(lr) > 0.0 {
            return Route {
                pts: [x, lr, y, y],
                len: 3,
            };
        }
        let xi_x = if vl.side(x) <= 0.0 {
            Point2::new(x.x, vl.t_at(x.x).clamp(x.y, y.y))
        } else {
            Point2::new(vl.s_at(x.y).clamp(x.x, y.x), x.y)
        };
        let mut xi_y = if vl.side(y) >= 0.0 {
            Point2::new(y.x, vl.t_at(y.x).clamp(x.y, y.y))
        } else {
            Point2::new(vl.s_at(y.y).clamp(x.x, y.x), y.y)
        };
        // Rounding may leave the valley points out of order.
        if xi_y.x < xi_x.x || xi_y.y < xi_x.y {
            if xi_y.x == y.x {
                xi_y.y = xi_y.y.max(xi_x.y);
            } else {
                xi_y.x = xi_y.x.max(xi_x.x);
            }
        }
        Route {
            pts: [x, xi_x, xi_y, y],
            len: 4,
        }
    }

    fn route_cost(&self, r: &Route) -> f64 {
        match r.len {
            1 => 0.0,
            2 => {
                let (p, q) = (r.pts[0], r.pts[1]);
                if p.x == q.x {
                    self.vert(p.x, p.y, q.y)
                } else if p.y == q.y {
                    self.horiz(p.y, p.x, q.x)
                } else {
                    unreachable!("straight route must be axis-parallel")
                }
            }
            3 => self.axis(r.pts[0], r.pts[1]) + self.axis(r.pts[1], r.pts[2]),
            _ => {
                self.axis(r.pts[0], r.pts[1])
                    + self.along(r.pts[1], r.pts[2])
                    + self.axis(r.pts[2], r.pts[3])
            }
        }
    }

    /// Cost of an optimal path from `x` to `y`, both inside the cell.
    pub fn opt_cost(&self, x: Point2, y: Point2) -> f64 {
        self.route_cost(&self.route(x, y))
    }

    /// Optimal path from `x` to `y` and its cost.
    pub fn opt_path(&self, x: Point2, y: Point2) -> Result<(f64, MonotonePath)> {
        if !x.precedes(y, self.tol()) {
            return Err(CdtwError::Precondition(format!(
                "path end {y:?} does not dominate start {x:?}"
            )));
        }
        let y = Point2::new(y.x.max(x.x), y.y.max(x.y));
        let r = self.route(x, y);
        let mut path = MonotonePath::default();
        for p in &r.pts[..r.len] {
            path.push(*p);
        }
        Ok((self.route_cost(&r), path))
    }

    /// Lines across which optimal-path costs change formula.
    fn event_lines(&self) -> Vec<Line> {
        let mut lines = vec![Line {
            p: self.valley.point,
            d: self.valley.dir,
        }];
        match &self.terrain {
            Terrain::Cross { apex, rays, .. } => {
                lines.extend(rays.iter().map(|&d| Line { p: *apex, d }));
                lines.push(Line {
                    p: *apex,
                    d: Point2::new(1.0, 0.0),
                });
                lines.push(Line {
                    p: *apex,
                    d: Point2::new(0.0, 1.0),
                });
            }
            Terrain::Parallel { kappa, h } => {
                lines.extend(h.xs.iter().map(|&xi| Line {
                    p: Point2::new(self.s0 + xi, self.t0),
                    d: Point2::new(*kappa, 1.0),
                }));
            }
        }
        lines
    }

    /// Candidate kink parameters for a point moving along `border` while
    /// the other path end stays at `w`.
    fn events(&self, border: &BorderRef, w: Point2) -> Vec<f64> {
        let lines = self.event_lines();
        let horizontal = border.side.is_horizontal();
        let (fixed_a, fixed_b) = if horizontal {
            (border.at, w.y)
        } else {
            (border.at, w.x)
        };
        let cut = |l: &Line, at: f64| if horizontal { l.s_at(at) } else { l.t_at(at) };
        let coord = |p: Point2| if horizontal { p.x } else { p.y };
        let mut ev = Vec::with_capacity(4 * lines.len() + 2);
        ev.push(coord(w));
        let vl = lines[0];
        for l in &lines {
            ev.extend(cut(l, fixed_a));
            ev.extend(cut(l, fixed_b));
        }
        for l in &lines[1..] {
            ev.extend(vl.meet(l).map(coord));
        }
        if let Terrain::Cross { apex, .. } = &self.terrain {
            ev.push(coord(*apex));
        }
        ev
    }

    fn fit_along(
        &self,
        border: &BorderRef,
        w: Point2,
        f: impl Fn(f64) -> f64,
        label: Label,
    ) -> PiecewiseQuadratic {
        let mut ev = self.events(border, w);
        let (p, refinements) = PiecewiseQuadratic::fit(border.lo, border.hi, &mut ev, f, label);
        self.fit_refinements
            .set(self.fit_refinements.get() + refinements);
        p
    }

    /// `λ ↦ opt(start, B(λ))` over the border, which must lie entirely
    /// above and to the right of `start`.
    pub fn cost_from_point(&self, start: Point2, side: Side) -> PiecewiseQuadratic {
        let b = self.border(side);
        self.fit_along(&b, start, |l| self.opt_cost(start, b.point(l)), 0)
    }

    /// `λ ↦ opt(A(λ), end)` over the border, which must lie entirely below
    /// and to the left of `end`.
    pub fn cost_to_point(&self, side: Side, end: Point2) -> PiecewiseQuadratic {
        let a = self.border(side);
        self.fit_along(&a, end, |l| self.opt_cost(a.point(l), end), 0)
    }

    /// `t ↦ opt(A(s*), B(t))` for `t` in the part of `B` reachable from
    /// `A(s*)`.
    pub fn cost_fn_fixed_start(&self, a: Side, s_star: f64, b: Side) -> Result<PiecewiseQuadratic> {
        let start = self.border(a).point(s_star);
        let bb = self.border(b);
        let lo = bb.lo.max(bb.param(start));
        if !(start.precedes(bb.point(bb.hi), self.tol())) || lo >= bb.hi {
            return Err(CdtwError::Precondition(format!(
                "no point of {} is reachable from {start:?}",
                b.name()
            )));
        }
        let sub = BorderRef { lo, ..bb };
        Ok(self.fit_along(&sub, start, |l| self.opt_cost(start, sub.point(l)), 0))
    }

    /// Splits `opt(A(s), B(t))` for opposing `A`, `B` into
    /// `rho_in(s) + rho_out(t)` with `rho_in` zero at the domain start.
    pub fn rho_split(&self, a: Side, b: Side) -> Result<RhoSplit> {
        if !(matches!((a, b), (Side::S, Side::N) | (Side::W, Side::E))) {
            return Err(CdtwError::Precondition(format!(
                "{} is not the opposing input of {}",
                a.name(),
                b.name()
            )));
        }
        let corner = self.opt_cost(self.sw(), self.ne());
        let rho_in = self
            .cost_to_point(a, self.ne())
            .add_quadratic(crate::pwq::Quad::constant(-corner));
        let rho_out = self.cost_from_point(self.sw(), b);
        Ok(RhoSplit { rho_in, rho_out })
    }
}

/// `∫ c(x) |x| dx` over `[a, b]` with `c = neg` left of 0 and `pos` right
/// of it; `width = b - a`.
fn abs_integral(a: f64, b: f64, width: f64, neg: f64, pos: f64) -> f64 {
    if a >= 0.0 {
        pos * 0.5 * width * (a + b)
    } else if b <= 0.0 {
        neg * 0.5 * width * (-a - b)
    } else {
        0.5 * (neg * a * a + pos * b * b)
    }
}
