// SPDX-License-Identifier: Apache-2.0 OR MIT

//! Norms on the plane.
//!
//! The 1-, 2- and ∞-norms are built in. Any other polygonal norm is given
//! by its unit ball, a balanced convex polygon `K`; its gauge is linear on
//! each cone spanned by two adjacent vertices, so evaluating it is a binary
//! search over vertex angles followed by one dot product.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::error::{CdtwError, Result};
use crate::geometry::Point2;

/// Normalised cross products below this merge the middle vertex away.
pub const COLLINEAR_TOL: f64 = 1e-12;

/// Relative tolerance for matching a vertex with its reflection.
pub const BALANCE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum GaugeError {
    #[error("vertex {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("not balanced: {0}")]
    NotBalanced(String),
    #[error("not convex at vertex {0}")]
    NotConvex(usize),
    #[error("origin is not strictly inside (edge {0})")]
    NotAbsorbing(usize),
}

/// A balanced convex polygon, used as the unit ball of a norm.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugePolygon {
    vertices: Vec<Point2>,
    /// Unwrapped polar angles, strictly increasing, spanning less than 2π.
    angles: Vec<f64>,
    /// `evals[i]` is linear form of the gauge on cone `i`.
    evals: Vec<Point2>,
}

impl GaugePolygon {
    /// Validates and normalises a vertex list.
    ///
    /// Clockwise input is reversed and nearly collinear vertices are merged.
    /// The first stored vertex is the one with the smallest polar angle in
    /// `[0, 2π)`.
    pub fn new(vertices: Vec<Point2>) -> Result<Self, GaugeError> {
        for (i, v) in vertices.iter().enumerate() {
            if !v.is_finite() {
                return Err(GaugeError::NonFinite(i));
            }
        }
        let mut vs = vertices;
        if signed_area(&vs) < 0.0 {
            vs.reverse();
        }
        merge_collinear(&mut vs);
        check_balanced(&vs)?;
        check_convex(&vs)?;
        for i in 0..vs.len() {
            if vs[i].cross(vs[(i + 1) % vs.len()]) <= 0.0 {
                return Err(GaugeError::NotAbsorbing(i));
            }
        }

        let start = (0..vs.len())
            .min_by(|&a, &b| polar(vs[a]).total_cmp(&polar(vs[b])))
            .unwrap();
        vs.rotate_left(start);
        let mut angles = Vec::with_capacity(vs.len());
        let mut prev = polar(vs[0]);
        angles.push(prev);
        for v in &vs[1..] {
            let mut a = polar(*v);
            while a <= prev {
                a += TAU;
            }
            if a >= angles[0] + TAU {
                return Err(GaugeError::NotConvex(angles.len()));
            }
            angles.push(a);
            prev = a;
        }
        let k = vs.len();
        let evals = (0..k)
            .map(|i| {
                let v = vs[i];
                let w = vs[(i + 1) % k];
                Point2::new(w.y - v.y, v.x - w.x) * (1.0 / v.cross(w))
            })
            .collect();
        Ok(GaugePolygon {
            vertices: vs,
            angles,
            evals,
        })
    }

    pub fn from_xy(points: &[(f64, f64)]) -> Result<Self, GaugeError> {
        Self::new(points.iter().copied().map(Point2::from).collect())
    }

    /// The unit ball of the 1-norm.
    pub fn l1() -> Self {
        Self::from_xy(&[(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)]).unwrap()
    }

    /// The unit ball of the ∞-norm.
    pub fn linf() -> Self {
        Self::from_xy(&[(1.0, -1.0), (1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0)]).unwrap()
    }

    /// Regular polygon with `k` vertices on the unit circle, one at angle 0.
    pub fn regular(k: usize) -> Result<Self, GaugeError> {
        if k < 4 || k % 2 == 1 {
            return Err(GaugeError::NotBalanced(format!(
                "regular polygon needs an even count >= 4, got {k}"
            )));
        }
        let vs = (0..k)
            .map(|i| {
                let a = TAU * i as f64 / k as f64;
                Point2::new(a.cos(), a.sin())
            })
            .collect();
        Self::new(vs)
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    /// Number of cones, equal to the number of vertices.
    pub fn cone_count(&self) -> usize {
        self.vertices.len()
    }

    /// Index of the cone containing `z`, ties going to the lower index.
    pub fn cone_of(&self, z: Point2) -> usize {
        let mut phi = polar(z);
        if phi < self.angles[0] {
            phi += TAU;
        }
        let idx = self.angles.partition_point(|&a| a < phi);
        idx.saturating_sub(1)
    }

    /// The vector `e` with `e · z = G(z)` for every `z` in cone `cone`.
    pub fn evaluation_vector(&self, cone: usize) -> Point2 {
        self.evals[cone]
    }

    /// Gauge of `z`.
    pub fn eval(&self, z: Point2) -> f64 {
        if z.x == 0.0 && z.y == 0.0 {
            return 0.0;
        }
        let k = self.evals.len();
        let i = self.cone_of(z);
        // The gauge is the maximum of all cone forms, so taking the
        // neighbours too absorbs rounding in the angle search.
        let v = self.evals[i]
            .dot(z)
            .max(self.evals[(i + 1) % k].dot(z))
            .max(self.evals[(i + k - 1) % k].dot(z));
        v.max(0.0)
    }

    /// Gauge by scanning every cone.
    pub fn eval_brute_force(&self, z: Point2) -> f64 {
        self.evals
            .iter()
            .map(|e| e.dot(z))
            .fold(0.0, f64::max)
    }
}

fn polar(z: Point2) -> f64 {
    let a = z.y.atan2(z.x);
    if a < 0.0 {
        a + TAU
    } else {
        a
    }
}

fn signed_area(vs: &[Point2]) -> f64 {
    let k = vs.len();
    (0..k).map(|i| vs[i].cross(vs[(i + 1) % k])).sum::<f64>() / 2.0
}

fn merge_collinear(vs: &mut Vec<Point2>) {
    let mut i = 0;
    while vs.len() > 3 && i < vs.len() {
        let k = vs.len();
        let prev = vs[(i + k - 1) % k];
        let next = vs[(i + 1) % k];
        let a = vs[i] - prev;
        let b = next - vs[i];
        let scale = a.hypot() * b.hypot();
        if scale == 0.0 || (a.cross(b) / scale).abs() < COLLINEAR_TOL && a.dot(b) > 0.0 {
            vs.remove(i);
            i = i.saturating_sub(1);
        } else {
            i += 1;
        }
    }
}

fn check_balanced(vs: &[Point2]) -> Result<(), GaugeError> {
    let k = vs.len();
    if k % 2 == 1 {
        return Err(GaugeError::NotBalanced(format!("odd vertex count {k}")));
    }
    let scale = vs.iter().map(|v| v.hypot()).fold(0.0, f64::max);
    let h = k / 2;
    for i in 0..h {
        let s = vs[i] + vs[i + h];
        if s.hypot() > BALANCE_TOL * scale {
            return Err(GaugeError::NotBalanced(format!(
                "vertex {} is not the reflection of vertex {i}",
                i + h
            )));
        }
    }
    Ok(())
}

fn check_convex(vs: &[Point2]) -> Result<(), GaugeError> {
    let k = vs.len();
    for i in 0..k {
        let a = vs[i] - vs[(i + k - 1) % k];
        let b = vs[(i + 1) % k] - vs[i];
        if a.cross(b) <= 0.0 {
            return Err(GaugeError::NotConvex(i));
        }
    }
    Ok(())
}

/// A norm on the plane.
#[derive(Clone, PartialEq)]
pub enum NormHandle {
    L1,
    L2,
    Linf,
    Gauge(Arc<GaugePolygon>),
}

impl fmt::Debug for NormHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormHandle::L1 => f.write_str("L1"),
            NormHandle::L2 => f.write_str("L2"),
            NormHandle::Linf => f.write_str("Linf"),
            NormHandle::Gauge(g) => write!(f, "Gauge({} vertices)", g.cone_count()),
        }
    }
}

impl From<GaugePolygon> for NormHandle {
    fn from(g: GaugePolygon) -> Self {
        NormHandle::Gauge(Arc::new(g))
    }
}

impl NormHandle {
    pub fn eval(&self, z: Point2) -> f64 {
        match self {
            NormHandle::L1 => z.x.abs() + z.y.abs(),
            NormHandle::L2 => z.hypot(),
            NormHandle::Linf => z.x.abs().max(z.y.abs()),
            NormHandle::Gauge(g) => g.eval(z),
        }
    }

    pub fn is_polygonal(&self) -> bool {
        !matches!(self, NormHandle::L2)
    }

    /// The unit ball as a polygon, if the norm is polygonal.
    pub fn to_gauge(&self) -> Option<Arc<GaugePolygon>> {
        match self {
            NormHandle::L1 => Some(Arc::new(GaugePolygon::l1())),
            NormHandle::Linf => Some(Arc::new(GaugePolygon::linf())),
            NormHandle::Gauge(g) => Some(Arc::clone(g)),
            NormHandle::L2 => None,
        }
    }
}

/// Settings for replacing a norm by a polygonal one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApproxConfig {
    pub epsilon: f64,
}

impl ApproxConfig {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(CdtwError::Config(format!(
                "epsilon must be positive and finite, got {epsilon}"
            )));
        }
        Ok(ApproxConfig { epsilon })
    }
}

/// Smallest `m >= 2` with `sec(π / 2m) <= 1 + epsilon`.
pub fn l2_half_vertex_count(epsilon: f64) -> usize {
    let mut m = 2usize;
    while 1.0 / (FRAC_PI_2 / m as f64).cos() > 1.0 + epsilon {
        m += 1;
    }
    m
}

/// A polygon `K` with `‖z‖ <= G_K(z) <= (1 + ε)‖z‖`.
///
/// Polygonal norms come back unchanged. For the 2-norm this is the regular
/// `2m`-gon inscribed in the unit circle with the fewest vertices meeting
/// the bound.
pub fn approximate_norm(norm: &NormHandle, cfg: ApproxConfig) -> Result<GaugePolygon> {
    ApproxConfig::new(cfg.epsilon)?;
    match norm {
        NormHandle::L2 => {
            let m = l2_half_vertex_count(cfg.epsilon);
            Ok(GaugePolygon::regular(2 * m)?)
        }
        other => Ok((*other.to_gauge().unwrap()).clone()),
    }
}

/// Polygonal approximation of a norm known only through an evaluator.
///
/// Samples the unit sphere in `2m` directions (with `m` chosen as for the
/// 2-norm) and keeps the convex part. The result lies inside the true unit
/// ball, so its gauge bounds the norm from above, but the `1 + ε` upper
/// bound is not guaranteed for norms far from round.
pub fn approximate_black_box(
    norm: impl Fn(Point2) -> f64,
    cfg: ApproxConfig,
) -> Result<GaugePolygon> {
    ApproxConfig::new(cfg.epsilon)?;
    let m = l2_half_vertex_count(cfg.epsilon / 2.0);
    let mut half = Vec::with_capacity(m);
    for i in 0..m {
        let a = PI * i as f64 / m as f64;
        let dir = Point2::new(a.cos(), a.sin());
        let r = norm(dir);
        if !(r.is_finite() && r > 0.0) {
            return Err(CdtwError::Config(format!(
                "norm evaluator returned {r} in direction {i}"
            )));
        }
        half.push(dir * (1.0 / r));
    }
    // Drop reflex vertices symmetrically until the polygon is convex.
    loop {
        let mut full: Vec<Point2> = half.clone();
        full.extend(half.iter().map(|&p| -p));
        let k = full.len();
        let bad = (0..half.len()).find(|&i| {
            let a = full[i] - full[(i + k - 1) % k];
            let b = full[(i + 1) % k] - full[i];
            a.cross(b) <= 0.0
        });
        match bad {
            Some(i) if half.len() > 2 => {
                half.remove(i);
            }
            _ => return Ok(GaugePolygon::new(full)?),
        }
    }
}
