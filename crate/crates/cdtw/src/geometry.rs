// SPDX-License-Identifier: Apache-2.0 OR MIT

//! Points, polygonal curves and arc-length parametrisation.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{CdtwError, Result};
use crate::norms::NormHandle;

/// Vertices closer than this (in the max-norm) count as duplicates.
pub const DUPLICATE_TOL: f64 = 1e-12;

/// Relative slack allowed when a parameter is checked against an arc table.
pub const ARC_TOL: f64 = 1e-9;

/// A point (or vector) in the plane.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    #[inline]
    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// The z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    #[inline]
    pub fn hypot(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Linear interpolation, `self` at `t = 0` and `other` at `t = 1`.
    #[inline]
    pub fn lerp(self, other: Point2, t: f64) -> Point2 {
        Point2::new(
            self.x + t * (other.x - self.x),
            self.y + t * (other.y - self.y),
        )
    }

    /// Coordinatewise order: `self.x <= other.x` and `self.y <= other.y`.
    #[inline]
    pub fn precedes(self, other: Point2, tol: f64) -> bool {
        self.x <= other.x + tol && self.y <= other.y + tol
    }
}

impl Add for Point2 {
    type Output = Point2;
    #[inline]
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    #[inline]
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    #[inline]
    fn mul(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    #[inline]
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

impl From<(f64, f64)> for Point2 {
    fn from((x, y): (f64, f64)) -> Self {
        Point2::new(x, y)
    }
}

impl From<[f64; 2]> for Point2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Point2::new(x, y)
    }
}

/// A curve made of line segments between consecutive vertices.
///
/// There is at least one segment, and consecutive vertices are distinct.
#[derive(Clone, Debug, PartialEq)]
pub struct PolygonalCurve {
    vertices: Vec<Point2>,
}

impl PolygonalCurve {
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(CdtwError::InvalidCurve(format!(
                "need at least 2 vertices, got {}",
                vertices.len()
            )));
        }
        for (i, v) in vertices.iter().enumerate() {
            if !v.is_finite() {
                return Err(CdtwError::InvalidCurve(format!(
                    "vertex {i} has a non-finite coordinate"
                )));
            }
        }
        for (i, w) in vertices.windows(2).enumerate() {
            let d = w[1] - w[0];
            if d.x.abs() <= DUPLICATE_TOL && d.y.abs() <= DUPLICATE_TOL {
                return Err(CdtwError::InvalidCurve(format!(
                    "vertices {i} and {} coincide",
                    i + 1
                )));
            }
        }
        Ok(PolygonalCurve { vertices })
    }

    pub fn from_xy(points: &[(f64, f64)]) -> Result<Self> {
        Self::new(points.iter().copied().map(Point2::from).collect())
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    /// Number of segments.
    pub fn segment_count(&self) -> usize {
        self.vertices.len() - 1
    }

    /// Endpoints of segment `i` (zero based).
    pub fn segment(&self, i: usize) -> (Point2, Point2) {
        (self.vertices[i], self.vertices[i + 1])
    }

    /// The same curve traversed backwards.
    pub fn reversed(&self) -> PolygonalCurve {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        PolygonalCurve { vertices }
    }

    pub fn translated(&self, by: Point2) -> PolygonalCurve {
        PolygonalCurve {
            vertices: self.vertices.iter().map(|&v| v + by).collect(),
        }
    }
}

/// Prefix arc lengths of a curve under one norm.
#[derive(Clone, Debug, PartialEq)]
pub struct ArcTable {
    prefix: Vec<f64>,
}

impl ArcTable {
    pub fn prefix_lengths(&self) -> &[f64] {
        &self.prefix
    }

    pub fn total(&self) -> f64 {
        *self.prefix.last().unwrap()
    }

    /// Start and end parameter of segment `i`.
    pub fn segment_range(&self, i: usize) -> (f64, f64) {
        (self.prefix[i], self.prefix[i + 1])
    }

    /// Absolute tolerance for comparisons against table entries.
    pub fn tolerance(&self) -> f64 {
        ARC_TOL * self.total().max(1.0)
    }

    /// Index of the segment containing `s`; the last segment owns the end.
    pub fn segment_of(&self, s: f64) -> usize {
        let k = self.prefix.partition_point(|&p| p <= s);
        k.clamp(1, self.prefix.len() - 1) - 1
    }

    /// Clamps `s` into the table's range, failing if it lies too far out.
    pub fn check(&self, s: f64) -> Result<f64> {
        let tol = self.tolerance();
        let hi = self.total();
        if !(s >= -tol && s <= hi + tol) {
            return Err(CdtwError::Domain { value: s, lo: 0.0, hi });
        }
        Ok(s.clamp(0.0, hi))
    }
}

pub fn build_arc_table(curve: &PolygonalCurve, norm: &NormHandle) -> ArcTable {
    let mut prefix = Vec::with_capacity(curve.vertices.len());
    let mut acc = 0.0;
    prefix.push(0.0);
    for w in curve.vertices.windows(2) {
        acc += norm.eval(w[1] - w[0]);
        prefix.push(acc);
    }
    ArcTable { prefix }
}

pub fn arc_length(curve: &PolygonalCurve, norm: &NormHandle) -> f64 {
    curve
        .vertices
        .windows(2)
        .map(|w| norm.eval(w[1] - w[0]))
        .sum()
}

/// The point at arc-length parameter `s`.
pub fn point_at(curve: &PolygonalCurve, table: &ArcTable, s: f64) -> Result<Point2> {
    let s = table.check(s)?;
    Ok(point_at_unchecked(curve, table, s))
}

pub(crate) fn point_at_unchecked(curve: &PolygonalCurve, table: &ArcTable, s: f64) -> Point2 {
    let i = table.segment_of(s);
    let (s0, s1) = table.segment_range(i);
    let (a, b) = curve.segment(i);
    let t = ((s - s0) / (s1 - s0)).clamp(0.0, 1.0);
    a.lerp(b, t)
}
