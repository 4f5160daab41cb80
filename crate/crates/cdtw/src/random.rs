// SPDX-License-Identifier: Apache-2.0 OR MIT

//! Seeded generators for curves and gauge polygons.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::{Point2, PolygonalCurve};
use crate::norms::GaugePolygon;

pub type Rng64 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A curve with `segments` segments and vertices uniform in `[0, side]²`.
pub fn random_curve(rng: &mut impl Rng, segments: usize, side: f64) -> PolygonalCurve {
    assert!(segments >= 1);
    let mut vs: Vec<Point2> = Vec::with_capacity(segments + 1);
    while vs.len() < segments + 1 {
        let p = Point2::new(rng.gen_range(0.0..side), rng.gen_range(0.0..side));
        if vs.last().map_or(true, |q| (p - *q).hypot() > 1e-3 * side) {
            vs.push(p);
        }
    }
    PolygonalCurve::new(vs).expect("generated curve is valid")
}

/// A random balanced convex polygon with at most `2 * half` vertices.
pub fn random_gauge(rng: &mut impl Rng, half: usize) -> GaugePolygon {
    assert!(half >= 2);
    loop {
        let mut pts: Vec<Point2> = (0..half)
            .map(|_| {
                let a = rng.gen_range(0.0..std::f64::consts::PI);
                let r = rng.gen_range(0.5..2.0);
                Point2::new(r * a.cos(), r * a.sin())
            })
            .collect();
        let mirrored: Vec<Point2> = pts.iter().map(|&p| -p).collect();
        pts.extend(mirrored);
        let hull = convex_hull(pts);
        if let Ok(g) = GaugePolygon::new(hull) {
            return g;
        }
    }
}

/// Counter-clockwise convex hull without collinear points.
pub fn convex_hull(mut pts: Vec<Point2>) -> Vec<Point2> {
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let turn = |o: Point2, a: Point2, b: Point2| (a - o).cross(b - o);
    let mut hull: Vec<Point2> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point2>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_gauges_are_valid_norms() {
        let mut r = rng(3);
        for _ in 0..50 {
            let g = random_gauge(&mut r, 4);
            assert!(g.cone_count() >= 4 && g.cone_count() % 2 == 0);
        }
    }

    #[test]
    fn hull_of_square_with_centre() {
        let h = convex_hull(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
            Point2::new(0.5, 0.5),
            Point2::new(0.5, 0.0),
        ]);
        assert_eq!(h.len(), 4);
    }

    #[test]
    fn curves_are_deterministic() {
        let a = random_curve(&mut rng(9), 5, 10.0);
        let b = random_curve(&mut rng(9), 5, 10.0);
        assert_eq!(a, b);
        assert_eq!(a.segment_count(), 5);
    }
}
