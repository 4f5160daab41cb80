// SPDX-License-Identifier: Apache-2.0 OR MIT

//! SVG pictures of the parameter space.
//!
//! All geometry is written in parameter coordinates (`s` right, `t` up)
//! inside one group whose transform scales and flips it onto the page, so
//! the numbers in the file can be read back directly.

use std::fmt::Write as _;

use crate::cell::{Cell, Valley};
use crate::error::{CdtwError, Result};
use crate::geometry::{build_arc_table, point_at, Point2, PolygonalCurve};
use crate::norms::NormHandle;
use crate::propagate::Approximation;

const PAGE: f64 = 640.0;
const MARGIN: f64 = 20.0;

#[derive(Clone, Copy, Debug)]
pub struct PlotOptions {
    /// Heatmap samples along each axis.
    pub heat: usize,
}

impl Default for PlotOptions {
    fn default() -> Self {
        PlotOptions { heat: 48 }
    }
}

fn num(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

/// Part of the valley line inside `[s0, s1] × [t0, t1]`.
fn clip(v: &Valley, s0: f64, s1: f64, t0: f64, t1: f64) -> Option<(Point2, Point2)> {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (p, d, a, b) in [(v.point.x, v.dir.x, s0, s1), (v.point.y, v.dir.y, t0, t1)] {
        if d.abs() < 1e-15 {
            if p < a || p > b {
                return None;
            }
            continue;
        }
        let (u, w) = ((a - p) / d, (b - p) / d);
        lo = lo.max(u.min(w));
        hi = hi.min(u.max(w));
    }
    (lo <= hi).then(|| (v.point + v.dir * lo, v.point + v.dir * hi))
}

fn heat_color(f: f64) -> String {
    let f = f.clamp(0.0, 1.0);
    let r = (255.0 * f).round() as u8;
    let b = (255.0 * (1.0 - f)).round() as u8;
    format!("#{r:02x}40{b:02x}")
}

/// Renders cells, valleys, a sampled distance heatmap and the witness path
/// of `approx`, which must have been computed for `p`, `q` and `norm`.
pub fn render_svg(
    p: &PolygonalCurve,
    q: &PolygonalCurve,
    norm: &NormHandle,
    approx: &Approximation,
    opts: PlotOptions,
) -> Result<String> {
    let gauge = norm.to_gauge().ok_or(CdtwError::NotPolygonal)?;
    let tp = build_arc_table(p, norm);
    let tq = build_arc_table(q, norm);
    let (ls, lt) = (tp.total(), tq.total());
    let scale = (PAGE - 2.0 * MARGIN) / ls.max(lt).max(1e-300);
    let (w, h) = (ls * scale + 2.0 * MARGIN, lt * scale + 2.0 * MARGIN);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        num(w),
        num(h),
        num(w),
        num(h)
    );
    let _ = writeln!(
        out,
        r#"<g transform="translate({} {}) scale({} {})">"#,
        num(MARGIN),
        num(h - MARGIN),
        num(scale),
        num(-scale)
    );

    let k = opts.heat.max(1);
    let (ds, dt) = (ls / k as f64, lt / k as f64);
    let mut samples = Vec::with_capacity(k * k);
    for a in 0..k {
        let pa = point_at(p, &tp, (a as f64 + 0.5) * ds)?;
        for b in 0..k {
            let qb = point_at(q, &tq, (b as f64 + 0.5) * dt)?;
            samples.push(norm.eval(pa - qb));
        }
    }
    let top = samples.iter().cloned().fold(0.0, f64::max).max(1e-300);
    out.push_str("<g opacity=\"0.5\">\n");
    for a in 0..k {
        for b in 0..k {
            let _ = writeln!(
                out,
                r#"<rect class="heat" x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
                num(a as f64 * ds),
                num(b as f64 * dt),
                num(ds),
                num(dt),
                heat_color(samples[a * k + b] / top)
            );
        }
    }
    out.push_str("</g>\n");

    let mut valleys = String::new();
    for i in 1..=p.segment_count() {
        let (s0, s1) = tp.segment_range(i - 1);
        for j in 1..=q.segment_count() {
            let (t0, t1) = tq.segment_range(j - 1);
            let _ = writeln!(
                out,
                r#"<rect class="cell" x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black" vector-effect="non-scaling-stroke"/>"#,
                num(s0),
                num(t0),
                num(s1 - s0),
                num(t1 - t0)
            );
            let cell = Cell::new(
                (i, j),
                (s0, s1),
                (t0, t1),
                p.segment(i - 1),
                q.segment(j - 1),
                gauge.clone(),
            );
            if let Some((a, b)) = clip(cell.valley(), s0, s1, t0, t1) {
                let _ = writeln!(
                    valleys,
                    r#"<line class="valley" x1="{}" y1="{}" x2="{}" y2="{}" stroke="white" stroke-dasharray="4 3" vector-effect="non-scaling-stroke"/>"#,
                    num(a.x),
                    num(a.y),
                    num(b.x),
                    num(b.y)
                );
            }
        }
    }
    out.push_str(&valleys);

    let pts: Vec<String> = approx
        .witness
        .waypoints
        .iter()
        .map(|v| format!("{},{}", num(v.x), num(v.y)))
        .collect();
    let _ = writeln!(
        out,
        r#"<polyline class="witness" points="{}" fill="none" stroke="yellow" stroke-width="2" vector-effect="non-scaling-stroke"/>"#,
        pts.join(" ")
    );
    out.push_str("</g>\n");
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="12" font-family="monospace">value {}</text>"#,
        num(MARGIN),
        num(MARGIN * 0.7),
        approx.value
    );
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagate::cdtw_approx;

    #[test]
    fn number_format() {
        assert_eq!(num(1.0), "1");
        assert_eq!(num(-0.0000001), "0");
        assert_eq!(num(2.5), "2.5");
        assert_eq!(num(1.0 / 3.0), "0.333333");
    }

    #[test]
    fn clipping() {
        let v = Valley {
            point: Point2::new(0.5, 0.5),
            dir: Point2::new(0.5, 0.5),
            degenerate: false,
        };
        let (a, b) = clip(&v, 0.0, 1.0, 0.0, 2.0).unwrap();
        assert_eq!((a, b), (Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)));
        assert!(clip(&v, 2.0, 3.0, 0.0, 1.0).is_none());
    }

    #[test]
    fn crossing_segments_picture() {
        let p = PolygonalCurve::from_xy(&[(-1.0, 0.0), (1.0, 0.0)]).unwrap();
        let q = PolygonalCurve::from_xy(&[(0.0, -1.0), (0.0, 1.0)]).unwrap();
        let n = NormHandle::L1;
        let a = cdtw_approx(&p, &q, &n).unwrap();
        let svg = render_svg(&p, &q, &n, &a, PlotOptions::default()).unwrap();
        assert_eq!(svg.matches("class=\"cell\"").count(), 1);
        assert_eq!(svg.matches("class=\"valley\"").count(), 1);
        assert_eq!(svg.matches("class=\"witness\"").count(), 1);
        assert_eq!(svg, render_svg(&p, &q, &n, &a, PlotOptions::default()).unwrap());
    }
}
