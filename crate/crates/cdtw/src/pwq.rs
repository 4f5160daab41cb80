// SPDX-License-Identifier: Apache-2.0 OR MIT

//! Continuous piecewise-quadratic functions on a closed interval.
//!
//! Pieces are half-open `[lo, hi)` except the last, which is closed. Every
//! piece carries a [`Label`], an opaque tag the propagation code uses to
//! remember where a piece came from. Adjacent pieces are only coalesced when
//! their labels agree.

use serde::{Deserialize, Serialize};

use crate::error::{CdtwError, Result};

/// Roots closer than this (relative) to a breakpoint are snapped onto it.
pub const ROOT_SNAP: f64 = 1e-9;
/// Leading coefficients below this are treated as zero.
pub const A_ZERO: f64 = 1e-12;
/// Relative discriminant size counted as a tangency.
pub const DISC_TANGENT: f64 = 1e-12;
/// Relative coefficient difference under which adjacent pieces coalesce.
pub const COALESCE_TOL: f64 = 1e-12;
/// Relative breakpoint jump tolerated (and repaired) by continuity checks.
pub const CONTINUITY_TOL: f64 = 1e-7;
/// Relative residual accepted by [`PiecewiseQuadratic::fit`].
pub const FIT_TOL: f64 = 1e-9;

pub type Label = u32;

/// `t ↦ a t² + b t + c`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Quad {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Quad {
    pub const ZERO: Quad = Quad::new(0.0, 0.0, 0.0);

    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        Quad { a, b, c }
    }

    pub const fn constant(c: f64) -> Self {
        Quad::new(0.0, 0.0, c)
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        (self.a * t + self.b) * t + self.c
    }

    #[inline]
    pub fn deriv(&self, t: f64) -> f64 {
        2.0 * self.a * t + self.b
    }

    pub fn add(&self, o: &Quad) -> Quad {
        Quad::new(self.a + o.a, self.b + o.b, self.c + o.c)
    }

    pub fn sub(&self, o: &Quad) -> Quad {
        Quad::new(self.a - o.a, self.b - o.b, self.c - o.c)
    }

    /// Coefficients in the local variable `x = t - x0`.
    fn local(&self, x0: f64) -> (f64, f64, f64) {
        (self.a, 2.0 * self.a * x0 + self.b, self.eval(x0))
    }

    /// Inverse of [`Quad::local`].
    fn from_local(a: f64, b: f64, c: f64, x0: f64) -> Quad {
        Quad::new(a, b - 2.0 * a * x0, (a * x0 - b) * x0 + c)
    }

    fn close_to(&self, o: &Quad) -> bool {
        let near = |x: f64, y: f64| (x - y).abs() <= COALESCE_TOL * (1.0 + x.abs().max(y.abs()));
        near(self.a, o.a) && near(self.b, o.b) && near(self.c, o.c)
    }

    /// Minimum of the quadratic over `[lo, hi]` as `(t, value)`, smallest
    /// `t` first on ties.
    pub fn min_on(&self, lo: f64, hi: f64) -> (f64, f64) {
        let mut best = (lo, self.eval(lo));
        if self.a > 0.0 {
            let v = -self.b / (2.0 * self.a);
            if v > lo && v < hi {
                let fv = self.eval(v);
                if fv < best.1 {
                    best = (v, fv);
                }
            }
        }
        let fh = self.eval(hi);
        if fh < best.1 {
            best = (hi, fh);
        }
        best
    }
}

/// One piece of a [`PiecewiseQuadratic`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadPiece {
    pub lo: f64,
    pub hi: f64,
    pub quad: Quad,
    pub label: Label,
}

/// Semistrict local minima as `(t, value)` pairs in increasing `t`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MinimaSet {
    pub points: Vec<(f64, f64)>,
}

/// JSON dump format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PwqDump {
    pub breakpoints: Vec<f64>,
    pub pieces: Vec<[f64; 3]>,
}

/// Running minimum of a function up to some point, see
/// [`PiecewiseQuadratic::prefix_minimum`].
#[derive(Clone, Debug)]
pub struct PrefixMinimum {
    /// Label 0 marks stretches where the minimum is the function itself;
    /// label `k + 1` marks a plateau at `anchors[k]`. Beyond the cut-off the
    /// function stays at its last value.
    pub func: PiecewiseQuadratic,
    /// Points where plateaus attain their value, strictly increasing.
    pub anchors: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseQuadratic {
    breaks: Vec<f64>,
    quads: Vec<Quad>,
    labels: Vec<Label>,
}

fn scale_of(lo: f64, hi: f64) -> f64 {
    1f64.max(lo.abs()).max(hi.abs())
}

/// Incremental construction with coalescing of equal neighbours.
pub(crate) struct Builder {
    breaks: Vec<f64>,
    quads: Vec<Quad>,
    labels: Vec<Label>,
    min_width: f64,
}

impl Builder {
    pub(crate) fn new(lo: f64, hi: f64) -> Self {
        Builder {
            breaks: vec![lo],
            quads: Vec::new(),
            labels: Vec::new(),
            min_width: 1e-12 * scale_of(lo, hi),
        }
    }

    pub(crate) fn push(&mut self, hi: f64, quad: Quad, label: Label) {
        let lo = *self.breaks.last().unwrap();
        if let (Some(q), Some(&l)) = (self.quads.last(), self.labels.last()) {
            if l == label && q.close_to(&quad) {
                *self.breaks.last_mut().unwrap() = hi.max(lo);
                return;
            }
            if hi - lo <= self.min_width {
                return;
            }
        } else if hi - lo <= self.min_width {
            // Tiny first piece: keep it so the domain start is preserved.
            if hi <= lo {
                return;
            }
        }
        self.breaks.push(hi);
        self.quads.push(quad);
        self.labels.push(label);
    }

    pub(crate) fn finish(mut self, hi: f64) -> PiecewiseQuadratic {
        assert!(!self.quads.is_empty(), "builder produced no pieces");
        *self.breaks.last_mut().unwrap() = hi;
        // A sliver first piece followed by others is folded into its neighbour.
        if self.quads.len() > 1 && self.breaks[1] - self.breaks[0] <= self.min_width {
            self.breaks.remove(1);
            self.quads.remove(0);
            self.labels.remove(0);
        }
        PiecewiseQuadratic {
            breaks: self.breaks,
            quads: self.quads,
            labels: self.labels,
        }
    }
}

impl PiecewiseQuadratic {
    /// Builds a function from `k + 1` breakpoints and `k` quadratics.
    pub fn new(breaks: Vec<f64>, quads: Vec<Quad>) -> Result<Self> {
        if quads.is_empty() || breaks.len() != quads.len() + 1 {
            return Err(CdtwError::Precondition(format!(
                "{} breakpoints for {} pieces",
                breaks.len(),
                quads.len()
            )));
        }
        if breaks.iter().any(|b| !b.is_finite())
            || quads
                .iter()
                .any(|q| !(q.a.is_finite() && q.b.is_finite() && q.c.is_finite()))
        {
            return Err(CdtwError::Precondition("non-finite input".into()));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CdtwError::Precondition(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        let labels = vec![0; quads.len()];
        Ok(PiecewiseQuadratic {
            breaks,
            quads,
            labels,
        })
    }

    pub fn from_quad(lo: f64, hi: f64, quad: Quad) -> Self {
        assert!(lo < hi, "empty domain [{lo}, {hi}]");
        PiecewiseQuadratic {
            breaks: vec![lo, hi],
            quads: vec![quad],
            labels: vec![0],
        }
    }

    pub fn constant(lo: f64, hi: f64, value: f64) -> Self {
        Self::from_quad(lo, hi, Quad::constant(value))
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.labels.iter_mut().for_each(|l| *l = label);
        self
    }

    pub fn map_labels(mut self, f: impl Fn(Label) -> Label) -> Self {
        self.labels.iter_mut().for_each(|l| *l = f(*l));
        self
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.breaks[0], *self.breaks.last().unwrap())
    }

    pub fn lo(&self) -> f64 {
        self.breaks[0]
    }

    pub fn hi(&self) -> f64 {
        *self.breaks.last().unwrap()
    }

    pub fn piece_count(&self) -> usize {
        self.quads.len()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }

    pub fn quads(&self) -> &[Quad] {
        &self.quads
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn pieces(&self) -> impl Iterator<Item = QuadPiece> + '_ {
        (0..self.quads.len()).map(move |i| QuadPiece {
            lo: self.breaks[i],
            hi: self.breaks[i + 1],
            quad: self.quads[i],
            label: self.labels[i],
        })
    }

    fn tolerance(&self) -> f64 {
        ROOT_SNAP * scale_of(self.lo(), self.hi()).max(self.hi() - self.lo())
    }

    /// Index of the piece containing `t`, after clamping into the domain.
    pub fn piece_index(&self, t: f64) -> usize {
        let k = self.quads.len();
        self.breaks[1..k].partition_point(|&b| b <= t)
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        let tol = self.tolerance();
        let (lo, hi) = self.domain();
        if !(t >= lo - tol && t <= hi + tol) {
            return Err(CdtwError::Domain { value: t, lo, hi });
        }
        Ok(self.value(t))
    }

    /// Evaluation with `t` clamped into the domain.
    pub fn value(&self, t: f64) -> f64 {
        let t = t.clamp(self.lo(), self.hi());
        self.quads[self.piece_index(t)].eval(t)
    }

    pub fn label_at(&self, t: f64) -> Label {
        self.labels[self.piece_index(t.clamp(self.lo(), self.hi()))]
    }

    pub fn add_quadratic(&self, q: Quad) -> Self {
        let mut out = self.clone();
        out.quads.iter_mut().for_each(|p| *p = p.add(&q));
        out
    }

    fn same_domain(&self, other: &Self) -> Result<()> {
        let tol = self.tolerance().max(other.tolerance());
        if (self.lo() - other.lo()).abs() > tol || (self.hi() - other.hi()).abs() > tol {
            return Err(CdtwError::Precondition(format!(
                "domain mismatch: [{}, {}] vs [{}, {}]",
                self.lo(),
                self.hi(),
                other.lo(),
                other.hi()
            )));
        }
        Ok(())
    }

    /// Sorted union of both breakpoint sets on `self`'s domain.
    fn merged_breaks(&self, other: &[f64]) -> Vec<f64> {
        let (lo, hi) = self.domain();
        let gap = 1e-12 * scale_of(lo, hi);
        let mut xs: Vec<f64> = self
            .breaks
            .iter()
            .chain(other.iter())
            .copied()
            .filter(|&x| x > lo + gap && x < hi - gap)
            .collect();
        xs.sort_by(f64::total_cmp);
        let mut out = Vec::with_capacity(xs.len() + 2);
        out.push(lo);
        for x in xs {
            if x - *out.last().unwrap() > gap {
                out.push(x);
            }
        }
        out.push(hi);
        out
    }

    /// Pointwise sum; labels come from `self`.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_domain(other)?;
        let xs = self.merged_breaks(&other.breaks);
        let mut b = Builder::new(xs[0], *xs.last().unwrap());
        for w in xs.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let i = self.piece_index(mid);
            let j = other.piece_index(mid);
            b.push(w[1], self.quads[i].add(&other.quads[j]), self.labels[i]);
        }
        Ok(b.finish(self.hi()))
    }

    /// The same function with extra breakpoints inserted.
    pub fn merge_refine(&self, extra: &[f64]) -> Self {
        let xs = self.merged_breaks(extra);
        let mut breaks = vec![xs[0]];
        let mut quads = Vec::new();
        let mut labels = Vec::new();
        for w in xs.windows(2) {
            let i = self.piece_index(0.5 * (w[0] + w[1]));
            breaks.push(w[1]);
            quads.push(self.quads[i]);
            labels.push(self.labels[i]);
        }
        PiecewiseQuadratic {
            breaks,
            quads,
            labels,
        }
    }

    /// Restriction to `[lo, hi]`, which must lie inside the domain.
    pub fn restrict(&self, lo: f64, hi: f64) -> Self {
        let lo = lo.max(self.lo());
        let hi = hi.min(self.hi());
        assert!(lo < hi, "empty restriction [{lo}, {hi}]");
        let mut b = Builder::new(lo, hi);
        let first = self.piece_index(lo);
        for i in first..self.quads.len() {
            let end = self.breaks[i + 1].min(hi);
            b.push(end, self.quads[i], self.labels[i]);
            if end >= hi {
                break;
            }
        }
        b.finish(hi)
    }

    /// Pointwise minimum of `f` and `g`; `f` wins ties.
    pub fn lower_envelope(f: &Self, g: &Self) -> Result<Self> {
        f.same_domain(g)?;
        let xs = f.merged_breaks(&g.breaks);
        let mut out = Builder::new(xs[0], *xs.last().unwrap());
        let mut cuts = Vec::with_capacity(4);
        for w in xs.windows(2) {
            let (x0, x1) = (w[0], w[1]);
            let mid = 0.5 * (x0 + x1);
            let i = f.piece_index(mid);
            let j = g.piece_index(mid);
            let (qf, qg) = (f.quads[i], g.quads[j]);
            let d = qg.sub(&qf);
            cuts.clear();
            cuts.push(x0);
            roots_inside(&d, x0, x1, &mut cuts);
            cuts.push(x1);
            for c in cuts.windows(2) {
                let m = 0.5 * (c[0] + c[1]);
                let fm = qf.eval(m);
                if d.eval(m) < -COALESCE_TOL * (1.0 + fm.abs()) {
                    out.push(c[1], qg, g.labels[j]);
                } else {
                    out.push(c[1], qf, f.labels[i]);
                }
            }
        }
        Ok(out.finish(f.hi()))
    }

    /// All semistrict local minima, in increasing order.
    pub fn semistrict_local_minima(&self) -> MinimaSet {
        let k = self.quads.len();
        let mut points = Vec::new();
        // Whether the function rises (Some(true)), stays flat (Some(false))
        // or falls (None) when leaving `t` in the given direction on piece `q`.
        let rising = |q: &Quad, t: f64, leftwards: bool| -> Option<bool> {
            let v = q.eval(t);
            let tol = 1e-10 * (1.0 + v.abs());
            let d = if leftwards { -q.deriv(t) } else { q.deriv(t) };
            if d > tol {
                Some(true)
            } else if d < -tol {
                None
            } else if q.a > A_ZERO {
                Some(true)
            } else if q.a < -A_ZERO {
                None
            } else {
                Some(false)
            }
        };
        let is_min = |left: Option<Option<bool>>, right: Option<Option<bool>>| {
            let l = left.unwrap_or(Some(false));
            let r = right.unwrap_or(Some(false));
            matches!((l, r), (Some(a), Some(b)) if a || b)
        };
        for i in 0..=k {
            let t = self.breaks[i];
            let left = (i > 0).then(|| rising(&self.quads[i - 1], t, true));
            let right = (i < k).then(|| rising(&self.quads[i], t, false));
            if is_min(left, right) {
                let v = if i < k {
                    self.quads[i].eval(t)
                } else {
                    self.quads[k - 1].eval(t)
                };
                points.push((t, v));
            }
            if i < k {
                let q = &self.quads[i];
                if q.a > A_ZERO {
                    let v = -q.b / (2.0 * q.a);
                    let (lo, hi) = (self.breaks[i], self.breaks[i + 1]);
                    let snap = ROOT_SNAP * scale_of(lo, hi);
                    if v > lo + snap && v < hi - snap {
                        points.push((v, q.eval(v)));
                    }
                }
            }
        }
        MinimaSet { points }
    }

    /// Global minimum `(t, value)`, smallest `t` among near-ties.
    pub fn global_min(&self) -> (f64, f64) {
        let mut cands: Vec<(f64, f64)> = self
            .pieces()
            .map(|p| p.quad.min_on(p.lo, p.hi))
            .collect();
        let best = cands.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        let tol = 1e-12 * (1.0 + best.abs());
        cands.retain(|c| c.1 <= best + tol);
        cands
            .into_iter()
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap()
    }

    /// Running minimum `R(s) = min over σ <= min(s, end) of f(σ)` on the
    /// whole domain.
    pub fn prefix_minimum(&self, end: f64) -> PrefixMinimum {
        let (lo, hi) = self.domain();
        let end = end.clamp(lo, hi);
        let snap = ROOT_SNAP * scale_of(lo, hi);
        let mut out = Builder::new(lo, hi);
        let mut anchors: Vec<(f64, f64)> = Vec::new();
        let mut m = self.quads[0].eval(lo);
        let mut m_at = lo;
        let plateau = |out: &mut Builder, to: f64, m: f64, m_at: f64, anchors: &mut Vec<(f64, f64)>| {
            if anchors.last().map_or(true, |a| a.0 != m_at) {
                anchors.push((m_at, m));
            }
            out.push(to, Quad::constant(m), anchors.len() as Label);
        };
        for i in 0..self.quads.len() {
            let x0 = self.breaks[i];
            if x0 >= end {
                break;
            }
            let x1 = self.breaks[i + 1].min(end);
            let q = self.quads[i];
            let mut subs = vec![x0];
            if q.a.abs() > A_ZERO {
                let v = -q.b / (2.0 * q.a);
                if v > x0 + snap && v < x1 - snap {
                    subs.push(v);
                }
            }
            subs.push(x1);
            for w in subs.windows(2) {
                let (y0, y1) = (w[0], w[1]);
                let (f0, f1) = (q.eval(y0), q.eval(y1));
                let tie = 1e-12 * (1.0 + m.abs());
                if f0 < m - tie {
                    m = f0;
                    m_at = y0;
                }
                if f1 >= m - tie {
                    plateau(&mut out, y1, m, m_at, &mut anchors);
                    continue;
                }
                // q falls below m somewhere in (y0, y1].
                let xc = if f0 <= m + tie {
                    y0
                } else {
                    let (mut a, mut b) = (y0, y1);
                    for _ in 0..80 {
                        let c = 0.5 * (a + b);
                        if q.eval(c) > m {
                            a = c;
                        } else {
                            b = c;
                        }
                    }
                    b
                };
                if xc > y0 {
                    plateau(&mut out, xc, m, m_at, &mut anchors);
                }
                out.push(y1, q, 0);
                m = f1;
                m_at = y1;
            }
        }
        if end < hi {
            plateau(&mut out, hi, m, m_at, &mut anchors);
        }
        PrefixMinimum {
            func: out.finish(hi),
            anchors,
        }
    }

    /// Largest relative jump across an interior breakpoint.
    pub fn max_jump(&self) -> f64 {
        (1..self.quads.len())
            .map(|i| {
                let t = self.breaks[i];
                let l = self.quads[i - 1].eval(t);
                let r = self.quads[i].eval(t);
                (l - r).abs() / 1f64.max(l.abs()).max(r.abs())
            })
            .fold(0.0, f64::max)
    }

    /// Removes breakpoint jumps by adding a linear correction to each
    /// piece, so both sides of a breakpoint meet at their average.
    ///
    /// Fails if a jump exceeds `tol` relative.
    pub fn repair_continuity(&mut self, tol: f64) -> Result<f64> {
        let jump = self.max_jump();
        if jump.is_nan() || jump > tol {
            return Err(CdtwError::Numeric(format!(
                "breakpoint jump {jump:e} exceeds {tol:e}"
            )));
        }
        if jump == 0.0 {
            return Ok(0.0);
        }
        let k = self.quads.len();
        let targets: Vec<f64> = (0..=k)
            .map(|i| {
                let t = self.breaks[i];
                match i {
                    0 => self.quads[0].eval(t),
                    _ if i == k => self.quads[k - 1].eval(t),
                    _ => 0.5 * (self.quads[i - 1].eval(t) + self.quads[i].eval(t)),
                }
            })
            .collect();
        for i in 0..k {
            let (x0, x1) = (self.breaks[i], self.breaks[i + 1]);
            let q = &mut self.quads[i];
            let d0 = targets[i] - q.eval(x0);
            let d1 = targets[i + 1] - q.eval(x1);
            let slope = (d1 - d0) / (x1 - x0);
            q.b += slope;
            q.c += d0 - slope * x0;
        }
        Ok(jump)
    }

    /// Lifts pieces that dip below zero; returns the largest lift.
    pub fn clamp_nonnegative(&mut self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.quads.len() {
            let (_, v) = self.quads[i].min_on(self.breaks[i], self.breaks[i + 1]);
            if v < 0.0 {
                self.quads[i].c -= v;
                worst = worst.max(-v);
            }
        }
        worst
    }

    /// Samples `f` and fits one quadratic between consecutive events.
    ///
    /// `f` must be quadratic between the given events. Each fit is checked
    /// at the quarter points and the interval is bisected if the check
    /// fails. Returns the function and the number of bisections.
    pub fn fit(
        lo: f64,
        hi: f64,
        events: &mut Vec<f64>,
        f: impl Fn(f64) -> f64,
        label: Label,
    ) -> (Self, usize) {
        assert!(lo < hi, "empty fit domain [{lo}, {hi}]");
        let gap = 1e-10 * scale_of(lo, hi).max(hi - lo);
        events.retain(|&e| e.is_finite() && e > lo + gap && e < hi - gap);
        events.sort_by(f64::total_cmp);
        let mut xs = Vec::with_capacity(events.len() + 2);
        xs.push(lo);
        for &e in events.iter() {
            if e - xs.last().unwrap() > gap {
                xs.push(e);
            }
        }
        if hi - xs.last().unwrap() <= gap && xs.len() > 1 {
            xs.pop();
        }
        xs.push(hi);

        let mut out = Builder::new(lo, hi);
        let mut refinements = 0;
        let mut f0 = f(lo);
        for w in xs.windows(2) {
            let f1 = f(w[1]);
            fit_interval(&f, w[0], w[1], f0, f1, label, &mut out, &mut refinements, 0);
            f0 = f1;
        }
        (out.finish(hi), refinements)
    }

    pub fn dump(&self) -> PwqDump {
        PwqDump {
            breakpoints: self.breaks.clone(),
            pieces: self.quads.iter().map(|q| [q.a, q.b, q.c]).collect(),
        }
    }

    pub fn from_dump(d: &PwqDump) -> Result<Self> {
        Self::new(
            d.breakpoints.clone(),
            d.pieces.iter().map(|p| Quad::new(p[0], p[1], p[2])).collect(),
        )
    }
}

#[allow(clippy::too_many_arguments)]
fn fit_interval(
    f: &impl Fn(f64) -> f64,
    x0: f64,
    x1: f64,
    f0: f64,
    f1: f64,
    label: Label,
    out: &mut Builder,
    refinements: &mut usize,
    depth: u32,
) {
    let h = x1 - x0;
    let xm = 0.5 * (x0 + x1);
    let fm = f(xm);
    let a = 2.0 * (f1 - 2.0 * fm + f0) / (h * h);
    let b = (f1 - f0) / h - a * h;
    let mut a = a;
    if a.abs() < A_ZERO {
        a = 0.0;
    }
    let q = Quad::from_local(a, b, f0, x0);
    let local = |x: f64| (a * (x - x0) + b) * (x - x0) + f0;
    let ok = [0.25, 0.75].iter().all(|&r| {
        let x = x0 + r * h;
        let fx = f(x);
        (local(x) - fx).abs() <= FIT_TOL * (1.0 + fx.abs().max(f0.abs()).max(f1.abs()))
    });
    if ok || depth >= 30 || h <= 1e-12 * scale_of(x0, x1) {
        out.push(x1, q, label);
        return;
    }
    *refinements += 1;
    fit_interval(f, x0, xm, f0, fm, label, out, refinements, depth + 1);
    fit_interval(f, xm, x1, fm, f1, label, out, refinements, depth + 1);
}

/// Appends the sign-changing roots of `d` strictly inside `(x0, x1)`.
fn roots_inside(d: &Quad, x0: f64, x1: f64, out: &mut Vec<f64>) {
    let (mut a, b, c) = d.local(x0);
    let w = x1 - x0;
    let snap = ROOT_SNAP * scale_of(x0, x1);
    if a.abs() < A_ZERO {
        a = 0.0;
    }
    let mut roots = [f64::NAN; 2];
    if a == 0.0 {
        if b != 0.0 {
            roots[0] = -c / b;
        }
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc.abs() <= DISC_TANGENT * (b * b + (4.0 * a * c).abs()) || disc < 0.0 {
            return;
        }
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        roots[0] = q / a;
        if q != 0.0 {
            roots[1] = c / q;
        }
    }
    if roots[0] > roots[1] {
        roots.swap(0, 1);
    }
    for r in roots {
        if r.is_finite() && r > snap && r < w - snap {
            let x = x0 + r;
            if out.last().map_or(true, |&l| x - l > snap) {
                out.push(x);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq() -> Quad {
        Quad::new(1.0, 0.0, 0.0)
    }

    fn two_piece() -> PiecewiseQuadratic {
        PiecewiseQuadratic::new(vec![0.0, 1.0, 2.0], vec![sq(), Quad::constant(1.0)]).unwrap()
    }

    #[test]
    fn eval_examples() {
        let f = PiecewiseQuadratic::from_quad(0.0, 2.0, sq());
        assert_eq!(f.eval(1.5).unwrap(), 2.25);
        assert_eq!(two_piece().eval(1.0).unwrap(), 1.0);
        let f = PiecewiseQuadratic::from_quad(0.0, 4.0, Quad::new(0.0, 2.0, 3.0));
        assert_eq!(f.eval(0.0).unwrap(), 3.0);
        assert!(f.eval(4.5).is_err());
    }

    #[test]
    fn envelope_examples() {
        let f = PiecewiseQuadratic::from_quad(0.0, 2.0, sq());
        let g = PiecewiseQuadratic::constant(0.0, 2.0, 1.0);
        let e = PiecewiseQuadratic::lower_envelope(&f, &g).unwrap();
        assert_eq!(e.breakpoints(), &[0.0, 1.0, 2.0]);
        assert_eq!(e.quads(), &[sq(), Quad::constant(1.0)]);

        let e = PiecewiseQuadratic::lower_envelope(&f, &f).unwrap();
        assert_eq!(e, f);

        let f = PiecewiseQuadratic::from_quad(0.0, 4.0, Quad::new(1.0, -2.0, 1.5));
        let g = PiecewiseQuadratic::from_quad(0.0, 4.0, Quad::new(1.0, -6.0, 9.5));
        let e = PiecewiseQuadratic::lower_envelope(&f, &g).unwrap();
        assert_eq!(e.piece_count(), 2);
        assert!((e.breakpoints()[1] - 2.0).abs() < 1e-12);
        assert_eq!(e.quads()[0], f.quads()[0]);
        assert_eq!(e.quads()[1], g.quads()[0]);
    }

    #[test]
    fn envelope_rejects_domain_mismatch() {
        let f = PiecewiseQuadratic::constant(0.0, 1.0, 0.0);
        let g = PiecewiseQuadratic::constant(0.0, 2.0, 0.0);
        assert!(PiecewiseQuadratic::lower_envelope(&f, &g).is_err());
    }

    #[test]
    fn minima_examples() {
        let f = PiecewiseQuadratic::from_quad(0.0, 3.0, Quad::new(1.0, -2.0, 1.0));
        assert_eq!(f.semistrict_local_minima().points, vec![(1.0, 0.0)]);
        let f = PiecewiseQuadratic::constant(0.0, 1.0, 5.0);
        assert!(f.semistrict_local_minima().points.is_empty());
        let v = PiecewiseQuadratic::new(
            vec![0.0, 1.0, 2.0],
            vec![Quad::new(0.0, -1.0, 2.0), Quad::new(0.0, 1.0, 0.0)],
        )
        .unwrap();
        assert_eq!(v.semistrict_local_minima().points, vec![(1.0, 1.0)]);
    }

    #[test]
    fn plateau_edges_are_semistrict() {
        // Falls onto a flat stretch, then rises off it.
        let f = PiecewiseQuadratic::new(
            vec![0.0, 1.0, 2.0, 3.0],
            vec![
                Quad::new(0.0, -1.0, 1.0),
                Quad::constant(0.0),
                Quad::new(0.0, 1.0, -2.0),
            ],
        )
        .unwrap();
        let ts: Vec<f64> = f.semistrict_local_minima().points.iter().map(|p| p.0).collect();
        assert_eq!(ts, vec![1.0, 2.0]);
    }

    #[test]
    fn increasing_function_has_left_endpoint_minimum() {
        let f = PiecewiseQuadratic::from_quad(0.0, 1.0, Quad::new(0.0, 1.0, 0.0));
        assert_eq!(f.semistrict_local_minima().points, vec![(0.0, 0.0)]);
    }

    #[test]
    fn add_quadratic_examples() {
        let f = PiecewiseQuadratic::from_quad(0.0, 1.0, sq());
        assert_eq!(f.add_quadratic(Quad::constant(3.0)).quads()[0], Quad::new(1.0, 0.0, 3.0));
        assert_eq!(f.add_quadratic(Quad::new(-1.0, 0.0, 0.0)).quads()[0], Quad::ZERO);
        let g = PiecewiseQuadratic::new(
            vec![0.0, 1.0, 2.0],
            vec![Quad::new(0.0, 1.0, 0.0), Quad::constant(1.0)],
        )
        .unwrap()
        .add_quadratic(sq());
        assert_eq!(g.quads(), &[Quad::new(1.0, 1.0, 0.0), Quad::new(1.0, 0.0, 1.0)]);
    }

    #[test]
    fn merge_refine_examples() {
        let f = PiecewiseQuadratic::from_quad(0.0, 2.0, sq());
        assert_eq!(f.merge_refine(&[1.0]).piece_count(), 2);
        let g = two_piece();
        assert_eq!(g.merge_refine(&[1.0]).piece_count(), 2);
        let h = f.merge_refine(&[0.5, 1.5]);
        assert_eq!(h.piece_count(), 3);
        for i in 0..=20 {
            let t = i as f64 / 10.0;
            assert_eq!(h.eval(t).unwrap(), f.eval(t).unwrap());
        }
    }

    #[test]
    fn prefix_minimum_tracks_running_min() {
        // (t-1)^2 on [0, 3]: falls to 0 at t = 1 then stays.
        let f = PiecewiseQuadratic::from_quad(0.0, 3.0, Quad::new(1.0, -2.0, 1.0));
        let r = f.prefix_minimum(3.0);
        assert_eq!(r.anchors, vec![(1.0, 0.0)]);
        assert_eq!(r.func.value(0.5), 0.25);
        assert_eq!(r.func.value(2.5), 0.0);
        assert_eq!(r.func.label_at(0.5), 0);
        assert_eq!(r.func.label_at(2.5), 1);

        // Cut off while still falling: frozen at the cut-off value.
        let r = f.prefix_minimum(0.5);
        assert_eq!(r.anchors, vec![(0.5, 0.25)]);
        assert_eq!(r.func.value(2.0), 0.25);
        assert_eq!(r.func.label_at(2.0), 1);

        let r = f.prefix_minimum(0.0);
        assert_eq!(r.anchors, vec![(0.0, 1.0)]);
        assert_eq!(r.func.value(2.0), 1.0);
    }

    #[test]
    fn prefix_minimum_of_increasing_is_flat() {
        let f = PiecewiseQuadratic::from_quad(0.0, 2.0, Quad::new(0.0, 1.0, 1.0));
        let r = f.prefix_minimum(1.5);
        assert_eq!(r.anchors, vec![(0.0, 1.0)]);
        assert_eq!(r.func.domain(), (0.0, 2.0));
        assert_eq!(r.func.value(1.8), 1.0);
        assert_eq!(r.func.piece_count(), 1);
    }

    #[test]
    fn global_min_prefers_smallest_t() {
        let f = PiecewiseQuadratic::constant(0.0, 1.0, 2.0);
        assert_eq!(f.global_min(), (0.0, 2.0));
    }

    #[test]
    fn repair_closes_small_jumps() {
        let mut f = PiecewiseQuadratic::new(
            vec![0.0, 1.0, 2.0],
            vec![Quad::constant(1.0), Quad::constant(1.0 + 1e-9)],
        )
        .unwrap();
        assert!(f.repair_continuity(CONTINUITY_TOL).is_ok());
        assert!(f.max_jump() < 1e-15);
        let mut g = PiecewiseQuadratic::new(
            vec![0.0, 1.0, 2.0],
            vec![Quad::constant(1.0), Quad::constant(2.0)],
        )
        .unwrap();
        assert!(g.repair_continuity(CONTINUITY_TOL).is_err());
    }

    #[test]
    fn fit_recovers_piecewise_quadratics() {
        let f = |t: f64| if t < 1.0 { t * t } else { 2.0 * t - 1.0 };
        let (p, refinements) = PiecewiseQuadratic::fit(0.0, 3.0, &mut vec![1.0], f, 7);
        assert_eq!(refinements, 0);
        assert_eq!(p.piece_count(), 2);
        assert_eq!(p.labels(), &[7, 7]);
        for i in 0..=30 {
            let t = i as f64 / 10.0;
            assert!((p.value(t) - f(t)).abs() < 1e-12);
        }
        // Missing event: bisection finds the kink.
        let (p, refinements) = PiecewiseQuadratic::fit(0.0, 3.0, &mut vec![], f, 0);
        assert!(refinements > 0);
        for i in 0..=30 {
            let t = i as f64 / 10.0;
            assert!((p.value(t) - f(t)).abs() < 1e-6);
        }
    }

    #[test]
    fn dump_round_trips() {
        let f = two_piece();
        let json = serde_json::to_string(&f.dump()).unwrap();
        assert_eq!(json, r#"{"breakpoints":[0.0,1.0,2.0],"pieces":[[1.0,0.0,0.0],[0.0,0.0,1.0]]}"#);
        let back: PwqDump = serde_json::from_str(&json).unwrap();
        assert_eq!(PiecewiseQuadratic::from_dump(&back).unwrap(), f);
    }
}
