// SPDX-License-Identifier: Apache-2.0 OR MIT

//! The cell-by-cell dynamic program.
//!
//! Every border of every cell carries a piecewise-quadratic function
//! `apx(λ)`: the cost of some monotone path from the origin to the border
//! point at parameter `λ`, within factor 5 of the optimum. Cells are visited
//! in anti-diagonal layers. Each cell computes its north and east functions
//! from its south and west ones:
//!
//! 1. start from the cheapest known corner costs (NW for north, SE for east);
//! 2. find, on each input border, the start point of the cheapest path to
//!    the NE corner;
//! 3. propagate from that single start point to the adjoining output border;
//! 4. from the input border whose NE path is strictly cheaper, propagate all
//!    starts up to that point to the opposing output border, using the split
//!    `opt(A(s), B(t)) = ρ_in(s) + ρ_out(t)` and a running minimum.
//!
//! Pieces remember which start produced them, so the path realising the
//! final value can be rebuilt.

use std::sync::Arc;

use serde::Serialize;

use crate::cell::{Cell, MonotonePath, Side};
use crate::error::{CdtwError, Result};
use crate::geometry::{build_arc_table, ArcTable, Point2, PolygonalCurve};
use crate::norms::{GaugePolygon, NormHandle};
use crate::pwq::{Label, PiecewiseQuadratic, Quad, CONTINUITY_TOL};

/// Relative gap below which the two NE-corner candidates count as tied.
pub const TIE_TOL: f64 = 1e-11;

/// Where the pieces of a border function come from.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Provenance {
    /// Straight path from the origin along the parameter-space boundary.
    Base,
    /// Optimal path from a fixed point of an input border of the owning cell.
    Start { input: Side, at: f64 },
    /// Optimal path from the input border point with the same parameter.
    Diagonal { input: Side },
}

/// One output border (or boundary border) and its cost function.
#[derive(Clone, Debug)]
pub struct BorderState {
    /// Owning cell, one based; `j = 0` or `i = 0` marks the boundary.
    pub cell: (usize, usize),
    /// `Side::N` for horizontal borders, `Side::E` for vertical ones.
    pub side: Side,
    pub apx: PiecewiseQuadratic,
    pub rank: usize,
    /// Semistrict minima of the NE-corner cost on the input that fed an
    /// opposing propagation (0 if none ran).
    pub candidates: usize,
    /// Distinct start points used by that propagation.
    pub anchors: usize,
    /// Largest breakpoint jump repaired after the cell was processed.
    pub repaired_jump: f64,
    prov: Vec<Provenance>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BorderReport {
    pub cell: [usize; 2],
    pub side: &'static str,
    pub rank: usize,
    pub pieces: usize,
    pub candidates: usize,
    pub anchors: usize,
    pub repaired_jump: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Diagnostics {
    pub value: f64,
    pub total_pieces: usize,
    pub max_rank: usize,
    /// Bisections needed by sampled fits; 0 when every kink was predicted.
    pub fit_refinements: usize,
    /// Whether the curves were swapped so that `n >= m`.
    pub swapped: bool,
    pub per_border: Vec<BorderReport>,
}

/// Result of [`cdtw_approx`].
#[derive(Clone, Debug)]
pub struct Approximation {
    pub value: f64,
    /// A monotone path from the origin to the far corner whose cost is
    /// `value`, in the caller's orientation.
    pub witness: MonotonePath,
    pub diagnostics: Diagnostics,
    engine: Engine,
}

impl Approximation {
    /// Border functions, in the internal orientation (`n >= m`).
    pub fn borders(&self) -> impl Iterator<Item = &BorderState> {
        self.engine.hor.iter().flatten().chain(self.engine.ver.iter().flatten()).flatten()
    }

    /// Cost of travelling straight along a border between two parameters.
    pub fn border_travel_cost(&self, border: &BorderState, a: f64, b: f64) -> f64 {
        let (a, b) = (a.min(b), a.max(b));
        let (i, j) = border.cell;
        let e = &self.engine;
        if border.side == Side::N {
            let c = e.cell(i, j.max(1));
            let t = e.tq.prefix_lengths()[j];
            c.segment_cost(Point2::new(a, t), Point2::new(b, t)).unwrap_or(f64::NAN)
        } else {
            let c = e.cell(i.max(1), j);
            let s = e.tp.prefix_lengths()[i];
            c.segment_cost(Point2::new(s, a), Point2::new(s, b)).unwrap_or(f64::NAN)
        }
    }

    /// Curves in the internal orientation.
    pub fn internal_curves(&self) -> (&PolygonalCurve, &PolygonalCurve) {
        (&self.engine.p, &self.engine.q)
    }

    /// The cell for segments `i` of `P` and `j` of `Q` (one based,
    /// internal orientation).
    pub fn cell(&self, i: usize, j: usize) -> Cell {
        self.engine.cell(i, j)
    }
}

#[derive(Clone, Debug)]
struct Engine {
    p: PolygonalCurve,
    q: PolygonalCurve,
    tp: ArcTable,
    tq: ArcTable,
    gauge: Arc<GaugePolygon>,
    /// `hor[i][j]`: north border of cell `(i, j)`, `i >= 1`.
    hor: Vec<Vec<Option<BorderState>>>,
    /// `ver[i][j]`: east border of cell `(i, j)`, `j >= 1`.
    ver: Vec<Vec<Option<BorderState>>>,
    /// Corner costs.
    h: Vec<Vec<f64>>,
    /// Best start feeding each NE corner.
    best: Vec<Vec<(Side, f64)>>,
    refinements: usize,
}

impl Engine {
    fn cell(&self, i: usize, j: usize) -> Cell {
        Cell::new(
            (i, j),
            self.tp.segment_range(i - 1),
            self.tq.segment_range(j - 1),
            self.p.segment(i - 1),
            self.q.segment(j - 1),
            Arc::clone(&self.gauge),
        )
    }

    fn hor(&self, i: usize, j: usize) -> &BorderState {
        self.hor[i][j].as_ref().expect("horizontal border not computed")
    }

    fn ver(&self, i: usize, j: usize) -> &BorderState {
        self.ver[i][j].as_ref().expect("vertical border not computed")
    }

    fn base(&mut self) {
        let n = self.p.segment_count();
        let m = self.q.segment_count();
        for i in 1..=n {
            let c = self.cell(i, 1);
            let apx = c
                .cost_from_point(c.sw(), Side::S)
                .add_quadratic(Quad::constant(self.h[i - 1][0]));
            self.h[i][0] = apx.value(c.s1);
            self.refinements += c.fit_refinements();
            self.hor[i][0] = Some(BorderState::new((i, 0), Side::N, apx, Provenance::Base));
        }
        for j in 1..=m {
            let c = self.cell(1, j);
            let apx = c
                .cost_from_point(c.sw(), Side::W)
                .add_quadratic(Quad::constant(self.h[0][j - 1]));
            self.h[0][j] = apx.value(c.t1);
            self.refinements += c.fit_refinements();
            self.ver[0][j] = Some(BorderState::new((0, j), Side::E, apx, Provenance::Base));
        }
    }

    fn process(&mut self, i: usize, j: usize) -> Result<()> {
        let c = self.cell(i, j);
        let south = self.hor(i, j - 1);
        let west = self.ver(i - 1, j);

        // Corner starts.
        let mut north = BorderState::new(
            (i, j),
            Side::N,
            c.cost_from_point(c.nw(), Side::N)
                .add_quadratic(Quad::constant(self.h[i - 1][j])),
            Provenance::Start {
                input: Side::W,
                at: c.t1,
            },
        );
        let mut east = BorderState::new(
            (i, j),
            Side::E,
            c.cost_from_point(c.se(), Side::E)
                .add_quadratic(Quad::constant(self.h[i][j - 1])),
            Provenance::Start {
                input: Side::S,
                at: c.s1,
            },
        );

        // Cheapest paths to the NE corner from each input.
        let g_s = south.apx.add(&c.cost_to_point(Side::S, c.ne()))?;
        let g_w = west.apx.add(&c.cost_to_point(Side::W, c.ne()))?;
        let (s_star_s, h_s) = g_s.global_min();
        let (s_star_w, h_w) = g_w.global_min();

        // Adjoining propagation from the single best start.
        let f = c
            .cost_fn_fixed_start(Side::W, s_star_w, Side::N)?
            .add_quadratic(Quad::constant(west.apx.value(s_star_w)));
        north.absorb(f, &[Provenance::Start {
            input: Side::W,
            at: s_star_w,
        }])?;
        let f = c
            .cost_fn_fixed_start(Side::S, s_star_s, Side::E)?
            .add_quadratic(Quad::constant(south.apx.value(s_star_s)));
        east.absorb(f, &[Provenance::Start {
            input: Side::S,
            at: s_star_s,
        }])?;

        // Opposing propagation from the strictly better input.
        let tie = TIE_TOL * 1f64.max(h_s.abs()).max(h_w.abs());
        let corner = c.opt_cost(c.sw(), c.ne());
        if h_s < h_w - tie {
            opposing(&c, &g_s, s_star_s, corner, Side::S, &mut north)?;
            north.rank = south.rank + 1;
        }
        if h_w < h_s - tie {
            opposing(&c, &g_w, s_star_w, corner, Side::W, &mut east)?;
            east.rank = west.rank + 1;
        }

        for b in [&mut north, &mut east] {
            b.apx.clamp_nonnegative();
            b.repaired_jump = b.apx.repair_continuity(CONTINUITY_TOL).map_err(|e| {
                CdtwError::Numeric(format!("cell ({i}, {j}) {}: {e}", b.side.name()))
            })?;
        }

        self.h[i][j] = h_s.min(h_w);
        self.best[i][j] = if h_s <= h_w {
            (Side::S, s_star_s)
        } else {
            (Side::W, s_star_w)
        };
        self.refinements += c.fit_refinements();
        self.hor[i][j] = Some(north);
        self.ver[i][j] = Some(east);
        Ok(())
    }

    /// Parameter-space point of the input `side` of cell `(i, j)`.
    fn input_point(&self, i: usize, j: usize, side: Side, lambda: f64) -> Point2 {
        match side {
            Side::S => Point2::new(lambda, self.tq.prefix_lengths()[j - 1]),
            Side::W => Point2::new(self.tp.prefix_lengths()[i - 1], lambda),
            _ => unreachable!("inputs are S or W"),
        }
    }

    /// Appends a path from the origin to the point at `lambda` on the given
    /// border.
    fn trace(&self, horizontal: bool, i: usize, j: usize, lambda: f64, out: &mut MonotonePath) {
        let (b, point) = if horizontal {
            (self.hor(i, j), Point2::new(lambda, self.tq.prefix_lengths()[j]))
        } else {
            (self.ver(i, j), Point2::new(self.tp.prefix_lengths()[i], lambda))
        };
        let prov = b.prov[b.apx.label_at(lambda) as usize];
        let (input, at) = match prov {
            Provenance::Base => {
                out.push(Point2::ORIGIN);
                out.push(point);
                return;
            }
            Provenance::Start { input, at } => (input, at),
            Provenance::Diagonal { input } => (input, lambda),
        };
        self.trace_into(i, j, input, at, point, out);
    }

    /// Path to `input(at)` of cell `(i, j)`, then on to `target` inside it.
    fn trace_into(&self, i: usize, j: usize, input: Side, at: f64, target: Point2, out: &mut MonotonePath) {
        let start = self.input_point(i, j, input, at);
        match input {
            Side::S => self.trace(true, i, j - 1, at, out),
            _ => self.trace(false, i - 1, j, at, out),
        }
        let c = self.cell(i, j);
        let target = Point2::new(target.x.max(start.x), target.y.max(start.y));
        if let Ok((_, seg)) = c.opt_path(start, target) {
            for p in seg.waypoints.into_iter().skip(1) {
                out.push(p);
            }
        }
    }

    fn witness(&self) -> MonotonePath {
        let n = self.p.segment_count();
        let m = self.q.segment_count();
        let (side, at) = self.best[n][m];
        let mut out = MonotonePath::default();
        let ne = Point2::new(self.tp.total(), self.tq.total());
        self.trace_into(n, m, side, at, ne, &mut out);
        out
    }
}

impl BorderState {
    fn new(cell: (usize, usize), side: Side, apx: PiecewiseQuadratic, prov: Provenance) -> Self {
        BorderState {
            cell,
            side,
            apx: apx.with_label(0),
            rank: 0,
            candidates: 0,
            anchors: 0,
            repaired_jump: 0.0,
            prov: vec![prov],
        }
    }

    /// Replaces `apx` by its envelope with `f`, whose labels index `provs`.
    fn absorb(&mut self, f: PiecewiseQuadratic, provs: &[Provenance]) -> Result<()> {
        let base = self.prov.len() as Label;
        self.prov.extend_from_slice(provs);
        let f = f.map_labels(|l| base + l);
        self.apx = PiecewiseQuadratic::lower_envelope(&self.apx, &f)?;
        Ok(())
    }
}

/// Propagates every start on `input` up to `s_star` to the opposing border.
///
/// With `G(s) = A.apx(s) + opt(A(s), NE)` and `R` its running minimum,
/// `min over s <= min(s*, t) of A.apx(s) + opt(A(s), B(t))` equals
/// `ρ_out(t) + R(min(t, s*)) - opt(SW, NE)`.
fn opposing(
    c: &Cell,
    g: &PiecewiseQuadratic,
    s_star: f64,
    corner: f64,
    input: Side,
    out: &mut BorderState,
) -> Result<()> {
    let output = input.opp();
    let rho_out = c.cost_from_point(c.sw(), output);
    let pm = g.prefix_minimum(s_star);
    debug_assert!(pm.anchors.windows(2).all(|w| w[0].0 < w[1].0));
    let mut provs = vec![Provenance::Diagonal { input }];
    provs.extend(pm.anchors.iter().map(|&(at, _)| Provenance::Start { input, at }));
    let f = pm.func.add(&rho_out)?.add_quadratic(Quad::constant(-corner));
    out.candidates = g.semistrict_local_minima().points.len();
    out.anchors = pm.anchors.len();
    out.absorb(f, &provs)
}

/// Approximates the CDTW distance of `p` and `q` within factor 5.
///
/// The norm must be polygonal; use [`crate::norms::approximate_norm`]
/// first for the 2-norm.
pub fn cdtw_approx(p: &PolygonalCurve, q: &PolygonalCurve, norm: &NormHandle) -> Result<Approximation> {
    let gauge = norm.to_gauge().ok_or(CdtwError::NotPolygonal)?;
    let swapped = p.segment_count() < q.segment_count();
    let (p, q) = if swapped { (q, p) } else { (p, q) };
    let n = p.segment_count();
    let m = q.segment_count();
    let mut e = Engine {
        p: p.clone(),
        q: q.clone(),
        tp: build_arc_table(p, norm),
        tq: build_arc_table(q, norm),
        gauge,
        hor: vec![vec![None; m + 1]; n + 1],
        ver: vec![vec![None; m + 1]; n + 1],
        h: vec![vec![0.0; m + 1]; n + 1],
        best: vec![vec![(Side::S, 0.0); m + 1]; n + 1],
        refinements: 0,
    };
    e.base();
    for layer in 2..=n + m {
        for i in layer.saturating_sub(m).max(1)..=(layer - 1).min(n) {
            e.process(i, layer - i)?;
        }
    }
    let value = e.h[n][m];
    if !value.is_finite() {
        return Err(CdtwError::Numeric(format!("non-finite result {value}")));
    }
    let mut witness = e.witness();
    if swapped {
        witness = witness.transposed();
    }
    let mut per_border = Vec::new();
    let mut total_pieces = 0;
    let mut max_rank = 0;
    for b in e.hor.iter().flatten().chain(e.ver.iter().flatten()).flatten() {
        total_pieces += b.apx.piece_count();
        max_rank = max_rank.max(b.rank);
        per_border.push(BorderReport {
            cell: [b.cell.0, b.cell.1],
            side: b.side.name(),
            rank: b.rank,
            pieces: b.apx.piece_count(),
            candidates: b.candidates,
            anchors: b.anchors,
            repaired_jump: b.repaired_jump,
        });
    }
    let diagnostics = Diagnostics {
        value,
        total_pieces,
        max_rank,
        fit_refinements: e.refinements,
        swapped,
        per_border,
    };
    Ok(Approximation {
        value,
        witness,
        diagnostics,
        engine: e,
    })
}
