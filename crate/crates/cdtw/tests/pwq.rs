// SPDX-License-Identifier: Apache-2.0 OR MIT

use cdtw::pwq::{PiecewiseQuadratic, Quad};
use proptest::prelude::*;

const LO: f64 = 0.0;
const HI: f64 = 10.0;

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

/// Sorted interior breakpoints and one quadratic per piece.
fn raw_pieces(max: usize) -> impl Strategy<Value = (Vec<f64>, Vec<(f64, f64, f64)>)> {
    (1..=max).prop_flat_map(|k| {
        (
            prop::collection::vec(0.01..0.99f64, k - 1),
            prop::collection::vec((-2.0..2.0f64, -5.0..5.0f64, -10.0..10.0f64), k),
        )
    })
}

fn breaks_of(cuts: &[f64]) -> Vec<f64> {
    let mut b: Vec<f64> = cuts.iter().map(|c| LO + c * (HI - LO)).collect();
    b.sort_by(f64::total_cmp);
    b.dedup_by(|x, y| (*x - *y).abs() < 1e-6);
    let mut out = vec![LO];
    out.extend(b);
    out.push(HI);
    out
}

/// Coefficients `(a, b, c)` for `a t² + b t + c`, not necessarily continuous.
fn build(cuts: &[f64], coefs: &[(f64, f64, f64)]) -> PiecewiseQuadratic {
    let br = breaks_of(cuts);
    let quads = (0..br.len() - 1)
        .map(|i| {
            let (a, b, c) = coefs[i.min(coefs.len() - 1)];
            Quad { a, b, c }
        })
        .collect();
    PiecewiseQuadratic::new(br, quads).unwrap()
}

/// Continuous version: each piece starts where the previous one ended.
fn build_continuous(cuts: &[f64], coefs: &[(f64, f64, f64)]) -> PiecewiseQuadratic {
    let br = breaks_of(cuts);
    let mut quads: Vec<Quad> = Vec::new();
    for i in 0..br.len() - 1 {
        let (a, b, c) = coefs[i.min(coefs.len() - 1)];
        let mut q = Quad { a, b, c };
        if let Some(prev) = quads.last() {
            let t = br[i];
            q.c += prev.eval(t) - q.eval(t);
        }
        quads.push(q);
    }
    PiecewiseQuadratic::new(br, quads).unwrap()
}

/// Exact minimum of `a t² + b t + c` on `[lo, hi]`, from endpoints and vertex.
fn quad_min(a: f64, b: f64, c: f64, lo: f64, hi: f64) -> f64 {
    let f = |t: f64| (a * t + b) * t + c;
    let mut m = f(lo).min(f(hi));
    if a > 0.0 {
        let v = -b / (2.0 * a);
        if v > lo && v < hi {
            m = m.min(f(v));
        }
    }
    m
}

/// Minimum of `f` over `[LO, upto]` by brute force over pieces.
fn brute_min(f: &PiecewiseQuadratic, upto: f64) -> f64 {
    let br = f.breakpoints();
    let mut m = f64::INFINITY;
    for (i, q) in f.quads().iter().enumerate() {
        let (lo, hi) = (br[i], br[i + 1].min(upto));
        if lo > upto {
            break;
        }
        m = m.min(quad_min(q.a, q.b, q.c, lo, hi.max(lo)));
    }
    m
}

fn samples(n: usize) -> impl Iterator<Item = f64> {
    // Irrational offset keeps samples off the generated breakpoints.
    (0..n).map(move |k| LO + (HI - LO) * ((k as f64 + 0.291_403_7) / n as f64))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn envelope_is_pointwise_min((c1, q1) in raw_pieces(50), (c2, q2) in raw_pieces(50)) {
        let f = build(&c1, &q1);
        let g = build(&c2, &q2);
        let e = PiecewiseQuadratic::lower_envelope(&f, &g).unwrap();
        for t in samples(1000) {
            let want = f.value(t).min(g.value(t));
            prop_assert!(close(e.value(t), want, 1e-9), "t={} env={} min={}", t, e.value(t), want);
        }
        prop_assert_eq!(e.domain(), (LO, HI));
        prop_assert!(e.breakpoints().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn envelope_commutes_and_is_idempotent((c1, q1) in raw_pieces(30), (c2, q2) in raw_pieces(30)) {
        let f = build(&c1, &q1);
        let g = build(&c2, &q2);
        let fg = PiecewiseQuadratic::lower_envelope(&f, &g).unwrap();
        let gf = PiecewiseQuadratic::lower_envelope(&g, &f).unwrap();
        let ff = PiecewiseQuadratic::lower_envelope(&f, &f).unwrap();
        for t in samples(500) {
            prop_assert!(close(fg.value(t), gf.value(t), 1e-9));
            prop_assert!(close(ff.value(t), f.value(t), 1e-12));
        }
    }

    #[test]
    fn minima_match_dense_sampling((c, q) in raw_pieces(20)) {
        let f = build_continuous(&c, &q);
        let mins = f.semistrict_local_minima().points;
        prop_assert!(!mins.is_empty());
        let (gt, gv) = f.global_min();
        let exact = brute_min(&f, HI);
        prop_assert!(close(gv, exact, 1e-9), "global {} vs {}", gv, exact);
        prop_assert!(close(f.value(gt), gv, 1e-9));
        // The global minimum is among the reported minima.
        prop_assert!(mins.iter().any(|m| close(m.1, exact, 1e-9)));
        // Every reported point is a local minimum on a fine neighbourhood.
        let h = 1e-5;
        for &(t, v) in &mins {
            prop_assert!(close(f.value(t), v, 1e-9));
            for s in [t - h, t + h] {
                if (LO..=HI).contains(&s) {
                    prop_assert!(f.value(s) >= v - 1e-7 * v.abs().max(1.0), "t={} v={} f({})={}", t, v, s, f.value(s));
                }
            }
        }
        // Every strict dip in a dense sample lies near a reported minimum.
        let ts: Vec<f64> = (0..=4000).map(|k| LO + (HI - LO) * k as f64 / 4000.0).collect();
        let vs: Vec<f64> = ts.iter().map(|&t| f.value(t)).collect();
        for k in 1..ts.len() - 1 {
            if vs[k] < vs[k - 1] - 1e-9 && vs[k] < vs[k + 1] - 1e-9 {
                let near = mins.iter().any(|m| (m.0 - ts[k]).abs() <= 2.0 * (HI - LO) / 4000.0);
                prop_assert!(near, "dip at {} not reported: {:?}", ts[k], mins);
            }
        }
    }

    #[test]
    fn prefix_minimum_is_running_min((c, q) in raw_pieces(30), end in 0.0..1.2f64) {
        let f = build_continuous(&c, &q);
        let end = LO + end * (HI - LO);
        let pm = f.prefix_minimum(end);
        for t in samples(400) {
            let want = brute_min(&f, t.min(end).max(LO));
            prop_assert!(close(pm.func.value(t), want, 1e-9), "t={} got {} want {}", t, pm.func.value(t), want);
        }
        for &(at, v) in &pm.anchors {
            prop_assert!(close(f.value(at), v, 1e-9));
        }
    }

    #[test]
    fn add_and_restrict_are_pointwise((c1, q1) in raw_pieces(20), (c2, q2) in raw_pieces(20),
                                      a in 2.0..4.0f64, b in 6.0..8.0f64) {
        let f = build(&c1, &q1);
        let g = build(&c2, &q2);
        let s = f.add(&g).unwrap();
        let r = f.restrict(a, b);
        for t in samples(300) {
            prop_assert!(close(s.value(t), f.value(t) + g.value(t), 1e-9));
            if t > a && t < b {
                prop_assert!(close(r.value(t), f.value(t), 1e-12));
            }
        }
    }

    #[test]
    fn fit_recovers_continuous_functions((c, q) in raw_pieces(12)) {
        let f = build_continuous(&c, &q);
        let mut events = f.breakpoints().to_vec();
        let (g, _) = PiecewiseQuadratic::fit(LO, HI, &mut events, |t| f.value(t), 0);
        for t in samples(500) {
            prop_assert!(close(g.value(t), f.value(t), 1e-8));
        }
    }

    #[test]
    fn dump_round_trip((c, q) in raw_pieces(20)) {
        let f = build(&c, &q);
        let d = f.dump();
        let json = serde_json::to_string(&d).unwrap();
        let back = PiecewiseQuadratic::from_dump(&serde_json::from_str(&json).unwrap()).unwrap();
        for t in samples(100) {
            prop_assert_eq!(back.value(t), f.value(t));
        }
    }
}
