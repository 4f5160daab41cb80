// SPDX-License-Identifier: Apache-2.0 OR MIT

use cdtw::cell::MonotonePath;
use cdtw::geometry::build_arc_table;
use cdtw::norms::NormHandle;
use cdtw::oracle::{
    golden_ratio_fixture, grid_cdtw, grid_cdtw_with_limit, bend_swap_ratio, bend_swap_sweep, path_cost_numeric,
    path_cost_with_error, GridConfig, NumericIntegrator,
};
use cdtw::random::{random_curve, random_gauge, rng};
use cdtw::{CdtwError, Point2, PolygonalCurve};
use proptest::prelude::*;

fn norm_for(kind: u8, seed: u64) -> NormHandle {
    match kind % 4 {
        0 => NormHandle::L1,
        1 => NormHandle::Linf,
        2 => NormHandle::L2,
        _ => random_gauge(&mut rng(seed), 5).into(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn finer_grids_are_no_worse(kind in 0u8..4, seed in 0u64..10_000, n in 1usize..4, m in 1usize..4) {
        let mut r = rng(seed);
        let p = random_curve(&mut r, n, 10.0);
        let q = random_curve(&mut r, m, 10.0);
        let norm = norm_for(kind, seed);
        let mut prev = f64::INFINITY;
        for g in [4, 8, 16, 32] {
            let v = grid_cdtw(&p, &q, &norm, GridConfig::new(g).unwrap()).unwrap();
            prop_assert!(v.value <= prev + 1e-6, "g={} {} > {}", g, v.value, prev);
            prop_assert!(v.lower_hint <= v.value);
            prev = v.value;
        }
    }

    #[test]
    fn trapezoid_error_shrinks_fourfold(seed in 0u64..10_000, f1 in 0.0..1.0f64, f2 in 0.0..1.0f64) {
        let mut r = rng(seed);
        let p = random_curve(&mut r, 1, 10.0);
        let q = random_curve(&mut r, 1, 10.0);
        let norm = NormHandle::L2;
        let (lp, lq) = (build_arc_table(&p, &norm).total(), build_arc_table(&q, &norm).total());
        let path = MonotonePath::new(vec![Point2::ORIGIN, Point2::new(f1 * lp, f2 * lq), Point2::new(lp, lq)]);
        // Smooth integrand: keep the curves apart along the path.
        let mut closest = f64::INFINITY;
        for k in 0..=200 {
            let t = k as f64 / 200.0;
            let a = p.vertices()[0].lerp(p.vertices()[1], t);
            for l in 0..=20 {
                let b = q.vertices()[0].lerp(q.vertices()[1], l as f64 / 20.0);
                closest = closest.min((a - b).hypot());
            }
        }
        prop_assume!(closest > 0.5);
        let i = |steps| path_cost_numeric(&p, &q, &path, &norm, NumericIntegrator::new(steps).unwrap()).unwrap();
        let (a, b, c) = (i(16), i(32), i(64));
        let (d1, d2) = ((a - b).abs(), (b - c).abs());
        prop_assume!(d1 > 1e-10);
        prop_assert!(d1 >= 3.0 * d2, "differences {} then {}", d1, d2);
        let e = path_cost_with_error(&p, &q, &path, &norm, NumericIntegrator::new(32).unwrap()).unwrap();
        prop_assert!((e.value - c).abs() < 4.0 * e.error_estimate + 1e-12);
    }

    #[test]
    fn polygonal_integrals_are_exact(seed in 0u64..10_000, f1 in 0.0..1.0f64, f2 in 0.0..1.0f64) {
        let mut r = rng(seed);
        let p = random_curve(&mut r, 3, 10.0);
        let q = random_curve(&mut r, 2, 10.0);
        let norm = norm_for(3, seed);
        let (lp, lq) = (build_arc_table(&p, &norm).total(), build_arc_table(&q, &norm).total());
        let path = MonotonePath::new(vec![Point2::ORIGIN, Point2::new(f1 * lp, f2 * lq), Point2::new(lp, lq)]);
        let a = path_cost_numeric(&p, &q, &path, &norm, NumericIntegrator::new(16).unwrap()).unwrap();
        let b = path_cost_numeric(&p, &q, &path, &norm, NumericIntegrator::new(512).unwrap()).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
    }
}

#[test]
fn golden_ratio_fixture_values() {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let (p, q, x, y) = golden_ratio_fixture();
    let integ = NumericIntegrator::default();
    let r = bend_swap_ratio(&p, &q, &NormHandle::L1, x, y, integ).unwrap();
    assert!((r - (2.0 * phi + 1.0)).abs() < 1e-9);
    assert!((r - 4.2361).abs() < 1e-4);
    let xy = MonotonePath::new(vec![x, Point2::new(x.x, y.y), y]);
    let v = path_cost_numeric(&p, &q, &xy, &NormHandle::L1, integ).unwrap();
    assert!((v - 15.3262).abs() < 1e-4);
}

#[test]
fn symmetric_cell_has_ratio_one() {
    // Identical segments: the valley is the diagonal and the two bends
    // mirror each other across it.
    let p = PolygonalCurve::from_xy(&[(0.0, 0.0), (3.0, 1.0)]).unwrap();
    let n = NormHandle::L1;
    let r = bend_swap_ratio(&p, &p, &n, Point2::new(0.5, 0.5), Point2::new(2.5, 2.5), NumericIntegrator::default()).unwrap();
    assert!((r - 1.0).abs() < 1e-12);
}

#[test]
fn bend_swap_ratio_preconditions() {
    let (p, q, x, _) = golden_ratio_fixture();
    let integ = NumericIntegrator::default();
    assert!(matches!(bend_swap_ratio(&p, &q, &NormHandle::L1, x, x, integ), Err(CdtwError::Numeric(_))));
    let y = Point2::new(1.0, -0.5);
    assert!(bend_swap_ratio(&p, &q, &NormHandle::L1, Point2::new(2.0, 0.0), y, integ).is_err());
}

#[test]
fn sweep_stays_within_five() {
    let norms = [NormHandle::L1, NormHandle::Linf, random_gauge(&mut rng(3), 6).into()];
    let rep = bend_swap_sweep(&mut rng(9), 500, &norms, NumericIntegrator::default(), 1e-6).unwrap();
    assert_eq!(rep.count + rep.skipped, 1500);
    assert!(rep.violations.is_empty());
    assert!(rep.min_ratio >= 0.2 - 1e-6 && rep.max_ratio <= 5.0 + 1e-6);
}

#[test]
fn memory_guard() {
    let mut r = rng(1);
    let p = random_curve(&mut r, 10, 10.0);
    let q = random_curve(&mut r, 10, 10.0);
    let cfg = GridConfig::new(200).unwrap();
    match grid_cdtw_with_limit(&p, &q, &NormHandle::L1, cfg, 1) {
        Err(e @ CdtwError::MemoryLimit { .. }) => assert_eq!(e.exit_code(), 2),
        other => panic!("{other:?}"),
    }
    assert!(grid_cdtw_with_limit(&p, &q, &NormHandle::L1, GridConfig::new(4).unwrap(), 1).is_ok());
    assert!(GridConfig::new(1).is_err());
}
