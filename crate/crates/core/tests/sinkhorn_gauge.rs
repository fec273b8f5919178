//! Sinkhorn gauges against closed forms, tori and the scalar gauge freedom.

use num_traits::Zero;
use proptest::prelude::*;

use multidimer::closed_form::*;
use multidimer::error::Error;
use multidimer::lattice::{build_lattice, LatticeName};
use multidimer::region::*;
use multidimer::sinkhorn::*;

fn tight() -> SinkhornOptions {
    SinkhornOptions { tol: 1e-12, ..Default::default() }
}

fn verify(shape: ClosedFormShape) -> f64 {
    let (region, exact) = closed_form_gauge(&shape).unwrap();
    let (num, diag) = sinkhorn_solve(&region, &vec![1.0; region.edges.len()], &tight()).unwrap();
    assert!(diag.max_residual <= 1e-10, "{shape:?}: residual {}", diag.max_residual);
    gauge_distance(&num, &exact).unwrap()
}

#[test]
fn sinkhorn_matches_closed_forms() {
    for shape in [
        ClosedFormShape::AztecDiamond { n: 1 },
        ClosedFormShape::AztecDiamond { n: 5 },
        ClosedFormShape::AztecDiamond { n: 12 },
        ClosedFormShape::AztecCuboid { a: 1, b: 1, c: 2 },
        ClosedFormShape::AztecCuboid { a: 2, b: 2, c: 7 },
        ClosedFormShape::TruncQuadrant { k: 3, depth: 6 },
        ClosedFormShape::TruncOrthant3 { k: 2, depth: 4 },
    ] {
        let d = verify(shape);
        assert!(d <= 1e-8, "{shape:?}: distance {d}");
    }
}

#[test]
fn aztec_one_by_hand() {
    let (r, g) = closed_form_gauge(&ClosedFormShape::AztecDiamond { n: 1 }).unwrap();
    for i in 0..2 {
        assert!((g.f(i) - 0.5).abs() < 1e-15);
        assert!((g.g(i) - 1.0).abs() < 1e-15);
    }
    let (num, _) = sinkhorn_solve(&r, &[1.0; 4], &tight()).unwrap();
    assert!(gauge_distance(&num, &g).unwrap() < 1e-12);
    // Reference normalization pins g at the black with the smallest label.
    assert!(num.log_g[0].abs() < 1e-15);
}

#[test]
fn closed_forms_solve_the_equations_exactly() {
    for shape in [
        ClosedFormShape::AztecDiamond { n: 2 },
        ClosedFormShape::AztecDiamond { n: 3 },
        ClosedFormShape::AztecCuboid { a: 1, b: 1, c: 2 },
        ClosedFormShape::AztecCuboid { a: 2, b: 2, c: 7 },
        ClosedFormShape::TruncQuadrant { k: 2, depth: 3 },
        ClosedFormShape::TruncOrthant3 { k: 1, depth: 3 },
    ] {
        let r = shape.region().unwrap();
        let exact = closed_form_gauge_exact(&shape, &r).unwrap();
        assert!(exact.residuals(&r).iter().all(|x| x.is_zero()), "{shape:?}");
    }
}

#[test]
fn aztec_nw_critical_weights() {
    let n = 7i64;
    let (r, g) = closed_form_gauge(&ClosedFormShape::AztecDiamond { n: n as u64 }).unwrap();
    let c = critical_edge_weights(&r, &vec![1.0; r.edges.len()], &g);
    let lattice = build_lattice(LatticeName::Z2Diag);
    let nw = (0..4).find(|&t| {
        let e = &lattice.edge_vectors[t];
        e[0] < 0.into() && e[1] > 0.into()
    });
    let nw = nw.unwrap();
    for (k, e) in r.edges.iter().enumerate().filter(|(_, e)| e.ty == nw) {
        let (i, j) = (r.whites[e.white].coord[0], r.whites[e.white].coord[1]);
        let expected = ((n - i) * (n - j)) as f64 / (n * (n + 1)) as f64;
        assert!((c[k] - expected).abs() < 1e-13, "white ({i},{j})");
    }
}

#[test]
fn torus_fixed_points() {
    for name in LatticeName::ALL {
        let l = build_lattice(name);
        let w: Vec<f64> = (0..l.degree).map(|t| 1.0 + 0.37 * t as f64).collect();
        let total: f64 = w.iter().sum();
        for n in [2, 4] {
            let t = build_torus(&l, n).unwrap();
            let weights: Vec<f64> = t.edges.iter().map(|e| w[e.ty]).collect();
            let (g, diag) = sinkhorn_solve(&t, &weights, &SinkhornOptions::default()).unwrap();
            assert!(diag.max_residual <= 1e-10);
            assert!(diag.iterations <= 5, "{name} n={n}: {} sweeps", diag.iterations);
            let spread = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(spread(&g.log_f) < 1e-12 && spread(&g.log_g) < 1e-12);
            let c = critical_edge_weights(&t, &weights, &g);
            for (k, e) in t.edges.iter().enumerate() {
                assert!((c[k] - w[e.ty] / total).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn diagnostics_and_errors() {
    let r = build_aztec_diamond(30).unwrap();
    let opts = SinkhornOptions { max_iter: 1, ..Default::default() };
    match sinkhorn_solve(&r, &vec![1.0; r.edges.len()], &opts).unwrap_err() {
        Error::NoConvergence { iterations, history, .. } => {
            assert_eq!(iterations, 1);
            assert_eq!(history.len(), 1);
        }
        other => panic!("unexpected {other:?}"),
    }
    let bad = SinkhornOptions { tol: 0.0, ..Default::default() };
    assert!(sinkhorn_solve(&r, &vec![1.0; r.edges.len()], &bad).is_err());
    assert!(sinkhorn_solve(&r, &[1.0], &SinkhornOptions::default()).is_err());
}

#[test]
fn residual_history_is_monotone() {
    let cases = [
        build_aztec_diamond(10).unwrap(),
        build_aztec_cuboid(2, 2, 7).unwrap(),
        build_truncated_quadrant(3, 6).unwrap(),
        build_truncated_orthant3(2, 4).unwrap(),
        build_hexagon(6).unwrap(),
    ];
    for r in cases {
        let w: Vec<f64> = (0..r.edges.len()).map(|k| 1.0 + (k % 3) as f64).collect();
        let (_, d) = sinkhorn_solve(&r, &w, &SinkhornOptions::default()).unwrap();
        for p in d.residual_history.windows(2) {
            assert!(p[1] <= p[0] * (1.0 + 1e-12) + 1e-15, "{}: {} then {}", r.name, p[0], p[1]);
        }
    }
}

#[test]
fn log_domain_fallback_still_converges() {
    // Huge weights push the linear gauges below the representable range.
    let r = build_aztec_diamond(4).unwrap();
    let w = vec![1e305; r.edges.len()];
    let (g, d) = sinkhorn_solve(&r, &w, &SinkhornOptions::default()).unwrap();
    assert!(d.log_domain);
    assert!(gauge_residual(&r, &w, &g) <= 1e-10);
}

#[test]
fn critical_weights_have_prescribed_divergence() {
    let r = build_truncated_orthant3(2, 4).unwrap();
    let w = vec![1.0; r.edges.len()];
    let (g, _) = sinkhorn_solve(&r, &w, &SinkhornOptions::default()).unwrap();
    let c = critical_edge_weights(&r, &w, &g);
    for v in r.vertices() {
        let s: f64 = r.edges_at(v).iter().map(|&e| c[e]).sum();
        assert!((s - r.beta(v)).abs() <= 1e-10);
        if !r.site(v).boundary {
            assert!((s - 1.0).abs() <= 1e-10);
        }
    }
}

#[test]
fn scaled_log_gauge_tends_to_zero_at_center() {
    let mut prev = f64::INFINITY;
    for n in [8u64, 32, 128] {
        let (r, g) = closed_form_gauge(&ClosedFormShape::AztecDiamond { n }).unwrap();
        let samples = scaled_log_gauge(&r, &g);
        let (i, j) = ((n / 2) as i64, (n / 2) as i64);
        let b = r.blacks.iter().position(|s| s.coord == vec![i, j]).unwrap();
        let s = samples.iter().find(|s| s.color == Color::Black && s.index == b).unwrap();
        assert!(s.value.abs() < prev);
        prev = s.value.abs();
    }
    assert!(prev < 0.05);
    let t = build_torus(&build_lattice(LatticeName::Z2Diag), 3).unwrap();
    let (g, _) = sinkhorn_solve(&t, &vec![1.0; t.edges.len()], &SinkhornOptions::default()).unwrap();
    let g = g.normalized(&t, Normalization::GeometricMeanOne);
    assert!(scaled_log_gauge(&t, &g).iter().filter(|s| s.color == Color::Black).all(|s| s.value.abs() < 1e-15));
}

#[test]
fn infeasible_inputs_are_refused() {
    let path = RegionGraph::abstract_graph(2, 1, &[(0, 0), (1, 0)], "path");
    assert!(matches!(sinkhorn_solve(&path, &[1.0, 1.0], &SinkhornOptions::default()), Err(Error::Infeasible(_))));
    let edges = [(0, 0), (0, 1), (1, 0), (1, 1), (2, 2), (3, 2), (3, 3), (4, 3), (4, 4), (2, 4), (1, 2)];
    let necked = RegionGraph::abstract_graph(5, 5, &edges, "necked");
    assert!(matches!(sinkhorn_solve(&necked, &[1.0; 11], &SinkhornOptions::default()), Err(Error::Infeasible(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn critical_weights_ignore_the_scalar_freedom(c in -30.0f64..30.0, n in 1u64..8) {
        let (r, g) = closed_form_gauge(&ClosedFormShape::AztecDiamond { n }).unwrap();
        let w: Vec<f64> = vec![1.0; r.edges.len()];
        let a = critical_edge_weights(&r, &w, &g);
        let b = critical_edge_weights(&r, &w, &g.rescaled(c));
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-14 * x.abs().max(1.0));
        }
        prop_assert!(gauge_distance(&g, &g.rescaled(c)).unwrap() < 1e-12);
    }

    #[test]
    fn torus_converges_from_any_start(
        name in prop::sample::select(LatticeName::ALL.to_vec()),
        start in prop::collection::vec(0.01f64..100.0, 64),
        seed_w in prop::collection::vec(0.5f64..3.0, 8),
    ) {
        let l = build_lattice(name);
        let t = build_torus(&l, 2).unwrap();
        let weights: Vec<f64> = t.edges.iter().map(|e| seed_w[e.ty]).collect();
        let g0 = &start[..t.blacks.len()];
        let (g, _) = sinkhorn_solve_from(&t, &weights, g0, &SinkhornOptions::default()).unwrap();
        let ratio = |v: &[f64]| (v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min)).exp();
        prop_assert!(ratio(&g.log_f) - 1.0 < 1e-8);
        prop_assert!(ratio(&g.log_g) - 1.0 < 1e-8);
    }

    #[test]
    fn random_weights_monotone_history(ws in prop::collection::vec(0.2f64..5.0, 40)) {
        let r = build_aztec_diamond(3).unwrap();
        let w: Vec<f64> = r.edges.iter().enumerate().map(|(k, _)| ws[k % ws.len()]).collect();
        let (g, d) = sinkhorn_solve(&r, &w, &SinkhornOptions::default()).unwrap();
        prop_assert!(gauge_residual(&r, &w, &g) <= 1e-10);
        for p in d.residual_history.windows(2) {
            prop_assert!(p[1] <= p[0] * (1.0 + 1e-12) + 1e-15);
        }
    }
}
