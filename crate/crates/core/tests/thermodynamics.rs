//! Free energy, surface tension and their Legendre duality.

use std::f64::consts::LN_2;

use proptest::prelude::*;

use multidimer::lattice::{build_lattice, LatticeName};
use multidimer::thermo::*;

/// Grid points `k` per axis over the bounding box of `𝒩`, kept when at least
/// `margin` inside.
fn interior_grid(model: &ThermoModel, k: usize, margin: f64) -> Vec<Vec<f64>> {
    let d = model.dimension();
    let verts = model.polytope().vertices_f64();
    let lo: Vec<f64> = (0..d).map(|i| verts.iter().map(|v| v[i]).fold(f64::INFINITY, f64::min)).collect();
    let hi: Vec<f64> = (0..d).map(|i| verts.iter().map(|v| v[i]).fold(f64::NEG_INFINITY, f64::max)).collect();
    let mut out = Vec::new();
    let total = k.pow(d as u32);
    for idx in 0..total {
        let mut rem = idx;
        let p: Vec<f64> = (0..d)
            .map(|i| {
                let t = rem % k;
                rem /= k;
                lo[i] + (hi[i] - lo[i]) * t as f64 / (k - 1) as f64
            })
            .collect();
        if model.polytope().boundary_distance(&p) >= margin {
            out.push(p);
        }
    }
    out
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn legendre_round_trip_on_grids() {
    for (name, k) in [(LatticeName::Z2Diag, 21), (LatticeName::Honeycomb, 21), (LatticeName::Bcc, 21), (LatticeName::Z3, 11)] {
        let m = ThermoModel::new(name);
        let grid = interior_grid(&m, k, 1e-3);
        assert!(grid.len() > k, "{name}");
        for s in &grid {
            let alpha = m.grad_surface_tension(s).unwrap();
            assert!(max_diff(&m.grad_free_energy(&alpha), s) <= 1e-8, "{name} at {s:?}");
            let back = m.grad_surface_tension(&m.grad_free_energy(&alpha)).unwrap();
            assert!(max_diff(&back, &alpha) <= 1e-8 * (1.0 + alpha.iter().map(|a| a.abs()).fold(0.0, f64::max)));
        }
    }
}

#[test]
fn newton_path_matches_closed_forms() {
    for name in [LatticeName::Z2Diag, LatticeName::Honeycomb, LatticeName::Bcc, LatticeName::DiamondCubic] {
        let m = ThermoModel::new(name);
        let k = if m.dimension() == 2 { 21 } else { 11 };
        for s in interior_grid(&m, k, 1e-3) {
            let newton = m.surface_tension_newton(&s).unwrap();
            let closed = m.surface_tension_closed(&s).unwrap();
            assert!((newton - closed).abs() <= 1e-9, "{name} at {s:?}: {newton} vs {closed}");
            let g = m.grad_surface_tension(&s).unwrap();
            assert!(max_diff(&g, &m.grad_surface_tension_closed(&s).unwrap()) <= 1e-8);
        }
    }
}

#[test]
fn sigma_vanishes_at_vertices() {
    for name in LatticeName::ALL {
        let m = ThermoModel::new(name);
        for v in m.polytope().vertices_f64() {
            assert_eq!(m.surface_tension(&v).unwrap(), 0.0, "{name} at {v:?}");
        }
    }
    let z2 = ThermoModel::new(LatticeName::Z2Diag);
    assert!((z2.surface_tension(&[0.0, 0.0]).unwrap() + 2.0 * LN_2).abs() < 1e-15);
    assert_eq!(z2.surface_tension(&[0.5, 0.5]).unwrap(), 0.0);
    assert!(z2.surface_tension(&[0.6, 0.0]).is_err());
}

#[test]
fn free_energy_examples() {
    let z2 = ThermoModel::new(LatticeName::Z2Diag);
    assert!((z2.free_energy(&[0.0, 0.0]) - 4f64.ln()).abs() < 1e-15);
    assert!((ThermoModel::new(LatticeName::Z3).free_energy(&[0.0; 3]) - 6f64.ln()).abs() < 1e-15);
    let bcc = ThermoModel::new(LatticeName::Bcc);
    for a in [[0.3, -1.2, 2.0], [5.0, 0.1, -0.7]] {
        let expected: f64 = a.iter().map(|x: &f64| ((x / 2.0).exp() + (-x / 2.0).exp()).ln()).sum();
        assert!((bcc.free_energy(&a) - expected).abs() < 1e-13);
    }
    let s = z2.grad_free_energy(&[2.0 * 3f64.ln(), 0.0]);
    assert!((s[0] - 0.4).abs() < 1e-15 && s[1].abs() < 1e-15);
    let a = z2.grad_surface_tension(&[0.4, 0.0]).unwrap();
    assert!((a[0] - 2.0 * 3f64.ln()).abs() < 1e-10 && a[1].abs() < 1e-10);
    assert_eq!(z2.grad_surface_tension(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    let h = z2.hessian_free_energy(&[0.0, 0.0]);
    assert!((h[(0, 0)] - 0.25).abs() < 1e-15 && h[(0, 1)].abs() < 1e-15 && (h[(1, 1)] - 0.25).abs() < 1e-15);
}

#[test]
fn honeycomb_fraction_coordinates() {
    let third = 1.0 / 3.0;
    assert!((honeycomb_sigma_fractions(third, third) + 3f64.ln()).abs() < 1e-15);
    let m = ThermoModel::new(LatticeName::Honeycomb);
    for (s, t) in [(0.2, 0.3), (0.5, 0.1), (0.05, 0.9)] {
        let slope = honeycomb_slope_from_fractions(s, t);
        assert!((m.surface_tension(&slope).unwrap() - honeycomb_sigma_fractions(s, t)).abs() < 1e-10);
        let (s2, t2) = honeycomb_fractions_from_slope(&slope);
        assert!((s2 - s).abs() < 1e-15 && (t2 - t).abs() < 1e-15);
    }
}

#[test]
fn aztec_edge_probabilities() {
    let m = ThermoModel::new(LatticeName::Z2Diag);
    for (x, y) in [(0.3, 0.6), (0.8, 0.1), (0.5, 0.5)] {
        let slope = [0.5 * (2.0 * x - 1.0), 0.5 * (1.0 - 2.0 * y)];
        let p = m.slope_to_edge_probabilities(&slope).unwrap();
        let expected = [x * (1.0 - y), (1.0 - x) * (1.0 - y), x * y, (1.0 - x) * y];
        assert!(max_diff(&p, &expected) < 1e-10, "{p:?} vs {expected:?}");
    }
    let p = m.slope_to_edge_probabilities(&[0.0, 0.0]).unwrap();
    assert!(p.iter().all(|&x| (x - 0.25).abs() < 1e-15));
}

#[test]
fn entropy_per_dimer_examples() {
    assert!((entropy_per_dimer(&[1.0; 4]).unwrap() - 4f64.ln()).abs() < 1e-15);
    assert!(entropy_per_dimer(&[1.0, -1.0]).is_err());
    // On simplex lattices the edge frequencies determine the slope, and the
    // entropy is minus the surface tension there.
    for (name, w) in [(LatticeName::Honeycomb, vec![2.0, 1.0, 1.0]), (LatticeName::DiamondCubic, vec![2.0, 1.0, 1.0, 1.0])] {
        let m = ThermoModel::new(name);
        let total: f64 = w.iter().sum();
        let s: Vec<f64> = (0..m.dimension()).map(|i| w.iter().zip(m.edge_vectors()).map(|(wi, e)| wi / total * e[i]).sum()).collect();
        assert!((entropy_per_dimer(&w).unwrap() + m.surface_tension(&s).unwrap()).abs() < 1e-10, "{name}");
    }
}

#[test]
fn gradient_blows_up_at_the_boundary() {
    for name in LatticeName::ALL {
        let m = ThermoModel::new(name);
        // Approach a vertex of 𝒩 from the center.
        let target = m.polytope().vertices_f64()[0].clone();
        assert!(m.polytope().boundary_distance(&target).abs() < 1e-12);
        let mut prev = 0.0;
        for t in [1e-2, 1e-3, 1e-4] {
            let s: Vec<f64> = target.iter().map(|x| x * (1.0 - t)).collect();
            let g = m.grad_surface_tension(&s).unwrap();
            let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(norm > prev, "{name}: |∇σ| = {norm} at t = {t}");
            prev = norm;
        }
    }
}

#[test]
fn weighted_models_shift_the_field() {
    let l = build_lattice(LatticeName::Z2Diag);
    let m = ThermoModel::with_weights(l.clone(), vec![2.0, 1.0, 1.0, 1.0]).unwrap();
    assert!(!m.has_closed_form_sigma());
    let s = m.grad_free_energy(&[0.0, 0.0]);
    assert!((s[0] - 0.1).abs() < 1e-15 && (s[1] - 0.1).abs() < 1e-15);
    assert!(ThermoModel::with_weights(l, vec![1.0, 0.0, 1.0, 1.0]).is_err());
}

fn model() -> impl Strategy<Value = ThermoModel> {
    prop::sample::select(LatticeName::ALL.to_vec()).prop_map(ThermoModel::new)
}

/// A random model with a random interior slope, as a convex combination of vertices.
fn slope_in(m: &ThermoModel, raw: &[f64]) -> Vec<f64> {
    let verts = m.polytope().vertices_f64();
    let w: Vec<f64> = raw.iter().take(verts.len()).map(|x| x + 0.05).collect();
    let total: f64 = w.iter().sum();
    (0..m.dimension()).map(|i| verts.iter().zip(&w).map(|(v, wi)| v[i] * wi / total).sum()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gradient_matches_finite_differences(m in model(), a in prop::collection::vec(-3.0f64..3.0, 3)) {
        let a = &a[..m.dimension()];
        let g = m.grad_free_energy(a);
        let h = 1e-5;
        for i in 0..a.len() {
            let mut p = a.to_vec();
            let mut q = a.to_vec();
            p[i] += h;
            q[i] -= h;
            let fd = (m.free_energy(&p) - m.free_energy(&q)) / (p[i] - q[i]);
            prop_assert!((fd - g[i]).abs() <= 1e-6);
            let col: Vec<f64> = m.grad_free_energy(&p).iter().zip(m.grad_free_energy(&q)).map(|(x, y)| (x - y) / (p[i] - q[i])).collect();
            let hess = m.hessian_free_energy(a);
            for (j, c) in col.iter().enumerate() {
                prop_assert!((c - hess[(j, i)]).abs() <= 1e-6);
            }
        }
        prop_assert!(m.polytope().contains_interior(&g));
        let eig = m.hessian_free_energy(a).symmetric_eigen().eigenvalues;
        prop_assert!(eig.iter().all(|&e| e > 0.0));
    }

    #[test]
    fn sigma_is_convex_and_nonpositive(m in model(), r1 in prop::collection::vec(0.0f64..1.0, 8), r2 in prop::collection::vec(0.0f64..1.0, 8)) {
        let s1 = slope_in(&m, &r1);
        let s2 = slope_in(&m, &r2);
        let mid: Vec<f64> = s1.iter().zip(&s2).map(|(a, b)| 0.5 * (a + b)).collect();
        let (a, b, c) = (m.surface_tension(&s1).unwrap(), m.surface_tension(&s2).unwrap(), m.surface_tension(&mid).unwrap());
        prop_assert!(c <= 0.5 * (a + b) + 1e-12);
        prop_assert!(a <= 0.0 && b <= 0.0 && c <= 0.0);
    }

    #[test]
    fn probabilities_reproduce_the_slope(m in model(), r in prop::collection::vec(0.0f64..1.0, 8)) {
        let s = slope_in(&m, &r);
        let p = m.slope_to_edge_probabilities(&s).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let back: Vec<f64> = (0..m.dimension()).map(|i| p.iter().zip(m.edge_vectors()).map(|(pj, e)| pj * e[i]).sum()).collect();
        prop_assert!(max_diff(&back, &s) <= 1e-10);
    }
}
