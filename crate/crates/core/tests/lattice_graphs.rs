//! Lattices, regions and Newton polytopes.

use num_traits::Zero;
use proptest::prelude::*;

use multidimer::lattice::{build_lattice, LatticeName, Q};
use multidimer::region::*;

fn q(n: i64, d: i64) -> Q {
    Q::new(n, d)
}

#[test]
fn edge_vector_lists() {
    let z2 = build_lattice(LatticeName::Z2Diag);
    assert_eq!(z2.degree, 4);
    for e in &z2.edge_vectors {
        assert!(e.iter().all(|c| *c == q(1, 2) || *c == q(-1, 2)));
    }
    let hc = build_lattice(LatticeName::Honeycomb);
    assert_eq!(hc.edge_vectors, vec![vec![q(-1, 3), q(-1, 3)], vec![q(2, 3), q(-1, 3)], vec![q(-1, 3), q(2, 3)]]);
    let bcc = build_lattice(LatticeName::Bcc);
    assert_eq!(bcc.degree, 8);
    let z3 = build_lattice(LatticeName::Z3);
    assert_eq!((z3.dimension, z3.degree), (3, 6));
    let dc = build_lattice(LatticeName::DiamondCubic);
    assert_eq!((dc.dimension, dc.degree), (3, 4));
    assert!("KAGOME".parse::<LatticeName>().is_err());
}

#[test]
fn harmonic_embeddings() {
    for name in LatticeName::ALL {
        let l = build_lattice(name);
        for i in 0..l.dimension {
            assert!(l.edge_vectors.iter().map(|e| e[i]).fold(Q::zero(), |a, b| a + b).is_zero(), "{name}");
        }
        let poly = l.newton_polytope();
        assert!(poly.contains_interior(&vec![0.0; l.dimension]));
    }
}

#[test]
fn diamond_black_neighbors() {
    // The black with label (i,j,k) meets whites (i,j,k), (i−1,j,k), (i,j−1,k), (i,j,k−1).
    let dc = build_lattice(LatticeName::DiamondCubic);
    let mut shifts = dc.shifts.clone();
    shifts.sort();
    assert_eq!(shifts, vec![vec![0, 0, 0], vec![0, 0, 1], vec![0, 1, 0], vec![1, 0, 0]]);
}

#[test]
fn newton_polytopes() {
    let z2 = build_lattice(LatticeName::Z2Diag).newton_polytope();
    assert!(z2.contains(&[0.5, -0.5]) && !z2.contains_interior(&[0.5, 0.0]) && !z2.contains(&[0.51, 0.0]));
    assert!((z2.boundary_distance(&[0.0, 0.0]) - 0.5).abs() < 1e-15);
    let z3 = build_lattice(LatticeName::Z3).newton_polytope();
    assert!(z3.contains(&[0.2, 0.2, 0.1]) && !z3.contains(&[0.2, 0.2, 0.2]));
    assert!(z3.on_boundary_exact(&[q(1, 4), q(-1, 8), q(1, 8)]));
    let hc = build_lattice(LatticeName::Honeycomb).newton_polytope();
    assert_eq!(hc.facets.len(), 3);
    let bcc = build_lattice(LatticeName::Bcc).newton_polytope();
    assert_eq!(bcc.facets.len(), 6);
    let dc = build_lattice(LatticeName::DiamondCubic).newton_polytope();
    assert_eq!(dc.facets.len(), 4);
}

#[test]
fn torus_examples() {
    let t = build_torus(&build_lattice(LatticeName::Z2Diag), 2).unwrap();
    assert_eq!((t.whites.len(), t.blacks.len(), t.edges.len()), (4, 4, 16));
    let t = build_torus(&build_lattice(LatticeName::Z3), 1).unwrap();
    assert_eq!((t.whites.len(), t.blacks.len(), t.edges.len()), (1, 1, 6));
    let t = build_torus(&build_lattice(LatticeName::Bcc), 3).unwrap();
    assert_eq!((t.whites.len(), t.blacks.len(), t.edges.len()), (27, 27, 216));
    assert!(t.is_torus());
    assert!(t.whites.iter().chain(&t.blacks).all(|s| !s.boundary));
    for u in 0..t.blacks.len() {
        assert_eq!(t.black_edges(u).len(), 8);
    }
}

#[test]
fn aztec_diamond_examples() {
    let ad1 = build_aztec_diamond(1).unwrap();
    assert_eq!((ad1.whites.len(), ad1.blacks.len(), ad1.edges.len()), (2, 2, 4));
    let w00 = ad1.whites.iter().position(|s| s.coord == vec![0, 0]).unwrap();
    let mut nb: Vec<Vec<i64>> = ad1.white_edges(w00).iter().map(|&e| ad1.blacks[ad1.edges[e].black].coord.clone()).collect();
    nb.sort();
    assert_eq!(nb, vec![vec![0, 0], vec![1, 0]]);
    let ad2 = build_aztec_diamond(2).unwrap();
    assert_eq!((ad2.whites.len(), ad2.blacks.len()), (6, 6));
    for n in 1..8 {
        let r = build_aztec_diamond(n).unwrap();
        assert_eq!(r.whites.len(), n * (n + 1));
        assert_eq!(r.blacks.len(), n * (n + 1));
    }
}

#[test]
fn cuboid_examples() {
    assert!(check_cuboid_constraint(1, 1, 2).is_ok());
    assert!(check_cuboid_constraint(2, 2, 7).is_ok());
    let err = build_aztec_cuboid(1, 1, 1).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains('8') && msg.contains('9'), "{msg}");
    let r = build_aztec_cuboid(1, 1, 2).unwrap();
    assert_eq!(r.whites.len(), r.blacks.len());
    assert_eq!(r.blacks.len(), 2 * 2 * 3);
    r.validate().unwrap();
}

#[test]
fn truncation_examples() {
    let r = build_truncated_quadrant(3, 1).unwrap();
    assert_eq!(r.blacks.iter().filter(|s| s.coord.iter().sum::<i64>() == 3).count(), 4);
    assert!(build_truncated_quadrant(1, 1).unwrap().validate().is_ok());
    // Diagonals i+j = 2, 3, 4 carry 3, 4 and 5 whites.
    assert_eq!(build_truncated_quadrant(3, 2).unwrap().whites.len(), 12);
    assert!(build_truncated_quadrant(0, 1).is_err());
    assert_eq!(build_truncated_orthant3(1, 1).unwrap().blacks.iter().filter(|s| s.coord.iter().sum::<i64>() == 1).count(), 3);
    let r = build_truncated_orthant3(2, 3).unwrap();
    assert_eq!(r.blacks.iter().filter(|s| s.coord.iter().sum::<i64>() == 2).count(), 6);
    let interior = (0..r.blacks.len()).filter(|&u| !r.blacks[u].boundary).collect::<Vec<_>>();
    assert!(!interior.is_empty());
    assert!(interior.iter().all(|&u| r.black_edges(u).len() == 4));
    assert_eq!(r.white_total(), r.black_total());
}

#[test]
fn region_json_round_trip() {
    let r = build_aztec_cuboid(1, 1, 2).unwrap();
    let back = RegionGraph::from_json(&r.to_json()).unwrap();
    assert_eq!(back.to_json(), r.to_json());
    assert!(RegionGraph::from_json(&serde_json::json!({"lattice": "Z2_DIAG"})).is_err());
}

fn lattice_strategy() -> impl Strategy<Value = LatticeName> {
    prop::sample::select(LatticeName::ALL.to_vec())
}

/// A random set of labels in a small box, split into whites and blacks.
fn random_region() -> impl Strategy<Value = RegionGraph> {
    lattice_strategy().prop_flat_map(|name| {
        let d = build_lattice(name).dimension;
        let label = prop::collection::vec(-2i64..=2, d);
        (Just(name), prop::collection::btree_set(label.clone(), 1..20), prop::collection::btree_set(label, 1..20))
            .prop_map(|(name, w, b)| {
                RegionGraph::from_labels(build_lattice(name), w.into_iter().collect(), b.into_iter().collect(), "random")
            })
    })
}

proptest! {
    #[test]
    fn edges_match_displacements(r in random_region()) {
        let l = r.lattice.clone().unwrap();
        for e in &r.edges {
            let w = l.white_position(&r.whites[e.white].coord);
            let b = l.black_position(&r.blacks[e.black].coord);
            let d: Vec<Q> = b.iter().zip(&w).map(|(x, y)| x - y).collect();
            prop_assert_eq!(&d, &l.edge_vectors[e.ty]);
        }
    }

    #[test]
    fn boundary_flag_rule(r in random_region()) {
        for (i, s) in r.whites.iter().enumerate() {
            prop_assert_eq!(s.boundary, r.white_edges(i).len() < r.lattice.as_ref().unwrap().degree);
        }
        for (i, s) in r.blacks.iter().enumerate() {
            prop_assert_eq!(s.boundary, r.black_edges(i).len() < r.lattice.as_ref().unwrap().degree);
        }
    }

    #[test]
    fn torus_regions_are_regular(name in lattice_strategy(), n in 1usize..=3) {
        let l = build_lattice(name);
        let t = build_torus(&l, n).unwrap();
        prop_assert_eq!(t.whites.len(), n.pow(l.dimension as u32));
        prop_assert_eq!(t.edges.len(), t.whites.len() * l.degree);
        prop_assert!(t.whites.iter().chain(&t.blacks).all(|s| !s.boundary));
        prop_assert!(t.validate().is_ok());
    }

    #[test]
    fn named_regions_balance(n in 1usize..6, k in 1u64..4, depth in 1u64..4) {
        for r in [build_aztec_diamond(n).unwrap(), build_truncated_quadrant(k, depth).unwrap(), build_truncated_orthant3(k, depth).unwrap(), build_hexagon(n).unwrap()] {
            prop_assert_eq!(r.white_total(), r.black_total());
            prop_assert!(r.validate().is_ok());
        }
    }
}
