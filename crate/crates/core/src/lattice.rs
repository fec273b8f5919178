//! Periodic bipartite lattices and their Newton polytopes.
//!
//! Every lattice is described in label space: a white vertex carries an
//! integer label `a` and sits at `L·a + o_w`, a black vertex with label `b`
//! sits at `L·b + o_b`. The edge of type `j` joins white `a` to black
//! `a + t_j`, where `t_j = L⁻¹(e_j − o_b + o_w)` is integral.

use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact rational scalar used for lattice geometry.
pub type Q = Rational64;

/// The supported lattices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LatticeName {
    /// The square lattice rotated by 45 degrees, edges `(±1/2, ±1/2)`.
    Z2Diag,
    /// The cubic lattice, edges `±η_i / 2`.
    Z3,
    /// The body-centered cubic lattice, edges `(±1/2, ±1/2, ±1/2)`.
    Bcc,
    /// The honeycomb lattice with blacks on `Z²` and whites on `Z² + (1/3, 1/3)`.
    Honeycomb,
    /// The diamond cubic lattice with blacks on `Z³` and whites on `Z³ + (1/4, 1/4, 1/4)`.
    DiamondCubic,
}

impl LatticeName {
    pub const ALL: [LatticeName; 5] = [
        LatticeName::Z2Diag,
        LatticeName::Z3,
        LatticeName::Bcc,
        LatticeName::Honeycomb,
        LatticeName::DiamondCubic,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            LatticeName::Z2Diag => "Z2_DIAG",
            LatticeName::Z3 => "Z3",
            LatticeName::Bcc => "BCC",
            LatticeName::Honeycomb => "HONEYCOMB",
            LatticeName::DiamondCubic => "DIAMOND_CUBIC",
        }
    }
}

impl fmt::Display for LatticeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LatticeName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        match key.as_str() {
            "z2" | "z2diag" | "square" => Ok(LatticeName::Z2Diag),
            "z3" | "cubic" => Ok(LatticeName::Z3),
            "bcc" => Ok(LatticeName::Bcc),
            "honeycomb" | "hex" | "hexagonal" => Ok(LatticeName::Honeycomb),
            "diamond" | "diamondcubic" => Ok(LatticeName::DiamondCubic),
            _ => Err(Error::InvalidInput(format!("unknown lattice `{s}`"))),
        }
    }
}

/// A periodic bipartite lattice with its harmonic embedding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub name: LatticeName,
    /// Spatial dimension `d`.
    pub dimension: usize,
    /// Vertex degree `D`.
    pub degree: usize,
    /// White-to-black displacement of each edge type.
    pub edge_vectors: Vec<Vec<Q>>,
    /// Columns of the label-to-position matrix `L`.
    pub basis: Vec<Vec<Q>>,
    /// Position of the white vertex with label zero.
    pub white_origin: Vec<Q>,
    /// Position of the black vertex with label zero.
    pub black_origin: Vec<Q>,
    /// Label shift `t_j` from a white vertex to its type-`j` black neighbor.
    pub shifts: Vec<Vec<i64>>,
    #[serde(skip)]
    basis_inv: Vec<Vec<Q>>,
}

fn q(n: i64, d: i64) -> Q {
    Q::new(n, d)
}

fn qv(entries: &[(i64, i64)]) -> Vec<Q> {
    entries.iter().map(|&(n, d)| q(n, d)).collect()
}

fn identity(d: usize) -> Vec<Vec<Q>> {
    (0..d)
        .map(|i| (0..d).map(|j| if i == j { Q::one() } else { Q::zero() }).collect())
        .collect()
}

/// Inverse of a square rational matrix given row-major.
fn invert(m: &[Vec<Q>]) -> Option<Vec<Vec<Q>>> {
    let d = m.len();
    let mut a: Vec<Vec<Q>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..d).map(|j| if i == j { Q::one() } else { Q::zero() }));
            r
        })
        .collect();
    for col in 0..d {
        let pivot = (col..d).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        let p = a[col][col];
        for x in a[col].iter_mut() {
            *x /= p;
        }
        for r in 0..d {
            if r != col && !a[r][col].is_zero() {
                let factor = a[r][col];
                let pivot_row = a[col].clone();
                for (x, y) in a[r].iter_mut().zip(pivot_row) {
                    *x -= factor * y;
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[d..].to_vec()).collect())
}

fn mat_vec(m: &[Vec<Q>], v: &[Q]) -> Vec<Q> {
    m.iter()
        .map(|row| row.iter().zip(v).fold(Q::zero(), |acc, (a, b)| acc + a * b))
        .collect()
}

fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

impl LatticeSpec {
    /// Completes a lattice description from its geometric data, deriving the label shifts.
    fn assemble(
        name: LatticeName,
        edge_vectors: Vec<Vec<Q>>,
        basis: Vec<Vec<Q>>,
        white_origin: Vec<Q>,
        black_origin: Vec<Q>,
    ) -> Self {
        let d = white_origin.len();
        // `basis` holds columns; the position matrix is its transpose.
        let l_rows: Vec<Vec<Q>> = (0..d).map(|i| basis.iter().map(|c| c[i]).collect()).collect();
        let basis_inv = invert(&l_rows).expect("lattice basis is nonsingular");
        let shifts = edge_vectors
            .iter()
            .map(|e| {
                let delta: Vec<Q> = (0..d).map(|i| e[i] - black_origin[i] + white_origin[i]).collect();
                mat_vec(&basis_inv, &delta)
                    .into_iter()
                    .map(|x| {
                        assert!(x.is_integer(), "edge vector does not land on the black sublattice");
                        x.to_integer()
                    })
                    .collect()
            })
            .collect();
        LatticeSpec {
            name,
            dimension: d,
            degree: edge_vectors.len(),
            edge_vectors,
            basis,
            white_origin,
            black_origin,
            shifts,
            basis_inv,
        }
    }

    /// Builds one of the supported lattices.
    pub fn build(name: LatticeName) -> Self {
        match name {
            LatticeName::Z2Diag => Self::assemble(
                name,
                vec![
                    qv(&[(1, 2), (1, 2)]),
                    qv(&[(-1, 2), (1, 2)]),
                    qv(&[(1, 2), (-1, 2)]),
                    qv(&[(-1, 2), (-1, 2)]),
                ],
                identity(2),
                qv(&[(1, 2), (-1, 2)]),
                qv(&[(0, 1), (0, 1)]),
            ),
            LatticeName::Z3 => {
                let mut ev = Vec::new();
                for i in 0..3 {
                    for sign in [1, -1] {
                        let mut v = vec![Q::zero(); 3];
                        v[i] = q(sign, 2);
                        ev.push(v);
                    }
                }
                Self::assemble(
                    name,
                    ev,
                    vec![
                        qv(&[(1, 2), (1, 2), (0, 1)]),
                        qv(&[(1, 2), (0, 1), (1, 2)]),
                        qv(&[(0, 1), (1, 2), (1, 2)]),
                    ],
                    qv(&[(1, 4), (1, 4), (1, 4)]),
                    qv(&[(3, 4), (1, 4), (1, 4)]),
                )
            }
            LatticeName::Bcc => {
                // Binary order: bit i of the type index set means +1/2 in coordinate i.
                let ev = (0..8)
                    .map(|t: usize| {
                        (0..3)
                            .map(|i| if (t >> (2 - i)) & 1 == 1 { q(1, 2) } else { q(-1, 2) })
                            .collect()
                    })
                    .collect();
                Self::assemble(
                    name,
                    ev,
                    identity(3),
                    qv(&[(1, 2), (1, 2), (1, 2)]),
                    qv(&[(0, 1), (0, 1), (0, 1)]),
                )
            }
            LatticeName::Honeycomb => Self::assemble(
                name,
                vec![
                    qv(&[(-1, 3), (-1, 3)]),
                    qv(&[(2, 3), (-1, 3)]),
                    qv(&[(-1, 3), (2, 3)]),
                ],
                identity(2),
                qv(&[(1, 3), (1, 3)]),
                qv(&[(0, 1), (0, 1)]),
            ),
            LatticeName::DiamondCubic => Self::assemble(
                name,
                vec![
                    qv(&[(-1, 4), (-1, 4), (-1, 4)]),
                    qv(&[(3, 4), (-1, 4), (-1, 4)]),
                    qv(&[(-1, 4), (3, 4), (-1, 4)]),
                    qv(&[(-1, 4), (-1, 4), (3, 4)]),
                ],
                identity(3),
                qv(&[(1, 4), (1, 4), (1, 4)]),
                qv(&[(0, 1), (0, 1), (0, 1)]),
            ),
        }
    }

    fn inv(&self) -> Vec<Vec<Q>> {
        if self.basis_inv.is_empty() {
            let d = self.dimension;
            let rows: Vec<Vec<Q>> = (0..d).map(|i| self.basis.iter().map(|c| c[i]).collect()).collect();
            invert(&rows).expect("lattice basis is nonsingular")
        } else {
            self.basis_inv.clone()
        }
    }

    fn position(&self, label: &[i64], origin: &[Q]) -> Vec<Q> {
        let mut p = origin.to_vec();
        for (k, &a) in label.iter().enumerate() {
            for i in 0..self.dimension {
                p[i] += self.basis[k][i] * Q::from_integer(a);
            }
        }
        p
    }

    /// Geometric position of the white vertex with the given label.
    pub fn white_position(&self, label: &[i64]) -> Vec<Q> {
        self.position(label, &self.white_origin)
    }

    /// Geometric position of the black vertex with the given label.
    pub fn black_position(&self, label: &[i64]) -> Vec<Q> {
        self.position(label, &self.black_origin)
    }

    /// Offset of the black sublattice relative to the white one.
    pub fn black_offset(&self) -> Vec<Q> {
        self.black_origin.iter().zip(&self.white_origin).map(|(b, w)| b - w).collect()
    }

    /// Edge vectors as floating point.
    pub fn edge_vectors_f64(&self) -> Vec<Vec<f64>> {
        self.edge_vectors.iter().map(|v| v.iter().map(to_f64).collect()).collect()
    }

    /// Label of the vertex of `color` at `position`, if there is one.
    pub fn label_at(&self, white: bool, position: &[Q]) -> Option<Vec<i64>> {
        let origin = if white { &self.white_origin } else { &self.black_origin };
        let delta: Vec<Q> = position.iter().zip(origin).map(|(p, o)| p - o).collect();
        let lam = mat_vec(&self.inv(), &delta);
        lam.iter().all(|x| x.is_integer()).then(|| lam.iter().map(|x| x.to_integer()).collect())
    }

    /// Coordinates of a position in the basis `L`.
    pub fn to_lattice_coords(&self, position: &[Q]) -> Vec<Q> {
        mat_vec(&self.inv(), position)
    }

    /// Type index of the edge realising the label shift, if any.
    pub fn type_of_shift(&self, shift: &[i64]) -> Option<usize> {
        self.shifts.iter().position(|t| t.as_slice() == shift)
    }

    /// Length of the shortest cycle in the infinite lattice.
    pub fn girth(&self) -> usize {
        match self.name {
            LatticeName::Honeycomb | LatticeName::DiamondCubic => 6,
            _ => 4,
        }
    }

    /// The Newton polytope with the default membership tolerance.
    pub fn newton_polytope(&self) -> NewtonPolytope {
        NewtonPolytope::new(self.edge_vectors.clone(), DEFAULT_POLYTOPE_TOL)
    }
}

/// Builds a lattice by name.
pub fn build_lattice(name: LatticeName) -> LatticeSpec {
    LatticeSpec::build(name)
}

/// Default tolerance in each facet inequality.
pub const DEFAULT_POLYTOPE_TOL: f64 = 1e-9;

/// Convex hull of the edge vectors with a facet description `a·s ≤ 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct NewtonPolytope {
    pub vertices: Vec<Vec<Q>>,
    /// Outer facet normals scaled so that each facet reads `a·s ≤ 1`.
    pub facets: Vec<Vec<Q>>,
    pub tol: f64,
    facets_f64: Vec<(Vec<f64>, f64)>,
}

fn sub(a: &[Q], b: &[Q]) -> Vec<Q> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).fold(Q::zero(), |acc, (x, y)| acc + x * y)
}

/// Normal of the hyperplane through `d` points in `R^d`, for `d ∈ {2, 3}`.
fn hyperplane_normal(points: &[&Vec<Q>]) -> Vec<Q> {
    match points.len() {
        2 => {
            let u = sub(points[1], points[0]);
            vec![u[1], -u[0]]
        }
        3 => {
            let u = sub(points[1], points[0]);
            let v = sub(points[2], points[0]);
            vec![
                u[1] * v[2] - u[2] * v[1],
                u[2] * v[0] - u[0] * v[2],
                u[0] * v[1] - u[1] * v[0],
            ]
        }
        d => panic!("unsupported dimension {d}"),
    }
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

impl NewtonPolytope {
    /// Computes the facets of the hull of `vertices`, which must contain the origin in its interior.
    pub fn new(vertices: Vec<Vec<Q>>, tol: f64) -> Self {
        let d = vertices[0].len();
        let mut facets: Vec<Vec<Q>> = Vec::new();
        for subset in subsets(vertices.len(), d) {
            let pts: Vec<&Vec<Q>> = subset.iter().map(|&i| &vertices[i]).collect();
            let normal = hyperplane_normal(&pts);
            if normal.iter().all(|x| x.is_zero()) {
                continue;
            }
            let b = dot(&normal, pts[0]);
            if b.is_zero() {
                continue;
            }
            let a: Vec<Q> = normal.iter().map(|x| x / b).collect();
            if vertices.iter().all(|v| dot(&a, v) <= Q::one()) && !facets.contains(&a) {
                facets.push(a);
            }
        }
        facets.sort();
        let facets_f64 = facets
            .iter()
            .map(|a| {
                let af: Vec<f64> = a.iter().map(to_f64).collect();
                let norm = af.iter().map(|x| x * x).sum::<f64>().sqrt();
                (af, norm)
            })
            .collect();
        NewtonPolytope { vertices, facets, tol, facets_f64 }
    }

    pub fn dimension(&self) -> usize {
        self.vertices[0].len()
    }

    /// Returns a copy with a different membership tolerance.
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// Membership with tolerance `tol` in each facet inequality.
    pub fn contains(&self, s: &[f64]) -> bool {
        self.facets_f64
            .iter()
            .all(|(a, _)| a.iter().zip(s).map(|(x, y)| x * y).sum::<f64>() <= 1.0 + self.tol)
    }

    /// Strict interior membership with margin `tol`.
    pub fn contains_interior(&self, s: &[f64]) -> bool {
        self.facets_f64
            .iter()
            .all(|(a, _)| a.iter().zip(s).map(|(x, y)| x * y).sum::<f64>() < 1.0 - self.tol)
    }

    /// Exact membership for rational slopes.
    pub fn contains_exact(&self, s: &[Q]) -> bool {
        self.facets.iter().all(|a| dot(a, s) <= Q::one())
    }

    /// Exact test for lying on the boundary.
    pub fn on_boundary_exact(&self, s: &[Q]) -> bool {
        self.contains_exact(s) && self.facets.iter().any(|a| dot(a, s) == Q::one())
    }

    /// Euclidean distance to the boundary, negative outside.
    pub fn boundary_distance(&self, s: &[f64]) -> f64 {
        self.facets_f64
            .iter()
            .map(|(a, norm)| (1.0 - a.iter().zip(s).map(|(x, y)| x * y).sum::<f64>()) / norm)
            .fold(f64::INFINITY, f64::min)
    }

    /// Vertices as floating point.
    pub fn vertices_f64(&self) -> Vec<Vec<f64>> {
        self.vertices.iter().map(|v| v.iter().map(to_f64).collect()).collect()
    }

    /// Largest absolute facet coefficient, used for scale-aware tolerances.
    pub fn max_facet_coefficient(&self) -> Q {
        self.facets.iter().flatten().map(|x| x.abs()).max().unwrap_or_else(Q::zero)
    }
}

/// Newton polytope of a lattice.
pub fn newton_polytope(lattice: &LatticeSpec) -> NewtonPolytope {
    lattice.newton_polytope()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_vectors_sum_to_zero() {
        for name in LatticeName::ALL {
            let l = build_lattice(name);
            for i in 0..l.dimension {
                let s: Q = l.edge_vectors.iter().map(|v| v[i]).sum();
                assert!(s.is_zero(), "{name}");
            }
            assert_eq!(l.edge_vectors.len(), l.degree);
        }
    }

    #[test]
    fn degrees_and_dimensions() {
        let expect = [(LatticeName::Z2Diag, 2, 4), (LatticeName::Z3, 3, 6), (LatticeName::Bcc, 3, 8),
            (LatticeName::Honeycomb, 2, 3), (LatticeName::DiamondCubic, 3, 4)];
        for (name, d, deg) in expect {
            let l = build_lattice(name);
            assert_eq!((l.dimension, l.degree), (d, deg));
        }
    }

    #[test]
    fn shifts_reproduce_edge_vectors() {
        for name in LatticeName::ALL {
            let l = build_lattice(name);
            let w = vec![2, -1, 3][..l.dimension].to_vec();
            for (t, e) in l.shifts.iter().zip(&l.edge_vectors) {
                let b: Vec<i64> = w.iter().zip(t).map(|(a, s)| a + s).collect();
                let diff = sub(&l.black_position(&b), &l.white_position(&w));
                assert_eq!(&diff, e, "{name}");
            }
        }
    }

    #[test]
    fn aztec_diamond_shift_convention() {
        let l = build_lattice(LatticeName::Z2Diag);
        assert_eq!(l.shifts, vec![vec![1, 0], vec![0, 0], vec![1, -1], vec![0, -1]]);
    }

    #[test]
    fn diamond_shift_convention() {
        let l = build_lattice(LatticeName::DiamondCubic);
        assert_eq!(l.shifts, vec![vec![0, 0, 0], vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]);
    }

    #[test]
    fn polytope_facets() {
        let z2 = build_lattice(LatticeName::Z2Diag).newton_polytope();
        assert_eq!(z2.facets.len(), 4);
        assert!(z2.contains(&[0.5, -0.5]));
        assert!(!z2.contains(&[0.51, 0.0]));
        assert!((z2.boundary_distance(&[0.0, 0.0]) - 0.5).abs() < 1e-15);
        let z3 = build_lattice(LatticeName::Z3).newton_polytope();
        assert_eq!(z3.facets.len(), 8);
        assert!(z3.contains(&[0.2, -0.2, 0.1]));
        assert!(!z3.contains(&[0.2, -0.2, 0.11]));
        assert_eq!(build_lattice(LatticeName::Bcc).newton_polytope().facets.len(), 6);
        assert_eq!(build_lattice(LatticeName::Honeycomb).newton_polytope().facets.len(), 3);
        assert_eq!(build_lattice(LatticeName::DiamondCubic).newton_polytope().facets.len(), 4);
    }

    #[test]
    fn origin_is_interior() {
        for name in LatticeName::ALL {
            let p = build_lattice(name).newton_polytope();
            assert!(p.contains_interior(&vec![0.0; p.dimension()]));
            for v in &p.vertices {
                assert!(p.on_boundary_exact(v));
            }
        }
    }

    #[test]
    fn parse_names() {
        assert_eq!("bcc".parse::<LatticeName>().unwrap(), LatticeName::Bcc);
        assert_eq!("Z2_DIAG".parse::<LatticeName>().unwrap(), LatticeName::Z2Diag);
        assert_eq!("diamond-cubic".parse::<LatticeName>().unwrap(), LatticeName::DiamondCubic);
        assert!("kagome".parse::<LatticeName>().is_err());
    }

    #[test]
    fn z3_labels_round_trip() {
        let l = build_lattice(LatticeName::Z3);
        let a = vec![1, -2, 3];
        assert_eq!(l.label_at(true, &l.white_position(&a)), Some(a.clone()));
        assert_eq!(l.label_at(false, &l.white_position(&a)), None);
    }
}
