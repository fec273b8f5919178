//! Discrete flows, slopes, polytope embeddings and flux diagnostics.
//!
//! A flow assigns `ω(e) ∈ [0, 1]` to each white-to-black edge. Covers give
//! `ω = M/N`, critical gauges give `ω = c`.

use std::collections::BTreeMap;

use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{LatticeSpec, Q};
use crate::matching::MultiDimerCover;
use crate::region::{Color, RegionGraph, VertexRef};
use crate::sinkhorn::{critical_edge_weights, GaugePair};

/// Edge values of a flow on a fixed region, indexed like `region.edges`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscreteFlow {
    pub omega: Vec<f64>,
}

impl DiscreteFlow {
    pub fn new(region: &RegionGraph, omega: Vec<f64>) -> Result<Self> {
        if omega.len() != region.edges.len() {
            return Err(Error::InvalidInput("one flow value per edge is required".into()));
        }
        Ok(DiscreteFlow { omega })
    }

    /// `ω ≡ value`.
    pub fn uniform(region: &RegionGraph, value: f64) -> Self {
        DiscreteFlow { omega: vec![value; region.edges.len()] }
    }
}

/// `ω(e) = M_e / N`.
pub fn cover_to_flow(region: &RegionGraph, cover: &MultiDimerCover) -> DiscreteFlow {
    let n = region.interior_n as f64;
    DiscreteFlow { omega: cover.m.iter().map(|&m| m as f64 / n).collect() }
}

/// `ω(e) = M_e / N` in exact arithmetic.
pub fn cover_to_flow_exact(region: &RegionGraph, cover: &MultiDimerCover) -> Vec<Q> {
    let n = region.interior_n as i64;
    cover.m.iter().map(|&m| Q::new(m as i64, n)).collect()
}

/// The critical flow `c_e = w_e f(u) g(v)`.
pub fn critical_flow(region: &RegionGraph, weights: &[f64], gauge: &GaugePair) -> DiscreteFlow {
    DiscreteFlow { omega: critical_edge_weights(region, weights, gauge) }
}

/// `Σ_{e∋v} ω(e)`, positive at whites and negative at blacks.
pub fn divergence(region: &RegionGraph, flow: &DiscreteFlow, v: VertexRef) -> Result<f64> {
    let len = match v {
        VertexRef::White(_) => region.whites.len(),
        VertexRef::Black(_) => region.blacks.len(),
    };
    if v.index() >= len {
        return Err(Error::InvalidInput(format!("vertex {v:?} is not in the region")));
    }
    let s: f64 = region.edges_at(v).iter().map(|&e| flow.omega[e]).sum();
    Ok(match v {
        VertexRef::White(_) => s,
        VertexRef::Black(_) => -s,
    })
}

fn lattice_of(region: &RegionGraph) -> Result<&LatticeSpec> {
    region
        .lattice
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("operation needs a lattice region".into()))
}

/// Slope at one vertex with its scaled position.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeSample {
    pub vertex: VertexRef,
    pub position: Vec<f64>,
    pub slope: Vec<f64>,
}

fn weighted_edge_sum(region: &RegionGraph, edges: &[Vec<f64>], omega: &[f64], v: VertexRef) -> Vec<f64> {
    let d = edges[0].len();
    let mut s = vec![0.0; d];
    for &e in region.edges_at(v) {
        for (x, y) in s.iter_mut().zip(&edges[region.edges[e].ty]) {
            *x += omega[e] * y;
        }
    }
    s
}

/// `s(u) = Σ ω(e) e` at whites, or `Σ ω(e)(−e)` at blacks.
pub fn slope_field(region: &RegionGraph, flow: &DiscreteFlow, color: Color) -> Result<Vec<SlopeSample>> {
    let lattice = lattice_of(region)?;
    let edges = lattice.edge_vectors_f64();
    let sign = if color == Color::White { 1.0 } else { -1.0 };
    Ok(region
        .vertices()
        .filter(|v| v.color() == color)
        .map(|v| SlopeSample {
            vertex: v,
            position: region.scaled_position(v).expect("lattice region"),
            slope: weighted_edge_sum(region, &edges, &flow.omega, v).into_iter().map(|x| sign * x).collect(),
        })
        .collect())
}

/// White slopes in exact arithmetic, for rational flows.
pub fn slope_field_exact(region: &RegionGraph, omega: &[Q]) -> Result<Vec<Vec<Q>>> {
    let lattice = lattice_of(region)?;
    Ok((0..region.whites.len())
        .map(|i| {
            let mut s = vec![Q::zero(); lattice.dimension];
            for &e in region.white_edges(i) {
                for (x, y) in s.iter_mut().zip(&lattice.edge_vectors[region.edges[e].ty]) {
                    *x += omega[e] * y;
                }
            }
            s
        })
        .collect())
}

/// Vertex images in the Newton polytope and the corresponding edge segments.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Embedding {
    /// Image of each vertex, whites first.
    pub points: Vec<(VertexRef, Vec<f64>)>,
    /// `(edge, white image, black image)`.
    pub segments: Vec<(usize, Vec<f64>, Vec<f64>)>,
}

/// Maps every vertex to `Σ_{e∋v} ω(e) e`: the slope at whites and the
/// negated slope at blacks. With divergence at most one in absolute value,
/// each image is a convex combination of the origin and the edge vectors.
pub fn embed_in_polytope(region: &RegionGraph, flow: &DiscreteFlow) -> Result<Embedding> {
    let lattice = lattice_of(region)?;
    let edges = lattice.edge_vectors_f64();
    let points: Vec<(VertexRef, Vec<f64>)> =
        region.vertices().map(|v| (v, weighted_edge_sum(region, &edges, &flow.omega, v))).collect();
    let nw = region.whites.len();
    let segments = region
        .edges
        .iter()
        .enumerate()
        .map(|(k, e)| (k, points[e.white].1.clone(), points[nw + e.black].1.clone()))
        .collect();
    Ok(Embedding { points, segments })
}

/// Flux of `N(ω − 1/D)` through the coordinate cross-sections of a torus.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HomologyClass {
    /// Flux through the first slice of each coordinate.
    pub raw: Vec<f64>,
    /// `raw` rounded to the nearest integers.
    pub rounded: Vec<i64>,
    /// Flux through every one of the `n` parallel slices, per coordinate.
    pub per_slice: Vec<Vec<f64>>,
}

fn floor_q(x: Q) -> i64 {
    x.floor().to_integer()
}

/// Offset of the slices in label coordinates, chosen to avoid every vertex.
fn slice_offset(lattice: &LatticeSpec) -> Q {
    let fracs: Vec<Q> = [&lattice.white_origin, &lattice.black_origin]
        .iter()
        .flat_map(|o| lattice.to_lattice_coords(o))
        .map(|x| x - x.floor())
        .collect();
    [Q::new(1, 2), Q::new(1, 4), Q::new(1, 8), Q::new(3, 8), Q::new(1, 16)]
        .into_iter()
        .find(|c| !fracs.contains(c))
        .expect("some dyadic offset avoids the vertex coordinates")
}

/// Homology class of the shifted flow `N(ω − 1/D)` on a torus.
///
/// Slices are the hyperplanes `λ_i = k + c` in label coordinates `λ`, with
/// `k = 0..n` and an offset `c` that avoids all vertices. A segment from `λ`
/// to `λ + δ` crosses a slice `⌊(λ+δ−c)/n⌋ − ⌊(λ−c)/n⌋` times with sign.
/// For a cover flow the value is an integer vector minus the flux of the
/// constant `N/D`, which depends only on the torus and is integral on some
/// tori and not on others. Both the raw and rounded fluxes are returned.
pub fn homology_class(region: &RegionGraph, flow: &DiscreteFlow) -> Result<HomologyClass> {
    let period = region.period.ok_or_else(|| Error::InvalidInput("homology classes need a torus".into()))?;
    let lattice = lattice_of(region)?;
    let d = lattice.dimension;
    let dd = lattice.degree as f64;
    let nn = region.interior_n as f64;
    let c0 = slice_offset(lattice);
    let n = Q::from_integer(period);
    let lam_white: Vec<Vec<Q>> =
        region.whites.iter().map(|w| lattice.to_lattice_coords(&lattice.white_position(&w.coord))).collect();
    let lam_edge: Vec<Vec<Q>> = lattice.edge_vectors.iter().map(|e| lattice.to_lattice_coords(e)).collect();
    let mut per_slice = vec![vec![0.0; period as usize]; d];
    for (k, e) in region.edges.iter().enumerate() {
        let value = nn * (flow.omega[k] - 1.0 / dd);
        let start = &lam_white[e.white];
        let delta = &lam_edge[e.ty];
        for i in 0..d {
            if delta[i].is_zero() {
                continue;
            }
            for (slot, out) in per_slice[i].iter_mut().enumerate() {
                let c = c0 + Q::from_integer(slot as i64);
                let crossings = floor_q((start[i] + delta[i] - c) / n) - floor_q((start[i] - c) / n);
                *out += value * crossings as f64;
            }
        }
    }
    let raw: Vec<f64> = per_slice.iter().map(|s| s[0]).collect();
    let rounded = raw.iter().map(|x| x.round() as i64).collect();
    Ok(HomologyClass { raw, rounded, per_slice })
}

/// Binned upper bound `K(10ε^{d+1} + δ)` on the flow distance.
///
/// Each edge contributes the mass `ω(e)·e_i·vol/n^d` to coordinate `i`,
/// placed at its scaled midpoint, where `vol` is the cell volume of the
/// lattice. `δ` is the largest per-cell, per-coordinate mass discrepancy over
/// a grid of cubes of side `ε`. This bounds the distance from above and is not
/// itself a metric.
pub fn coarse_flux_distance(
    region: &RegionGraph,
    flow1: &DiscreteFlow,
    flow2: &DiscreteFlow,
    eps: f64,
    k_const: f64,
) -> Result<f64> {
    let lattice = lattice_of(region)?;
    let d = lattice.dimension;
    if !(eps > 1.0 / region.scale) {
        return Err(Error::InvalidInput(format!("ε = {eps} must exceed the lattice spacing {}", 1.0 / region.scale)));
    }
    if flow1.omega.len() != region.edges.len() || flow2.omega.len() != region.edges.len() {
        return Err(Error::InvalidInput("flows belong to different regions".into()));
    }
    let edges = lattice.edge_vectors_f64();
    let vol = cell_volume(lattice);
    let mass_scale = vol / region.scale.powi(d as i32);
    let mut cells: BTreeMap<Vec<i64>, Vec<f64>> = BTreeMap::new();
    for (k, e) in region.edges.iter().enumerate() {
        let w = region.scaled_position(VertexRef::White(e.white)).expect("lattice region");
        let mid: Vec<f64> = w.iter().zip(&edges[e.ty]).map(|(x, v)| x + 0.5 * v / region.scale).collect();
        let key: Vec<i64> = mid.iter().map(|x| (x / eps).floor() as i64).collect();
        let diff = flow1.omega[k] - flow2.omega[k];
        let slot = cells.entry(key).or_insert_with(|| vec![0.0; d]);
        for (m, v) in slot.iter_mut().zip(&edges[e.ty]) {
            *m += diff * v * mass_scale;
        }
    }
    let delta = cells.values().flatten().map(|x| x.abs()).fold(0.0, f64::max);
    Ok(k_const * (10.0 * eps.powi(d as i32 + 1) + delta))
}

fn cell_volume(lattice: &LatticeSpec) -> f64 {
    let d = lattice.dimension;
    let m: Vec<Vec<f64>> = lattice.basis.iter().map(|c| c.iter().map(|x| x.to_f64().unwrap_or(0.0)).collect()).collect();
    match d {
        2 => (m[0][0] * m[1][1] - m[0][1] * m[1][0]).abs(),
        3 => (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))
            .abs(),
        _ => 1.0,
    }
}

/// `sign(u)·β(u)/(2n^{d−1})` at every boundary vertex, with `β(u) = Σ_{e∋u} ω(e)`.
pub fn boundary_flux(region: &RegionGraph, flow: &DiscreteFlow) -> Vec<(VertexRef, f64)> {
    let d = region.dimension().max(1) as i32;
    let scale = 2.0 * region.scale.powi(d - 1);
    region
        .vertices()
        .filter(|&v| region.site(v).boundary)
        .map(|v| {
            let beta: f64 = region.edges_at(v).iter().map(|&e| flow.omega[e]).sum();
            let sign = if v.color() == Color::White { 1.0 } else { -1.0 };
            (v, sign * beta / scale)
        })
        .collect()
}
