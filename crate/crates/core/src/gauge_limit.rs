//! Discrete gauges against their continuum limits.
//!
//! Covers the sup-norm convergence of `(1/n) log g_n` to `H`, the discrete
//! operator `C_n` and the comparison principle it satisfies.

use serde::Serialize;

use crate::closed_form::{closed_form_gauge, ClosedFormShape};
use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::region::{RegionGraph, VertexRef};
use crate::shapes::aztec_cuboid_gauge;
use crate::sinkhorn::{gauge_distance, sinkhorn_solve, SinkhornOptions};
use crate::thermo::xlogx;

/// Shapes whose limiting gauge is explicit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LimitFamily {
    /// `AD(n)`, limit on `[0,1]²`.
    AztecDiamond,
    /// `AC(m, 2m−1, 2m)`, limit on the `(1, 2, 2)` box.
    AztecCuboid,
}

impl LimitFamily {
    pub fn shape(&self, n: u64) -> ClosedFormShape {
        match self {
            LimitFamily::AztecDiamond => ClosedFormShape::AztecDiamond { n },
            LimitFamily::AztecCuboid => ClosedFormShape::AztecCuboid { a: n, b: 2 * n - 1, c: 2 * n },
        }
    }

    /// The limiting gauge function `H`.
    pub fn limit(&self, p: &[f64]) -> f64 {
        match self {
            LimitFamily::AztecDiamond => aztec_diamond_gauge(p),
            LimitFamily::AztecCuboid => aztec_cuboid_gauge(1.0, 2.0, 2.0, p),
        }
    }
}

/// `H(x, y) = (1−x) log(1−x) + x log x − (1−y) log(1−y) − y log y`.
pub fn aztec_diamond_gauge(p: &[f64]) -> f64 {
    xlogx(1.0 - p[0]) + xlogx(p[0]) - xlogx(1.0 - p[1]) - xlogx(p[1])
}

/// One row of the convergence table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaugeConvergenceRow {
    pub n: u64,
    /// `sup |(1/n) log g_n − H|` over black vertices.
    pub sup_error: f64,
    /// Distance between the Sinkhorn and closed-form gauges, when computed.
    pub sinkhorn_distance: Option<f64>,
}

/// Sup-norm error of the closed-form gauge against `H` for each `n`.
///
/// With `sinkhorn_up_to = Some(m)`, sizes `n ≤ m` are also solved numerically
/// and compared with the closed form.
pub fn discrete_gauge_convergence(
    family: LimitFamily,
    n_list: &[u64],
    sinkhorn_up_to: Option<u64>,
) -> Result<Vec<GaugeConvergenceRow>> {
    if n_list.windows(2).any(|w| w[0] >= w[1]) || n_list.first() == Some(&0) {
        return Err(Error::InvalidInput("sizes must be positive and strictly increasing".into()));
    }
    n_list
        .iter()
        .map(|&n| {
            let (region, gauge) = closed_form_gauge(&family.shape(n))?;
            let nf = n as f64;
            let sup_error = (0..region.blacks.len())
                .map(|j| {
                    let x = region.scaled_position(VertexRef::Black(j)).expect("lattice region");
                    (gauge.log_g[j] / nf - family.limit(&x)).abs()
                })
                .fold(0.0, f64::max);
            let sinkhorn_distance = match sinkhorn_up_to {
                Some(m) if n <= m => {
                    let opts = SinkhornOptions { tol: 1e-12, ..Default::default() };
                    let (num, _) = sinkhorn_solve(&region, &vec![1.0; region.edges.len()], &opts)?;
                    Some(gauge_distance(&num, &gauge)?)
                }
                _ => None,
            };
            Ok(GaugeConvergenceRow { n, sup_error, sinkhorn_distance })
        })
        .collect()
}

/// `C_n(e^{nq})(x) = Σ_i [Σ_j exp(n(q(x − e_i/n + e_j/n) − q(x)))]⁻¹` at a black point `x`.
pub fn discrete_operator_cn(lattice: &LatticeSpec, q: &dyn Fn(&[f64]) -> f64, n: f64, x: &[f64]) -> f64 {
    let edges = lattice.edge_vectors_f64();
    let q0 = q(x);
    edges
        .iter()
        .map(|ei| {
            let inner: f64 = edges
                .iter()
                .map(|ej| {
                    let y: Vec<f64> = x.iter().zip(ei.iter().zip(ej)).map(|(p, (a, b))| p + (b - a) / n).collect();
                    (n * (q(&y) - q0)).exp()
                })
                .sum();
            1.0 / inner
        })
        .sum()
}

/// `C_n(g)(u) = g(u) Σ_{w∼u} 1/Σ_{b∼w} g(b)` on a region, from `log g`.
///
/// Fails when a white neighbor of `u` is a boundary vertex, since its
/// neighborhood then leaves the region.
pub fn discrete_operator_cn_region(region: &RegionGraph, log_g: &[f64], u: usize) -> Result<f64> {
    let mut terms = Vec::new();
    for &e in region.black_edges(u) {
        let w = region.edges[e].white;
        if region.site(VertexRef::White(w)).boundary {
            return Err(Error::InvalidInput(format!("the two-step neighborhood of black {u} leaves the region")));
        }
        let exps: Vec<f64> = region.white_edges(w).iter().map(|&k| log_g[region.edges[k].black] - log_g[u]).collect();
        let m = exps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + exps.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
        terms.push((-lse).exp());
    }
    Ok(terms.iter().sum())
}

/// Comparison-principle check on a sub-box `U` of the Aztec diamond.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaxPrincipleReport {
    pub n: u64,
    pub delta: f64,
    /// Largest `C_n(q₋)` over interior points of `U`; below one for a subsolution.
    pub sub_max_cn: f64,
    /// Smallest `C_n(q₊)` over interior points of `U`; above one for a supersolution.
    pub super_min_cn: f64,
    /// Whether `min_U g/q₋` is attained on the discrete boundary of `U`.
    pub min_on_boundary: bool,
    /// Whether `max_U g/q₊` is attained on the discrete boundary of `U`.
    pub max_on_boundary: bool,
    pub interior_points: usize,
    pub boundary_points: usize,
}

/// Compares the exact `AD(n)` gauge with `q± = exp(n(H ∓ δ q_U))`, where
/// `q_U = |x − x₀|²/2` about the center of `U` and `δ = n^{−1/2}`.
///
/// `q₋ = exp(n(H + δ q_U))` has `C_n(q₋) < 1`, so `g/q₋` cannot have an
/// interior minimum; symmetrically `g/q₊` cannot have an interior maximum.
pub fn maximum_principle_check(n: u64, lo: [f64; 2], hi: [f64; 2]) -> Result<MaxPrincipleReport> {
    if !(0.0 < lo[0] && lo[0] < hi[0] && hi[0] < 1.0 && 0.0 < lo[1] && lo[1] < hi[1] && hi[1] < 1.0) {
        return Err(Error::InvalidInput("the sub-box must lie inside the open unit square".into()));
    }
    let (region, gauge) = closed_form_gauge(&ClosedFormShape::AztecDiamond { n })?;
    let lattice = region.lattice.clone().expect("lattice region");
    let nf = n as f64;
    let delta = nf.powf(-0.5);
    let x0 = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
    let qu = move |p: &[f64]| 0.5 * ((p[0] - x0[0]).powi(2) + (p[1] - x0[1]).powi(2));
    let q_sub = move |p: &[f64]| aztec_diamond_gauge(p) + delta * qu(p);
    let q_super = move |p: &[f64]| aztec_diamond_gauge(p) - delta * qu(p);
    let inside = |p: &[f64]| p[0] >= lo[0] && p[0] <= hi[0] && p[1] >= lo[1] && p[1] <= hi[1];
    let edges = lattice.edge_vectors_f64();
    let mut sub_max_cn = f64::NEG_INFINITY;
    let mut super_min_cn = f64::INFINITY;
    let mut best_min = (f64::INFINITY, false);
    let mut best_max = (f64::NEG_INFINITY, false);
    let (mut interior_points, mut boundary_points) = (0, 0);
    for j in 0..region.blacks.len() {
        let x = region.scaled_position(VertexRef::Black(j)).expect("lattice region");
        if !inside(&x) {
            continue;
        }
        let interior = edges.iter().all(|ei| {
            edges.iter().all(|ej| {
                let y = [x[0] + (ej[0] - ei[0]) / nf, x[1] + (ej[1] - ei[1]) / nf];
                inside(&y)
            })
        });
        if interior {
            interior_points += 1;
            sub_max_cn = sub_max_cn.max(discrete_operator_cn(&lattice, &q_sub, nf, &x));
            super_min_cn = super_min_cn.min(discrete_operator_cn(&lattice, &q_super, nf, &x));
        } else {
            boundary_points += 1;
        }
        let r_sub = gauge.log_g[j] - nf * q_sub(&x);
        let r_super = gauge.log_g[j] - nf * q_super(&x);
        if r_sub < best_min.0 {
            best_min = (r_sub, !interior);
        }
        if r_super > best_max.0 {
            best_max = (r_super, !interior);
        }
    }
    Ok(MaxPrincipleReport {
        n,
        delta,
        sub_max_cn,
        super_min_cn,
        min_on_boundary: best_min.1,
        max_on_boundary: best_max.1,
        interior_points,
        boundary_points,
    })
}
