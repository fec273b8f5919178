//! Free energy, surface tension and the slope-field correspondence.
//!
//! For edge weights `w_j` the free energy is `F(α) = log Σ_j w_j exp(e_j·α)`
//! and the surface tension is its Legendre dual
//! `σ(s) = max_α (s·α − F(α))`. With unit weights the Z², BCC, honeycomb and
//! diamond-cubic tensions also have explicit forms, used as oracles.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{build_lattice, LatticeName, LatticeSpec, NewtonPolytope};

/// Stopping tolerance of the Newton solve, in the sup norm of `∇F(α) − s`.
pub const NEWTON_TOL: f64 = 1e-10;
/// Iteration cap of the Newton solve.
pub const NEWTON_MAX_ITER: usize = 200;

/// `x log x` with `0 log 0 = 0`.
pub fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Free energy and its dual on one lattice with fixed periodic edge weights.
#[derive(Clone, Debug)]
pub struct ThermoModel {
    pub lattice: LatticeSpec,
    /// Edge weight per type; all ones by default.
    pub weights: Vec<f64>,
    log_w: Vec<f64>,
    edges: Vec<Vec<f64>>,
    polytope: NewtonPolytope,
}

/// Result of the Legendre inversion `∇F(α) = s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inversion {
    pub alpha: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

impl ThermoModel {
    /// Unit-weight model on a named lattice.
    pub fn new(name: LatticeName) -> Self {
        let lattice = build_lattice(name);
        let d = lattice.degree;
        Self::with_weights(lattice, vec![1.0; d]).expect("unit weights are valid")
    }

    /// Model with periodic edge weights, one per edge type.
    pub fn with_weights(lattice: LatticeSpec, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != lattice.degree || weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidInput(format!("expected {} positive weights", lattice.degree)));
        }
        let edges = lattice.edge_vectors_f64();
        let polytope = lattice.newton_polytope();
        Ok(ThermoModel { log_w: weights.iter().map(|w| w.ln()).collect(), weights, edges, polytope, lattice })
    }

    pub fn dimension(&self) -> usize {
        self.lattice.dimension
    }

    pub fn polytope(&self) -> &NewtonPolytope {
        &self.polytope
    }

    pub fn edge_vectors(&self) -> &[Vec<f64>] {
        &self.edges
    }

    fn is_unweighted(&self) -> bool {
        self.weights.iter().all(|&w| w == 1.0)
    }

    /// Whether an explicit surface tension is available.
    pub fn has_closed_form_sigma(&self) -> bool {
        self.is_unweighted() && self.lattice.name != LatticeName::Z3
    }

    fn exponents(&self, alpha: &[f64]) -> Vec<f64> {
        self.edges
            .iter()
            .zip(&self.log_w)
            .map(|(e, lw)| lw + e.iter().zip(alpha).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    }

    /// `F(α)`, by log-sum-exp with max subtraction.
    pub fn free_energy(&self, alpha: &[f64]) -> f64 {
        let x = self.exponents(alpha);
        let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        m + x.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
    }

    /// Edge-type probabilities `p_j = softmax(log w_j + e_j·α)`.
    pub fn edge_probabilities(&self, alpha: &[f64]) -> Vec<f64> {
        let x = self.exponents(alpha);
        let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = x.iter().map(|v| (v - m).exp()).collect();
        let z: f64 = e.iter().sum();
        e.into_iter().map(|v| v / z).collect()
    }

    /// `∇F(α) = Σ p_j e_j`, always inside the Newton polytope.
    pub fn grad_free_energy(&self, alpha: &[f64]) -> Vec<f64> {
        let p = self.edge_probabilities(alpha);
        let d = self.dimension();
        (0..d).map(|i| p.iter().zip(&self.edges).map(|(pj, e)| pj * e[i]).sum()).collect()
    }

    /// `Hess F(α)`, the covariance of the edge vectors under `p(α)`.
    pub fn hessian_free_energy(&self, alpha: &[f64]) -> DMatrix<f64> {
        let p = self.edge_probabilities(alpha);
        let d = self.dimension();
        let mean: Vec<f64> = (0..d).map(|i| p.iter().zip(&self.edges).map(|(pj, e)| pj * e[i]).sum()).collect();
        DMatrix::from_fn(d, d, |i, j| {
            p.iter().zip(&self.edges).map(|(pj, e)| pj * (e[i] - mean[i]) * (e[j] - mean[j])).sum()
        })
    }

    fn check_interior(&self, s: &[f64]) -> Result<()> {
        if s.len() != self.dimension() || s.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("slope has the wrong dimension".into()));
        }
        let distance = self.polytope.boundary_distance(s);
        if distance <= 0.0 {
            return Err(Error::Domain { distance });
        }
        Ok(())
    }

    /// Solves `∇F(α) = s` by damped Newton from `α = 0`.
    ///
    /// After reaching the stopping tolerance, Newton steps continue while they
    /// still reduce the residual, so the returned `α` is accurate to rounding.
    pub fn invert_gradient(&self, s: &[f64]) -> Result<Inversion> {
        self.check_interior(s)?;
        let d = self.dimension();
        let sv = DVector::from_column_slice(s);
        let objective = |a: &DVector<f64>| self.free_energy(a.as_slice()) - sv.dot(a);
        let residual_of = |a: &DVector<f64>| DVector::from_vec(self.grad_free_energy(a.as_slice())) - &sv;
        let mut alpha = DVector::zeros(d);
        let mut r = residual_of(&alpha);
        let mut it = 0;
        while it < NEWTON_MAX_ITER && r.amax() > NEWTON_TOL {
            it += 1;
            let h = DMatrix::from(self.hessian_free_energy(alpha.as_slice()));
            let step = match h.clone().cholesky() {
                Some(c) => c.solve(&r),
                None => break,
            };
            let phi0 = objective(&alpha);
            let slope = r.dot(&step);
            let mut t = 1.0;
            loop {
                let trial = &alpha - &step * t;
                // Near the solution the objective decrease drops below rounding,
                // so a step that shrinks the residual is accepted as well.
                let decreases = objective(&trial) <= phi0 - 1e-4 * t * slope;
                if decreases || residual_of(&trial).amax() < (1.0 - 1e-4 * t) * r.amax() || t < 1e-12 {
                    alpha = trial;
                    break;
                }
                t *= 0.5;
            }
            r = residual_of(&alpha);
        }
        if r.amax() > NEWTON_TOL {
            return Err(Error::Domain { distance: self.polytope.boundary_distance(s) });
        }
        for _ in 0..4 {
            let h = self.hessian_free_energy(alpha.as_slice());
            let Some(c) = h.cholesky() else { break };
            let trial = &alpha - c.solve(&r);
            let rt = residual_of(&trial);
            if rt.amax() >= r.amax() {
                break;
            }
            alpha = trial;
            r = rt;
        }
        Ok(Inversion { alpha: alpha.as_slice().to_vec(), iterations: it, residual: r.amax() })
    }

    /// `∇σ(s)`, the field `α` with `∇F(α) = s`.
    pub fn grad_surface_tension(&self, s: &[f64]) -> Result<Vec<f64>> {
        Ok(self.invert_gradient(s)?.alpha)
    }

    /// `σ(s) = s·α − F(α)` through the Newton solve.
    pub fn surface_tension_newton(&self, s: &[f64]) -> Result<f64> {
        let alpha = self.grad_surface_tension(s)?;
        Ok(s.iter().zip(&alpha).map(|(a, b)| a * b).sum::<f64>() - self.free_energy(&alpha))
    }

    /// The explicit surface tension, valid on the closed polytope.
    ///
    /// Returns `None` for weighted models and for `Z³` interior slopes.
    pub fn surface_tension_closed(&self, s: &[f64]) -> Option<f64> {
        if !self.is_unweighted() || !self.polytope.contains(s) {
            return None;
        }
        match self.lattice.name {
            LatticeName::Z2Diag | LatticeName::Bcc => Some(s.iter().map(|&x| binary_entropy_term(x)).sum()),
            LatticeName::Honeycomb | LatticeName::DiamondCubic => {
                let p = simplex_probabilities(&self.edges, s)?;
                Some(p.into_iter().map(xlogx).sum())
            }
            LatticeName::Z3 => {
                // On a face of the octahedron only the three edges with signs
                // matching the slope are used, with `p_i = 2|s_i|`.
                let l1: f64 = s.iter().map(|x| x.abs()).sum();
                if (l1 - 0.5).abs() > self.polytope.tol {
                    return None;
                }
                Some(s.iter().map(|&x| xlogx(2.0 * x.abs())).sum())
            }
        }
    }

    /// `σ(s)`: Newton in the interior, the explicit formula on the boundary.
    pub fn surface_tension(&self, s: &[f64]) -> Result<f64> {
        if s.len() != self.dimension() {
            return Err(Error::InvalidInput("slope has the wrong dimension".into()));
        }
        let distance = self.polytope.boundary_distance(s);
        if distance < -self.polytope.tol {
            return Err(Error::Domain { distance });
        }
        if distance <= self.polytope.tol {
            return self.surface_tension_closed(s).ok_or(Error::Domain { distance });
        }
        self.surface_tension_newton(s)
    }

    /// Explicit `∇σ` where available.
    pub fn grad_surface_tension_closed(&self, s: &[f64]) -> Option<Vec<f64>> {
        if !self.is_unweighted() || !self.polytope.contains_interior(s) {
            return None;
        }
        match self.lattice.name {
            LatticeName::Z2Diag | LatticeName::Bcc => {
                Some(s.iter().map(|&x| ((1.0 + 2.0 * x) / (1.0 - 2.0 * x)).ln()).collect())
            }
            LatticeName::Honeycomb | LatticeName::DiamondCubic => {
                // σ = Σ p log p with p affine in s; the gradient is the affine
                // pullback of log p, fixed by requiring α·e_j − log p_j constant.
                let p = simplex_probabilities(&self.edges, s)?;
                let d = self.dimension();
                let base = &self.edges[0];
                let m = DMatrix::from_fn(d, d, |i, k| self.edges[i + 1][k] - base[k]);
                let rhs = DVector::from_fn(d, |i, _| p[i + 1].ln() - p[0].ln());
                m.lu().solve(&rhs).map(|v| v.as_slice().to_vec())
            }
            LatticeName::Z3 => None,
        }
    }

    /// `Hess σ(s) = (Hess F(∇σ(s)))⁻¹`.
    pub fn hessian_surface_tension(&self, s: &[f64]) -> Result<DMatrix<f64>> {
        let alpha = self.grad_surface_tension(s)?;
        self.hessian_free_energy(&alpha)
            .try_inverse()
            .ok_or(Error::Domain { distance: self.polytope.boundary_distance(s) })
    }

    /// Edge-type frequencies realising the slope `s`.
    pub fn slope_to_edge_probabilities(&self, s: &[f64]) -> Result<Vec<f64>> {
        let alpha = self.grad_surface_tension(s)?;
        Ok(self.edge_probabilities(&alpha))
    }
}

/// `p log p + q log q` with `p, q = 1/2 ± s`.
fn binary_entropy_term(s: f64) -> f64 {
    xlogx(0.5 + s) + xlogx(0.5 - s)
}

/// Barycentric coordinates of `s` when the edge vectors form a simplex.
pub fn simplex_probabilities(edges: &[Vec<f64>], s: &[f64]) -> Option<Vec<f64>> {
    let d = s.len();
    if edges.len() != d + 1 {
        return None;
    }
    let m = DMatrix::from_fn(d + 1, d + 1, |i, j| if i < d { edges[j][i] } else { 1.0 });
    let rhs = DVector::from_fn(d + 1, |i, _| if i < d { s[i] } else { 1.0 });
    let p = m.lu().solve(&rhs)?;
    Some(p.iter().map(|&x| x.max(0.0)).collect())
}

/// Entropy per dimer of the torus measure with weights `w`:
/// `log Σ w_i − Σ w_i log w_i / Σ w_i`.
pub fn entropy_per_dimer(weights: &[f64]) -> Result<f64> {
    if weights.is_empty() || weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(Error::InvalidInput("weights must be positive".into()));
    }
    let total: f64 = weights.iter().sum();
    Ok(total.ln() - weights.iter().map(|&w| w * w.ln()).sum::<f64>() / total)
}

/// Honeycomb vector slope from the edge fractions `s = p₂`, `t = p₃`.
pub fn honeycomb_slope_from_fractions(s: f64, t: f64) -> [f64; 2] {
    [s - 1.0 / 3.0, t - 1.0 / 3.0]
}

/// Honeycomb edge fractions `(s, t) = (p₂, p₃)` from a vector slope.
pub fn honeycomb_fractions_from_slope(slope: &[f64]) -> (f64, f64) {
    (slope[0] + 1.0 / 3.0, slope[1] + 1.0 / 3.0)
}

/// Honeycomb surface tension in edge-fraction coordinates.
pub fn honeycomb_sigma_fractions(s: f64, t: f64) -> f64 {
    xlogx(s) + xlogx(t) + xlogx(1.0 - s - t)
}
