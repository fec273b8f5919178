//! Finite-difference residuals of the Euler-Lagrange systems.
//!
//! All derivatives are central differences. The actual step is recomputed as
//! `(x+δ) − (x−δ)` so that rounding of the abscissae does not leak into the
//! derivative.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::shapes::{ScalarField, VectorField};
use crate::thermo::ThermoModel;

/// Default step in unit-scaled coordinates.
pub const DEFAULT_STEP: f64 = 1e-4;
/// Residuals below this value are treated as exact zeros in Richardson checks.
///
/// A central difference of values of size one carries a rounding error near
/// `ε/step`, a few `1e-12` at the default step, and a residual sums several.
pub const EXACT_FLOOR: f64 = 1e-10;

fn shifted(x: &[f64], i: usize, h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[i] += h;
    y
}

/// Central difference of a vector-valued function along axis `i`.
fn central<F>(f: &F, x: &[f64], i: usize, h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let xp = shifted(x, i, h);
    let xm = shifted(x, i, -h);
    let width = xp[i] - xm[i];
    let (fp, fm) = (f(&xp)?, f(&xm)?);
    Ok(fp.iter().zip(&fm).map(|(a, b)| (a - b) / width).collect())
}

fn check_point(domain: &crate::shapes::BoxDomain, x: &[f64], reach: f64) -> Result<()> {
    if x.len() != domain.dimension() || !domain.contains_with(x, reach) {
        return Err(Error::InvalidInput(format!("point {x:?} is too close to the domain boundary")));
    }
    Ok(())
}

/// Gradient of a scalar field by central differences.
pub fn fd_gradient(h: &ScalarField, x: &[f64], step: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let xp = shifted(x, i, step);
            let xm = shifted(x, i, -step);
            (h.eval(&xp) - h.eval(&xm)) / (xp[i] - xm[i])
        })
        .collect()
}

/// Residuals of the flow system: `div ω` followed by
/// `∂_i(∂σ/∂s_j) − ∂_j(∂σ/∂s_i)` for `i < j`.
pub fn el_flow_residual(model: &ThermoModel, omega: &VectorField, x: &[f64], step: f64) -> Result<Vec<f64>> {
    check_point(&omega.domain, x, 2.0 * step)?;
    let d = x.len();
    let s0 = omega.eval(x);
    let distance = model.polytope().boundary_distance(&s0);
    if distance <= 0.0 {
        return Err(Error::Domain { distance });
    }
    let flow = |y: &[f64]| -> Result<Vec<f64>> { Ok(omega.eval(y)) };
    let alpha = |y: &[f64]| model.grad_surface_tension(&omega.eval(y));
    let mut out = Vec::with_capacity(1 + d * (d - 1) / 2);
    let mut div = 0.0;
    let mut dalpha = Vec::with_capacity(d);
    for i in 0..d {
        div += central(&flow, x, i, step)?[i];
        dalpha.push(central(&alpha, x, i, step)?);
    }
    out.push(div);
    for i in 0..d {
        for j in i + 1..d {
            out.push(dalpha[i][j] - dalpha[j][i]);
        }
    }
    Ok(out)
}

/// `div(∇F(∇H))` with nested central differences.
pub fn gauge_pde_residual(model: &ThermoModel, gauge: &ScalarField, x: &[f64], step: f64) -> Result<f64> {
    check_point(&gauge.domain, x, 2.0 * step)?;
    let current = |y: &[f64]| -> Result<Vec<f64>> {
        let v = model.grad_free_energy(&fd_gradient(gauge, y, step));
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!("gauge function is singular near {y:?}")));
        }
        Ok(v)
    };
    (0..x.len()).map(|i| Ok(central(&current, x, i, step)?[i])).sum()
}

/// `div(∇F(α))` for a gauge flow `α = ∇H` given directly.
///
/// Only the divergence is a finite difference here. Nesting two central
/// differences of `H`, as [`gauge_pde_residual`] does, amplifies rounding in
/// `H` by `1/step²`, which is about `1e-8` at the default step.
pub fn gauge_flow_residual(model: &ThermoModel, alpha: &VectorField, x: &[f64], step: f64) -> Result<f64> {
    check_point(&alpha.domain, x, step)?;
    let current = |y: &[f64]| -> Result<Vec<f64>> {
        let v = model.grad_free_energy(&alpha.eval(y));
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!("gauge flow is singular near {y:?}")));
        }
        Ok(v)
    };
    (0..x.len()).map(|i| Ok(central(&current, x, i, step)?[i])).sum()
}

/// The flow `(∂_y h, −∂_x h)` of a planar height function, by central differences.
pub fn flow_from_height(h: &ScalarField, step: f64) -> VectorField {
    let h = h.clone();
    VectorField::new(format!("flow of {}", h.label), h.domain.clone(), move |p| {
        let g = fd_gradient(&h, p, step);
        vec![g[1], -g[0]]
    })
}

/// Residuals `[div ω, curl ∇σ(ω)]` for the flow `ω = (h_y, −h_x)` of a planar height.
pub fn height_el_residual(model: &ThermoModel, h: &ScalarField, x: &[f64], step: f64) -> Result<Vec<f64>> {
    if x.len() != 2 {
        return Err(Error::InvalidInput("height functions are planar".into()));
    }
    check_point(&h.domain, x, 2.0 * step)?;
    let mut flow = flow_from_height(h, step);
    flow.domain.margin += step;
    el_flow_residual(model, &flow, x, step)
}

const D1: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
const D2: [f64; 5] = [-1.0, 16.0, -30.0, 16.0, -1.0];

/// Left side of the lozenge height equation
/// `(h_y − h_y²) h_xx + 2 h_x h_y h_xy + (h_x − h_x²) h_yy`,
/// with fourth-order five-point stencils.
pub fn lozenge_pde_residual(h: impl Fn(f64, f64) -> f64, x: f64, y: f64, step: f64) -> f64 {
    let off = [-2.0, -1.0, 0.0, 1.0, 2.0];
    let mut hx = 0.0;
    let mut hy = 0.0;
    let mut hxx = 0.0;
    let mut hyy = 0.0;
    let mut hxy = 0.0;
    for a in 0..5 {
        let fx = h(x + off[a] * step, y);
        let fy = h(x, y + off[a] * step);
        hx += D1[a] * fx;
        hy += D1[a] * fy;
        hxx += D2[a] * fx;
        hyy += D2[a] * fy;
        for b in 0..5 {
            if D1[a] != 0.0 && D1[b] != 0.0 {
                hxy += D1[a] * D1[b] * h(x + off[a] * step, y + off[b] * step);
            }
        }
    }
    let (hx, hy) = (hx / (12.0 * step), hy / (12.0 * step));
    let s2 = 12.0 * step * step;
    let (hxx, hyy, hxy) = (hxx / s2, hyy / s2, hxy / (144.0 * step * step));
    (hy - hy * hy) * hxx + 2.0 * hx * hy * hxy + (hx - hx * hx) * hyy
}

/// Outcome of comparing residuals at steps `h` and `h/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Richardson {
    /// Both residuals are below the exactness floor.
    Exact,
    /// The ratio `r(h)/r(h/2)`; close to 4 for second-order truncation.
    Ratio(f64),
}

impl Richardson {
    /// Whether the ratio lies within `4 ± 20%`, or the residual is exact.
    pub fn is_second_order(&self) -> bool {
        match *self {
            Richardson::Exact => true,
            Richardson::Ratio(r) => (3.2..=4.8).contains(&r),
        }
    }
}

pub fn richardson(coarse: f64, fine: f64) -> Richardson {
    if coarse.abs() < EXACT_FLOOR && fine.abs() < EXACT_FLOOR {
        Richardson::Exact
    } else {
        Richardson::Ratio(coarse.abs() / fine.abs())
    }
}

/// Largest absolute component over a set of residual vectors.
pub fn max_abs(rows: &[Vec<f64>]) -> f64 {
    rows.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeName;
    use crate::shapes::aztec_diamond_shape;

    #[test]
    fn aztec_flow_residual_small() {
        let m = ThermoModel::new(LatticeName::Z2Diag);
        let s = aztec_diamond_shape();
        let r = el_flow_residual(&m, &s.flow, &[0.4, 0.6], DEFAULT_STEP).unwrap();
        assert_eq!(r.len(), 2);
        assert!(max_abs(&[r]) < 1e-8);
    }

    #[test]
    fn perturbed_flow_detected() {
        let m = ThermoModel::new(LatticeName::Z2Diag);
        let f = aztec_diamond_shape().flow.plus("perturbed", |p| vec![0.01 * p[1], 0.0]);
        let r = el_flow_residual(&m, &f, &[0.4, 0.6], DEFAULT_STEP).unwrap();
        assert!(max_abs(&[r]) >= 1e-3);
    }

    #[test]
    fn lozenge_residual_of_plane_is_zero() {
        assert!(lozenge_pde_residual(|x, y| 0.2 * x + 0.3 * y, 0.5, 0.5, 1e-3).abs() < 1e-10);
    }

    #[test]
    fn boundary_points_rejected() {
        let m = ThermoModel::new(LatticeName::Z2Diag);
        let s = aztec_diamond_shape();
        assert!(el_flow_residual(&m, &s.flow, &[1e-5, 0.5], DEFAULT_STEP).is_err());
    }
}
