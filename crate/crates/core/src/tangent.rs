//! Conformal coordinates on planar slope spaces and envelopes of tangent planes.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::LatticeName;
use crate::thermo::{honeycomb_fractions_from_slope, ThermoModel};

/// Conformal coordinates `z = u + iv` of a slope and the factor `κ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Conformal {
    pub u: f64,
    pub v: f64,
    pub kappa: f64,
}

/// `(u, v, κ)` for the square-octagon-free planar lattices `Z²` and honeycomb.
///
/// For `Z²`, `(u, v) = (arccos 2s₁, arccos 2s₂)` and `κ = 4/(sin u sin v)`.
/// For the honeycomb, with edge fractions `(s, t)` and `r = 1−s−t`,
/// `u = (s − tr)/(1−t)²`, `v = 2√(str)/(1−t)²` and
/// `κ = (1 + |z| + |z−1|)²/(2v)`.
pub fn conformal_coordinates_2d(model: &ThermoModel, slope: &[f64]) -> Result<Conformal> {
    let distance = model.polytope().boundary_distance(slope);
    if slope.len() != 2 || distance <= 1e-12 {
        return Err(Error::Domain { distance });
    }
    match model.lattice.name {
        LatticeName::Z2Diag => {
            let u = (2.0 * slope[0]).acos();
            let v = (2.0 * slope[1]).acos();
            Ok(Conformal { u, v, kappa: 4.0 / (u.sin() * v.sin()) })
        }
        LatticeName::Honeycomb => {
            let (s, t) = honeycomb_fractions_from_slope(slope);
            let r = 1.0 - s - t;
            let den = (1.0 - t).powi(2);
            let u = (s - t * r) / den;
            let v = 2.0 * (s * t * r).sqrt() / den;
            let kappa = (1.0 + u.hypot(v) + (u - 1.0).hypot(v)).powi(2) / (2.0 * v);
            Ok(Conformal { u, v, kappa })
        }
        other => Err(Error::InvalidInput(format!("no conformal coordinates for {other}"))),
    }
}

type PlaneFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A two-parameter family of planes `h = s x + t y + c`.
#[derive(Clone)]
pub struct PlaneFamily {
    pub s: PlaneFn,
    pub t: PlaneFn,
    pub c: PlaneFn,
}

impl PlaneFamily {
    pub fn new(
        s: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        t: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        c: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        PlaneFamily { s: Arc::new(s), t: Arc::new(t), c: Arc::new(c) }
    }
}

/// Aztec diamond planes: `s = cos u/2`, `t = cos v/2`,
/// `c = −(cos u + cos v + cos u cos v)/4`.
pub fn aztec_plane_family() -> PlaneFamily {
    PlaneFamily::new(
        |u, _| u.cos() / 2.0,
        |_, v| v.cos() / 2.0,
        |u, v| -(u.cos() + v.cos() + u.cos() * v.cos()) / 4.0,
    )
}

/// Honeycomb cone planes with `D = 1 + |z−1| + |z|`:
/// `s = (1 − |z−1| + |z|)/D`, `t = (−1 + |z−1| + |z|)/D`, `c = −u/D`.
pub fn honeycomb_plane_family() -> PlaneFamily {
    fn parts(u: f64, v: f64) -> (f64, f64, f64) {
        let r0 = u.hypot(v);
        let r1 = (u - 1.0).hypot(v);
        (r0, r1, 1.0 + r0 + r1)
    }
    PlaneFamily::new(
        |u, v| {
            let (r0, r1, d) = parts(u, v);
            (1.0 - r1 + r0) / d
        },
        |u, v| {
            let (r0, r1, d) = parts(u, v);
            (-1.0 + r1 + r0) / d
        },
        |u, v| -u / parts(u, v).2,
    )
}

/// The family consisting of a single plane.
pub fn constant_plane_family(s: f64, t: f64, c: f64) -> PlaneFamily {
    PlaneFamily::new(move |_, _| s, move |_, _| t, move |_, _| c)
}

/// One point `(x, y, h)` of the envelope, from parameter `(u, v)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnvelopePoint {
    pub u: f64,
    pub v: f64,
    pub x: f64,
    pub y: f64,
    pub h: f64,
}

/// Sampled envelope and the parameters at which the system was singular.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvelopeSurface {
    pub points: Vec<EnvelopePoint>,
    pub skipped: Vec<(f64, f64)>,
}

/// Solves `h = sx + ty + c`, `0 = s_u x + t_u y + c_u`, `0 = s_v x + t_v y + c_v`
/// at each grid parameter, with central-difference derivatives of step `step`.
pub fn tangent_plane_surface(family: &PlaneFamily, grid: &[(f64, f64)], step: f64) -> EnvelopeSurface {
    let d = |f: &PlaneFn, u: f64, v: f64, du: bool| -> f64 {
        if du {
            let (p, m) = (u + step, u - step);
            (f(p, v) - f(m, v)) / (p - m)
        } else {
            let (p, m) = (v + step, v - step);
            (f(u, p) - f(u, m)) / (p - m)
        }
    };
    let mut out = EnvelopeSurface { points: Vec::new(), skipped: Vec::new() };
    for &(u, v) in grid {
        let (su, tu, cu) = (d(&family.s, u, v, true), d(&family.t, u, v, true), d(&family.c, u, v, true));
        let (sv, tv, cv) = (d(&family.s, u, v, false), d(&family.t, u, v, false), d(&family.c, u, v, false));
        let det = su * tv - tu * sv;
        let scale = (su.abs() + tu.abs()) * (sv.abs() + tv.abs());
        if !(det.abs() > 1e-12 * scale.max(f64::MIN_POSITIVE)) || scale == 0.0 {
            out.skipped.push((u, v));
            continue;
        }
        let x = (-cu * tv + tu * cv) / det;
        let y = (-su * cv + cu * sv) / det;
        let h = (family.s)(u, v) * x + (family.t)(u, v) * y + (family.c)(u, v);
        out.points.push(EnvelopePoint { u, v, x, y, h });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z2_center() {
        let c = conformal_coordinates_2d(&ThermoModel::new(LatticeName::Z2Diag), &[0.0, 0.0]).unwrap();
        assert!((c.u - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((c.kappa - 4.0).abs() < 1e-14);
    }

    #[test]
    fn boundary_slope_is_degenerate() {
        assert!(conformal_coordinates_2d(&ThermoModel::new(LatticeName::Z2Diag), &[0.5, 0.0]).is_err());
    }

    #[test]
    fn aztec_envelope() {
        let grid: Vec<(f64, f64)> = (1..10).flat_map(|i| (1..10).map(move |j| (0.3 * i as f64, 0.3 * j as f64))).collect();
        let s = tangent_plane_surface(&aztec_plane_family(), &grid, 1e-5);
        assert!(s.skipped.is_empty());
        for p in s.points {
            assert!((p.h - 0.25 * (2.0 * p.x - 1.0) * (2.0 * p.y - 1.0)).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_family_is_singular() {
        let s = tangent_plane_surface(&constant_plane_family(0.1, 0.2, 0.3), &[(0.5, 0.5), (1.0, 1.0)], 1e-5);
        assert!(s.points.is_empty());
        assert_eq!(s.skipped.len(), 2);
    }
}
