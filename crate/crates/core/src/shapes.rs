//! Explicit limit shapes: heights, limiting gauge functions and flows.

use std::f64::consts::LN_2;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{build_lattice, LatticeName, NewtonPolytope};
use crate::thermo::{xlogx, ThermoModel};

/// An axis-aligned box with a margin excluded at its faces.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Distance from the faces inside which the field is declared singular.
    pub margin: f64,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        BoxDomain { lo, hi, margin: 1e-6 }
    }

    pub fn dimension(&self) -> usize {
        self.lo.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// Whether `x` lies at least `margin + pad` inside every face.
    pub fn contains_with(&self, x: &[f64], pad: f64) -> bool {
        let m = self.margin + pad;
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| *v >= a + m && *v <= b - m)
    }

    /// A regular grid with `k` points per axis on the sub-box `[lo + t(hi−lo), hi − t(hi−lo)]`.
    pub fn interior_grid(&self, k: usize, t: f64) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| {
                let (lo, hi) = (a + t * (b - a), b - t * (b - a));
                (0..k)
                    .map(|i| if k == 1 { 0.5 * (lo + hi) } else { lo + (hi - lo) * i as f64 / (k - 1) as f64 })
                    .collect()
            })
            .collect();
        let mut out = vec![Vec::new()];
        for axis in &axes {
            out = out
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        out
    }
}

type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A real function on a box.
#[derive(Clone)]
pub struct ScalarField {
    pub label: String,
    pub domain: BoxDomain,
    eval: ScalarFn,
}

impl ScalarField {
    pub fn new(label: impl Into<String>, domain: BoxDomain, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField { label: label.into(), domain, eval: Arc::new(f) }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    /// `x ↦ self(x) + g(x)`, for detector checks.
    pub fn plus(&self, label: impl Into<String>, g: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        let f = self.eval.clone();
        ScalarField::new(label, self.domain.clone(), move |x| f(x) + g(x))
    }
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarField").field("label", &self.label).field("domain", &self.domain).finish()
    }
}

/// A vector-valued function on a box.
#[derive(Clone)]
pub struct VectorField {
    pub label: String,
    pub domain: BoxDomain,
    eval: VectorFn,
}

impl VectorField {
    pub fn new(
        label: impl Into<String>,
        domain: BoxDomain,
        f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        VectorField { label: label.into(), domain, eval: Arc::new(f) }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.eval)(x)
    }

    /// `x ↦ self(x) + g(x)`, for detector checks.
    pub fn plus(&self, label: impl Into<String>, g: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        let f = self.eval.clone();
        VectorField::new(label, self.domain.clone(), move |x| {
            f(x).into_iter().zip(g(x)).map(|(a, b)| a + b).collect()
        })
    }
}

impl std::fmt::Debug for VectorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VectorField").field("label", &self.label).field("domain", &self.domain).finish()
    }
}

/// A limit shape with its lattice and whichever descriptions are explicit.
#[derive(Clone, Debug)]
pub struct LimitShape {
    pub name: String,
    pub lattice: LatticeName,
    /// Height function, in dimension two.
    pub height: Option<ScalarField>,
    /// Limiting gauge function `H`.
    pub gauge: Option<ScalarField>,
    /// Limit-shape flow `ω`.
    pub flow: VectorField,
    /// Gauge flow `α = ∇H`.
    pub field: Option<VectorField>,
}

/// `u log u + (L−u) log(L−u) − L log L`, zero at both ends.
fn segment_entropy(u: f64, l: f64) -> f64 {
    xlogx(u) + xlogx(l - u) - xlogx(l)
}

/// The Aztec diamond on `[0,1]²`.
pub fn aztec_diamond_shape() -> LimitShape {
    let dom = BoxDomain::new(vec![0.0, 0.0], vec![1.0, 1.0]);
    LimitShape {
        name: "aztec-diamond".into(),
        lattice: LatticeName::Z2Diag,
        height: Some(ScalarField::new("h", dom.clone(), |p| 0.25 * (2.0 * p[0] - 1.0) * (2.0 * p[1] - 1.0))),
        gauge: Some(ScalarField::new("H", dom.clone(), |p| segment_entropy(p[0], 1.0) - segment_entropy(p[1], 1.0))),
        flow: VectorField::new("omega", dom.clone(), |p| vec![0.5 * (2.0 * p[0] - 1.0), 0.5 * (1.0 - 2.0 * p[1])]),
        field: Some(VectorField::new("alpha", dom, |p| {
            vec![(p[0] / (1.0 - p[0])).ln(), ((1.0 - p[1]) / p[1]).ln()]
        })),
    }
}

/// `H` of the Aztec cuboid with scaling-limit sides `(A, B, C)`.
pub fn aztec_cuboid_gauge(a: f64, b: f64, c: f64, p: &[f64]) -> f64 {
    segment_entropy(p[0], a) - segment_entropy(p[1], b) - segment_entropy(p[2], c)
}

/// The Aztec cuboid limit on `[0,A]×[0,B]×[0,C]`, which needs `1/A = 1/B + 1/C`.
pub fn aztec_cuboid_shape(a: f64, b: f64, c: f64) -> Result<LimitShape> {
    if !(a > 0.0 && b > 0.0 && c > 0.0) || ((1.0 / a) - (1.0 / b) - (1.0 / c)).abs() > 1e-12 * (1.0 / a) {
        return Err(Error::InvalidInput(format!("cuboid sides ({a}, {b}, {c}) violate 1/A = 1/B + 1/C")));
    }
    let dom = BoxDomain::new(vec![0.0; 3], vec![a, b, c]);
    Ok(LimitShape {
        name: "aztec-cuboid".into(),
        lattice: LatticeName::Bcc,
        height: None,
        gauge: Some(ScalarField::new("H", dom.clone(), move |p| aztec_cuboid_gauge(a, b, c, p))),
        flow: VectorField::new("omega", dom.clone(), move |p| {
            vec![0.5 * (2.0 * p[0] / a - 1.0), 0.5 * (1.0 - 2.0 * p[1] / b), 0.5 * (1.0 - 2.0 * p[2] / c)]
        }),
        field: Some(VectorField::new("alpha", dom, move |p| {
            vec![(p[0] / (a - p[0])).ln(), ((b - p[1]) / p[1]).ln(), ((c - p[2]) / p[2]).ln()]
        })),
    })
}

/// The weighted Aztec diamond with weights `a, b, c, d` on NE, NW, SW, SE edges.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeightedAztecDiamond {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl WeightedAztecDiamond {
    /// Requires `λ = ac/(bd) > 1`.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        if [a, b, c, d].iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidInput("weights must be positive".into()));
        }
        let s = WeightedAztecDiamond { a, b, c, d };
        if !(s.lambda() > 1.0) {
            return Err(Error::InvalidInput(format!("λ = ac/(bd) = {} must exceed 1", s.lambda())));
        }
        Ok(s)
    }

    pub fn lambda(&self) -> f64 {
        self.a * self.c / (self.b * self.d)
    }

    /// Edge weights in the lattice's type order NE, NW, SE, SW.
    pub fn type_weights(&self) -> Vec<f64> {
        vec![self.a, self.b, self.d, self.c]
    }

    pub fn model(&self) -> ThermoModel {
        ThermoModel::with_weights(build_lattice(LatticeName::Z2Diag), self.type_weights()).expect("weights checked")
    }

    /// The rectangle on which the height is defined.
    pub fn domain(&self) -> BoxDomain {
        let l = self.lambda().ln();
        BoxDomain::new(
            vec![(self.b / self.c).ln() / l, (self.b / self.a).ln() / l],
            vec![(self.a / self.d).ln() / l, (self.c / self.d).ln() / l],
        )
    }

    /// `a λ^{(−x+y)/2} − b λ^{(−x−y)/2} + c λ^{(x−y)/2} − d λ^{(x+y)/2}`.
    pub fn log_argument(&self, x: f64, y: f64) -> f64 {
        let l = self.lambda();
        self.a * l.powf((-x + y) / 2.0) - self.b * l.powf((-x - y) / 2.0) + self.c * l.powf((x - y) / 2.0)
            - self.d * l.powf((x + y) / 2.0)
    }

    /// The height as printed, `−2 log(arg)/log λ`, without normalization.
    pub fn raw_height(&self, x: f64, y: f64) -> Result<f64> {
        let arg = self.log_argument(x, y);
        if !(arg > 0.0) {
            return Err(Error::InvalidInput(format!("log argument {arg} is not positive at ({x}, {y})")));
        }
        Ok(-2.0 * arg.ln() / self.lambda().ln())
    }

    /// `log(arg)/log λ` shifted to vanish at the center of the domain.
    ///
    /// With this normalization `∇h` lies in the Newton square and the flow
    /// `(h_y, −h_x)` satisfies the weighted Euler-Lagrange system.
    pub fn height(&self, x: f64, y: f64) -> Result<f64> {
        let c = self.domain().center();
        let arg = self.log_argument(x, y);
        if !(arg > 0.0) {
            return Err(Error::InvalidInput(format!("log argument {arg} is not positive at ({x}, {y})")));
        }
        Ok((arg.ln() - self.log_argument(c[0], c[1]).ln()) / self.lambda().ln())
    }

    /// The height as a field on its rectangle; NaN where the argument is not positive.
    pub fn height_field(&self) -> ScalarField {
        let s = *self;
        ScalarField::new("h", self.domain(), move |p| s.height(p[0], p[1]).unwrap_or(f64::NAN))
    }
}

/// Convenience wrapper evaluating the weighted height.
pub fn weighted_aztec_diamond_height(a: f64, b: f64, c: f64, d: f64, x: f64, y: f64) -> Result<f64> {
    WeightedAztecDiamond::new(a, b, c, d)?.height(x, y)
}

/// The divergence-free flow `(x, y, z)/(x+y+z)³` of the truncated orthant.
pub fn truncated_orthant_flow(p: &[f64]) -> Result<Vec<f64>> {
    if p.len() != 3 || p.iter().any(|&v| v < 0.0) || p.iter().sum::<f64>() < 1.0 {
        return Err(Error::InvalidInput("the orthant flow needs x, y, z ≥ 0 and x+y+z ≥ 1".into()));
    }
    let r3 = p.iter().sum::<f64>().powi(3);
    Ok(p.iter().map(|v| v / r3).collect())
}

/// The orthant flow as a diamond-cubic slope field, `(−1/4,−1/4,−1/4) + ω`,
/// on the box `[lo, hi]³`.
pub fn truncated_orthant_slope_field(lo: f64, hi: f64) -> VectorField {
    VectorField::new("slope", BoxDomain::new(vec![lo; 3], vec![hi; 3]), |p| {
        let r3 = p.iter().sum::<f64>().powi(3);
        p.iter().map(|v| v / r3 - 0.25).collect()
    })
}

/// The honeycomb cone limit shape.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct HoneycombCone;

impl HoneycombCone {
    /// `(x, y, h)` at `z = u + iv` in the upper half plane.
    pub fn parametric(&self, u: f64, v: f64) -> Result<[f64; 3]> {
        if !(v > 0.0) {
            return Err(Error::InvalidInput("z must lie in the upper half plane".into()));
        }
        let r0 = u.hypot(v);
        let r1 = (u - 1.0).hypot(v);
        Ok([(r0 + r1) / 2.0, (r0 + u - 1.0) / 2.0, (r1 + u - 1.0) / 2.0])
    }

    /// `h(x, y) = (2x−1)(2y+1)/(2(2x+1))`.
    pub fn height(&self, x: f64, y: f64) -> f64 {
        (2.0 * x - 1.0) * (2.0 * y + 1.0) / (2.0 * (2.0 * x + 1.0))
    }
}

pub fn honeycomb_cone_shape() -> HoneycombCone {
    HoneycombCone
}

/// Distance of a limit-shape flow to the boundary of the Newton polytope.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoFacetsReport {
    pub min_distance: f64,
    pub argmin: Vec<f64>,
    pub center_distance: f64,
    pub points: usize,
}

/// Scans a `k`-point-per-axis grid on the sub-box shrunk by the fraction `t`.
pub fn no_facets_probe(shape: &LimitShape, k: usize, t: f64) -> NoFacetsReport {
    let poly: NewtonPolytope = build_lattice(shape.lattice).newton_polytope();
    let dom = &shape.flow.domain;
    let mut best = (f64::INFINITY, Vec::new());
    let grid = dom.interior_grid(k, t);
    for x in &grid {
        let dist = poly.boundary_distance(&shape.flow.eval(x));
        if dist < best.0 {
            best = (dist, x.clone());
        }
    }
    NoFacetsReport {
        min_distance: best.0,
        argmin: best.1,
        center_distance: poly.boundary_distance(&shape.flow.eval(&dom.center())),
        points: grid.len(),
    }
}

/// A streamline of `field` from `start` by the classical fourth-order
/// Runge-Kutta scheme, stopped after `max_steps` or on leaving the domain.
pub fn flow_line(field: &VectorField, start: &[f64], step: f64, max_steps: usize) -> Vec<Vec<f64>> {
    let inside = |p: &[f64]| field.domain.contains_with(p, 0.0) && field.eval(p).iter().all(|v| v.is_finite());
    let mut line = vec![start.to_vec()];
    if !inside(start) {
        return line;
    }
    let axpy = |p: &[f64], k: &[f64], a: f64| -> Vec<f64> { p.iter().zip(k).map(|(x, v)| x + a * v).collect() };
    for _ in 0..max_steps {
        let p = line.last().expect("nonempty");
        let k1 = field.eval(p);
        let k2 = field.eval(&axpy(p, &k1, step / 2.0));
        let k3 = field.eval(&axpy(p, &k2, step / 2.0));
        let k4 = field.eval(&axpy(p, &k3, step));
        let next: Vec<f64> = (0..p.len()).map(|i| p[i] + step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect();
        if !inside(&next) {
            break;
        }
        line.push(next);
    }
    line
}

/// Rows `x₁,…,x_d,value` for a scalar field on a set of points, with a header.
pub fn scalar_field_csv(field: &ScalarField, points: &[Vec<f64>]) -> String {
    let d = field.domain.dimension();
    let mut out: Vec<String> = (0..d).map(|i| format!("x{}", i + 1)).collect();
    out.push(field.label.clone());
    let mut csv = out.join(",") + "\n";
    for p in points {
        let row: Vec<String> = p.iter().chain([field.eval(p)].iter()).map(|v| format!("{v:.17e}")).collect();
        csv += &(row.join(",") + "\n");
    }
    csv
}

/// `3 log 2`, the value of `H` at the center of the `(1, 2, 2)` cuboid.
pub const CUBOID_CENTER_GAUGE: f64 = 3.0 * LN_2;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aztec_diamond_center() {
        let s = aztec_diamond_shape();
        assert_eq!(s.height.as_ref().unwrap().eval(&[0.5, 0.5]), 0.0);
        assert_eq!(s.flow.eval(&[0.5, 0.5]), vec![0.0, 0.0]);
        assert_eq!(s.gauge.as_ref().unwrap().eval(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn cuboid_center_and_constraint() {
        let s = aztec_cuboid_shape(1.0, 2.0, 2.0).unwrap();
        assert!((s.gauge.as_ref().unwrap().eval(&[0.5, 1.0, 1.0]) - CUBOID_CENTER_GAUGE).abs() < 1e-14);
        assert!(s.flow.eval(&[0.5, 1.0, 1.0]).iter().all(|x| *x == 0.0));
        assert!(aztec_cuboid_shape(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn orthant_flow_values() {
        assert_eq!(truncated_orthant_flow(&[1.0, 0.0, 0.0]).unwrap(), vec![1.0, 0.0, 0.0]);
        assert!(truncated_orthant_flow(&[0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn cone_symmetric_point() {
        let c = honeycomb_cone_shape();
        for v in [0.1, 0.7, 2.0] {
            let [x, y, h] = c.parametric(0.5, v).unwrap();
            assert!((c.height(x, y) - h).abs() < 1e-14);
        }
    }

    #[test]
    fn weighted_domain_and_sign() {
        let w = WeightedAztecDiamond::new(2.0, 1.0, 2.0, 1.0).unwrap();
        assert_eq!(w.lambda(), 4.0);
        let dom = w.domain();
        assert!((dom.lo[0] + 0.5).abs() < 1e-15 && (dom.hi[1] - 0.5).abs() < 1e-15);
        for p in dom.interior_grid(9, 0.01) {
            assert!(w.log_argument(p[0], p[1]) > 0.0);
        }
        assert!(WeightedAztecDiamond::new(1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn center_distance_is_half() {
        let r = no_facets_probe(&aztec_diamond_shape(), 11, 0.05);
        assert!((r.center_distance - 0.5).abs() < 1e-15);
        assert!(r.min_distance > 0.0);
    }
}
