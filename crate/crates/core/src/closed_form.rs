//! Exact critical gauges for the families with explicit solutions.
//!
//! Every formula is evaluated in exact rational arithmetic, so the gauge
//! equations can be checked with zero residual before converting to logs.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::ln_rational;
use crate::region::{
    build_aztec_cuboid, build_aztec_diamond, build_truncated_orthant3, build_truncated_quadrant, check_cuboid_constraint,
    RegionGraph, VertexRef,
};
use crate::sinkhorn::{GaugePair, Normalization};

/// A region family with a closed-form critical gauge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ClosedFormShape {
    AztecDiamond { n: u64 },
    AztecCuboid { a: u64, b: u64, c: u64 },
    TruncQuadrant { k: u64, depth: u64 },
    TruncOrthant3 { k: u64, depth: u64 },
}

impl ClosedFormShape {
    /// Builds the region the gauge lives on.
    pub fn region(&self) -> Result<RegionGraph> {
        match *self {
            ClosedFormShape::AztecDiamond { n } => build_aztec_diamond(n as usize),
            ClosedFormShape::AztecCuboid { a, b, c } => build_aztec_cuboid(a, b, c),
            ClosedFormShape::TruncQuadrant { k, depth } => build_truncated_quadrant(k, depth),
            ClosedFormShape::TruncOrthant3 { k, depth } => build_truncated_orthant3(k, depth),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            ClosedFormShape::AztecDiamond { n: 0 } => Err(Error::InvalidInput("n must be positive".into())),
            ClosedFormShape::AztecCuboid { a, b, c } => check_cuboid_constraint(a, b, c),
            ClosedFormShape::TruncQuadrant { k, depth } | ClosedFormShape::TruncOrthant3 { k, depth }
                if k == 0 || depth == 0 =>
            {
                Err(Error::InvalidInput("K and depth must be at least 1".into()))
            }
            _ => Ok(()),
        }
    }
}

fn int(n: i64) -> BigInt {
    BigInt::from(n)
}

fn ratio(p: BigInt, q: BigInt) -> BigRational {
    BigRational::new(p, q)
}

/// `n!`, exact.
fn fact(n: i64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * k)
}

/// Binomial coefficient, zero outside `0 ≤ k ≤ n`.
pub fn binomial(n: i64, k: i64) -> BigInt {
    if k < 0 || n < 0 || k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    (0..k).fold(BigInt::one(), |acc, t| acc * (n - t) / (t + 1))
}

fn multinomial(i: i64, j: i64, k: i64) -> BigInt {
    fact(i + j + k) / (fact(i) * fact(j) * fact(k))
}

fn pow(base: i64, e: i64) -> BigInt {
    num_traits::pow(int(base), e as usize)
}

/// The level coefficient `u_ℓ` of the truncated orthant white gauge.
pub fn orthant_u(k: i64, l: i64) -> BigRational {
    ratio(fact(l - k + 1) * fact(l + k + 2), pow(k, l) * pow(k + 1, l) * fact(2 * k + 1))
}

/// The level coefficient `v_ℓ` of the truncated orthant black gauge; zero below `K`.
pub fn orthant_v(k: i64, l: i64) -> BigRational {
    if l < k {
        return BigRational::zero();
    }
    ratio(fact(2 * k + 1) * pow(k, l) * pow(k + 1, l), int((l + 1) * (l + 2)) * fact(l + k + 1) * fact(l - k))
}

/// Gauge values as exact rationals, indexed like the region's color classes.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactGauge {
    pub f: Vec<BigRational>,
    pub g: Vec<BigRational>,
}

impl ExactGauge {
    /// `c_e = f(u) g(v)` for unit edge weights.
    pub fn critical_edge_weights(&self, region: &RegionGraph) -> Vec<BigRational> {
        region.edges.iter().map(|e| &self.f[e.white] * &self.g[e.black]).collect()
    }

    /// `Σ_{e∋v} f g − β_v` at every vertex, whites first.
    pub fn residuals(&self, region: &RegionGraph) -> Vec<BigRational> {
        let c = self.critical_edge_weights(region);
        let n = int(region.interior_n as i64);
        region
            .vertices()
            .map(|v| {
                let s = region.edges_at(v).iter().fold(BigRational::zero(), |acc, &e| acc + &c[e]);
                s - ratio(int(region.multiplicity(v) as i64), n.clone())
            })
            .collect()
    }

    /// Converts to logarithms under the given normalization.
    pub fn to_gauge_pair(&self, region: &RegionGraph, norm: Normalization) -> GaugePair {
        GaugePair {
            log_f: self.f.iter().map(ln_rational).collect(),
            log_g: self.g.iter().map(ln_rational).collect(),
            normalization: norm,
        }
        .normalized(region, norm)
    }
}

/// Exact closed-form gauge on `region`, which must come from `shape.region()`.
pub fn closed_form_gauge_exact(shape: &ClosedFormShape, region: &RegionGraph) -> Result<ExactGauge> {
    shape.validate()?;
    let white = |i: usize| region.site(VertexRef::White(i)).coord.clone();
    let black = |i: usize| region.site(VertexRef::Black(i)).coord.clone();
    let nw = region.whites.len();
    let nb = region.blacks.len();
    let (f, g): (Vec<BigRational>, Vec<BigRational>) = match *shape {
        ClosedFormShape::AztecDiamond { n } => {
            let n = n as i64;
            let f = (0..nw)
                .map(|w| {
                    let c = white(w);
                    ratio(int(n) * binomial(n - 1, c[0]), int(n + 1) * binomial(n, c[1]))
                })
                .collect();
            let g = (0..nb)
                .map(|b| {
                    let c = black(b);
                    ratio(binomial(n - 1, c[1]), binomial(n, c[0]))
                })
                .collect();
            (f, g)
        }
        ClosedFormShape::AztecCuboid { a, b, c } => {
            let (a, b, c) = (a as i64, b as i64, c as i64);
            let f = (0..nw)
                .map(|w| {
                    let x = white(w);
                    ratio(binomial(a - 1, x[0]), binomial(b + 1, x[1] + 1) * binomial(c + 1, x[2] + 1))
                })
                .collect();
            let g = (0..nb)
                .map(|v| {
                    let x = black(v);
                    ratio(
                        int((b + 1) * (c + 1)) * binomial(b, x[1]) * binomial(c, x[2]),
                        int((b + 2) * (c + 2)) * binomial(a, x[0]),
                    )
                })
                .collect();
            (f, g)
        }
        ClosedFormShape::TruncQuadrant { k, .. } => {
            let k = k as i64;
            let f = (0..nw)
                .map(|w| {
                    let x = white(w);
                    let m = x[0] + x[1];
                    ratio(binomial(m, x[1]) * fact(m + 1 - k), pow(k, m))
                })
                .collect();
            let g = (0..nb)
                .map(|v| {
                    let x = black(v);
                    let l = x[0] + x[1];
                    ratio(pow(k, l), binomial(l, x[1]) * int(l + 1) * fact(l - k))
                })
                .collect();
            (f, g)
        }
        ClosedFormShape::TruncOrthant3 { k, .. } => {
            let k = k as i64;
            let f = (0..nw)
                .map(|w| {
                    let x = white(w);
                    orthant_u(k, x[0] + x[1] + x[2]) * multinomial(x[0], x[1], x[2])
                })
                .collect();
            let g = (0..nb)
                .map(|v| {
                    let x = black(v);
                    orthant_v(k, x[0] + x[1] + x[2]) / multinomial(x[0], x[1], x[2])
                })
                .collect();
            (f, g)
        }
    };
    if f.iter().chain(&g).any(|x| x <= &BigRational::zero()) {
        return Err(Error::InvalidInput("region does not match the closed-form shape".into()));
    }
    Ok(ExactGauge { f, g })
}

/// The closed-form gauge and its region, normalized at the reference black vertex.
pub fn closed_form_gauge(shape: &ClosedFormShape) -> Result<(RegionGraph, GaugePair)> {
    shape.validate()?;
    let region = shape.region()?;
    let exact = closed_form_gauge_exact(shape, &region)?;
    let pair = exact.to_gauge_pair(&region, Normalization::ReferenceVertexOne);
    Ok((region, pair))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        ratio(int(n), int(d))
    }

    fn assert_exact(shape: ClosedFormShape) {
        let r = shape.region().unwrap();
        let g = closed_form_gauge_exact(&shape, &r).unwrap();
        assert!(g.residuals(&r).iter().all(Zero::is_zero), "{shape:?}");
    }

    #[test]
    fn aztec_diamond_one_by_hand() {
        let s = ClosedFormShape::AztecDiamond { n: 1 };
        let r = s.region().unwrap();
        let g = closed_form_gauge_exact(&s, &r).unwrap();
        assert!(g.f.iter().all(|x| *x == q(1, 2)));
        assert!(g.g.iter().all(|x| *x == q(1, 1)));
    }

    #[test]
    fn aztec_diamond_corner_value() {
        for n in 1..8 {
            let s = ClosedFormShape::AztecDiamond { n };
            let r = s.region().unwrap();
            let g = closed_form_gauge_exact(&s, &r).unwrap();
            let w = r.whites.iter().position(|x| x.coord == vec![0, 0]).unwrap();
            assert_eq!(g.f[w], q(n as i64, n as i64 + 1));
        }
    }

    #[test]
    fn residuals_vanish_exactly() {
        for n in 1..=6 {
            assert_exact(ClosedFormShape::AztecDiamond { n });
        }
        assert_exact(ClosedFormShape::AztecCuboid { a: 1, b: 1, c: 2 });
        assert_exact(ClosedFormShape::AztecCuboid { a: 2, b: 2, c: 7 });
        for k in 1..=3 {
            for depth in 1..=4 {
                assert_exact(ClosedFormShape::TruncQuadrant { k, depth });
                assert_exact(ClosedFormShape::TruncOrthant3 { k, depth });
            }
        }
    }

    #[test]
    fn orthant_level_recursion() {
        for k in 1..=4i64 {
            for l in k..=k + 6 {
                let one = BigRational::one();
                assert_eq!((orthant_u(k, l - 1) + orthant_u(k, l)) * orthant_v(k, l), one);
                let lhs = orthant_u(k, l) * (orthant_v(k, l) + q(l + 3, l + 1) * orthant_v(k, l + 1));
                assert_eq!(lhs, one);
            }
        }
    }

    #[test]
    fn aztec_diamond_nw_weights() {
        let n = 5i64;
        let s = ClosedFormShape::AztecDiamond { n: n as u64 };
        let r = s.region().unwrap();
        let c = closed_form_gauge_exact(&s, &r).unwrap().critical_edge_weights(&r);
        for (e, edge) in r.edges.iter().enumerate() {
            if edge.ty == 1 {
                let w = &r.whites[edge.white].coord;
                assert_eq!(c[e], q((n - w[0]) * (n - w[1]), n * (n + 1)));
            }
        }
    }

    #[test]
    fn cuboid_critical_weights_product_form() {
        let (a, b, c) = (2i64, 2i64, 7i64);
        let s = ClosedFormShape::AztecCuboid { a: 2, b: 2, c: 7 };
        let r = s.region().unwrap();
        let cw = closed_form_gauge_exact(&s, &r).unwrap().critical_edge_weights(&r);
        for (e, edge) in r.edges.iter().enumerate() {
            let w = &r.whites[edge.white].coord;
            let bl = &r.blacks[edge.black].coord;
            let (i, j, k) = (w[0], w[1], w[2]);
            let x = if bl[0] == i { a - i } else { i + 1 };
            let y = if bl[1] == j { j + 1 } else { b - j };
            let z = if bl[2] == k { k + 1 } else { c - k };
            assert_eq!(cw[e], q(x * y * z, a * (b + 2) * (c + 2)));
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(closed_form_gauge(&ClosedFormShape::AztecCuboid { a: 1, b: 1, c: 1 }).is_err());
        assert!(closed_form_gauge(&ClosedFormShape::TruncQuadrant { k: 0, depth: 2 }).is_err());
    }
}
