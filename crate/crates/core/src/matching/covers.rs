//! Exact enumeration of `N`-dimer covers and the multinomial measure.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::feasibility::MultiDimerCover;
use crate::error::{Error, Result};
use crate::region::RegionGraph;

/// Limits on exhaustive computations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuardRails {
    pub max_edges: usize,
    pub max_n: u64,
    /// Skips both checks.
    pub unsafe_override: bool,
}

impl Default for GuardRails {
    fn default() -> Self {
        GuardRails { max_edges: 24, max_n: 8, unsafe_override: false }
    }
}

impl GuardRails {
    pub fn check(&self, region: &RegionGraph) -> Result<()> {
        if self.unsafe_override {
            return Ok(());
        }
        if region.edges.len() > self.max_edges {
            return Err(Error::GuardRail(format!("{} edges exceed the limit of {}", region.edges.len(), self.max_edges)));
        }
        if region.interior_n > self.max_n {
            return Err(Error::GuardRail(format!("N = {} exceeds the limit of {}", region.interior_n, self.max_n)));
        }
        Ok(())
    }
}

/// `n!` as a big integer.
pub fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * k)
}

/// Number of blow-up matchings projecting to `cover`: `∏ N_v! / ∏ M_e!`.
pub fn lift_count(region: &RegionGraph, cover: &MultiDimerCover) -> BigUint {
    let num = region.vertices().fold(BigUint::one(), |acc, v| acc * factorial(region.multiplicity(v)));
    let den = cover.m.iter().fold(BigUint::one(), |acc, &m| acc * factorial(m));
    num / den
}

/// All `N`-dimer covers in lexicographic order of the edge multiplicity vector.
pub fn enumerate_covers(region: &RegionGraph, rails: &GuardRails) -> Result<Vec<MultiDimerCover>> {
    rails.check(region)?;
    let mut out = Vec::new();
    if region.white_total() != region.black_total() {
        return Ok(out);
    }
    let nw = region.whites.len();
    // The last edge at a vertex must absorb whatever multiplicity remains.
    let mut last = vec![None; region.num_vertices()];
    for (k, e) in region.edges.iter().enumerate() {
        last[e.white] = Some(k);
        last[nw + e.black] = Some(k);
    }
    let mut residual: Vec<u64> = region.vertices().map(|v| region.multiplicity(v)).collect();
    if residual.iter().zip(&last).any(|(&r, l)| r > 0 && l.is_none()) {
        return Ok(out);
    }
    let mut m = vec![0u64; region.edges.len()];
    enumerate_rec(region, 0, nw, &last, &mut residual, &mut m, &mut out);
    Ok(out)
}

fn enumerate_rec(
    region: &RegionGraph,
    k: usize,
    nw: usize,
    last: &[Option<usize>],
    residual: &mut [u64],
    m: &mut [u64],
    out: &mut Vec<MultiDimerCover>,
) {
    if k == region.edges.len() {
        if residual.iter().all(|&r| r == 0) {
            out.push(MultiDimerCover { m: m.to_vec() });
        }
        return;
    }
    let e = region.edges[k];
    let (wi, bi) = (e.white, nw + e.black);
    let hi = residual[wi].min(residual[bi]);
    let mut lo = 0;
    let mut top = hi;
    for v in [wi, bi] {
        if last[v] == Some(k) {
            if residual[v] > hi {
                return;
            }
            lo = lo.max(residual[v]);
            top = top.min(residual[v]);
        }
    }
    if lo > top {
        return;
    }
    for val in lo..=top {
        m[k] = val;
        residual[wi] -= val;
        residual[bi] -= val;
        enumerate_rec(region, k + 1, nw, last, residual, m, out);
        residual[wi] += val;
        residual[bi] += val;
    }
    m[k] = 0;
}

fn rational_pow(x: &BigRational, k: u64) -> BigRational {
    num_traits::pow(x.clone(), k as usize)
}

/// Unnormalised weight `|π⁻¹(M)| ∏ w_e^{M_e}`.
pub fn cover_weight(region: &RegionGraph, cover: &MultiDimerCover, weights: &[BigRational]) -> BigRational {
    let lifts = BigRational::from_integer(BigInt::from(lift_count(region, cover)));
    cover.m.iter().zip(weights).fold(lifts, |acc, (&m, w)| acc * rational_pow(w, m))
}

/// Uniform unit weights.
pub fn unit_weights(region: &RegionGraph) -> Vec<BigRational> {
    vec![BigRational::one(); region.edges.len()]
}

/// The multinomial dimer measure with exact weights.
#[derive(Clone, Debug)]
pub struct ExactMeasure {
    pub weights: Vec<BigRational>,
    pub covers: Vec<MultiDimerCover>,
    pub lift_counts: Vec<BigUint>,
    /// Unnormalised weights, aligned with `covers`.
    pub cover_weights: Vec<BigRational>,
    pub z: BigRational,
}

impl ExactMeasure {
    pub fn new(region: &RegionGraph, weights: &[BigRational], rails: &GuardRails) -> Result<Self> {
        if weights.len() != region.edges.len() {
            return Err(Error::InvalidInput("one weight per edge is required".into()));
        }
        if weights.iter().any(|w| w <= &BigRational::zero()) {
            return Err(Error::InvalidInput("edge weights must be positive".into()));
        }
        let covers = enumerate_covers(region, rails)?;
        let lift_counts: Vec<BigUint> = covers.iter().map(|c| lift_count(region, c)).collect();
        let cover_weights: Vec<BigRational> = covers
            .iter()
            .zip(&lift_counts)
            .map(|(c, l)| {
                c.m.iter()
                    .zip(weights)
                    .fold(BigRational::from_integer(BigInt::from(l.clone())), |acc, (&m, w)| acc * rational_pow(w, m))
            })
            .collect();
        let z = cover_weights.iter().fold(BigRational::zero(), |acc, w| acc + w);
        Ok(ExactMeasure { weights: weights.to_vec(), covers, lift_counts, cover_weights, z })
    }

    pub fn probability(&self, i: usize) -> BigRational {
        &self.cover_weights[i] / &self.z
    }

    pub fn probabilities(&self) -> Vec<BigRational> {
        (0..self.covers.len()).map(|i| self.probability(i)).collect()
    }

    /// Exact `E[M_e]` for every edge.
    pub fn edge_means(&self) -> Vec<BigRational> {
        self.edge_moment(1)
    }

    /// Exact `Var[M_e]` for every edge.
    pub fn edge_variances(&self) -> Vec<BigRational> {
        let mean = self.edge_moment(1);
        self.edge_moment(2).into_iter().zip(mean).map(|(m2, m1)| m2 - &m1 * &m1).collect()
    }

    fn edge_moment(&self, power: u32) -> Vec<BigRational> {
        let n_edges = self.weights.len();
        let mut acc = vec![BigRational::zero(); n_edges];
        for (c, w) in self.covers.iter().zip(&self.cover_weights) {
            for (e, &m) in c.m.iter().enumerate() {
                if m > 0 {
                    acc[e] += w * BigRational::from_integer(BigInt::from(m.pow(power)));
                }
            }
        }
        acc.into_iter().map(|a| a / &self.z).collect()
    }
}

/// `Z_{G,N}(w) = Σ_M |π⁻¹(M)| ∏ w_e^{M_e}` by direct summation.
pub fn partition_function(region: &RegionGraph, weights: &[BigRational], rails: &GuardRails) -> Result<BigRational> {
    Ok(ExactMeasure::new(region, weights, rails)?.z)
}

/// Probability of one cover under the multinomial measure.
pub fn cover_probability(
    region: &RegionGraph,
    cover: &MultiDimerCover,
    weights: &[BigRational],
    rails: &GuardRails,
) -> Result<BigRational> {
    if !cover.is_valid(region) {
        return Err(Error::InvalidInput("not an N-dimer cover of this region".into()));
    }
    let z = partition_function(region, weights, rails)?;
    Ok(cover_weight(region, cover, weights) / z)
}

/// `Z` through the generating series: `∏ N_v! · [x^N] P(x)^K / K!`.
///
/// `P = Σ_e w_e x_{w(e)} x_{b(e)}` is expanded factor by factor with
/// monomials pruned as soon as an exponent exceeds its multiplicity.
pub fn partition_function_generating(region: &RegionGraph, weights: &[BigRational], rails: &GuardRails) -> Result<BigRational> {
    rails.check(region)?;
    let k = region.white_total();
    if k != region.black_total() {
        return Ok(BigRational::zero());
    }
    let nw = region.whites.len();
    let caps: Vec<u64> = region.vertices().map(|v| region.multiplicity(v)).collect();
    let mut poly: HashMap<Vec<u8>, BigRational> = HashMap::new();
    poly.insert(vec![0u8; caps.len()], BigRational::one());
    for _ in 0..k {
        let mut next: HashMap<Vec<u8>, BigRational> = HashMap::with_capacity(poly.len() * 2);
        for (mono, coeff) in &poly {
            for (e, w) in region.edges.iter().zip(weights) {
                let (a, b) = (e.white, nw + e.black);
                if u64::from(mono[a]) >= caps[a] || u64::from(mono[b]) >= caps[b] {
                    continue;
                }
                let mut m = mono.clone();
                m[a] += 1;
                m[b] += 1;
                let term = coeff * w;
                next.entry(m).and_modify(|c| *c += &term).or_insert(term);
            }
        }
        poly = next;
    }
    let target: Vec<u8> = caps.iter().map(|&c| c as u8).collect();
    let coeff = poly.remove(&target).unwrap_or_else(BigRational::zero);
    let prefactor = caps.iter().fold(BigUint::one(), |acc, &c| acc * factorial(c));
    let scale = BigRational::new(BigInt::from(prefactor), BigInt::from(factorial(k)));
    Ok(coeff * scale)
}

/// Converts an exact rational to `f64`.
pub fn rational_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        let ln = ln_rational(x);
        ln.exp()
    })
}

/// Natural logarithm of a positive rational, robust to huge numerators and denominators.
pub fn ln_rational(x: &BigRational) -> f64 {
    ln_bigint(x.numer()) - ln_bigint(x.denom())
}

fn ln_bigint(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits < 1000 {
        return n.to_f64().unwrap_or(f64::NAN).ln();
    }
    let shift = bits - 64;
    let top: BigInt = n >> shift;
    top.to_f64().unwrap_or(f64::NAN).ln() + shift as f64 * std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::region::build_square;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn square_double_dimers() {
        let sq = build_square(2);
        let mu = ExactMeasure::new(&sq, &unit_weights(&sq), &GuardRails::default()).unwrap();
        assert_eq!(mu.covers.len(), 3);
        let mut lifts: Vec<u64> = mu.lift_counts.iter().map(|l| l.to_u64().unwrap()).collect();
        lifts.sort();
        assert_eq!(lifts, vec![4, 4, 16]);
        assert_eq!(mu.z, r(24, 1));
        let mut p = mu.probabilities();
        p.sort();
        assert_eq!(p, vec![r(1, 6), r(1, 6), r(2, 3)]);
    }

    #[test]
    fn single_edge() {
        let g = RegionGraph::abstract_graph(1, 1, &[(0, 0)], "edge").with_uniform_multiplicity(3);
        let z = partition_function(&g, &[r(2, 1)], &GuardRails::default()).unwrap();
        assert_eq!(z, r(48, 1));
        assert_eq!(partition_function_generating(&g, &[r(2, 1)], &GuardRails::default()).unwrap(), r(48, 1));
    }

    #[test]
    fn guard_rail_trips() {
        let sq = build_square(9);
        assert!(matches!(enumerate_covers(&sq, &GuardRails::default()), Err(Error::GuardRail(_))));
        let rails = GuardRails { unsafe_override: true, ..GuardRails::default() };
        assert_eq!(enumerate_covers(&sq, &rails).unwrap().len(), 10);
    }

    #[test]
    fn ln_of_huge_rationals() {
        let big = BigRational::from_integer(BigInt::from(10u32).pow(400));
        assert!((ln_rational(&big) - 400.0 * 10f64.ln()).abs() < 1e-9);
    }
}
