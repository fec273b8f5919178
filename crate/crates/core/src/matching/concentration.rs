//! Exact concentration of `M_e / N` on the critical edge weights.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use super::covers::{rational_to_f64, ExactMeasure, GuardRails};
use crate::error::Result;
use crate::region::RegionGraph;

/// One row of a concentration table.
#[derive(Clone, Debug, Serialize)]
pub struct ConcentrationRow {
    pub n: u64,
    /// `sup_e |E[M_e/N] − c_e|`.
    pub gap: f64,
    /// `max_e Var[M_e/N]`.
    pub max_variance: f64,
    /// Exact `E[M_e/N]` per edge.
    pub means: Vec<BigRational>,
    /// Exact `Var[M_e/N]` per edge.
    pub variances: Vec<BigRational>,
}

/// For each `N`, builds the region via `build(N)`, computes the exact edge
/// means of the measure with `weights` and compares them to `critical`.
pub fn concentration_check<F>(
    build: F,
    weights: &[BigRational],
    critical: &[f64],
    n_list: &[u64],
    rails: &GuardRails,
) -> Result<Vec<ConcentrationRow>>
where
    F: Fn(u64) -> RegionGraph,
{
    n_list
        .iter()
        .map(|&n| {
            let region = build(n);
            let mu = ExactMeasure::new(&region, weights, rails)?;
            let nq = BigRational::from_integer(BigInt::from(n));
            let means: Vec<BigRational> = mu.edge_means().into_iter().map(|m| m / &nq).collect();
            let variances: Vec<BigRational> =
                mu.edge_variances().into_iter().map(|v| v / (&nq * &nq)).collect();
            let gap = means
                .iter()
                .zip(critical)
                .map(|(m, c)| (rational_to_f64(m) - c).abs())
                .fold(0.0, f64::max);
            let max_variance = variances.iter().map(rational_to_f64).fold(0.0, f64::max);
            Ok(ConcentrationRow { n, gap, max_variance, means, variances })
        })
        .collect()
}
