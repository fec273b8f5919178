//! Critical gauges by Sinkhorn scaling.
//!
//! The critical gauge equations ask for positive `f` on whites and `g` on
//! blacks with `Σ_{e∋v} w_e f(u) g(v) = β_v` at every vertex, where
//! `β_v = N_v / N`. One sweep rescales all whites, then all blacks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::{check_edge_feasible, check_feasible};
use crate::region::{Color, RegionGraph, VertexRef};

/// How the scalar freedom `(f, g) → (Cf, g/C)` is fixed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Normalization {
    /// `g = 1` at the lexicographically smallest black label.
    #[default]
    ReferenceVertexOne,
    /// The geometric mean of `g` over black vertices is one.
    GeometricMeanOne,
}

/// Gauge values stored as logarithms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugePair {
    pub log_f: Vec<f64>,
    pub log_g: Vec<f64>,
    pub normalization: Normalization,
}

impl GaugePair {
    pub fn from_values(f: &[f64], g: &[f64]) -> Self {
        GaugePair {
            log_f: f.iter().map(|x| x.ln()).collect(),
            log_g: g.iter().map(|x| x.ln()).collect(),
            normalization: Normalization::ReferenceVertexOne,
        }
    }

    pub fn f(&self, i: usize) -> f64 {
        self.log_f[i].exp()
    }

    pub fn g(&self, i: usize) -> f64 {
        self.log_g[i].exp()
    }

    /// Applies `(f, g) → (Cf, g/C)` with `C = e^c`.
    pub fn rescaled(&self, c: f64) -> Self {
        GaugePair {
            log_f: self.log_f.iter().map(|x| x + c).collect(),
            log_g: self.log_g.iter().map(|x| x - c).collect(),
            normalization: self.normalization,
        }
    }

    /// The representative obeying `norm`.
    pub fn normalized(&self, region: &RegionGraph, norm: Normalization) -> Self {
        let shift = match norm {
            Normalization::ReferenceVertexOne => {
                let reference = (0..region.blacks.len())
                    .min_by(|&a, &b| region.blacks[a].coord.cmp(&region.blacks[b].coord))
                    .expect("region has black vertices");
                self.log_g[reference]
            }
            Normalization::GeometricMeanOne => self.log_g.iter().sum::<f64>() / self.log_g.len() as f64,
        };
        let mut out = self.rescaled(shift);
        out.normalization = norm;
        out
    }
}

/// Convergence record of a Sinkhorn run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GaugeDiagnostics {
    pub iterations: usize,
    pub max_residual: f64,
    /// Max white residual after each sweep.
    pub residual_history: Vec<f64>,
    /// Whether the log-domain fallback was used.
    pub log_domain: bool,
}

/// Solver settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinkhornOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub normalization: Normalization,
    /// Color classes larger than this are updated in parallel.
    pub parallel_threshold: usize,
}

impl Default for SinkhornOptions {
    fn default() -> Self {
        SinkhornOptions {
            tol: 1e-10,
            max_iter: 1_000_000,
            normalization: Normalization::ReferenceVertexOne,
            parallel_threshold: 4096,
        }
    }
}

const LINEAR_RANGE: (f64, f64) = (1e-300, 1e300);

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = terms.collect();
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

struct Problem<'a> {
    region: &'a RegionGraph,
    weights: &'a [f64],
    log_w: Vec<f64>,
    beta_w: Vec<f64>,
    beta_b: Vec<f64>,
    parallel: bool,
}

impl Problem<'_> {
    fn map_class<F>(&self, n: usize, f: F) -> Vec<f64>
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        if self.parallel {
            (0..n).into_par_iter().map(f).collect()
        } else {
            (0..n).map(f).collect()
        }
    }

    fn white_sums(&self, g: &[f64]) -> Vec<f64> {
        let r = self.region;
        self.map_class(r.whites.len(), |i| {
            r.white_edges(i).iter().map(|&e| self.weights[e] * g[r.edges[e].black]).sum()
        })
    }

    fn black_sums(&self, f: &[f64]) -> Vec<f64> {
        let r = self.region;
        self.map_class(r.blacks.len(), |j| {
            r.black_edges(j).iter().map(|&e| self.weights[e] * f[r.edges[e].white]).sum()
        })
    }

    fn white_log_sums(&self, lg: &[f64]) -> Vec<f64> {
        let r = self.region;
        self.map_class(r.whites.len(), |i| {
            log_sum_exp(r.white_edges(i).iter().map(|&e| self.log_w[e] + lg[r.edges[e].black]))
        })
    }

    fn black_log_sums(&self, lf: &[f64]) -> Vec<f64> {
        let r = self.region;
        self.map_class(r.blacks.len(), |j| {
            log_sum_exp(r.black_edges(j).iter().map(|&e| self.log_w[e] + lf[r.edges[e].white]))
        })
    }
}

fn in_linear_range(v: &[f64]) -> bool {
    v.iter().all(|&x| x.is_finite() && x > LINEAR_RANGE.0 && x < LINEAR_RANGE.1)
}

/// Solves the critical gauge equations from the start `f ≡ g ≡ 1`.
pub fn sinkhorn_solve(
    region: &RegionGraph,
    weights: &[f64],
    opts: &SinkhornOptions,
) -> Result<(GaugePair, GaugeDiagnostics)> {
    sinkhorn_solve_from(region, weights, &vec![1.0; region.blacks.len()], opts)
}

/// Solves the critical gauge equations from a positive initial black gauge.
///
/// The first half-sweep recomputes `f` from `g`, so no white start is needed.
pub fn sinkhorn_solve_from(
    region: &RegionGraph,
    weights: &[f64],
    initial_g: &[f64],
    opts: &SinkhornOptions,
) -> Result<(GaugePair, GaugeDiagnostics)> {
    if initial_g.len() != region.blacks.len() || initial_g.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidInput("the initial gauge needs one positive value per black vertex".into()));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    if weights.len() != region.edges.len() || weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(Error::InvalidInput("one positive finite weight per edge is required".into()));
    }
    if !check_feasible(region).feasible {
        return Err(Error::Infeasible("no N-dimer cover exists".into()));
    }
    let edge = check_edge_feasible(region);
    if !edge.ok {
        return Err(Error::Infeasible(format!("{} edges are never used by a cover", edge.dead_edges.len())));
    }
    let p = Problem {
        region,
        weights,
        log_w: weights.iter().map(|w| w.ln()).collect(),
        beta_w: (0..region.whites.len()).map(|i| region.beta(VertexRef::White(i))).collect(),
        beta_b: (0..region.blacks.len()).map(|j| region.beta(VertexRef::Black(j))).collect(),
        parallel: region.whites.len().max(region.blacks.len()) > opts.parallel_threshold,
    };
    let mut diag = GaugeDiagnostics::default();
    let mut f = vec![1.0f64; region.whites.len()];
    let mut g = initial_g.to_vec();
    let mut log_state: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut converged = false;
    while diag.iterations < opts.max_iter {
        diag.iterations += 1;
        let residual = match &mut log_state {
            None => {
                let ws = p.white_sums(&g);
                let f_new: Vec<f64> = ws.iter().zip(&p.beta_w).map(|(s, b)| b / s).collect();
                let bs = p.black_sums(&f_new);
                let g_new: Vec<f64> = bs.iter().zip(&p.beta_b).map(|(s, b)| b / s).collect();
                if !in_linear_range(&f_new) || !in_linear_range(&g_new) {
                    log_state = Some((f.iter().map(|x| x.ln()).collect(), g.iter().map(|x| x.ln()).collect()));
                    diag.log_domain = true;
                    diag.iterations -= 1;
                    continue;
                }
                f = f_new;
                g = g_new;
                let ws = p.white_sums(&g);
                ws.iter().zip(&f).zip(&p.beta_w).map(|((s, fi), b)| (s * fi - b).abs()).fold(0.0, f64::max)
            }
            Some((lf, lg)) => {
                let ws = p.white_log_sums(lg);
                *lf = ws.iter().zip(&p.beta_w).map(|(s, b)| b.ln() - s).collect();
                let bs = p.black_log_sums(lf);
                *lg = bs.iter().zip(&p.beta_b).map(|(s, b)| b.ln() - s).collect();
                let ws = p.white_log_sums(lg);
                ws.iter().zip(lf.iter()).zip(&p.beta_w).map(|((s, fi), b)| ((s + fi).exp() - b).abs()).fold(0.0, f64::max)
            }
        };
        diag.residual_history.push(residual);
        if residual <= opts.tol {
            converged = true;
            break;
        }
    }
    let (log_f, log_g) = match log_state {
        Some(s) => s,
        None => (f.iter().map(|x| x.ln()).collect(), g.iter().map(|x| x.ln()).collect()),
    };
    let gauge = GaugePair { log_f, log_g, normalization: opts.normalization }.normalized(region, opts.normalization);
    diag.max_residual = gauge_residual(region, weights, &gauge);
    if !converged {
        return Err(Error::NoConvergence {
            iterations: diag.iterations,
            residual: diag.residual_history.last().copied().unwrap_or(f64::INFINITY),
            history: diag.residual_history,
        });
    }
    Ok((gauge, diag))
}

/// Critical edge weights `c_e = w_e f(u) g(v)`.
pub fn critical_edge_weights(region: &RegionGraph, weights: &[f64], gauge: &GaugePair) -> Vec<f64> {
    region
        .edges
        .iter()
        .zip(weights)
        .map(|(e, w)| w * (gauge.log_f[e.white] + gauge.log_g[e.black]).exp())
        .collect()
}

/// `max_v |Σ_{e∋v} w_e f g − β_v|`.
pub fn gauge_residual(region: &RegionGraph, weights: &[f64], gauge: &GaugePair) -> f64 {
    let c = critical_edge_weights(region, weights, gauge);
    region
        .vertices()
        .map(|v| (region.edges_at(v).iter().map(|&e| c[e]).sum::<f64>() - region.beta(v)).abs())
        .fold(0.0, f64::max)
}

/// Sup-norm distance between two gauges modulo the scalar freedom.
///
/// Minimises `max(|log(C f₁/f₂)|, |log(g₁/(C g₂))|)` over `C > 0`, which
/// equals half the spread of the set of pointwise log differences.
pub fn gauge_distance(a: &GaugePair, b: &GaugePair) -> Result<f64> {
    if a.log_f.len() != b.log_f.len() || a.log_g.len() != b.log_g.len() {
        return Err(Error::InvalidInput("gauges belong to different regions".into()));
    }
    let t = a
        .log_f
        .iter()
        .zip(&b.log_f)
        .map(|(x, y)| y - x)
        .chain(a.log_g.iter().zip(&b.log_g).map(|(x, y)| x - y));
    let (lo, hi) = t.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    Ok((hi - lo) / 2.0)
}

/// One sample of the rescaled log gauge.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogGaugeSample {
    pub color: Color,
    pub index: usize,
    pub position: Vec<f64>,
    /// `(1/n) log g` at blacks and `−(1/n) log f` at whites.
    pub value: f64,
}

/// `(1/n) log g` at black vertices and `−(1/n) log f` at whites, at positions scaled by `1/n`.
pub fn scaled_log_gauge(region: &RegionGraph, gauge: &GaugePair) -> Vec<LogGaugeSample> {
    let n = region.scale;
    region
        .vertices()
        .filter_map(|v| {
            let position = region.scaled_position(v)?;
            let value = match v {
                VertexRef::White(i) => -gauge.log_f[i] / n,
                VertexRef::Black(j) => gauge.log_g[j] / n,
            };
            Some(LogGaugeSample { color: v.color(), index: v.index(), position, value })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, LatticeName};
    use crate::region::{build_square, build_torus};

    #[test]
    fn four_cycle_half() {
        let sq = build_square(1);
        let (g, d) = sinkhorn_solve(&sq, &[1.0; 4], &SinkhornOptions::default()).unwrap();
        for c in critical_edge_weights(&sq, &[1.0; 4], &g) {
            assert!((c - 0.5).abs() < 1e-12);
        }
        assert!(d.max_residual <= 1e-10);
    }

    #[test]
    fn all_ones_residual() {
        let sq = build_square(1);
        let ones = GaugePair::from_values(&[1.0, 1.0], &[1.0, 1.0]);
        assert!((gauge_residual(&sq, &[1.0; 4], &ones) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn distance_quotients_scalar() {
        let a = GaugePair::from_values(&[1.0, 3.0], &[0.5, 2.0]);
        let b = GaugePair::from_values(&[2.0, 6.0], &[0.25, 1.0]);
        assert!(gauge_distance(&a, &b).unwrap() < 1e-15);
        assert_eq!(gauge_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn torus_start_is_fixed_point() {
        let t = build_torus(&build_lattice(LatticeName::Z2Diag), 4).unwrap();
        let (_, d) = sinkhorn_solve(&t, &vec![1.0; t.edges.len()], &SinkhornOptions::default()).unwrap();
        assert!(d.iterations <= 5);
    }

    #[test]
    fn max_iter_error_carries_history() {
        let r = crate::region::build_aztec_diamond(30).unwrap();
        let opts = SinkhornOptions { max_iter: 1, ..Default::default() };
        match sinkhorn_solve(&r, &vec![1.0; r.edges.len()], &opts) {
            Err(Error::NoConvergence { iterations, history, .. }) => assert_eq!((iterations, history.len()), (1, 1)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_region_is_refused() {
        let r = RegionGraph::abstract_graph(2, 1, &[(0, 0), (1, 0)], "path");
        assert!(matches!(sinkhorn_solve(&r, &[1.0, 1.0], &SinkhornOptions::default()), Err(Error::Infeasible(_))));
    }
}
