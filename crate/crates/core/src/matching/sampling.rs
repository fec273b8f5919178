//! Exact and Markov-chain samplers for the multinomial dimer measure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::covers::{rational_to_f64, ExactMeasure, GuardRails};
use super::feasibility::{check_edge_feasible, check_feasible, MultiDimerCover, Witness};
use crate::error::{Error, Result};
use crate::region::RegionGraph;

/// Inverse-CDF sampler over an enumerated measure.
#[derive(Clone, Debug)]
pub struct ExactSampler {
    cumulative: Vec<f64>,
}

impl ExactSampler {
    pub fn new(measure: &ExactMeasure) -> Self {
        let mut acc = 0.0;
        let cumulative = measure
            .probabilities()
            .iter()
            .map(|p| {
                acc += rational_to_f64(p);
                acc
            })
            .collect();
        ExactSampler { cumulative }
    }

    /// Index of a sampled cover.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().unwrap_or(&1.0);
        let u: f64 = rng.gen::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= u).min(self.cumulative.len() - 1)
    }
}

/// A simple cycle given as edges with alternating signs `+1, −1, …`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlternatingCycle {
    pub edges: Vec<usize>,
    pub signs: Vec<i8>,
}

/// All simple cycles with at most `max_len` edges, including two-cycles
/// formed by parallel edges.
pub fn alternating_cycles(region: &RegionGraph, max_len: usize) -> Vec<AlternatingCycle> {
    let nw = region.whites.len();
    let n = region.num_vertices();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (k, e) in region.edges.iter().enumerate() {
        adj[e.white].push((nw + e.black, k));
        adj[nw + e.black].push((e.white, k));
    }
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    let mut on_path = vec![false; n];
    for s in 0..n {
        let mut path: Vec<usize> = Vec::new();
        on_path[s] = true;
        cycle_dfs(s, s, &adj, max_len, &mut on_path, &mut path, &mut seen, &mut out);
        on_path[s] = false;
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn cycle_dfs(
    start: usize,
    v: usize,
    adj: &[Vec<(usize, usize)>],
    max_len: usize,
    on_path: &mut [bool],
    path: &mut Vec<usize>,
    seen: &mut std::collections::HashSet<Vec<usize>>,
    out: &mut Vec<AlternatingCycle>,
) {
    for &(u, e) in &adj[v] {
        if path.last() == Some(&e) {
            continue;
        }
        if u == start && !path.is_empty() {
            let mut edges = path.clone();
            edges.push(e);
            let mut key = edges.clone();
            key.sort_unstable();
            if seen.insert(key) {
                let signs = (0..edges.len()).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
                out.push(AlternatingCycle { edges, signs });
            }
            continue;
        }
        if u < start || on_path[u] || path.len() + 1 >= max_len {
            continue;
        }
        on_path[u] = true;
        path.push(e);
        cycle_dfs(start, u, adj, max_len, on_path, path, seen, out);
        path.pop();
        on_path[u] = false;
    }
}

/// Metropolis chain on `N`-dimer covers with cycle-shift moves.
///
/// A move picks a cycle uniformly and a direction by a fair coin, then adds
/// the alternating `±1` pattern. It is accepted with probability
/// `min(1, π(M')/π(M))` where `π(M) ∝ ∏ w_e^{M_e} / ∏ M_e!`.
#[derive(Clone, Debug)]
pub struct MetropolisChain<'a> {
    region: &'a RegionGraph,
    log_w: Vec<f64>,
    cycles: Vec<AlternatingCycle>,
    pub state: MultiDimerCover,
    rng: ChaCha8Rng,
    pub accepted: u64,
    pub proposed: u64,
}

impl<'a> MetropolisChain<'a> {
    /// Starts from a max-flow cover. `max_len` defaults to the lattice girth.
    pub fn new(region: &'a RegionGraph, weights: &[f64], seed: u64, max_len: Option<usize>) -> Result<Self> {
        if weights.len() != region.edges.len() || weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::InvalidInput("one positive weight per edge is required".into()));
        }
        let state = match check_feasible(region).witness {
            Witness::Cover(c) => c,
            Witness::Deficient(_) => return Err(Error::Infeasible("no N-dimer cover exists".into())),
        };
        if !check_edge_feasible(region).ok {
            return Err(Error::Infeasible("some edge is never used by a cover".into()));
        }
        let len = max_len.unwrap_or_else(|| region.lattice.as_ref().map_or(4, |l| l.girth())).max(2);
        let cycles = alternating_cycles(region, len);
        Ok(MetropolisChain {
            region,
            log_w: weights.iter().map(|w| w.ln()).collect(),
            cycles,
            state,
            rng: ChaCha8Rng::seed_from_u64(seed),
            accepted: 0,
            proposed: 0,
        })
    }

    pub fn region(&self) -> &RegionGraph {
        self.region
    }

    pub fn num_cycles(&self) -> usize {
        self.cycles.len()
    }

    /// Log stationary-weight ratio `ln π(M')/π(M)` of a move, if it stays non-negative.
    fn log_ratio(&self, state: &MultiDimerCover, cycle: &AlternatingCycle, dir: i8) -> Option<f64> {
        let mut lr = 0.0;
        for (&e, &s) in cycle.edges.iter().zip(&cycle.signs) {
            let delta = (s * dir) as i64;
            let m = state.m[e] as i64;
            if m + delta < 0 {
                return None;
            }
            // ln M! − ln M'! for a unit step
            lr += if delta > 0 { -((m + 1) as f64).ln() } else { (m as f64).ln() };
            lr += delta as f64 * self.log_w[e];
        }
        Some(lr)
    }

    fn apply(state: &mut MultiDimerCover, cycle: &AlternatingCycle, dir: i8) {
        for (&e, &s) in cycle.edges.iter().zip(&cycle.signs) {
            state.m[e] = (state.m[e] as i64 + (s * dir) as i64) as u64;
        }
    }

    /// One Metropolis step; returns whether the move was accepted.
    pub fn step(&mut self) -> bool {
        if self.cycles.is_empty() {
            return false;
        }
        self.proposed += 1;
        let c = self.rng.gen_range(0..self.cycles.len());
        let dir: i8 = if self.rng.gen::<bool>() { 1 } else { -1 };
        let Some(lr) = self.log_ratio(&self.state, &self.cycles[c], dir) else {
            return false;
        };
        if lr >= 0.0 || self.rng.gen::<f64>().ln() < lr {
            Self::apply(&mut self.state, &self.cycles[c], dir);
            self.accepted += 1;
            true
        } else {
            false
        }
    }

    pub fn run(&mut self, steps: u64) {
        for _ in 0..steps {
            self.step();
        }
    }

    /// Off-diagonal transition probabilities out of `state`.
    pub fn transitions(&self, state: &MultiDimerCover) -> Vec<(MultiDimerCover, f64)> {
        let p_move = 1.0 / (2.0 * self.cycles.len() as f64);
        let mut out = Vec::new();
        for c in &self.cycles {
            for dir in [1i8, -1] {
                if let Some(lr) = self.log_ratio(state, c, dir) {
                    let mut next = state.clone();
                    Self::apply(&mut next, c, dir);
                    out.push((next, p_move * lr.exp().min(1.0)));
                }
            }
        }
        out
    }
}

/// Draws one cover: exact when enumeration fits the guard rails, otherwise
/// the state of a Metropolis chain after `chain_steps` moves.
pub fn sample_cover(
    region: &RegionGraph,
    weights: &[f64],
    seed: u64,
    rails: &GuardRails,
    chain_steps: u64,
) -> Result<MultiDimerCover> {
    if rails.check(region).is_ok() {
        let exact: Vec<_> = weights
            .iter()
            .map(|&w| num_rational::BigRational::from_float(w).ok_or_else(|| Error::InvalidInput("weight not finite".into())))
            .collect::<Result<_>>()?;
        let mu = ExactMeasure::new(region, &exact, rails)?;
        if mu.covers.is_empty() {
            return Err(Error::Infeasible("no N-dimer cover exists".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        return Ok(mu.covers[ExactSampler::new(&mu).sample(&mut rng)].clone());
    }
    let mut chain = MetropolisChain::new(region, weights, seed, None)?;
    chain.run(chain_steps);
    Ok(chain.state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::region::{build_hexagon, build_square};

    #[test]
    fn square_cycles() {
        let sq = build_square(2);
        assert_eq!(alternating_cycles(&sq, 4).len(), 1);
        let h = build_hexagon(2).unwrap();
        assert_eq!(alternating_cycles(&h, 6).len(), 7);
    }

    #[test]
    fn parallel_edges_give_two_cycles() {
        let g = RegionGraph::abstract_graph(1, 1, &[(0, 0), (0, 0), (0, 0)], "triple");
        assert_eq!(alternating_cycles(&g, 2).len(), 3);
    }

    #[test]
    fn chain_preserves_cover() {
        let sq = build_square(3);
        let mut chain = MetropolisChain::new(&sq, &[1.0, 2.0, 1.0, 0.5], 7, None).unwrap();
        for _ in 0..200 {
            chain.step();
            assert!(chain.state.is_valid(&sq));
        }
        assert!(chain.accepted > 0);
    }
}
