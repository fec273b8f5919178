//! Feasibility of `N`-dimer covers through integral max-flow.

use serde::Serialize;

use super::maxflow::FlowNetwork;
use crate::region::{Color, RegionGraph};

/// An edge multiplicity assignment with `Σ_{e∋v} M_e = N_v` at every vertex.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct MultiDimerCover {
    pub m: Vec<u64>,
}

impl MultiDimerCover {
    /// Checks the vertex sums against the multiplicities of `region`.
    pub fn is_valid(&self, region: &RegionGraph) -> bool {
        self.m.len() == region.edges.len()
            && region.vertices().all(|v| {
                region.edges_at(v).iter().map(|&e| self.m[e]).sum::<u64>() == region.multiplicity(v)
            })
    }
}

/// A set `C` of one color with `Σ_{N(C)} N_v < Σ_C N_v`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DeficientSet {
    pub color: Color,
    pub vertices: Vec<usize>,
    /// `Σ_C N_v`.
    pub demand: u64,
    /// `Σ_{N(C)} N_v`.
    pub supply: u64,
}

/// Why a region admits no cover.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InfeasibleReason {
    /// The white and black multiplicity totals differ.
    Unbalanced,
    /// A deficient set violates the projected Hall condition.
    Hall,
}

/// Evidence returned by [`check_feasible`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Witness {
    Cover(MultiDimerCover),
    Deficient(DeficientSet),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Feasibility {
    pub feasible: bool,
    pub reason: Option<InfeasibleReason>,
    pub witness: Witness,
}

/// Result of [`check_edge_feasible`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EdgeFeasibility {
    pub ok: bool,
    pub dead_edges: Vec<usize>,
}

fn neighbourhood_supply(region: &RegionGraph, color: Color, set: &[usize]) -> u64 {
    let mut seen = match color {
        Color::White => vec![false; region.blacks.len()],
        Color::Black => vec![false; region.whites.len()],
    };
    let mut supply = 0;
    for &v in set {
        let edges = match color {
            Color::White => region.white_edges(v),
            Color::Black => region.black_edges(v),
        };
        for &e in edges {
            let (u, mult) = match color {
                Color::White => (region.edges[e].black, region.blacks[region.edges[e].black].mult),
                Color::Black => (region.edges[e].white, region.whites[region.edges[e].white].mult),
            };
            if !seen[u] {
                seen[u] = true;
                supply += mult;
            }
        }
    }
    supply
}

/// Runs max-flow with the given vertex capacities.
///
/// Returns the flow value, the edge multiplicities and the set of whites
/// reachable from the source in the final residual network.
pub(crate) fn max_flow_assignment(
    region: &RegionGraph,
    white_caps: &[u64],
    black_caps: &[u64],
) -> (u64, Vec<u64>, Vec<usize>) {
    let nw = region.whites.len();
    let nb = region.blacks.len();
    let (s, t) = (nw + nb, nw + nb + 1);
    let mut g = FlowNetwork::new(nw + nb + 2);
    for (i, &c) in white_caps.iter().enumerate() {
        g.add_arc(s, i, c);
    }
    for (j, &c) in black_caps.iter().enumerate() {
        g.add_arc(nw + j, t, c);
    }
    let handles: Vec<_> = region
        .edges
        .iter()
        .map(|e| g.add_arc(e.white, nw + e.black, u64::MAX / 4))
        .collect();
    let flow = g.max_flow(s, t);
    let m = handles.iter().map(|&h| g.flow_on(h)).collect();
    let reach = g.reachable(s);
    let reachable_whites = (0..nw).filter(|&i| reach[i]).collect();
    (flow, m, reachable_whites)
}

/// Decides whether an `N`-dimer cover exists.
///
/// On success the witness is a cover; otherwise it is a deficient set.
pub fn check_feasible(region: &RegionGraph) -> Feasibility {
    let (wt, bt) = (region.white_total(), region.black_total());
    if wt != bt {
        let (color, vertices): (Color, Vec<usize>) = if wt > bt {
            (Color::White, (0..region.whites.len()).collect())
        } else {
            (Color::Black, (0..region.blacks.len()).collect())
        };
        let supply = neighbourhood_supply(region, color, &vertices);
        return Feasibility {
            feasible: false,
            reason: Some(InfeasibleReason::Unbalanced),
            witness: Witness::Deficient(DeficientSet { color, vertices, demand: wt.max(bt), supply }),
        };
    }
    let wc: Vec<u64> = region.whites.iter().map(|s| s.mult).collect();
    let bc: Vec<u64> = region.blacks.iter().map(|s| s.mult).collect();
    let (flow, m, reach) = max_flow_assignment(region, &wc, &bc);
    if flow == wt {
        return Feasibility { feasible: true, reason: None, witness: Witness::Cover(MultiDimerCover { m }) };
    }
    let demand = reach.iter().map(|&i| region.whites[i].mult).sum();
    let supply = neighbourhood_supply(region, Color::White, &reach);
    Feasibility {
        feasible: false,
        reason: Some(InfeasibleReason::Hall),
        witness: Witness::Deficient(DeficientSet { color: Color::White, vertices: reach, demand, supply }),
    }
}

/// Strongly connected component id per node (iterative Kosaraju).
fn strong_components(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut radj = vec![Vec::new(); n];
    for (u, out) in adj.iter().enumerate() {
        for &v in out {
            radj[v].push(u);
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut stack = vec![(root, 0usize)];
        while let Some(top) = stack.last_mut() {
            let (u, i) = *top;
            if i < adj[u].len() {
                top.1 += 1;
                let v = adj[u][i];
                if !seen[v] {
                    seen[v] = true;
                    stack.push((v, 0));
                }
            } else {
                order.push(u);
                stack.pop();
            }
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut c = 0;
    for &root in order.iter().rev() {
        if comp[root] != usize::MAX {
            continue;
        }
        comp[root] = c;
        let mut stack = vec![root];
        while let Some(u) = stack.pop() {
            for &v in &radj[u] {
                if comp[v] == usize::MAX {
                    comp[v] = c;
                    stack.push(v);
                }
            }
        }
        c += 1;
    }
    comp
}

/// Lists edges that no `N`-dimer cover uses.
///
/// One max-flow yields a cover `M`; an unused edge `(w, b)` can be raised by
/// one unit exactly when an alternating cycle returns from `b` to `w`, i.e.
/// when both endpoints share a strongly connected component of the digraph
/// with arcs `w → b` for every edge and `b → w` for edges with `M_e > 0`.
pub fn check_edge_feasible(region: &RegionGraph) -> EdgeFeasibility {
    let cover = match check_feasible(region).witness {
        Witness::Cover(c) => c,
        Witness::Deficient(_) => {
            return EdgeFeasibility { ok: region.edges.is_empty(), dead_edges: (0..region.edges.len()).collect() }
        }
    };
    let nw = region.whites.len();
    let mut adj = vec![Vec::new(); nw + region.blacks.len()];
    for (k, e) in region.edges.iter().enumerate() {
        adj[e.white].push(nw + e.black);
        if cover.m[k] > 0 {
            adj[nw + e.black].push(e.white);
        }
    }
    let comp = strong_components(&adj);
    let dead_edges: Vec<usize> = region
        .edges
        .iter()
        .enumerate()
        .filter(|(k, e)| cover.m[*k] == 0 && comp[e.white] != comp[nw + e.black])
        .map(|(k, _)| k)
        .collect();
    EdgeFeasibility { ok: dead_edges.is_empty(), dead_edges }
}

/// Reference implementation: one max-flow per edge with a unit forced through it.
pub fn check_edge_feasible_forced(region: &RegionGraph) -> EdgeFeasibility {
    let total = region.white_total();
    let balanced = total == region.black_total();
    let wc: Vec<u64> = region.whites.iter().map(|s| s.mult).collect();
    let bc: Vec<u64> = region.blacks.iter().map(|s| s.mult).collect();
    let dead_edges: Vec<usize> = region
        .edges
        .iter()
        .enumerate()
        .filter(|(_, e)| {
            if !balanced || wc[e.white] == 0 || bc[e.black] == 0 {
                return true;
            }
            let mut w = wc.clone();
            let mut b = bc.clone();
            w[e.white] -= 1;
            b[e.black] -= 1;
            max_flow_assignment(region, &w, &b).0 != total - 1
        })
        .map(|(k, _)| k)
        .collect();
    EdgeFeasibility { ok: dead_edges.is_empty(), dead_edges }
}

/// Whether the region is feasible and every edge is used by some cover.
pub fn is_fully_feasible(region: &RegionGraph) -> bool {
    check_feasible(region).feasible && check_edge_feasible(region).ok
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::region::build_square;

    #[test]
    fn square_is_feasible() {
        let r = build_square(2);
        let f = check_feasible(&r);
        assert!(f.feasible);
        match f.witness {
            Witness::Cover(c) => assert!(c.is_valid(&r)),
            _ => panic!(),
        }
        assert!(check_edge_feasible(&r).ok);
    }

    #[test]
    fn path_is_unbalanced() {
        let r = RegionGraph::abstract_graph(2, 1, &[(0, 0), (1, 0)], "path");
        let f = check_feasible(&r);
        assert!(!f.feasible);
        assert_eq!(f.reason, Some(InfeasibleReason::Unbalanced));
    }

    #[test]
    fn hall_witness_is_deficient() {
        // Two whites share one black; a third white has its own pair.
        let r = RegionGraph::abstract_graph(3, 3, &[(0, 0), (1, 0), (2, 1), (2, 2)], "hall");
        let f = check_feasible(&r);
        assert_eq!(f.reason, Some(InfeasibleReason::Hall));
        match f.witness {
            Witness::Deficient(d) => assert!(d.supply < d.demand),
            _ => panic!(),
        }
    }
}
