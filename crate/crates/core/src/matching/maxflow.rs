//! Dinic maximum flow on integer capacities.

use std::collections::VecDeque;

#[derive(Clone, Debug)]
struct Arc {
    to: usize,
    rev: usize,
    cap: u64,
}

/// A flow network with residual arcs.
#[derive(Clone, Debug)]
pub struct FlowNetwork {
    graph: Vec<Vec<Arc>>,
    level: Vec<i64>,
    iter: Vec<usize>,
}

impl FlowNetwork {
    pub fn new(n: usize) -> Self {
        FlowNetwork { graph: vec![Vec::new(); n], level: vec![0; n], iter: vec![0; n] }
    }

    /// Adds an arc and returns its handle `(node, position)`.
    pub fn add_arc(&mut self, from: usize, to: usize, cap: u64) -> (usize, usize) {
        let rf = self.graph[to].len() + usize::from(from == to);
        let rt = self.graph[from].len();
        self.graph[from].push(Arc { to, rev: rf, cap });
        self.graph[to].push(Arc { to: from, rev: rt, cap: 0 });
        (from, rt)
    }

    /// Flow currently carried by an arc, given its original capacity.
    pub fn flow_on(&self, handle: (usize, usize)) -> u64 {
        let a = &self.graph[handle.0][handle.1];
        self.graph[a.to][a.rev].cap
    }

    fn bfs(&mut self, s: usize) {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for a in &self.graph[v] {
                if a.cap > 0 && self.level[a.to] < 0 {
                    self.level[a.to] = self.level[v] + 1;
                    queue.push_back(a.to);
                }
            }
        }
    }

    fn dfs(&mut self, v: usize, t: usize, f: u64) -> u64 {
        if v == t {
            return f;
        }
        while self.iter[v] < self.graph[v].len() {
            let i = self.iter[v];
            let (to, cap) = (self.graph[v][i].to, self.graph[v][i].cap);
            if cap > 0 && self.level[v] < self.level[to] {
                let d = self.dfs(to, t, f.min(cap));
                if d > 0 {
                    self.graph[v][i].cap -= d;
                    let rev = self.graph[v][i].rev;
                    self.graph[to][rev].cap += d;
                    return d;
                }
            }
            self.iter[v] += 1;
        }
        0
    }

    /// Pushes a maximum flow from `s` to `t` and returns its value.
    pub fn max_flow(&mut self, s: usize, t: usize) -> u64 {
        let mut flow = 0;
        loop {
            self.bfs(s);
            if self.level[t] < 0 {
                return flow;
            }
            self.iter.iter_mut().for_each(|i| *i = 0);
            loop {
                let f = self.dfs(s, t, u64::MAX);
                if f == 0 {
                    break;
                }
                flow += f;
            }
        }
    }

    /// Nodes reachable from `s` through arcs with positive residual capacity.
    pub fn reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.graph.len()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for a in &self.graph[v] {
                if a.cap > 0 && !seen[a.to] {
                    seen[a.to] = true;
                    stack.push(a.to);
                }
            }
        }
        seen
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diamond_network() {
        let mut g = FlowNetwork::new(4);
        g.add_arc(0, 1, 3);
        g.add_arc(0, 2, 2);
        g.add_arc(1, 2, 5);
        g.add_arc(1, 3, 2);
        let h = g.add_arc(2, 3, 3);
        assert_eq!(g.max_flow(0, 3), 5);
        assert_eq!(g.flow_on(h), 3);
        let cut = g.reachable(0);
        assert!(cut[0] && !cut[3]);
    }
}
