//! Dinic max-flow over a generic capacity type.

use std::collections::VecDeque;

use super::metrics::Mass;

struct Arc<W> {
    to: usize,
    cap: W,
}

pub(crate) struct FlowNetwork<W> {
    n: usize,
    arcs: Vec<Arc<W>>,
    adj: Vec<Vec<usize>>,
}

impl<W: Mass> FlowNetwork<W> {
    pub fn new(n: usize, edges: &[(usize, usize, W)]) -> Self {
        let mut net = FlowNetwork { n, arcs: Vec::with_capacity(2 * edges.len()), adj: vec![Vec::new(); n] };
        for &(a, b, w) in edges {
            net.adj[a].push(net.arcs.len());
            net.arcs.push(Arc { to: b, cap: w });
            net.adj[b].push(net.arcs.len());
            net.arcs.push(Arc { to: a, cap: W::zero() });
        }
        net
    }

    fn levels(&self, s: usize) -> Vec<usize> {
        let mut level = vec![usize::MAX; self.n];
        level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &id in &self.adj[v] {
                let arc = &self.arcs[id];
                if arc.cap.is_positive() && level[arc.to] == usize::MAX {
                    level[arc.to] = level[v] + 1;
                    queue.push_back(arc.to);
                }
            }
        }
        level
    }

    fn augment(&mut self, v: usize, t: usize, limit: W, level: &[usize], next: &mut [usize]) -> W {
        if v == t {
            return limit;
        }
        while next[v] < self.adj[v].len() {
            let id = self.adj[v][next[v]];
            let (to, cap) = (self.arcs[id].to, self.arcs[id].cap);
            if cap.is_positive() && level[to] == level[v] + 1 {
                let pushed = self.augment(to, t, W::min(limit, cap), level, next);
                if pushed.is_positive() {
                    self.arcs[id].cap = self.arcs[id].cap - pushed;
                    self.arcs[id ^ 1].cap = self.arcs[id ^ 1].cap + pushed;
                    return pushed;
                }
            }
            next[v] += 1;
        }
        W::zero()
    }

    /// Maximum flow value from `s` to `t`; leaves the residual network in place.
    pub fn max_flow(&mut self, s: usize, t: usize) -> W {
        let mut total = W::zero();
        let infinity = self.arcs.iter().fold(W::zero(), |acc, a| acc + a.cap) + W::one_unit();
        loop {
            let level = self.levels(s);
            if level[t] == usize::MAX {
                return total;
            }
            let mut next = vec![0; self.n];
            loop {
                let pushed = self.augment(s, t, infinity, &level, &mut next);
                if !pushed.is_positive() {
                    break;
                }
                total = total + pushed;
            }
        }
    }

    /// Nodes reachable from `s` in the residual network.
    pub fn source_side(&self, s: usize) -> Vec<usize> {
        let level = self.levels(s);
        (0..self.n).filter(|&v| level[v] != usize::MAX).collect()
    }
}
