//! Incremental integer difference-logic engine.
//!
//! Maintains a potential function over the constraint graph: one node per
//! integer variable plus a distinguished zero node, and one directed edge
//! `y -> x` with weight `c` per active constraint `x - y <= c`, such that
//! `pot[x] <= pot[y] + c` holds for every active edge. The potential is then
//! a satisfying assignment for the active constraints. Adding an edge runs an
//! SPFA-style relaxation restricted to the affected region; a negative cycle
//! (reported through the tags of its edges) means the constraints are jointly
//! infeasible, and the potentials are rolled back so the engine can continue.

use std::collections::VecDeque;

/// Literal tag carried on edges, opaque to the engine; conflict explanations
/// return the tags of the edges forming a negative cycle.
pub type EdgeTag = u32;

#[derive(Debug, Clone, Copy)]
struct Edge {
    from: usize,
    to: usize,
    weight: i64,
    tag: EdgeTag,
}

#[derive(Debug)]
pub struct DiffGraph {
    pot: Vec<i64>,
    out: Vec<Vec<u32>>,
    edges: Vec<Edge>,
    // per-pass scratch, validated through `stamp`
    parent: Vec<u32>,
    stamp: Vec<u32>,
    relax_count: Vec<u32>,
    in_queue: Vec<bool>,
    pass: u32,
}

impl DiffGraph {
    pub fn new(nodes: usize) -> Self {
        DiffGraph {
            pot: vec![0; nodes],
            out: vec![Vec::new(); nodes],
            edges: Vec::new(),
            parent: vec![0; nodes],
            stamp: vec![0; nodes],
            relax_count: vec![0; nodes],
            in_queue: vec![false; nodes],
            pass: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    /// The current value of a node under the maintained potential.
    pub fn value(&self, node: usize) -> i64 {
        self.pot[node]
    }

    /// Adds the constraint `to - from <= weight` (edge `from -> to`). On
    /// success the potential is repaired; on a negative cycle the engine is
    /// left exactly as before and the tags of the cycle's edges are returned.
    pub fn add_edge(&mut self, from: usize, to: usize, weight: i64, tag: EdgeTag) -> Result<(), Vec<EdgeTag>> {
        let eid = self.edges.len() as u32;
        self.edges.push(Edge { from, to, weight, tag });
        self.out[from].push(eid);

        if self.pot[to] <= self.pot[from] + weight {
            return Ok(());
        }

        let n = self.pot.len() as u32;
        self.pass += 1;
        let mut undo: Vec<(usize, i64)> = Vec::new();
        let mut queue = VecDeque::new();

        undo.push((to, self.pot[to]));
        self.pot[to] = self.pot[from] + weight;
        self.touch(to);
        self.parent[to] = eid;
        self.relax_count[to] = 1;
        queue.push_back(to);
        self.in_queue[to] = true;

        let mut conflict: Option<usize> = None;
        'outer: while let Some(u) = queue.pop_front() {
            self.in_queue[u] = false;
            let out_edges = core::mem::take(&mut self.out[u]);
            for &eid2 in &out_edges {
                let e = self.edges[eid2 as usize];
                if self.pot[u] + e.weight >= self.pot[e.to] {
                    continue;
                }
                undo.push((e.to, self.pot[e.to]));
                self.pot[e.to] = self.pot[u] + e.weight;
                self.touch(e.to);
                self.parent[e.to] = eid2;
                self.relax_count[e.to] += 1;
                // lowering the tail of the new edge closes a cycle through
                // it; the relaxation-count guard is a safety net on top
                if e.to == from || self.relax_count[e.to] > n {
                    conflict = Some(e.to);
                    self.out[u] = out_edges;
                    break 'outer;
                }
                if !self.in_queue[e.to] {
                    queue.push_back(e.to);
                    self.in_queue[e.to] = true;
                }
            }
            self.out[u] = out_edges;
        }

        match conflict {
            None => Ok(()),
            Some(start) => {
                let tags = self.extract_cycle(start);
                // restore in reverse so duplicated entries resolve correctly
                for (node, old) in undo.into_iter().rev() {
                    self.pot[node] = old;
                }
                while let Some(u) = queue.pop_front() {
                    self.in_queue[u] = false;
                }
                self.out[from].pop();
                self.edges.pop();
                Err(tags)
            }
        }
    }

    fn touch(&mut self, node: usize) {
        if self.stamp[node] != self.pass {
            self.stamp[node] = self.pass;
            self.relax_count[node] = 0;
        }
    }

    /// Removes the most recently added edges down to `keep`. Potentials stay
    /// valid: they satisfy a superset of the remaining constraints.
    pub fn truncate(&mut self, keep: usize) {
        while self.edges.len() > keep {
            let e = self.edges.pop().unwrap();
            let popped = self.out[e.from].pop();
            debug_assert_eq!(popped, Some(self.edges.len() as u32));
        }
    }

    /// Collects the edge tags of the negative cycle by walking the parent
    /// pointers written during this pass; the cycle necessarily runs through
    /// the newly added edge. Falls back to every active edge (still a sound,
    /// if blunt, explanation) if the walk leaves this pass's territory.
    fn extract_cycle(&self, start: usize) -> Vec<EdgeTag> {
        let n = self.pot.len();
        let mut visited = vec![false; n];
        let mut path: Vec<(usize, EdgeTag)> = Vec::new();
        let mut node = start;
        loop {
            if self.stamp[node] != self.pass {
                // safety net: blame the whole active set
                return self.edges.iter().map(|e| e.tag).collect();
            }
            if visited[node] {
                // keep only the loop portion of the walk
                let cut = path.iter().position(|&(n2, _)| n2 == node).unwrap();
                return path[cut..].iter().map(|&(_, t)| t).collect();
            }
            visited[node] = true;
            let e = self.edges[self.parent[node] as usize];
            path.push((node, e.tag));
            node = e.from;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feasible_chain_keeps_a_valid_potential() {
        let mut g = DiffGraph::new(4);
        // x1 - x0 <= -1, x2 - x1 <= -1, x3 - x2 <= -1 (strictly decreasing)
        g.add_edge(0, 1, -1, 10).unwrap();
        g.add_edge(1, 2, -1, 11).unwrap();
        g.add_edge(2, 3, -1, 12).unwrap();
        assert!(g.value(1) <= g.value(0) - 1);
        assert!(g.value(2) <= g.value(1) - 1);
        assert!(g.value(3) <= g.value(2) - 1);
    }

    #[test]
    fn negative_cycle_is_detected_with_its_tags() {
        let mut g = DiffGraph::new(2);
        // x - y <= -1 and y - x <= 0 is a cycle of weight -1
        g.add_edge(1, 0, -1, 7).unwrap();
        let mut tags = g.add_edge(0, 1, 0, 8).unwrap_err();
        tags.sort();
        assert_eq!(tags, vec![7, 8]);
        // engine stays usable: the failed edge is gone
        assert_eq!(g.len(), 1);
        g.add_edge(0, 1, 5, 9).unwrap();
        assert!(g.value(0) <= g.value(1) - 1);
        assert!(g.value(1) <= g.value(0) + 5);
    }

    #[test]
    fn zero_weight_cycles_are_fine() {
        let mut g = DiffGraph::new(2);
        g.add_edge(0, 1, 0, 1).unwrap();
        g.add_edge(1, 0, 0, 2).unwrap();
        assert_eq!(g.value(0), g.value(1));
    }

    #[test]
    fn truncate_rolls_back_edges() {
        let mut g = DiffGraph::new(2);
        g.add_edge(0, 1, -5, 1).unwrap();
        let mark = g.len();
        g.add_edge(1, 0, 7, 2).unwrap();
        g.truncate(mark);
        assert_eq!(g.len(), 1);
        // the potential stays valid for the remaining edge
        assert!(g.value(1) <= g.value(0) - 5);
        // a contradicting edge still fails after the rollback
        assert!(g.add_edge(1, 0, 2, 3).is_err());
        g.add_edge(1, 0, 7, 4).unwrap();
    }

    #[test]
    fn self_loop_negative_is_immediate_conflict() {
        let mut g = DiffGraph::new(1);
        assert!(g.add_edge(0, 0, -1, 42).is_err());
        assert!(g.add_edge(0, 0, 0, 43).is_ok());
    }

    #[test]
    fn longer_negative_cycle_reports_every_edge() {
        let mut g = DiffGraph::new(3);
        g.add_edge(0, 1, 2, 1).unwrap();
        g.add_edge(1, 2, -4, 2).unwrap();
        let mut tags = g.add_edge(2, 0, 1, 3).unwrap_err();
        tags.sort();
        assert_eq!(tags, vec![1, 2, 3]);
    }

    #[test]
    fn interleaved_adds_and_conflicts_stay_consistent() {
        // exercise scratch reuse across passes
        let mut g = DiffGraph::new(5);
        g.add_edge(0, 1, 3, 1).unwrap();
        g.add_edge(1, 2, -2, 2).unwrap();
        g.add_edge(2, 3, -2, 3).unwrap();
        assert!(g.add_edge(3, 0, 0, 4).is_err()); // cycle weight -1
        g.add_edge(3, 4, 1, 5).unwrap();
        assert!(g.add_edge(4, 1, -3, 6).is_err()); // cycle 1..4..1 negative
        g.add_edge(3, 0, 1, 7).unwrap(); // weight-0 cycle is fine
        for (from, to, w) in [(0, 1, 3i64), (1, 2, -2), (2, 3, -2), (3, 4, 1), (3, 0, 1)] {
            assert!(g.value(to) <= g.value(from) + w, "{from}->{to}");
        }
    }
}
