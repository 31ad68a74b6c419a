//! Vertex connectivity and (r,s)-robustness.

use std::collections::VecDeque;

use super::{CommGraph, NodeId};
use crate::error::{input, Result};

/// Brute-force robustness enumerates `3^n` subset pairs.
const MAX_ROBUST_NODES: usize = 20;

const INF: i32 = i32::MAX / 2;

/// Maximum number of internally vertex-disjoint paths between `s` and `t`.
/// A direct edge counts as one path.
pub fn local_vertex_connectivity(g: &CommGraph, s: NodeId, t: NodeId) -> Result<usize> {
    g.check(s)?;
    g.check(t)?;
    if s == t {
        return input("local connectivity needs two distinct nodes");
    }
    Ok(disjoint_paths(g, s, t))
}

fn disjoint_paths(g: &CommGraph, s: NodeId, t: NodeId) -> usize {
    // Split every node v into v_in = 2v and v_out = 2v + 1.
    let n = g.n();
    let size = 2 * n;
    let mut cap = vec![0i32; size * size];
    let idx = |a: usize, b: usize| a * size + b;
    for v in 0..n {
        let inner = if v == s || v == t { INF } else { 1 };
        cap[idx(2 * v, 2 * v + 1)] = inner;
        for &u in g.adjacent(v) {
            if (v == s && u == t) || (v == t && u == s) {
                continue;
            }
            cap[idx(2 * v + 1, 2 * u)] = INF;
        }
    }
    let direct = usize::from(g.has_edge(s, t));
    let (source, sink) = (2 * s + 1, 2 * t);
    let mut flow = 0;
    let mut parent = vec![usize::MAX; size];
    loop {
        parent.fill(usize::MAX);
        parent[source] = source;
        let mut queue = VecDeque::from([source]);
        while let Some(a) = queue.pop_front() {
            if a == sink {
                break;
            }
            for b in 0..size {
                if parent[b] == usize::MAX && cap[idx(a, b)] > 0 {
                    parent[b] = a;
                    queue.push_back(b);
                }
            }
        }
        if parent[sink] == usize::MAX {
            break;
        }
        // Every augmenting path crosses a unit internal arc, so it carries 1.
        let mut b = sink;
        while b != source {
            let a = parent[b];
            cap[idx(a, b)] -= 1;
            cap[idx(b, a)] += 1;
            b = a;
        }
        flow += 1;
    }
    flow + direct
}

/// Vertex connectivity κ(G): the fewest nodes whose removal disconnects the
/// graph. Complete graphs give `n - 1`; disconnected graphs give 0.
pub fn vertex_connectivity(g: &CommGraph) -> usize {
    let n = g.n();
    if n <= 1 {
        return 0;
    }
    if !g.is_connected() {
        return 0;
    }
    let mut best = n - 1;
    for s in 0..n {
        for t in (s + 1)..n {
            if !g.has_edge(s, t) {
                best = best.min(disjoint_paths(g, s, t));
            }
        }
    }
    best
}

/// Checks (r,s)-robustness: for every pair of disjoint nonempty node sets
/// `S1, S2`, one of them has all members with at least `r` neighbors outside
/// it, or together they have at least `s` such members.
///
/// Exhaustive over `3^n` pairs, so limited to small graphs.
pub fn is_rs_robust(g: &CommGraph, r: usize, s: usize) -> Result<bool> {
    let n = g.n();
    if n > MAX_ROBUST_NODES {
        return input(format!(
            "robustness check is exhaustive and limited to {MAX_ROBUST_NODES} nodes, got {n}"
        ));
    }
    let adj: Vec<u32> = (0..n)
        .map(|i| g.adjacent(i).iter().fold(0u32, |m, &j| m | (1 << j)))
        .collect();
    let reach = |set: u32| -> u32 {
        let mut count = 0;
        let mut rest = set;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            if (adj[v] & !set).count_ones() as usize >= r {
                count += 1;
            }
        }
        count
    };
    let all: u32 = (1u32 << n) - 1;
    for s1 in 1..=all {
        let x1 = reach(s1);
        if x1 == s1.count_ones() {
            continue;
        }
        let free = all & !s1;
        let mut s2 = free;
        while s2 != 0 {
            let x2 = reach(s2);
            if x2 != s2.count_ones() && ((x1 + x2) as usize) < s {
                return Ok(false);
            }
            s2 = (s2 - 1) & free;
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle(n: usize) -> CommGraph {
        CommGraph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap()
    }

    #[test]
    fn connectivity_of_standard_graphs() {
        assert_eq!(vertex_connectivity(&CommGraph::complete(5).unwrap()), 4);
        assert_eq!(vertex_connectivity(&cycle(6)), 2);
        let path = CommGraph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        assert_eq!(vertex_connectivity(&path), 1);
        let split = CommGraph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(vertex_connectivity(&split), 0);
        assert_eq!(vertex_connectivity(&CommGraph::new(1).unwrap()), 0);
    }

    #[test]
    fn local_connectivity_counts_direct_edge() {
        let k4 = CommGraph::complete(4).unwrap();
        assert_eq!(local_vertex_connectivity(&k4, 0, 1).unwrap(), 3);
        let c = cycle(5);
        assert_eq!(local_vertex_connectivity(&c, 0, 2).unwrap(), 2);
        assert!(local_vertex_connectivity(&c, 1, 1).is_err());
    }

    #[test]
    fn robustness_of_standard_graphs() {
        // A path is (1,1)-robust but not (2,1)-robust.
        let path = CommGraph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        assert!(is_rs_robust(&path, 1, 1).unwrap());
        assert!(!is_rs_robust(&path, 2, 1).unwrap());
        // K_n is (⌈n/2⌉, ·)-robust.
        let k6 = CommGraph::complete(6).unwrap();
        assert!(is_rs_robust(&k6, 3, 3).unwrap());
        assert!(!is_rs_robust(&k6, 4, 1).unwrap());
        let split = CommGraph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert!(!is_rs_robust(&split, 1, 1).unwrap());
        assert!(is_rs_robust(&CommGraph::complete(21).unwrap(), 1, 1).is_err());
    }
}
