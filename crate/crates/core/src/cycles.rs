//! Cycle algorithms on a [`Digraph`] with per-edge costs.
//!
//! All routines work with the mean cost *per edge*; callers with a uniform
//! edge duration divide by it to get a mean per unit time.
//!
//! - [`karp_min_mean`]: Karp's dynamic program, `O(VE)` time and `O(V²)`
//!   memory. Exact up to rounding; the reference solver.
//! - [`howard_min_mean`]: Howard's policy iteration. Much faster on the large
//!   phase graphs, checked against Karp on small ones.
//! - [`find_negative_cycle`]: queue-based Bellman–Ford from a virtual root with
//!   periodic predecessor-graph cycle checks.

use std::collections::VecDeque;

use crate::digraph::Digraph;
use crate::error::{Error, Result};

const NONE: u32 = u32::MAX;

/// Sum of `costs` along `edges`.
pub fn cycle_cost(costs: &[f64], edges: &[usize]) -> f64 {
    edges.iter().map(|&e| costs[e]).sum()
}

/// Rotate a cycle so it starts at the edge leaving its smallest node.
pub fn canonical_rotation<G: Digraph + ?Sized>(g: &G, mut edges: Vec<usize>) -> Vec<usize> {
    if let Some(pos) = (0..edges.len()).min_by_key(|&i| (g.tail(edges[i]), edges[i])) {
        edges.rotate_left(pos);
    }
    edges
}

/// Split a walk (given as consecutive edges) into simple cycles.
fn walk_cycles<G: Digraph + ?Sized>(g: &G, walk: &[usize]) -> Vec<Vec<usize>> {
    let mut cycles = Vec::new();
    let mut stack_nodes: Vec<usize> = Vec::new();
    let mut stack_edges: Vec<usize> = Vec::new();
    let mut pos = vec![usize::MAX; g.node_count()];
    if let Some(&first) = walk.first() {
        let t = g.tail(first);
        pos[t] = 0;
        stack_nodes.push(t);
    }
    for &e in walk {
        let v = g.head(e);
        stack_edges.push(e);
        if pos[v] != usize::MAX {
            let start = pos[v];
            let cyc: Vec<usize> = stack_edges.drain(start..).collect();
            for n in stack_nodes.drain(start + 1..) {
                pos[n] = usize::MAX;
            }
            cycles.push(cyc);
        } else {
            pos[v] = stack_nodes.len();
            stack_nodes.push(v);
        }
    }
    cycles
}

fn best_of<G: Digraph + ?Sized>(g: &G, costs: &[f64], cycles: Vec<Vec<usize>>) -> Option<Vec<usize>> {
    cycles
        .into_iter()
        .map(|c| canonical_rotation(g, c))
        .min_by(|a, b| {
            let ma = cycle_cost(costs, a) / a.len() as f64;
            let mb = cycle_cost(costs, b) / b.len() as f64;
            ma.total_cmp(&mb).then_with(|| a.cmp(b))
        })
}

/// Karp's minimum mean cycle. Returns `None` for acyclic graphs.
pub fn karp_min_mean<G: Digraph + ?Sized>(g: &G, costs: &[f64]) -> Option<Vec<usize>> {
    let n = g.node_count();
    if n == 0 {
        return None;
    }
    // walks[k][v]: cheapest walk with exactly k edges ending at v (any start)
    let mut walks = vec![f64::INFINITY; (n + 1) * n];
    let mut pred = vec![NONE; (n + 1) * n];
    walks[..n].fill(0.0);
    for k in 1..=n {
        let (prev, cur) = walks.split_at_mut(k * n);
        let prev = &prev[(k - 1) * n..];
        let cur = &mut cur[..n];
        let pk = &mut pred[k * n..(k + 1) * n];
        for u in 0..n {
            let du = prev[u];
            if du == f64::INFINITY {
                continue;
            }
            for e in g.out_edges(u) {
                let v = g.head(e);
                let cand = du + costs[e];
                if cand < cur[v] {
                    cur[v] = cand;
                    pk[v] = e as u32;
                }
            }
        }
    }
    let last = &walks[n * n..];
    let mut best: Option<(f64, usize)> = None;
    for v in 0..n {
        if last[v] == f64::INFINITY {
            continue;
        }
        let mut worst = f64::NEG_INFINITY;
        for k in 0..n {
            let dk = walks[k * n + v];
            if dk < f64::INFINITY {
                worst = worst.max((last[v] - dk) / (n - k) as f64);
            }
        }
        if best.is_none_or(|(b, _)| worst < b) {
            best = Some((worst, v));
        }
    }
    let (_, mut v) = best?;
    let mut walk = vec![0usize; n];
    for k in (1..=n).rev() {
        let e = pred[k * n + v] as usize;
        walk[k - 1] = e;
        v = g.tail(e);
    }
    best_of(g, costs, walk_cycles(g, &walk))
}

/// Nodes that lie on, or can reach, some cycle.
fn live_nodes<G: Digraph + ?Sized>(g: &G) -> Vec<bool> {
    let n = g.node_count();
    let mut outdeg: Vec<usize> = (0..n).map(|u| g.out_edges(u).len()).collect();
    let mut rev_offsets = vec![0usize; n + 1];
    for e in 0..g.edge_count() {
        rev_offsets[g.head(e) + 1] += 1;
    }
    for i in 0..n {
        rev_offsets[i + 1] += rev_offsets[i];
    }
    let mut fill = rev_offsets.clone();
    let mut rev = vec![0usize; g.edge_count()];
    for e in 0..g.edge_count() {
        let h = g.head(e);
        rev[fill[h]] = e;
        fill[h] += 1;
    }
    let mut alive = vec![true; n];
    let mut queue: Vec<usize> = (0..n).filter(|&u| outdeg[u] == 0).collect();
    while let Some(v) = queue.pop() {
        alive[v] = false;
        for &e in &rev[rev_offsets[v]..rev_offsets[v + 1]] {
            let t = g.tail(e);
            outdeg[t] -= 1;
            if outdeg[t] == 0 {
                queue.push(t);
            }
        }
    }
    alive
}

/// Howard's policy iteration for the minimum mean cycle.
///
/// `max_iterations` bounds the number of policy improvements.
pub fn howard_min_mean<G: Digraph + ?Sized>(
    g: &G,
    costs: &[f64],
    max_iterations: usize,
) -> Result<Option<Vec<usize>>> {
    let n = g.node_count();
    let alive = live_nodes(g);
    if !alive.iter().any(|&a| a) {
        return Ok(None);
    }
    let scale = costs.iter().fold(0.0f64, |m, c| m.max(c.abs())).max(f64::MIN_POSITIVE);
    let eps_mean = 1e-12 * scale;
    let eps_value = 1e-10 * scale;

    let mut policy = vec![usize::MAX; n];
    for u in (0..n).filter(|&u| alive[u]) {
        policy[u] = g
            .out_edges(u)
            .filter(|&e| alive[g.head(e)])
            .min_by(|&a, &b| costs[a].total_cmp(&costs[b]))
            .expect("live node has a live successor");
    }

    let mut mean = vec![0.0f64; n];
    let mut value = vec![0.0f64; n];
    let mut stamp = vec![0usize; n];
    let mut path: Vec<usize> = Vec::new();

    for _ in 0..max_iterations {
        // policy evaluation
        stamp.iter_mut().for_each(|s| *s = 0);
        let mut next_stamp = 1usize;
        for start in 0..n {
            if !alive[start] || stamp[start] != 0 {
                continue;
            }
            let id = next_stamp;
            next_stamp += 1;
            path.clear();
            let mut u = start;
            while stamp[u] == 0 {
                stamp[u] = id;
                path.push(u);
                u = g.head(policy[u]);
            }
            let mut resolved = path.len();
            if stamp[u] == id {
                // new cycle through u
                let at = path.iter().position(|&p| p == u).expect("cycle node on path");
                let cyc = &path[at..];
                let total: f64 = cyc.iter().map(|&p| costs[policy[p]]).sum();
                let m = total / cyc.len() as f64;
                let root = *cyc.iter().min().expect("non-empty cycle");
                let root_at = cyc.iter().position(|&p| p == root).unwrap();
                mean[root] = m;
                value[root] = 0.0;
                // walk the cycle backwards from the root's predecessor
                let len = cyc.len();
                for step in 1..len {
                    let p = cyc[(root_at + len - step) % len];
                    let h = g.head(policy[p]);
                    mean[p] = m;
                    value[p] = costs[policy[p]] - m + value[h];
                }
                resolved = at;
            }
            for &p in path[..resolved].iter().rev() {
                let h = g.head(policy[p]);
                mean[p] = mean[h];
                value[p] = costs[policy[p]] - mean[h] + value[h];
            }
        }

        // policy improvement
        let mut changed = false;
        for u in 0..n {
            if !alive[u] {
                continue;
            }
            let mut target = mean[u];
            let mut lower = false;
            for e in g.out_edges(u) {
                let v = g.head(e);
                if alive[v] && mean[v] < target - eps_mean {
                    target = mean[v];
                    lower = true;
                }
            }
            if lower {
                let mut best = f64::INFINITY;
                let mut choice = policy[u];
                for e in g.out_edges(u) {
                    let v = g.head(e);
                    if alive[v] && mean[v] <= target + eps_mean {
                        let val = costs[e] - mean[v] + value[v];
                        if val < best {
                            best = val;
                            choice = e;
                        }
                    }
                }
                policy[u] = choice;
                changed = true;
                continue;
            }
            let mut best = value[u] - eps_value;
            let mut choice = None;
            for e in g.out_edges(u) {
                let v = g.head(e);
                if alive[v] && (mean[v] - mean[u]).abs() <= eps_mean {
                    let val = costs[e] - mean[u] + value[v];
                    if val < best {
                        best = val;
                        choice = Some(e);
                    }
                }
            }
            if let Some(e) = choice {
                policy[u] = e;
                changed = true;
            }
        }

        if !changed {
            let best_node = (0..n)
                .filter(|&u| alive[u])
                .min_by(|&a, &b| mean[a].total_cmp(&mean[b]).then(a.cmp(&b)))
                .expect("some live node");
            // follow the policy into its cycle
            let mut seen = vec![false; n];
            let mut u = best_node;
            while !seen[u] {
                seen[u] = true;
                u = g.head(policy[u]);
            }
            let start = u;
            let mut cyc = vec![policy[start]];
            let mut v = g.head(policy[start]);
            while v != start {
                cyc.push(policy[v]);
                v = g.head(policy[v]);
            }
            return Ok(Some(canonical_rotation(g, cyc)));
        }
    }
    Err(Error::Convergence(format!(
        "policy iteration did not settle within {max_iterations} improvements"
    )))
}

/// Cycle in the predecessor graph, edges in forward order.
fn predecessor_cycle<G: Digraph + ?Sized>(g: &G, parent: &[u32], stamp: &mut [usize]) -> Option<Vec<usize>> {
    let n = parent.len();
    stamp.iter_mut().for_each(|s| *s = 0);
    for start in 0..n {
        if stamp[start] != 0 {
            continue;
        }
        let id = start + 1;
        let mut v = start;
        loop {
            if stamp[v] == id {
                // v is on a cycle
                let mut edges = Vec::new();
                let mut w = v;
                loop {
                    let e = parent[w] as usize;
                    edges.push(e);
                    w = g.tail(e);
                    if w == v {
                        break;
                    }
                }
                edges.reverse();
                return Some(edges);
            }
            if stamp[v] != 0 || parent[v] == NONE {
                break;
            }
            stamp[v] = id;
            v = g.tail(parent[v] as usize);
        }
    }
    None
}

/// Bellman–Ford (FIFO queue) from a virtual root joined to every node at cost
/// zero, on costs `costs[e] + offset`. Returns a cycle of the predecessor graph
/// if relaxation does not settle, or the final potentials if it does.
pub fn find_negative_cycle<G: Digraph + ?Sized>(
    g: &G,
    costs: &[f64],
    offset: f64,
) -> std::result::Result<Vec<f64>, Vec<usize>> {
    let n = g.node_count();
    let mut dist = vec![0.0f64; n];
    let mut parent = vec![NONE; n];
    let mut in_queue = vec![true; n];
    let mut queue: VecDeque<usize> = (0..n).collect();
    let mut stamp = vec![0usize; n];
    let mut relaxations = 0usize;
    while let Some(u) = queue.pop_front() {
        in_queue[u] = false;
        let du = dist[u];
        for e in g.out_edges(u) {
            let v = g.head(e);
            let cand = du + (costs[e] + offset);
            if cand < dist[v] {
                dist[v] = cand;
                parent[v] = e as u32;
                relaxations += 1;
                if !in_queue[v] {
                    in_queue[v] = true;
                    queue.push_back(v);
                }
                if relaxations.is_multiple_of(n) {
                    if let Some(c) = predecessor_cycle(g, &parent, &mut stamp) {
                        return Err(c);
                    }
                }
            }
        }
    }
    Ok(dist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digraph::{is_closed_walk, SimpleDigraph};

    fn two_node() -> (SimpleDigraph, Vec<f64>) {
        SimpleDigraph::from_arcs(2, &[(0, 1, 1.0), (1, 0, -3.0)]).unwrap()
    }

    #[test]
    fn karp_two_node() {
        let (g, c) = two_node();
        let cyc = karp_min_mean(&g, &c).unwrap();
        assert_eq!(cyc.len(), 2);
        assert_eq!(cycle_cost(&c, &cyc) / 2.0, -1.0);
        assert!(is_closed_walk(&g, &cyc));
    }

    #[test]
    fn howard_two_node() {
        let (g, c) = two_node();
        let cyc = howard_min_mean(&g, &c, 100).unwrap().unwrap();
        assert_eq!(cycle_cost(&c, &cyc) / 2.0, -1.0);
    }

    #[test]
    fn acyclic_graphs_have_no_cycle() {
        let (g, c) = SimpleDigraph::from_arcs(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        assert!(karp_min_mean(&g, &c).is_none());
        assert!(howard_min_mean(&g, &c, 10).unwrap().is_none());
        assert!(find_negative_cycle(&g, &c, -5.0).is_ok());
    }

    #[test]
    fn self_loops_count() {
        let (g, c) = SimpleDigraph::from_arcs(2, &[(0, 0, 2.0), (1, 1, -0.5), (0, 1, -9.0)]).unwrap();
        let cyc = karp_min_mean(&g, &c).unwrap();
        assert_eq!(cycle_cost(&c, &cyc), -0.5);
        let cyc = howard_min_mean(&g, &c, 10).unwrap().unwrap();
        assert_eq!(cycle_cost(&c, &cyc), -0.5);
    }

    #[test]
    fn negative_cycle_threshold() {
        // cycle cost with offset k per edge: 2k − 2
        let (g, c) = two_node();
        for &(k, neg) in &[(0.5, true), (0.999, true), (1.0, false), (1.5, false)] {
            let found = find_negative_cycle(&g, &c, k);
            assert_eq!(found.is_err(), neg, "k = {k}");
            if let Err(cyc) = found {
                assert!(is_closed_walk(&g, &cyc));
                assert!(cycle_cost(&c, &cyc) + k * (cyc.len() as f64) < 0.0);
            }
        }
    }

    #[test]
    fn walk_decomposition() {
        // 0→1→0→2→0 contains two cycles
        let (g, _) = SimpleDigraph::from_arcs(3, &[(0, 1, 0.0), (1, 0, 0.0), (0, 2, 0.0), (2, 0, 0.0)]).unwrap();
        let cycles = walk_cycles(&g, &[0, 2, 1, 3]);
        assert_eq!(cycles.len(), 2);
        for c in &cycles {
            assert!(is_closed_walk(&g, c));
        }
    }
}
