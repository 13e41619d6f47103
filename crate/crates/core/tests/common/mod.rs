//! Test-side oracles, independent of the library solvers.

#![allow(dead_code)]

use aubry::digraph::{Digraph, SimpleDigraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Every simple cycle (as an edge list) by exhaustive depth-first search.
/// Each cycle is reported once, rooted at its smallest node.
pub fn simple_cycles<G: Digraph>(g: &G) -> Vec<Vec<usize>> {
    fn dfs<G: Digraph>(g: &G, root: usize, u: usize, on_path: &mut Vec<bool>, edges: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        for e in g.out_edges(u) {
            let v = g.head(e);
            if v == root {
                edges.push(e);
                out.push(edges.clone());
                edges.pop();
            } else if v > root && !on_path[v] {
                on_path[v] = true;
                edges.push(e);
                dfs(g, root, v, on_path, edges, out);
                edges.pop();
                on_path[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    for root in 0..g.node_count() {
        let mut on_path = vec![false; g.node_count()];
        on_path[root] = true;
        dfs(g, root, root, &mut on_path, &mut Vec::new(), &mut out);
    }
    out
}

/// Minimum over simple cycles of total cost / number of edges.
pub fn brute_min_mean<G: Digraph>(g: &G, costs: &[f64]) -> Option<f64> {
    simple_cycles(g)
        .iter()
        .map(|c| c.iter().map(|&e| costs[e]).sum::<f64>() / c.len() as f64)
        .min_by(f64::total_cmp)
}

/// Random multigraph on 2..=8 nodes with integer costs in [-10, 10] that
/// contains at least one cycle.
pub fn random_small_graph(seed: u64) -> (SimpleDigraph, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n = rng.gen_range(2..=8usize);
        let m = rng.gen_range(n..=3 * n);
        let arcs: Vec<(usize, usize, f64)> = (0..m)
            .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(-10..=10) as f64))
            .collect();
        let (g, costs) = SimpleDigraph::from_arcs(n, &arcs).unwrap();
        if !simple_cycles(&g).is_empty() {
            return (g, costs);
        }
    }
}
