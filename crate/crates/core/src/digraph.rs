//! Minimal directed-graph interface shared by the phase graph and small test
//! graphs. Edges are numbered so that the out-edges of each node form a
//! contiguous id range; costs live in a separate slice indexed by edge id.

use std::ops::Range;

use crate::error::{Error, Result};

pub trait Digraph: Sync {
    fn node_count(&self) -> usize;
    fn edge_count(&self) -> usize;
    fn out_edges(&self, u: usize) -> Range<usize>;
    fn tail(&self, e: usize) -> usize;
    fn head(&self, e: usize) -> usize;
}

/// Explicit edge-list graph in CSR layout.
#[derive(Clone, Debug)]
pub struct SimpleDigraph {
    nodes: usize,
    offsets: Vec<usize>,
    tails: Vec<usize>,
    heads: Vec<usize>,
}

impl SimpleDigraph {
    /// Build from `(from, to, cost)` triples. Edges are stably sorted by tail;
    /// the returned costs follow the new edge order.
    pub fn from_arcs(nodes: usize, arcs: &[(usize, usize, f64)]) -> Result<(SimpleDigraph, Vec<f64>)> {
        if let Some(&(u, v, _)) = arcs.iter().find(|a| a.0 >= nodes || a.1 >= nodes) {
            return Err(Error::validation(format!("arc {u}->{v} out of range for {nodes} nodes")));
        }
        let mut order: Vec<usize> = (0..arcs.len()).collect();
        order.sort_by_key(|&i| arcs[i].0);
        let tails: Vec<usize> = order.iter().map(|&i| arcs[i].0).collect();
        let heads: Vec<usize> = order.iter().map(|&i| arcs[i].1).collect();
        let costs: Vec<f64> = order.iter().map(|&i| arcs[i].2).collect();
        let mut offsets = vec![0; nodes + 1];
        for &t in &tails {
            offsets[t + 1] += 1;
        }
        for i in 0..nodes {
            offsets[i + 1] += offsets[i];
        }
        Ok((
            SimpleDigraph {
                nodes,
                offsets,
                tails,
                heads,
            },
            costs,
        ))
    }
}

impl Digraph for SimpleDigraph {
    fn node_count(&self) -> usize {
        self.nodes
    }
    fn edge_count(&self) -> usize {
        self.tails.len()
    }
    fn out_edges(&self, u: usize) -> Range<usize> {
        self.offsets[u]..self.offsets[u + 1]
    }
    fn tail(&self, e: usize) -> usize {
        self.tails[e]
    }
    fn head(&self, e: usize) -> usize {
        self.heads[e]
    }
}

/// True when `edges` is a closed walk.
pub fn is_closed_walk<G: Digraph + ?Sized>(g: &G, edges: &[usize]) -> bool {
    !edges.is_empty()
        && edges
            .iter()
            .zip(edges.iter().cycle().skip(1))
            .all(|(&a, &b)| g.head(a) == g.tail(b))
}
