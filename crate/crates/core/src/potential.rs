//! Critical action potential, Mather semi-distance and static classes.
//!
//! `Φ(i, j)` is the least cost of a walk of at least one edge from `i` to `j`
//! at a level `k` with no negative cycle. It is computed with Johnson's
//! scheme: one Bellman–Ford pass from a virtual root yields a node potential
//! `u` making every reduced cost `c(e) + u(tail) − u(head)` nonnegative, then
//! Dijkstra runs from each requested source.
//!
//! `self_loop[i]` is the cheapest nontrivial cycle through `i`, which is also
//! the diagonal `Φ(i, i)`. Rows are stored in one of three layouts:
//! every source, one row per column when the costs are invariant under
//! `row → row + 1`, or an explicit source subset.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::critical::tol_zero_weighted;
use crate::cycles::find_negative_cycle;
use crate::digraph::Digraph;
use crate::error::{Error, Result};
use crate::graph::PhaseGraph;
use crate::lagrangian::CohomologyClass;

/// Largest grid for which every row is stored.
pub const DENSE_MAX_N: usize = 96;

#[derive(Clone, Debug)]
enum Rows {
    Dense(Vec<f64>),
    /// Rows of the sources `(col, 0)`, one per column.
    Translated(Vec<f64>),
    Sourced { row_of: Vec<u32>, data: Vec<f64> },
}

#[derive(Clone, Debug)]
pub struct PotentialTable {
    pub class: CohomologyClass,
    pub k_used: f64,
    /// Zero tolerance of the graph at `class`.
    pub tol_zero: f64,
    /// Cheapest nontrivial cycle through each node; `+∞` where it exceeds the
    /// search bound of a sourced table.
    pub self_loop: Vec<f64>,
    grid_n: usize,
    nodes: usize,
    rows: Rows,
}

struct Reduced {
    potential: Vec<f64>,
    costs: Vec<f64>,
}

/// Node potential at level `k` and the clamped reduced costs, or the
/// negative cycle that prevents them.
fn reduce(g: &PhaseGraph, costs0: &[f64], k: f64) -> Result<Reduced> {
    let h = g.spec.h_time;
    match find_negative_cycle(g, costs0, k * h) {
        Err(cycle) => {
            let total_time = cycle.len() as f64 * h;
            let sum: f64 = cycle.iter().map(|&e| costs0[e]).sum();
            Err(Error::NegativeCycle {
                k,
                mean_cost: sum / total_time + k,
                total_time,
            })
        }
        Ok(u) => {
            let mut costs = vec![0.0; costs0.len()];
            costs.par_iter_mut().enumerate().for_each(|(e, r)| {
                *r = (costs0[e] + k * h + u[g.tail(e)] - u[g.head(e)]).max(0.0);
            });
            Ok(Reduced { potential: u, costs })
        }
    }
}

/// Dijkstra on reduced costs from `s`, settling nodes up to `bound`.
/// Returns reduced distances (`+∞` when unreached) and the cheapest reduced
/// cost of a walk returning to `s`.
fn dijkstra(g: &PhaseGraph, reduced: &[f64], s: usize, bound: f64) -> (Vec<f64>, f64) {
    let mut dist = vec![f64::INFINITY; g.node_count()];
    let mut done = vec![false; g.node_count()];
    let mut back = f64::INFINITY;
    // nonnegative floats order like their bit patterns
    let mut heap = BinaryHeap::new();
    dist[s] = 0.0;
    heap.push(Reverse((0.0f64.to_bits(), s)));
    while let Some(Reverse((bits, u))) = heap.pop() {
        let du = f64::from_bits(bits);
        if done[u] || du > dist[u] {
            continue;
        }
        if du > bound {
            break;
        }
        done[u] = true;
        for e in g.out_edges(u) {
            let v = g.head(e);
            let cand = du + reduced[e];
            if v == s {
                back = back.min(cand);
            }
            if cand < dist[v] {
                dist[v] = cand;
                heap.push(Reverse((cand.to_bits(), v)));
            }
        }
    }
    (dist, back)
}

/// Reduced-cost row from `s` converted back to true walk costs.
fn row_from(g: &PhaseGraph, red: &Reduced, s: usize) -> (Vec<f64>, f64) {
    let (mut dist, back) = dijkstra(g, &red.costs, s, f64::INFINITY);
    let us = red.potential[s];
    for (t, d) in dist.iter_mut().enumerate() {
        *d += red.potential[t] - us;
    }
    dist[s] = back;
    (dist, back)
}

impl PotentialTable {
    /// Full table at `(c, k)`. Uses the translated layout when the graph is
    /// invariant under vertical shifts, otherwise stores every row (grids up to
    /// [`DENSE_MAX_N`] only).
    pub fn build(g: &PhaseGraph, c: CohomologyClass, k: f64) -> Result<PotentialTable> {
        let n = g.spec.n;
        let nodes = g.node_count();
        let costs0 = g.costs(c, 0.0);
        let tol_zero = tol_zero_weighted(&costs0, g.spec.h_time);
        let red = reduce(g, &costs0, k)?;
        let (rows, self_loop) = if g.is_y_invariant() {
            let out: Vec<(Vec<f64>, f64)> = (0..n).into_par_iter().map(|col| row_from(g, &red, col)).collect();
            let mut data = Vec::with_capacity(n * nodes);
            let mut loops = vec![0.0; nodes];
            for (col, (row, back)) in out.into_iter().enumerate() {
                data.extend_from_slice(&row);
                for r in 0..n {
                    loops[r * n + col] = back;
                }
            }
            (Rows::Translated(data), loops)
        } else {
            if n > DENSE_MAX_N {
                return Err(Error::validation(format!(
                    "dense potential table limited to n <= {DENSE_MAX_N}, got n = {n}; use selected sources"
                )));
            }
            let out: Vec<(Vec<f64>, f64)> = (0..nodes).into_par_iter().map(|s| row_from(g, &red, s)).collect();
            let mut data = Vec::with_capacity(nodes * nodes);
            let mut loops = Vec::with_capacity(nodes);
            for (row, back) in out {
                data.extend_from_slice(&row);
                loops.push(back);
            }
            (Rows::Dense(data), loops)
        };
        Ok(PotentialTable {
            class: c,
            k_used: k,
            tol_zero,
            self_loop,
            grid_n: n,
            nodes,
            rows,
        })
    }

    /// Rows for `sources` only. `self_loop` is exact for the sources and,
    /// for every other node, exact when at most `loop_bound` and `+∞`
    /// otherwise.
    pub fn build_for_sources(
        g: &PhaseGraph,
        c: CohomologyClass,
        k: f64,
        sources: &[usize],
        loop_bound: f64,
    ) -> Result<PotentialTable> {
        let nodes = g.node_count();
        if let Some(&s) = sources.iter().find(|&&s| s >= nodes) {
            return Err(Error::validation(format!("source {s} out of range")));
        }
        let costs0 = g.costs(c, 0.0);
        let tol_zero = tol_zero_weighted(&costs0, g.spec.h_time);
        let red = reduce(g, &costs0, k)?;
        let mut self_loop: Vec<f64> = (0..nodes)
            .into_par_iter()
            .map(|s| {
                let back = dijkstra(g, &red.costs, s, loop_bound).1;
                if back <= loop_bound {
                    back
                } else {
                    f64::INFINITY
                }
            })
            .collect();
        let mut sorted = sources.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let out: Vec<(Vec<f64>, f64)> = sorted.par_iter().map(|&s| row_from(g, &red, s)).collect();
        let mut row_of = vec![u32::MAX; nodes];
        let mut data = Vec::with_capacity(sorted.len() * nodes);
        for (i, (&s, (row, back))) in sorted.iter().zip(out).enumerate() {
            row_of[s] = i as u32;
            self_loop[s] = back;
            data.extend_from_slice(&row);
        }
        Ok(PotentialTable {
            class: c,
            k_used: k,
            tol_zero,
            self_loop,
            grid_n: g.spec.n,
            nodes,
            rows: Rows::Sourced { row_of, data },
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn has_row(&self, i: usize) -> bool {
        match &self.rows {
            Rows::Dense(_) | Rows::Translated(_) => i < self.nodes,
            Rows::Sourced { row_of, .. } => row_of.get(i).is_some_and(|&r| r != u32::MAX),
        }
    }

    /// `Φ(i, j)`, or `None` when row `i` was not computed.
    pub fn phi(&self, i: usize, j: usize) -> Option<f64> {
        if i >= self.nodes || j >= self.nodes {
            return None;
        }
        let nodes = self.nodes;
        match &self.rows {
            Rows::Dense(d) => Some(d[i * nodes + j]),
            Rows::Translated(d) => {
                let n = self.grid_n;
                let (ci, ri) = (i % n, i / n);
                let (cj, rj) = (j % n, j / n);
                let dr = (rj + n - ri) % n;
                Some(d[ci * nodes + dr * n + cj])
            }
            Rows::Sourced { row_of, data } => match row_of[i] {
                u32::MAX => None,
                r => Some(data[r as usize * nodes + j]),
            },
        }
    }

    /// `δ(i, j) = Φ(i, j) + Φ(j, i)`, with `δ(i, i) = self_loop[i]`.
    pub fn delta(&self, i: usize, j: usize) -> Option<f64> {
        if i == j {
            return self.self_loop.get(i).copied();
        }
        Some(self.phi(i, j)? + self.phi(j, i)?)
    }

    /// Sparse CSV `i,j,phi` of the computed entries with `phi <= threshold`.
    pub fn write_csv<W: Write>(&self, out: W, threshold: f64) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["i", "j", "phi"])?;
        for i in (0..self.nodes).filter(|&i| self.has_row(i)) {
            for j in 0..self.nodes {
                let p = self.phi(i, j).expect("row present");
                if p <= threshold {
                    w.write_record([i.to_string(), j.to_string(), p.to_string()])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// `δ` restricted to `nodes`, as a row-major `|nodes|²` matrix.
pub fn mather_semidistance(pt: &PotentialTable, nodes: &[usize]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(nodes.len() * nodes.len());
    for &i in nodes {
        for &j in nodes {
            out.push(
                pt.delta(i, j)
                    .ok_or_else(|| Error::validation(format!("potential row missing for pair ({i}, {j})")))?,
            );
        }
    }
    Ok(out)
}

/// Nodes whose cheapest recurrence costs at most `eps_aubry`.
pub fn aubry_nodes(pt: &PotentialTable, eps_aubry: f64) -> Vec<usize> {
    (0..pt.node_count()).filter(|&i| pt.self_loop[i] <= eps_aubry).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StaticClassPartition {
    #[serde(skip)]
    pub aubry_nodes: Vec<usize>,
    pub classes: Vec<Vec<usize>>,
    pub eps_aubry: f64,
    pub eps_class: f64,
}

impl StaticClassPartition {
    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Components of `aubry` under the relation `δ(i, j) <= eps_class`, largest
/// first (ties broken by smallest member); members ascending.
pub fn static_classes(
    pt: &PotentialTable,
    aubry: &[usize],
    eps_aubry: f64,
    eps_class: f64,
) -> Result<StaticClassPartition> {
    let mut nodes = aubry.to_vec();
    nodes.sort_unstable();
    nodes.dedup();
    let m = nodes.len();
    let mut parent: Vec<usize> = (0..m).collect();
    for a in 0..m {
        for b in a + 1..m {
            let d = pt
                .delta(nodes[a], nodes[b])
                .ok_or_else(|| Error::validation(format!("potential row missing for Aubry node pair ({}, {})", nodes[a], nodes[b])))?;
            if d <= eps_class {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); m];
    for a in 0..m {
        let r = find(&mut parent, a);
        groups[r].push(nodes[a]);
    }
    let mut classes: Vec<Vec<usize>> = groups.into_iter().filter(|g| !g.is_empty()).collect();
    classes.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a[0].cmp(&b[0])));
    Ok(StaticClassPartition {
        aubry_nodes: nodes,
        classes,
        eps_aubry,
        eps_class,
    })
}

/// Default thresholds from the action quantum `λ = h·Δv²/2` of the grid:
/// `eps_aubry = λ`, `eps_class = 6λ`.
///
/// A column adjacent to a strict minimum recurs at cost above `2λ`; two
/// neighbouring columns of a flat minimum are joined by a closed walk of cost
/// `2λ`.
pub fn default_thresholds(g: &PhaseGraph) -> (f64, f64) {
    let lambda = g.spec.action_quantum();
    (lambda, 6.0 * lambda)
}

/// How [`critical_partition`] obtains its rows.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RowSelection {
    /// Every row (translated layout when available).
    Full,
    /// Only rows of candidate Aubry nodes.
    Aubry,
    /// `Full` for translation-invariant graphs, `Aubry` otherwise.
    #[default]
    Auto,
}

/// Potential at `k` and its static-class partition.
pub fn critical_partition(
    g: &PhaseGraph,
    c: CohomologyClass,
    k: f64,
    eps_aubry: f64,
    eps_class: f64,
    rows: RowSelection,
) -> Result<(PotentialTable, StaticClassPartition)> {
    let full = match rows {
        RowSelection::Full => true,
        RowSelection::Aubry => false,
        RowSelection::Auto => g.is_y_invariant(),
    };
    let pt = if full {
        PotentialTable::build(g, c, k)?
    } else {
        let probe = PotentialTable::build_for_sources(g, c, k, &[], eps_aubry)?;
        let sources = aubry_nodes(&probe, eps_aubry);
        PotentialTable::build_for_sources(g, c, k, &sources, eps_aubry)?
    };
    let aubry = aubry_nodes(&pt, eps_aubry);
    let partition = static_classes(&pt, &aubry, eps_aubry, eps_class)?;
    Ok((pt, partition))
}
