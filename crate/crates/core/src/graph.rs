//! Speed-capped discretization of the tangent bundle as a directed graph.
//!
//! Nodes are the `n × n` torus grid points, numbered row-major
//! (`node = row·n + col`, with `col` the x index). Every node carries the same
//! stencil of cell displacements `(dx, dy)` whose velocity
//! `(dx, dy) / (n·h_time)` stays within the speed cap; each stencil entry is a
//! straight segment travelled in time `h_time`. The zero displacement (rest
//! edge) is always present. Edge ids are `node·stencil_len + slot`.

use std::io::Write;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::digraph::Digraph;
use crate::error::{Error, Result};
use crate::lagrangian::{CohomologyClass, MagneticLagrangian, PhaseState, TorusPoint, Velocity};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Cells per axis.
    pub n: usize,
    /// Maximal speed `N` of the phase region `|v| <= N`.
    pub speed_cap: f64,
    /// Duration of every edge.
    pub h_time: f64,
    /// Maximal winding per coordinate per edge.
    pub windings: u32,
}

impl GridSpec {
    pub fn new(n: usize, speed_cap: f64, h_time: f64) -> Self {
        GridSpec {
            n,
            speed_cap,
            h_time,
            windings: 1,
        }
    }

    /// Default cap `2·√(2·α_estimate) + 1`.
    pub fn default_speed_cap(alpha_estimate: f64) -> f64 {
        2.0 * (2.0 * alpha_estimate.max(0.0)).sqrt() + 1.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 8 {
            return Err(Error::validation(format!("grid.n must be at least 8, got {}", self.n)));
        }
        if !(self.h_time > 0.0) || !self.h_time.is_finite() {
            return Err(Error::validation(format!("grid.h_time must be positive, got {}", self.h_time)));
        }
        if !(self.speed_cap >= 0.0) || !self.speed_cap.is_finite() {
            return Err(Error::validation(format!(
                "grid.speed_cap must be non-negative, got {}",
                self.speed_cap
            )));
        }
        let reach = self.speed_cap * self.h_time;
        if reach >= 0.5 {
            return Err(Error::validation(format!(
                "speed_cap·h_time = {reach} must stay below half the torus"
            )));
        }
        if self.windings < 1 || self.windings as f64 > reach + 1.0 {
            return Err(Error::validation(format!(
                "grid.windings must lie in [1, speed_cap·h_time + 1], got {}",
                self.windings
            )));
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.n * self.n
    }

    /// Spacing of the velocity lattice, `1 / (n·h_time)`.
    pub fn velocity_spacing(&self) -> f64 {
        1.0 / (self.n as f64 * self.h_time)
    }

    /// Kinetic cost `h_time·Δv²/2` of the smallest velocity perturbation on one
    /// edge: the granularity of every action computed on this grid.
    pub fn action_quantum(&self) -> f64 {
        let dv = self.velocity_spacing();
        0.5 * self.h_time * dv * dv
    }

    pub fn node(&self, col: usize, row: usize) -> usize {
        row * self.n + col
    }

    /// `(col, row)` of a node.
    pub fn coords(&self, node: usize) -> (usize, usize) {
        (node % self.n, node / self.n)
    }

    pub fn point(&self, node: usize) -> TorusPoint {
        let (c, r) = self.coords(node);
        TorusPoint::new(c as f64 / self.n as f64, r as f64 / self.n as f64)
    }
}

/// A displacement shared by all nodes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StencilEntry {
    pub dx: i32,
    pub dy: i32,
    pub velocity: Velocity,
    /// Lifted displacement in torus units.
    pub displacement: (f64, f64),
}

/// Materialized view of one edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseEdge {
    pub id: usize,
    pub from: usize,
    pub to: usize,
    pub w1: i32,
    pub w2: i32,
    pub velocity: Velocity,
    pub base_action: f64,
    pub displacement: (f64, f64),
}

#[derive(Clone, Debug)]
pub struct PhaseGraph {
    pub spec: GridSpec,
    stencil: Vec<StencilEntry>,
    base_action: Vec<f64>,
    y_invariant: bool,
}

fn build_stencil(spec: &GridSpec) -> Vec<StencilEntry> {
    let n = spec.n as f64;
    let reach = (spec.speed_cap * spec.h_time * n).floor() as i32;
    let cap = spec.speed_cap * (1.0 + 1e-12);
    let mut out = Vec::new();
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            let displacement = (dx as f64 / n, dy as f64 / n);
            let velocity = Velocity::new(displacement.0 / spec.h_time, displacement.1 / spec.h_time);
            if velocity.speed() <= cap {
                out.push(StencilEntry {
                    dx,
                    dy,
                    velocity,
                    displacement,
                });
            }
        }
    }
    out
}

impl PhaseGraph {
    pub fn build(lagrangian: &MagneticLagrangian, spec: GridSpec) -> Result<PhaseGraph> {
        spec.validate()?;
        lagrangian.eta.validate()?;
        let stencil = build_stencil(&spec);
        let s = stencil.len();
        let n = spec.n as i64;
        let h = spec.h_time;
        let mut base_action = vec![0.0; spec.node_count() * s];
        base_action
            .par_chunks_mut(s)
            .enumerate()
            .for_each(|(node, chunk)| {
                let (col, row) = ((node as i64) % n, (node as i64) / n);
                for (slot, st) in stencil.iter().enumerate() {
                    if st.dx == 0 && st.dy == 0 {
                        chunk[slot] = 0.0;
                        continue;
                    }
                    // segment midpoint, reduced with integer arithmetic
                    let mx = (2 * col + st.dx as i64).rem_euclid(2 * n) as f64 / (2 * n) as f64;
                    let my = (2 * row + st.dy as i64).rem_euclid(2 * n) as f64 / (2 * n) as f64;
                    let mid = TorusPoint { x: mx, y: my };
                    chunk[slot] = h * lagrangian.eval_at(mid, st.velocity);
                }
            });
        Ok(PhaseGraph {
            spec,
            stencil,
            base_action,
            y_invariant: lagrangian.eta.is_y_invariant(),
        })
    }

    pub fn stencil(&self) -> &[StencilEntry] {
        &self.stencil
    }

    pub fn stencil_len(&self) -> usize {
        self.stencil.len()
    }

    pub fn base_actions(&self) -> &[f64] {
        &self.base_action
    }

    /// True when the costs are invariant under `row → row + 1`.
    pub fn is_y_invariant(&self) -> bool {
        self.y_invariant
    }

    pub fn slot(&self, e: usize) -> &StencilEntry {
        &self.stencil[e % self.stencil.len()]
    }

    /// Target node and per-coordinate winding of an edge.
    fn target(&self, e: usize) -> (usize, i32, i32) {
        let n = self.spec.n as i64;
        let from = e / self.stencil.len();
        let st = self.slot(e);
        let (col, row) = ((from as i64) % n, (from as i64) / n);
        let c = col + st.dx as i64;
        let r = row + st.dy as i64;
        let to = (r.rem_euclid(n) * n + c.rem_euclid(n)) as usize;
        (to, c.div_euclid(n) as i32, r.div_euclid(n) as i32)
    }

    pub fn edge(&self, e: usize) -> PhaseEdge {
        let st = self.slot(e);
        let (to, w1, w2) = self.target(e);
        PhaseEdge {
            id: e,
            from: e / self.stencil.len(),
            to,
            w1,
            w2,
            velocity: st.velocity,
            base_action: self.base_action[e],
            displacement: st.displacement,
        }
    }

    /// `base_action − c(displacement) + k·h_time`.
    #[inline]
    pub fn edge_cost(&self, e: usize, c: CohomologyClass, k: f64) -> f64 {
        let st = self.slot(e);
        self.base_action[e] + (k * self.spec.h_time - c.pair(st.displacement.0, st.displacement.1))
    }

    /// All edge costs at class `c` and level `k`.
    pub fn costs(&self, c: CohomologyClass, k: f64) -> Vec<f64> {
        let shift: Vec<f64> = self
            .stencil
            .iter()
            .map(|st| k * self.spec.h_time - c.pair(st.displacement.0, st.displacement.1))
            .collect();
        let s = self.stencil.len();
        let mut out = vec![0.0; self.base_action.len()];
        out.par_chunks_mut(s)
            .zip(self.base_action.par_chunks(s))
            .for_each(|(dst, src)| {
                for i in 0..s {
                    dst[i] = src[i] + shift[i];
                }
            });
        out
    }

    /// Largest `|edge cost| / h_time` at class `c`, floored at 1. Tolerances
    /// are expressed relative to it.
    pub fn cost_scale(&self, c: CohomologyClass) -> f64 {
        let h = self.spec.h_time;
        self.stencil
            .iter()
            .enumerate()
            .map(|(slot, st)| {
                let shift = c.pair(st.displacement.0, st.displacement.1);
                self.base_action[slot..]
                    .iter()
                    .step_by(self.stencil.len())
                    .fold(0.0f64, |m, &b| m.max((b - shift).abs()))
            })
            .fold(1.0f64, |m, v| m.max(v / h))
    }

    /// Lift a walk to a piecewise straight path with one sample per node.
    pub fn walk_to_path(&self, walk: &[usize]) -> Result<Vec<(f64, PhaseState)>> {
        if walk.is_empty() {
            return Err(Error::validation("empty walk"));
        }
        for (i, w) in walk.windows(2).enumerate() {
            if self.head(w[0]) != self.tail(w[1]) {
                return Err(Error::validation(format!("walk breaks between edges {i} and {}", i + 1)));
            }
        }
        let h = self.spec.h_time;
        let mut out = Vec::with_capacity(walk.len() + 1);
        for (i, &e) in walk.iter().enumerate() {
            out.push((
                i as f64 * h,
                PhaseState {
                    q: self.spec.point(self.tail(e)),
                    v: self.slot(e).velocity,
                },
            ));
        }
        let last = walk[walk.len() - 1];
        out.push((
            walk.len() as f64 * h,
            PhaseState {
                q: self.spec.point(self.head(last)),
                v: self.slot(last).velocity,
            },
        ));
        Ok(out)
    }

    /// Debug dump: one JSON object per edge, nodes in row-major order.
    pub fn write_dump<W: Write>(&self, mut out: W) -> Result<()> {
        for e in 0..self.edge_count() {
            let pe = self.edge(e);
            writeln!(
                out,
                "{}",
                serde_json::json!({
                    "from": pe.from,
                    "to": pe.to,
                    "w1": pe.w1,
                    "w2": pe.w2,
                    "base_action": pe.base_action,
                })
            )?;
        }
        Ok(())
    }
}

impl Digraph for PhaseGraph {
    fn node_count(&self) -> usize {
        self.spec.node_count()
    }
    fn edge_count(&self) -> usize {
        self.base_action.len()
    }
    fn out_edges(&self, u: usize) -> Range<usize> {
        let s = self.stencil.len();
        u * s..(u + 1) * s
    }
    fn tail(&self, e: usize) -> usize {
        e / self.stencil.len()
    }
    fn head(&self, e: usize) -> usize {
        self.target(e).0
    }
}
