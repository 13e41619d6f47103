//! The discrete critical value `α(c)`, computed two ways.
//!
//! On a graph whose edges all last `h`, `−α(c)` is the minimum over cycles of
//! the cost per unit time, and `α(c)` is also the smallest `k` for which no
//! cycle has negative `L − c + k` action. Both routes are exposed; they agree
//! exactly on a finite graph up to rounding.
//!
//! Every solver has a weighted-graph form (`*_weighted`) taking any
//! [`Digraph`], its edge costs at `k = 0` and the common edge duration, and a
//! [`PhaseGraph`] form taking a cohomology class.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cycles::{canonical_rotation, cycle_cost, find_negative_cycle, howard_min_mean, karp_min_mean};
use crate::digraph::{is_closed_walk, Digraph};
use crate::error::{Error, Result};
use crate::graph::PhaseGraph;
use crate::lagrangian::CohomologyClass;

/// Above this `V·E` the automatic choice switches from Karp to Howard.
const KARP_WORK_LIMIT: usize = 50_000_000;
const HOWARD_MAX_ITERATIONS: usize = 100_000;
/// Relative size of the "zero cycle" tolerance.
pub const TOL_ZERO_RELATIVE: f64 = 1e-9;
/// Default bisection width.
pub const BISECTION_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CycleMethod {
    Karp,
    Howard,
    #[default]
    Auto,
}

/// A cycle with its cost per unit time at `k = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct CycleCertificate {
    pub edges: Vec<usize>,
    pub mean_cost: f64,
    pub total_time: f64,
}

impl CycleCertificate {
    fn from_cycle<G: Digraph + ?Sized>(g: &G, costs: &[f64], h: f64, edges: Vec<usize>) -> Self {
        let edges = canonical_rotation(g, edges);
        let total_time = edges.len() as f64 * h;
        let mean_cost = cycle_cost(costs, &edges) / total_time;
        CycleCertificate {
            edges,
            mean_cost,
            total_time,
        }
    }

    /// The discrete critical value `−mean_cost`.
    pub fn alpha(&self) -> f64 {
        -self.mean_cost
    }

    /// JSON edge list of a phase-graph certificate.
    pub fn to_json(&self, g: &PhaseGraph, c: CohomologyClass) -> serde_json::Value {
        let edges: Vec<serde_json::Value> = self
            .edges
            .iter()
            .map(|&e| {
                let pe = g.edge(e);
                serde_json::json!({"from": pe.from, "to": pe.to, "w1": pe.w1, "w2": pe.w2})
            })
            .collect();
        serde_json::json!({
            "class": [c.c1, c.c2],
            "mean_cost": self.mean_cost,
            "total_time": self.total_time,
            "edges": edges,
        })
    }
}

/// `TOL_ZERO_RELATIVE · max(1, max |cost| / h)`.
pub fn tol_zero_weighted(costs: &[f64], h: f64) -> f64 {
    let scale = costs.iter().fold(0.0f64, |m, c| m.max(c.abs())) / h;
    TOL_ZERO_RELATIVE * scale.max(1.0)
}

pub fn tol_zero(g: &PhaseGraph, c: CohomologyClass) -> f64 {
    TOL_ZERO_RELATIVE * g.cost_scale(c)
}

pub fn min_mean_cycle_weighted<G: Digraph + ?Sized>(
    g: &G,
    costs: &[f64],
    h: f64,
    method: CycleMethod,
) -> Result<CycleCertificate> {
    if costs.len() != g.edge_count() {
        return Err(Error::validation("one cost per edge required"));
    }
    if !(h > 0.0) {
        return Err(Error::validation("edge duration must be positive"));
    }
    if g.node_count() == 0 {
        return Err(Error::validation("empty graph"));
    }
    let use_karp = match method {
        CycleMethod::Karp => true,
        CycleMethod::Howard => false,
        CycleMethod::Auto => g.node_count().saturating_mul(g.edge_count()) <= KARP_WORK_LIMIT,
    };
    let cycle = if use_karp {
        karp_min_mean(g, costs)
    } else {
        howard_min_mean(g, costs, HOWARD_MAX_ITERATIONS)?
    };
    let cycle = cycle.ok_or_else(|| Error::validation("graph has no cycle"))?;
    debug_assert!(is_closed_walk(g, &cycle));
    Ok(CycleCertificate::from_cycle(g, costs, h, cycle))
}

/// Minimum mean cycle at class `c`; `α_discrete(c) = −mean_cost`.
pub fn min_mean_cycle(g: &PhaseGraph, c: CohomologyClass, method: CycleMethod) -> Result<CycleCertificate> {
    min_mean_cycle_weighted(g, &g.costs(c, 0.0), g.spec.h_time, method)
}

/// Is there a cycle whose cost per unit time at level `k` is below
/// `−tol`? Returns a certificate (costs at `k = 0`) when there is.
pub fn has_negative_cycle_weighted<G: Digraph + ?Sized>(
    g: &G,
    costs: &[f64],
    h: f64,
    k: f64,
    tol: f64,
) -> Option<CycleCertificate> {
    match find_negative_cycle(g, costs, (k + tol) * h) {
        Ok(_) => None,
        Err(cycle) => Some(CycleCertificate::from_cycle(g, costs, h, cycle)),
    }
}

pub fn has_negative_cycle(g: &PhaseGraph, c: CohomologyClass, k: f64) -> Option<CycleCertificate> {
    let costs = g.costs(c, 0.0);
    let tol = tol_zero_weighted(&costs, g.spec.h_time);
    has_negative_cycle_weighted(g, &costs, g.spec.h_time, k, tol)
}

/// Bisect the threshold `k` between "negative cycle" and "none" down to width
/// `tol`; returns the bracket midpoint.
pub fn critical_value_bisection_weighted<G: Digraph + ?Sized>(
    g: &G,
    costs: &[f64],
    h: f64,
    tol: f64,
) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::validation(format!("bisection tolerance must be positive, got {tol}")));
    }
    if costs.is_empty() || g.node_count() == 0 {
        return Err(Error::Bracket("graph has no edges".into()));
    }
    let (rmin, rmax) = costs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &c| (lo.min(c / h), hi.max(c / h)));
    if !rmin.is_finite() || !rmax.is_finite() {
        return Err(Error::Bracket("non-finite edge costs".into()));
    }
    let negative = |k: f64| find_negative_cycle(g, costs, k * h).is_err();
    let mut lo = -rmax - 1.0;
    let mut hi = -rmin + 1.0;
    if !negative(lo) {
        return Err(Error::Bracket(format!("no negative cycle at k = {lo}: graph has no cycle")));
    }
    if negative(hi) {
        return Err(Error::Bracket(format!("negative cycle persists at k = {hi}")));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if negative(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn critical_value_bisection(g: &PhaseGraph, c: CohomologyClass, tol: f64) -> Result<f64> {
    critical_value_bisection_weighted(g, &g.costs(c, 0.0), g.spec.h_time, tol)
}

/// Sampled values of `α`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaTable {
    pub classes: Vec<CohomologyClass>,
    pub values: Vec<f64>,
}

/// `α_discrete` at each class, reusing the graph's stored actions.
pub fn alpha_function(g: &PhaseGraph, classes: &[CohomologyClass], method: CycleMethod) -> Result<AlphaTable> {
    if classes.is_empty() {
        return Err(Error::validation("at least one cohomology class required"));
    }
    let values = classes
        .par_iter()
        .map(|&c| min_mean_cycle(g, c, method).map(|cert| cert.alpha()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(AlphaTable {
        classes: classes.to_vec(),
        values,
    })
}

/// `m1 × m2` classes evenly spaced on `[−extent, extent]²`, `c1` varying
/// fastest.
pub fn class_grid(m1: usize, m2: usize, extent: f64) -> Vec<CohomologyClass> {
    let coord = |i: usize, m: usize| {
        if m == 1 {
            0.0
        } else {
            -extent + 2.0 * extent * i as f64 / (m - 1) as f64
        }
    };
    (0..m2)
        .flat_map(|j| (0..m1).map(move |i| CohomologyClass::new(coord(i, m1), coord(j, m2))))
        .collect()
}

impl AlphaTable {
    /// CSV with header `c1,c2,alpha`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["c1", "c2", "alpha"])?;
        for (c, a) in self.classes.iter().zip(&self.values) {
            w.write_record([c.c1.to_string(), c.c2.to_string(), a.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Largest `α(mid) − (α(a) + α(b))/2` over all sampled triples `a, mid, b`
    /// with `mid` exactly the midpoint of `a` and `b`. Non-positive for a
    /// convex table; `None` when no such triple exists.
    pub fn max_convexity_defect(&self) -> Option<f64> {
        let m = self.classes.len();
        let mut worst: Option<f64> = None;
        for a in 0..m {
            for b in a + 1..m {
                let (ca, cb) = (self.classes[a], self.classes[b]);
                let mid = CohomologyClass::new(0.5 * (ca.c1 + cb.c1), 0.5 * (ca.c2 + cb.c2));
                if let Some(k) = self.classes.iter().position(|&c| c == mid) {
                    let defect = self.values[k] - 0.5 * (self.values[a] + self.values[b]);
                    worst = Some(worst.map_or(defect, |w: f64| w.max(defect)));
                }
            }
        }
        worst
    }
}
