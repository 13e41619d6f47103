//! Closed (flow-conserving) probability measures on edges.
//!
//! A measure assigns each edge a time density `w(e) ≥ 0` with
//! `Σ w(e)·h = 1` and equal in- and out-flow at every node. The extreme points
//! of this set are uniform measures on simple cycles, so minimizing a linear
//! cost over it reduces to the minimum mean cycle.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::critical::{min_mean_cycle_weighted, CycleCertificate, CycleMethod};
use crate::digraph::Digraph;
use crate::error::{Error, Result};
use crate::graph::PhaseGraph;
use crate::lagrangian::CohomologyClass;

/// Weights below this are treated as roundoff when reporting supports.
pub const WEIGHT_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct ClosedMeasure {
    /// Edge id to time density.
    pub weights: BTreeMap<usize, f64>,
    /// Common edge duration.
    pub h: f64,
}

impl ClosedMeasure {
    /// Uniform measure along a closed walk; repeated edges accumulate.
    pub fn uniform_on_cycle(edges: &[usize], h: f64) -> Result<ClosedMeasure> {
        if edges.is_empty() {
            return Err(Error::validation("empty cycle"));
        }
        let w = 1.0 / (edges.len() as f64 * h);
        let mut weights = BTreeMap::new();
        for &e in edges {
            *weights.entry(e).or_insert(0.0) += w;
        }
        Ok(ClosedMeasure { weights, h })
    }

    /// `t·a + (1 − t)·b`.
    pub fn mix(a: &ClosedMeasure, b: &ClosedMeasure, t: f64) -> Result<ClosedMeasure> {
        if a.h != b.h || !(0.0..=1.0).contains(&t) {
            return Err(Error::validation("measures mix only with equal durations and t in [0, 1]"));
        }
        let mut weights = BTreeMap::new();
        for (&e, &w) in &a.weights {
            *weights.entry(e).or_insert(0.0) += t * w;
        }
        for (&e, &w) in &b.weights {
            *weights.entry(e).or_insert(0.0) += (1.0 - t) * w;
        }
        Ok(ClosedMeasure { weights, h: a.h })
    }

    /// Edges carrying weight above [`WEIGHT_FLOOR`].
    pub fn support(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.weights
            .iter()
            .filter(|(_, &w)| w > WEIGHT_FLOOR)
            .map(|(&e, &w)| (e, w))
    }

    /// `(max node |in − out|, |Σ w·h − 1|)`.
    pub fn residuals<G: Digraph + ?Sized>(&self, g: &G) -> (f64, f64) {
        let mut balance: BTreeMap<usize, f64> = BTreeMap::new();
        let mut total = 0.0;
        for (&e, &w) in &self.weights {
            *balance.entry(g.tail(e)).or_insert(0.0) -= w;
            *balance.entry(g.head(e)).or_insert(0.0) += w;
            total += w * self.h;
        }
        let conservation = balance.values().fold(0.0f64, |m, b| m.max(b.abs()));
        (conservation, (total - 1.0).abs())
    }
}

/// `Σ w(e)·h·observable(e)`.
pub fn measure_integrate(mu: &ClosedMeasure, observable: impl Fn(usize) -> f64) -> f64 {
    mu.weights.iter().map(|(&e, &w)| w * mu.h * observable(e)).sum()
}

/// Optimal value and an optimal measure of `min ∫ cost dμ`.
pub fn min_closed_measure_weighted<G: Digraph + ?Sized>(
    g: &G,
    costs: &[f64],
    h: f64,
    method: CycleMethod,
) -> Result<(f64, ClosedMeasure, CycleCertificate)> {
    let cert = min_mean_cycle_weighted(g, costs, h, method)?;
    let mu = ClosedMeasure::uniform_on_cycle(&cert.edges, h)?;
    Ok((cert.mean_cost, mu, cert))
}

/// Minimizing closed measure of `L − c`; the value is `−α_discrete(c)`.
pub fn min_closed_measure(
    g: &PhaseGraph,
    c: CohomologyClass,
    method: CycleMethod,
) -> Result<(f64, ClosedMeasure, CycleCertificate)> {
    min_closed_measure_weighted(g, &g.costs(c, 0.0), g.spec.h_time, method)
}

/// Largest diameter of the set of velocities leaving one base node in the
/// support.
pub fn graph_property_check(mu: &ClosedMeasure, g: &PhaseGraph) -> f64 {
    let mut by_node: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for (e, _) in mu.support() {
        let v = g.slot(e).velocity;
        by_node.entry(g.tail(e)).or_default().push((v.v1, v.v2));
    }
    let mut worst = 0.0f64;
    for vs in by_node.values() {
        for (i, a) in vs.iter().enumerate() {
            for b in &vs[i + 1..] {
                worst = worst.max((a.0 - b.0).hypot(a.1 - b.1));
            }
        }
    }
    worst
}

/// `max |‖v‖²/2 − alpha|` over the support.
pub fn energy_level_check(mu: &ClosedMeasure, g: &PhaseGraph, alpha: f64) -> f64 {
    mu.support()
        .map(|(e, _)| (0.5 * g.slot(e).velocity.norm_sq() - alpha).abs())
        .fold(0.0, f64::max)
}

#[derive(Serialize)]
struct EdgeWeight {
    from: usize,
    to: usize,
    w1: i32,
    w2: i32,
    weight: f64,
}

#[derive(Serialize)]
struct MeasureExport {
    edges: Vec<EdgeWeight>,
    value: f64,
    class: [f64; 2],
}

/// JSON `{edges: [{from, to, w1, w2, weight}], value, class}` of the support.
pub fn measure_json(mu: &ClosedMeasure, g: &PhaseGraph, value: f64, c: CohomologyClass) -> Result<String> {
    let edges = mu
        .support()
        .map(|(e, weight)| {
            let pe = g.edge(e);
            EdgeWeight {
                from: pe.from,
                to: pe.to,
                w1: pe.w1,
                w2: pe.w2,
                weight,
            }
        })
        .collect();
    Ok(serde_json::to_string_pretty(&MeasureExport {
        edges,
        value,
        class: [c.c1, c.c2],
    })?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digraph::SimpleDigraph;
    use crate::graph::GridSpec;
    use crate::lagrangian::MagneticLagrangian;
    use crate::oneform::{FourierTerm, OneForm};

    fn two_well_graph() -> PhaseGraph {
        let l = MagneticLagrangian::new(OneForm::new(
            vec![],
            vec![FourierTerm::new(-1.0, 0.0, 0, 0), FourierTerm::new(1.0, 0.0, 2, 0)],
        ));
        PhaseGraph::build(&l, GridSpec::new(16, 3.0, 1.0 / 8.0)).unwrap()
    }

    #[test]
    fn two_node_optimum() {
        let (g, c) = SimpleDigraph::from_arcs(2, &[(0, 1, 1.0), (1, 0, -3.0)]).unwrap();
        let (value, mu, _) = min_closed_measure_weighted(&g, &c, 1.0, CycleMethod::Karp).unwrap();
        assert_eq!(value, -1.0);
        assert_eq!(mu.weights.values().copied().collect::<Vec<_>>(), vec![0.5, 0.5]);
        assert_eq!(mu.residuals(&g), (0.0, 0.0));
        assert_eq!(measure_integrate(&mu, |e| c[e]), -1.0);
        assert_eq!(measure_integrate(&mu, |_| 1.0), 1.0);
    }

    #[test]
    fn minimizing_measure_sits_on_a_static_loop() {
        let g = two_well_graph();
        let (value, mu, cert) = min_closed_measure(&g, CohomologyClass::ZERO, CycleMethod::Karp).unwrap();
        assert_eq!(value, -2.0);
        assert_eq!(value, cert.mean_cost);
        let (cons, norm) = mu.residuals(&g);
        assert!(cons <= 1e-12 && norm <= 1e-12);
        assert_eq!(energy_level_check(&mu, &g, 2.0), 0.0);
        assert_eq!(graph_property_check(&mu, &g), 0.0);
        let energy = measure_integrate(&mu, |e| 0.5 * g.slot(e).velocity.norm_sq());
        assert!((energy - 2.0).abs() < 1e-12);
        for (e, _) in mu.support() {
            assert!(g.tail(e) % 16 == 4 || g.tail(e) % 16 == 12);
        }
    }

    #[test]
    fn rest_measure_energy() {
        let g = two_well_graph();
        let rest = g.out_edges(5).find(|&e| g.slot(e).velocity.speed() == 0.0).unwrap();
        let mu = ClosedMeasure::uniform_on_cycle(&[rest], g.spec.h_time).unwrap();
        assert_eq!(energy_level_check(&mu, &g, 0.0), 0.0);
        assert_eq!(energy_level_check(&mu, &g, 1.0), 1.0);
        assert_eq!(mu.residuals(&g), (0.0, 0.0));
    }

    #[test]
    fn opposite_loops_break_the_graph_property() {
        let g = two_well_graph();
        let vertical = |u: usize, dy: i32| g.out_edges(u).find(|&e| g.slot(e).dx == 0 && g.slot(e).dy == dy).unwrap();
        let mut up = Vec::new();
        let mut down = Vec::new();
        let (mut a, mut b) = (4, 4);
        for _ in 0..8 {
            up.push(vertical(a, 2));
            a = g.head(*up.last().unwrap());
            down.push(vertical(b, -2));
            b = g.head(*down.last().unwrap());
        }
        let mu_up = ClosedMeasure::uniform_on_cycle(&up, g.spec.h_time).unwrap();
        let mu_down = ClosedMeasure::uniform_on_cycle(&down, g.spec.h_time).unwrap();
        assert_eq!(graph_property_check(&mu_up, &g), 0.0);
        let both = ClosedMeasure::mix(&mu_up, &mu_down, 0.5).unwrap();
        let (cons, norm) = both.residuals(&g);
        assert!(cons < 1e-12 && norm < 1e-12);
        assert_eq!(graph_property_check(&both, &g), 2.0);
    }

    #[test]
    fn json_layout() {
        let g = two_well_graph();
        let (value, mu, _) = min_closed_measure(&g, CohomologyClass::ZERO, CycleMethod::Auto).unwrap();
        let v: serde_json::Value = serde_json::from_str(&measure_json(&mu, &g, value, CohomologyClass::ZERO).unwrap()).unwrap();
        assert_eq!(v["value"], -2.0);
        assert_eq!(v["class"], serde_json::json!([0.0, 0.0]));
        let e0 = &v["edges"][0];
        for key in ["from", "to", "w1", "w2", "weight"] {
            assert!(e0.get(key).is_some());
        }
    }
}
