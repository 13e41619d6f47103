//! One pass of the pipeline at a fixed cohomology class: critical value,
//! minimizing measure and its checks, critical potential and static classes.

use serde::Serialize;

use crate::config::Tolerances;
use crate::critical::{min_mean_cycle, tol_zero, CycleCertificate};
use crate::error::Result;
use crate::graph::PhaseGraph;
use crate::lagrangian::CohomologyClass;
use crate::measure::{energy_level_check, graph_property_check, ClosedMeasure};
use crate::potential::{critical_partition, default_thresholds, PotentialTable, StaticClassPartition};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeasureResiduals {
    pub conservation: f64,
    pub normalization: f64,
    /// `max |‖v‖²/2 − α|` over the support.
    pub energy_level: f64,
    /// Largest velocity diameter at one base node.
    pub graph_property: f64,
}

#[derive(Clone, Debug)]
pub struct ClassAnalysis {
    pub class: CohomologyClass,
    pub alpha: f64,
    pub certificate: CycleCertificate,
    pub measure: ClosedMeasure,
    pub residuals: MeasureResiduals,
    pub tol_zero: f64,
    pub eps_lift: f64,
    pub potential: PotentialTable,
    pub partition: StaticClassPartition,
}

/// `10·tol_zero`: far enough above the critical value that shortest walks are
/// well posed, close enough that static loops stay nearly free.
pub fn default_eps_lift(tol_zero: f64) -> f64 {
    10.0 * tol_zero
}

pub fn analyze_class(g: &PhaseGraph, c: CohomologyClass, tol: &Tolerances) -> Result<ClassAnalysis> {
    let certificate = min_mean_cycle(g, c, tol.method)?;
    let alpha = certificate.alpha();
    let measure = ClosedMeasure::uniform_on_cycle(&certificate.edges, g.spec.h_time)?;
    let (conservation, normalization) = measure.residuals(g);
    let residuals = MeasureResiduals {
        conservation,
        normalization,
        energy_level: energy_level_check(&measure, g, alpha),
        graph_property: graph_property_check(&measure, g),
    };
    let tz = tol_zero(g, c);
    let eps_lift = tol.eps_lift.unwrap_or_else(|| default_eps_lift(tz));
    let (da, dc) = default_thresholds(g);
    let eps_aubry = tol.eps_aubry.unwrap_or(da);
    let eps_class = tol.eps_class.unwrap_or(dc);
    let (potential, partition) = critical_partition(g, c, alpha + eps_lift, eps_aubry, eps_class, tol.rows)?;
    Ok(ClassAnalysis {
        class: c,
        alpha,
        certificate,
        measure,
        residuals,
        tol_zero: tz,
        eps_lift,
        potential,
        partition,
    })
}
