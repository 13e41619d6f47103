//! Random perturbations `L + ω` and the resulting static-class counts.
//!
//! Counts are observations at a fixed resolution. The generic bound on the
//! number of classes concerns a residual set of perturbations that cannot be
//! sampled, so nothing here asserts it.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::analyze_class;
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::graph::{GridSpec, PhaseGraph};
use crate::lagrangian::{CohomologyClass, MagneticLagrangian};
use crate::oneform::{FourierTerm, OneForm};

/// Grid resolution used to measure the sup norm of a perturbation.
const SUP_SAMPLES: usize = 64;

pub const SWEEP_NOTE: &str = "class counts are empirical at fixed resolution; they do not test genericity";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub seed: u64,
    pub num_perturbations: usize,
    /// Sampled sup norm of every `ω`.
    pub amplitude: f64,
    pub fourier_degree: u32,
    pub classes: Vec<[f64; 2]>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude >= 0.0) || !self.amplitude.is_finite() {
            return Err(Error::validation(format!(
                "sweep.amplitude must be finite and non-negative, got {}",
                self.amplitude
            )));
        }
        if self.amplitude > 0.0 && self.fourier_degree == 0 {
            return Err(Error::validation("sweep.fourier_degree must be at least 1"));
        }
        if self.classes.is_empty() {
            return Err(Error::validation("sweep.classes must not be empty"));
        }
        if self.classes.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::validation("sweep.classes must be finite"));
        }
        Ok(())
    }

    pub fn cohomology_classes(&self) -> Vec<CohomologyClass> {
        self.classes.iter().map(|&[a, b]| CohomologyClass::new(a, b)).collect()
    }
}

/// Perturbation number `index`: every mode with `1 <= max(|kx|, |ky|) <= degree`
/// (one of each `±k` pair) in both components, coefficients uniform in
/// `[−1, 1]/(1 + deg)²`, rescaled to sampled sup norm `amplitude`.
/// Amplitude zero gives the zero form.
pub fn random_perturbation(spec: &SweepSpec, index: usize) -> OneForm {
    if spec.amplitude == 0.0 {
        return OneForm::zero();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index as u64);
    let d = spec.fourier_degree as i32;
    let mut c1 = Vec::new();
    let mut c2 = Vec::new();
    for kx in 0..=d {
        for ky in -d..=d {
            if kx == 0 && ky <= 0 {
                continue;
            }
            let deg = kx.abs().max(ky.abs());
            let w = 1.0 / ((1 + deg) * (1 + deg)) as f64;
            for list in [&mut c1, &mut c2] {
                let a = rng.gen_range(-1.0..=1.0) * w;
                let b = rng.gen_range(-1.0..=1.0) * w;
                list.push(FourierTerm::new(a, b, kx, ky));
            }
        }
    }
    let raw = OneForm::new(c1, c2);
    let sup = raw.sampled_sup_norm(SUP_SAMPLES);
    let s = spec.amplitude / sup;
    let scale = |t: &FourierTerm| FourierTerm::new(t.a * s, t.b * s, t.kx, t.ky);
    OneForm::new(raw.coeffs1.iter().map(scale).collect(), raw.coeffs2.iter().map(scale).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    /// `None` for the unperturbed baseline.
    pub perturbation: Option<usize>,
    pub c1: f64,
    pub c2: f64,
    pub alpha: Option<f64>,
    pub class_count: Option<usize>,
    pub aubry_nodes: Option<usize>,
    pub energy_residual: Option<f64>,
    pub graph_residual: Option<f64>,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSummary {
    pub seed: u64,
    pub num_perturbations: usize,
    pub amplitude: f64,
    pub fourier_degree: u32,
    /// Class count to number of rows with that count.
    pub histogram: BTreeMap<usize, usize>,
    pub failed_rows: usize,
    pub note: &'static str,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub baseline: Vec<SweepRow>,
    pub rows: Vec<SweepRow>,
    pub summary: SweepSummary,
}

fn row(l: &MagneticLagrangian, grid: GridSpec, c: CohomologyClass, tol: &Tolerances, perturbation: Option<usize>) -> SweepRow {
    let result = PhaseGraph::build(l, grid).and_then(|g| analyze_class(&g, c, tol));
    match result {
        Ok(an) => SweepRow {
            perturbation,
            c1: c.c1,
            c2: c.c2,
            alpha: Some(an.alpha),
            class_count: Some(an.partition.class_count()),
            aubry_nodes: Some(an.partition.aubry_nodes.len()),
            energy_residual: Some(an.residuals.energy_level),
            graph_residual: Some(an.residuals.graph_property),
            status: "ok".into(),
        },
        Err(e) => SweepRow {
            perturbation,
            c1: c.c1,
            c2: c.c2,
            alpha: None,
            class_count: None,
            aubry_nodes: None,
            energy_residual: None,
            graph_residual: None,
            status: e.to_string(),
        },
    }
}

/// Analyze the baseline and every perturbation at every class. Rows are
/// ordered by perturbation, then class; failures are recorded per row.
pub fn perturb_sweep(base: &MagneticLagrangian, grid: GridSpec, spec: &SweepSpec, tol: &Tolerances) -> Result<SweepResult> {
    spec.validate()?;
    grid.validate()?;
    let classes = spec.cohomology_classes();
    let baseline: Vec<SweepRow> = classes.iter().map(|&c| row(base, grid, c, tol, None)).collect();
    let rows: Vec<SweepRow> = (0..spec.num_perturbations)
        .into_par_iter()
        .map(|i| {
            let omega = random_perturbation(spec, i);
            match base.eta.plus(&omega) {
                Ok(eta) => {
                    let l = MagneticLagrangian::new(eta);
                    classes.iter().map(|&c| row(&l, grid, c, tol, Some(i))).collect::<Vec<_>>()
                }
                Err(e) => classes
                    .iter()
                    .map(|&c| SweepRow {
                        perturbation: Some(i),
                        c1: c.c1,
                        c2: c.c2,
                        alpha: None,
                        class_count: None,
                        aubry_nodes: None,
                        energy_residual: None,
                        graph_residual: None,
                        status: e.to_string(),
                    })
                    .collect(),
            }
        })
        .collect::<Vec<Vec<SweepRow>>>()
        .into_iter()
        .flatten()
        .collect();
    let mut histogram = BTreeMap::new();
    for count in rows.iter().filter_map(|r| r.class_count) {
        *histogram.entry(count).or_insert(0) += 1;
    }
    let failed_rows = rows.iter().filter(|r| r.class_count.is_none()).count();
    Ok(SweepResult {
        baseline,
        rows,
        summary: SweepSummary {
            seed: spec.seed,
            num_perturbations: spec.num_perturbations,
            amplitude: spec.amplitude,
            fourier_degree: spec.fourier_degree,
            histogram,
            failed_rows,
            note: SWEEP_NOTE,
        },
    })
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

impl SweepResult {
    /// CSV `perturbation,c1,c2,alpha,class_count,aubry_nodes,energy_residual,graph_residual,status`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "perturbation",
            "c1",
            "c2",
            "alpha",
            "class_count",
            "aubry_nodes",
            "energy_residual",
            "graph_residual",
            "status",
        ])?;
        for r in &self.rows {
            w.write_record([
                opt(&r.perturbation),
                r.c1.to_string(),
                r.c2.to_string(),
                opt(&r.alpha),
                opt(&r.class_count),
                opt(&r.aubry_nodes),
                opt(&r.energy_residual),
                opt(&r.graph_residual),
                r.status.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
