//! The exactly solvable family `η = (0, f(x))` with `f ≤ 0`.
//!
//! The critical value at `c = 0` is `f_min²/2`, the static curves are the
//! vertical loops `t ↦ (a, −f_min·t)` over minimum points `a`, and static
//! classes correspond to connected components of the minimum set. That
//! follows from completing the square:
//! `L + f_min²/2 = (|v1|² + (v2 + f)²)/2 + (f_min² − f²)/2 ≥ 0`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{analyze_class, ClassAnalysis, MeasureResiduals};
use crate::config::{Tolerances, VerifyOptions};
use crate::critical::{critical_value_bisection, min_mean_cycle};
use crate::error::{Error, Result};
use crate::flow::integrate;
use crate::graph::{GridSpec, PhaseGraph};
use crate::lagrangian::{curve_action, energy, CohomologyClass, MagneticLagrangian, PhaseState, TorusPoint, Velocity};
use crate::oneform::{ColumnProfile, FourierTerm, OneForm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FKind {
    /// `f = f_top − d·(1 − cos 4πx)/2`: minima at `x = 1/4, 3/4`.
    TwoWell,
    /// `f = f_top − d·(1 + sin 2πx)/2`: minimum at `x = 1/4`.
    SingleWell,
    /// Flat at `f_min` on a finite stage of the middle-thirds Cantor set.
    CantorStage,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExampleParams {
    #[serde(default = "default_f_min")]
    pub f_min: f64,
    /// Maximum of `f`.
    #[serde(default)]
    pub f_top: f64,
    /// Interval whose Cantor stages are the minimum set of `cantor_stage`.
    #[serde(default = "default_cantor_interval")]
    pub cantor_interval: [f64; 2],
}

fn default_f_min() -> f64 {
    -2.0
}

fn default_cantor_interval() -> [f64; 2] {
    [0.125, 0.875]
}

impl Default for ExampleParams {
    fn default() -> Self {
        ExampleParams {
            f_min: default_f_min(),
            f_top: 0.0,
            cantor_interval: default_cantor_interval(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExampleSpec {
    pub f_kind: FKind,
    pub params: ExampleParams,
    pub cantor_stage: u32,
    pub grid: GridSpec,
}

/// Closed intervals of the stage-`stage` middle-thirds construction on `[lo, hi]`.
pub fn cantor_intervals(lo: f64, hi: f64, stage: u32) -> Vec<[f64; 2]> {
    let mut out = vec![[lo, hi]];
    for _ in 0..stage {
        out = out
            .iter()
            .flat_map(|&[l, r]| {
                let third = (r - l) / 3.0;
                [[l, l + third], [r - third, r]]
            })
            .collect();
    }
    out
}

const MAX_CANTOR_STAGE: u32 = 12;

impl ExampleSpec {
    pub fn validate_params(&self) -> Result<()> {
        let p = &self.params;
        if !p.f_min.is_finite() || !p.f_top.is_finite() {
            return Err(Error::validation("example parameters must be finite"));
        }
        if p.f_top > 0.0 {
            return Err(Error::validation(format!("f_top = {} makes f positive somewhere", p.f_top)));
        }
        if !(p.f_min < p.f_top) {
            return Err(Error::validation(format!(
                "need f_min < f_top, got f_min = {}, f_top = {}",
                p.f_min, p.f_top
            )));
        }
        if self.f_kind == FKind::CantorStage {
            let [lo, hi] = p.cantor_interval;
            if !(0.0 <= lo && lo < hi && hi < 1.0) {
                return Err(Error::validation(format!("cantor_interval [{lo}, {hi}] must satisfy 0 <= lo < hi < 1")));
            }
            if self.cantor_stage > MAX_CANTOR_STAGE {
                return Err(Error::validation(format!("cantor_stage must be at most {MAX_CANTOR_STAGE}")));
            }
        }
        Ok(())
    }

    /// The magnetic Lagrangian of this example.
    pub fn build(&self) -> Result<MagneticLagrangian> {
        self.validate_params()?;
        let p = &self.params;
        let depth = p.f_top - p.f_min;
        let eta = match self.f_kind {
            FKind::TwoWell => OneForm::new(
                vec![],
                vec![
                    FourierTerm::new(p.f_top - 0.5 * depth, 0.0, 0, 0),
                    FourierTerm::new(0.5 * depth, 0.0, 2, 0),
                ],
            ),
            FKind::SingleWell => OneForm::new(
                vec![],
                vec![
                    FourierTerm::new(p.f_top - 0.5 * depth, 0.0, 0, 0),
                    FourierTerm::new(0.0, -0.5 * depth, 1, 0),
                ],
            ),
            FKind::CantorStage => {
                let [lo, hi] = p.cantor_interval;
                OneForm::from_profile(ColumnProfile {
                    f_min: p.f_min,
                    f_top: p.f_top,
                    plateaus: cantor_intervals(lo, hi, self.cantor_stage),
                })
            }
        };
        eta.validate()?;
        Ok(MagneticLagrangian::new(eta))
    }

    /// Connected components of the minimum set of `f`, as closed intervals.
    pub fn minimum_components(&self) -> Vec<[f64; 2]> {
        match self.f_kind {
            FKind::TwoWell => vec![[0.25, 0.25], [0.75, 0.75]],
            FKind::SingleWell => vec![[0.25, 0.25]],
            FKind::CantorStage => {
                let [lo, hi] = self.params.cantor_interval;
                cantor_intervals(lo, hi, self.cantor_stage)
            }
        }
    }

    /// `f_min²/2`.
    pub fn exact_alpha(&self) -> f64 {
        0.5 * self.params.f_min * self.params.f_min
    }
}

pub fn build_example(spec: &ExampleSpec) -> Result<MagneticLagrangian> {
    spec.build()
}

fn circle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Distance on the circle from `x` to the interval `[l, r]`.
pub fn distance_to_interval(x: f64, [l, r]: [f64; 2]) -> f64 {
    let xr = l + (x - l).rem_euclid(1.0);
    if xr <= r {
        0.0
    } else {
        circle_gap(x, l).min(circle_gap(x, r))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlphaSection {
    pub exact: f64,
    pub min_mean: f64,
    pub bisection: f64,
    pub error: f64,
    pub relative_error: f64,
    pub tol_zero: f64,
    pub cost_scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StaticCurveSection {
    pub a: f64,
    pub duration: f64,
    pub step: f64,
    pub max_deviation: f64,
    pub energy_drift: f64,
    /// `|y(T) − y(0) + f(a)·T|` on the universal cover.
    pub advance_residual: f64,
    /// `|E − α_discrete|` along the orbit.
    pub energy_vs_alpha: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassSection {
    pub count: usize,
    pub expected: usize,
    pub aubry_nodes: usize,
    /// Column range `[min x, max x]` of every class.
    pub columns: Vec<[f64; 2]>,
    /// Every class lies within one cell of its own minimum component.
    pub located: bool,
    pub eps_lift: f64,
    pub eps_aubry: f64,
    pub eps_class: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasureSection {
    pub value: f64,
    pub residuals: MeasureResiduals,
    pub velocity_spacing: f64,
    pub support_edges: usize,
    /// Distinct columns visited by the support.
    pub support_columns: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditSection {
    pub samples: usize,
    pub k: f64,
    /// Smallest sampled action per unit time.
    pub min_action_rate: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossChecks {
    /// `|bisection − α_min_mean|`, bounded by `bisection tol + tol_zero`.
    pub bisection_gap: f64,
    pub bisection_bound: f64,
    /// `|measure value + α|`.
    pub measure_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RefinementLevel {
    pub n: usize,
    pub h_time: f64,
    pub alpha: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RefinementSection {
    pub levels: Vec<RefinementLevel>,
    /// `log2(error_ℓ / error_{ℓ+1})` where both errors are nonzero.
    pub rates: Vec<Option<f64>>,
    /// The error decreased strictly at every doubling.
    pub strictly_decreasing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExampleReport {
    pub f_kind: FKind,
    pub cantor_stage: u32,
    pub f_min: f64,
    pub grid: GridSpec,
    pub alpha: Option<AlphaSection>,
    pub static_curve: Option<StaticCurveSection>,
    pub classes: Option<ClassSection>,
    pub measure: Option<MeasureSection>,
    pub audit: Option<AuditSection>,
    pub cross_checks: Option<CrossChecks>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refinement: Option<RefinementSection>,
    /// Stage name to error message for stages that failed.
    pub failures: BTreeMap<String, String>,
}

fn stage<T>(failures: &mut BTreeMap<String, String>, name: &str, r: Result<T>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            failures.insert(name.to_string(), e.to_string());
            None
        }
    }
}

fn static_curve(l: &MagneticLagrangian, spec: &ExampleSpec, alpha: f64, opts: &VerifyOptions) -> Result<StaticCurveSection> {
    let [lo, hi] = spec.minimum_components()[0];
    let a = 0.5 * (lo + hi);
    let fa = l.eta.eval(TorusPoint::new(a, 0.0)).1;
    let tr = integrate(l, &PhaseState::new(a, 0.0, 0.0, -fa), opts.curve_duration, opts.curve_step)?;
    let max_deviation = tr
        .samples
        .iter()
        .map(|s| circle_gap(s.state.q.x, a))
        .fold(0.0, f64::max);
    let last = tr.last();
    let advance_residual = (last.lifted().1 + fa * last.t).abs();
    let energy_vs_alpha = tr
        .samples
        .iter()
        .map(|s| (energy(&s.state) - alpha).abs())
        .fold(0.0, f64::max);
    Ok(StaticCurveSection {
        a,
        duration: opts.curve_duration,
        step: opts.curve_step,
        max_deviation,
        energy_drift: tr.energy_drift(),
        advance_residual,
        energy_vs_alpha,
    })
}

fn class_section(spec: &ExampleSpec, an: &ClassAnalysis) -> ClassSection {
    let n = spec.grid.n;
    let comps = spec.minimum_components();
    let cell = 1.0 / n as f64 + 1e-12;
    let mut used = vec![false; comps.len()];
    let mut located = an.partition.classes.len() == comps.len();
    let mut columns = Vec::new();
    for class in &an.partition.classes {
        let xs: Vec<f64> = class.iter().map(|&v| (v % n) as f64 / n as f64).collect();
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        columns.push([lo, hi]);
        let owner = comps
            .iter()
            .position(|&iv| xs.iter().all(|&x| distance_to_interval(x, iv) <= cell));
        match owner {
            Some(j) if !used[j] => used[j] = true,
            _ => located = false,
        }
    }
    ClassSection {
        count: an.partition.class_count(),
        expected: comps.len(),
        aubry_nodes: an.partition.aubry_nodes.len(),
        columns,
        located,
        eps_lift: an.eps_lift,
        eps_aubry: an.partition.eps_aubry,
        eps_class: an.partition.eps_class,
    }
}

fn measure_section(g: &PhaseGraph, an: &ClassAnalysis) -> MeasureSection {
    let mut cols: Vec<usize> = an
        .measure
        .support()
        .map(|(e, _)| g.edge(e).from % g.spec.n)
        .collect();
    cols.sort_unstable();
    cols.dedup();
    MeasureSection {
        value: an.certificate.mean_cost,
        residuals: an.residuals,
        velocity_spacing: g.spec.velocity_spacing(),
        support_edges: an.measure.support().count(),
        support_columns: cols.iter().map(|&c| c as f64 / g.spec.n as f64).collect(),
    }
}

/// Random polylines; every one must have nonnegative action at the critical
/// level because the integrand is pointwise nonnegative there.
fn action_audit(l: &MagneticLagrangian, k: f64, tol: f64, samples: usize, seed: u64) -> Result<AuditSection> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..samples {
        let segments: usize = rng.gen_range(1..=30);
        let dt: f64 = rng.gen_range(0.01..0.2);
        let mut pos = (rng.gen::<f64>(), rng.gen::<f64>());
        let steps: Vec<(f64, f64)> = (0..segments)
            .map(|_| (rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2)))
            .collect();
        let mut path = Vec::with_capacity(segments + 1);
        for i in 0..=segments {
            let d = steps[i.min(segments - 1)];
            path.push((
                i as f64 * dt,
                PhaseState {
                    q: TorusPoint::new(pos.0, pos.1),
                    v: Velocity::new(d.0 / dt, d.1 / dt),
                },
            ));
            if i < segments {
                pos = (pos.0 + steps[i].0, pos.1 + steps[i].1);
            }
        }
        let rate = curve_action(l, CohomologyClass::ZERO, k, &path)? / (segments as f64 * dt);
        worst = worst.min(rate);
    }
    Ok(AuditSection {
        samples,
        k,
        min_action_rate: worst,
        tolerance: tol,
        passed: worst >= -tol,
    })
}

fn refinement(l: &MagneticLagrangian, spec: &ExampleSpec, levels: u32, tol: &Tolerances) -> Result<RefinementSection> {
    let exact = spec.exact_alpha();
    let mut out = Vec::new();
    for lvl in 0..=levels {
        let f = 1usize << lvl;
        let grid = GridSpec {
            n: spec.grid.n * f,
            h_time: spec.grid.h_time / f as f64,
            ..spec.grid
        };
        let g = PhaseGraph::build(l, grid)?;
        let alpha = min_mean_cycle(&g, CohomologyClass::ZERO, tol.method)?.alpha();
        out.push(RefinementLevel {
            n: grid.n,
            h_time: grid.h_time,
            alpha,
            error: (alpha - exact).abs(),
        });
    }
    let rates = out
        .windows(2)
        .map(|w| (w[0].error > 0.0 && w[1].error > 0.0).then(|| (w[0].error / w[1].error).log2()))
        .collect();
    let strictly_decreasing = out.windows(2).all(|w| w[1].error < w[0].error);
    Ok(RefinementSection {
        levels: out,
        rates,
        strictly_decreasing,
    })
}

/// Run the whole pipeline on an example and compare with the exact answers.
pub fn verify_example(spec: &ExampleSpec, tol: &Tolerances, opts: &VerifyOptions) -> Result<ExampleReport> {
    let l = spec.build()?;
    let g = PhaseGraph::build(&l, spec.grid)?;
    let c = CohomologyClass::ZERO;
    let mut failures = BTreeMap::new();
    let exact = spec.exact_alpha();

    let analysis = stage(&mut failures, "analysis", analyze_class(&g, c, tol));
    let bisection = stage(&mut failures, "bisection", critical_value_bisection(&g, c, tol.bisection));
    let alpha = analysis.as_ref().map(|an| an.alpha);

    let alpha_section = match (&analysis, bisection) {
        (Some(an), Some(b)) => Some(AlphaSection {
            exact,
            min_mean: an.alpha,
            bisection: b,
            error: (an.alpha - exact).abs(),
            relative_error: (an.alpha - exact).abs() / exact,
            tol_zero: an.tol_zero,
            cost_scale: g.cost_scale(c),
        }),
        _ => None,
    };
    let cross_checks = match (&analysis, bisection) {
        (Some(an), Some(b)) => Some(CrossChecks {
            bisection_gap: (b - an.alpha).abs(),
            bisection_bound: tol.bisection + an.tol_zero,
            measure_gap: (an.certificate.mean_cost + an.alpha).abs(),
        }),
        _ => None,
    };
    let static_curve = stage(
        &mut failures,
        "static_curve",
        static_curve(&l, spec, alpha.unwrap_or(exact), opts),
    );
    let classes = analysis.as_ref().map(|an| class_section(spec, an));
    let measure = analysis.as_ref().map(|an| measure_section(&g, an));
    let audit = match &analysis {
        Some(an) => stage(
            &mut failures,
            "audit",
            action_audit(&l, an.alpha, an.tol_zero, opts.audit_samples, opts.audit_seed),
        ),
        None => None,
    };
    let refinement = if opts.refine_levels > 0 {
        stage(&mut failures, "refinement", refinement(&l, spec, opts.refine_levels, tol))
    } else {
        None
    };
    Ok(ExampleReport {
        f_kind: spec.f_kind,
        cantor_stage: spec.cantor_stage,
        f_min: spec.params.f_min,
        grid: spec.grid,
        alpha: alpha_section,
        static_curve,
        classes,
        measure,
        audit,
        cross_checks,
        refinement,
        failures,
    })
}
