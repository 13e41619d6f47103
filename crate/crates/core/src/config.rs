//! Versioned JSON run configuration.
//!
//! ```json
//! {
//!   "version": 1,
//!   "grid": {"n": 64, "h_time": 0.03125, "windings": 1, "speed_cap": 5.0},
//!   "lagrangian": {"f_kind": "two_well", "params": {"f_min": -2.0}, "cantor_stage": 0},
//!   "classes": {"grid": [5, 5], "extent": 1.0},
//!   "sweep": {"seed": 7, "num_perturbations": 20, "amplitude": 0.1,
//!             "fourier_degree": 2, "classes": [[0.0, 0.0]]},
//!   "tolerances": {"bisection": 1e-9}
//! }
//! ```
//!
//! `lagrangian` holds either an example (`f_kind`, `params`, `cantor_stage`)
//! or an explicit `oneform`. `speed_cap` defaults to `2·√(2·α_est) + 1` with
//! `α_est = max‖η‖²/2`.

use serde::{Deserialize, Serialize};

use crate::critical::{class_grid, CycleMethod, BISECTION_TOL};
use crate::error::{Error, Result};
use crate::example::{ExampleParams, ExampleSpec, FKind};
use crate::graph::GridSpec;
use crate::lagrangian::{CohomologyClass, MagneticLagrangian, PhaseState};
use crate::oneform::OneForm;
use crate::potential::RowSelection;
use crate::sweep::SweepSpec;

pub const SCHEMA_VERSION: u32 = 1;

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

fn one() -> u32 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub h_time: f64,
    #[serde(default = "one")]
    pub windings: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_cap: Option<f64>,
}

impl GridConfig {
    /// Grid for `eta`, filling in the default speed cap.
    pub fn resolve(&self, eta: &OneForm) -> Result<GridSpec> {
        let speed_cap = match self.speed_cap {
            Some(c) => c,
            None => {
                let sup = eta.sampled_sup_norm(64);
                GridSpec::default_speed_cap(0.5 * sup * sup)
            }
        };
        let spec = GridSpec {
            n: self.n,
            speed_cap,
            h_time: self.h_time,
            windings: self.windings,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LagrangianConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_kind: Option<FKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ExampleParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cantor_stage: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oneform: Option<OneForm>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSelection {
    /// Explicit classes `[c1, c2]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub list: Option<Vec<[f64; 2]>>,
    /// Grid shape `[m1, m2]` on `[−extent, extent]²`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<[usize; 2]>,
    #[serde(default = "default_extent")]
    pub extent: f64,
}

fn default_extent() -> f64 {
    1.0
}

impl Default for ClassSelection {
    fn default() -> Self {
        ClassSelection {
            list: None,
            grid: None,
            extent: default_extent(),
        }
    }
}

impl ClassSelection {
    pub fn classes(&self) -> Result<Vec<CohomologyClass>> {
        let out = match (&self.list, self.grid) {
            (Some(_), Some(_)) => return Err(Error::validation("classes: give either list or grid, not both")),
            (Some(list), None) => list.iter().map(|&[a, b]| CohomologyClass::new(a, b)).collect(),
            (None, Some([m1, m2])) => {
                if m1 == 0 || m2 == 0 {
                    return Err(Error::validation("classes.grid entries must be positive"));
                }
                if !(self.extent >= 0.0) || !self.extent.is_finite() {
                    return Err(Error::validation("classes.extent must be finite and non-negative"));
                }
                class_grid(m1, m2, self.extent)
            }
            (None, None) => vec![CohomologyClass::ZERO],
        };
        if out.iter().any(|c| !c.c1.is_finite() || !c.c2.is_finite()) {
            return Err(Error::validation("classes must be finite"));
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_bisection")]
    pub bisection: f64,
    /// Lift above the critical value for potentials; default `10·tol_zero`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_lift: Option<f64>,
    /// Aubry threshold; default the grid's action quantum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_aubry: Option<f64>,
    /// Class threshold; default six action quanta.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_class: Option<f64>,
    #[serde(default)]
    pub method: CycleMethod,
    #[serde(default)]
    pub rows: RowSelection,
}

fn default_bisection() -> f64 {
    BISECTION_TOL
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            bisection: BISECTION_TOL,
            eps_lift: None,
            eps_aubry: None,
            eps_class: None,
            method: CycleMethod::Auto,
            rows: RowSelection::Auto,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        if !(self.bisection > 0.0) {
            return Err(Error::validation("tolerances.bisection must be positive"));
        }
        for (name, v) in [
            ("eps_lift", self.eps_lift),
            ("eps_aubry", self.eps_aubry),
            ("eps_class", self.eps_class),
        ] {
            if let Some(v) = v {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::validation(format!("tolerances.{name} must be finite and non-negative")));
                }
            }
        }
        Ok(())
    }
}

/// Initial state and step for the `integrate` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrateConfig {
    pub state: [f64; 4],
    pub duration: f64,
    pub step: f64,
}

/// Knobs of the example verification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyOptions {
    #[serde(default = "default_curve_duration")]
    pub curve_duration: f64,
    #[serde(default = "default_curve_step")]
    pub curve_step: f64,
    #[serde(default = "default_audit_samples")]
    pub audit_samples: usize,
    #[serde(default)]
    pub audit_seed: u64,
    /// Number of extra levels with `n` doubled and `h_time` halved.
    #[serde(default)]
    pub refine_levels: u32,
}

fn default_curve_duration() -> f64 {
    10.0
}
fn default_curve_step() -> f64 {
    1e-3
}
fn default_audit_samples() -> usize {
    200
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            curve_duration: default_curve_duration(),
            curve_step: default_curve_step(),
            audit_samples: default_audit_samples(),
            audit_seed: 0,
            refine_levels: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default = "schema_version")]
    pub version: u32,
    pub grid: GridConfig,
    pub lagrangian: LagrangianConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<ClassSelection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrate: Option<IntegrateConfig>,
    #[serde(default)]
    pub verify: VerifyOptions,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Config> {
        let cfg: Config = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != SCHEMA_VERSION {
            return Err(Error::validation(format!(
                "unsupported config version {} (expected {SCHEMA_VERSION})",
                self.version
            )));
        }
        self.tolerances.validate()?;
        if let Some(sel) = &self.classes {
            sel.classes()?;
        }
        if let Some(sw) = &self.sweep {
            sw.validate()?;
        }
        // resolves the lagrangian and checks the grid
        self.grid()?;
        Ok(())
    }

    /// The example described by `lagrangian`, if any.
    pub fn example(&self) -> Result<Option<ExampleSpec>> {
        let l = &self.lagrangian;
        match (&l.f_kind, &l.oneform) {
            (Some(_), Some(_)) => Err(Error::validation("lagrangian: give either f_kind or oneform, not both")),
            (None, Some(_)) => {
                if l.params.is_some() || l.cantor_stage.is_some() {
                    return Err(Error::validation("lagrangian: params and cantor_stage need f_kind"));
                }
                Ok(None)
            }
            (None, None) => Err(Error::validation("lagrangian: f_kind or oneform required")),
            (Some(kind), None) => {
                let params = l.params.clone().unwrap_or_default();
                let probe = ExampleSpec {
                    f_kind: *kind,
                    params: params.clone(),
                    cantor_stage: l.cantor_stage.unwrap_or(0),
                    grid: GridSpec::new(self.grid.n, 0.0, self.grid.h_time),
                };
                let eta = probe.build()?.eta;
                Ok(Some(ExampleSpec {
                    grid: self.grid.resolve(&eta)?,
                    ..probe
                }))
            }
        }
    }

    pub fn lagrangian(&self) -> Result<MagneticLagrangian> {
        if let Some(ex) = self.example()? {
            return ex.build();
        }
        let form = self.lagrangian.oneform.clone().expect("checked by example()");
        form.validate()?;
        Ok(MagneticLagrangian::new(form))
    }

    pub fn grid(&self) -> Result<GridSpec> {
        self.grid.resolve(&self.lagrangian()?.eta)
    }

    pub fn classes(&self) -> Result<Vec<CohomologyClass>> {
        self.classes.clone().unwrap_or_default().classes()
    }

    pub fn initial_state(&self) -> Result<(PhaseState, f64, f64)> {
        let ic = self
            .integrate
            .as_ref()
            .ok_or_else(|| Error::validation("config has no integrate section"))?;
        let [x, y, v1, v2] = ic.state;
        Ok((PhaseState::new(x, y, v1, v2), ic.duration, ic.step))
    }
}
