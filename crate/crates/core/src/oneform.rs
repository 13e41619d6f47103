//! Smooth 1-forms on the flat torus.
//!
//! A [`OneForm`] is a pair of real trigonometric polynomials `(η1, η2)`,
//! optionally plus a column profile `(0, f(x))` for potentials that are
//! constant on an interval (which no trigonometric polynomial can be).
//! Every derivative is taken term-wise, so the magnetic field `B = dη` and the
//! closedness test are exact rather than finite-differenced.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lagrangian::TorusPoint;

/// One Fourier mode `a·cos(2π(kx·x + ky·y)) + b·sin(2π(kx·x + ky·y))`.
///
/// Serialized as the array `[a, b, kx, ky]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, f64, i32, i32)", into = "(f64, f64, i32, i32)")]
pub struct FourierTerm {
    pub a: f64,
    pub b: f64,
    pub kx: i32,
    pub ky: i32,
}

impl From<(f64, f64, i32, i32)> for FourierTerm {
    fn from((a, b, kx, ky): (f64, f64, i32, i32)) -> Self {
        FourierTerm { a, b, kx, ky }
    }
}

impl From<FourierTerm> for (f64, f64, i32, i32) {
    fn from(t: FourierTerm) -> Self {
        (t.a, t.b, t.kx, t.ky)
    }
}

impl FourierTerm {
    pub fn new(a: f64, b: f64, kx: i32, ky: i32) -> Self {
        FourierTerm { a, b, kx, ky }
    }

    #[inline]
    fn sin_cos(&self, q: TorusPoint) -> (f64, f64) {
        sin_cos_turns(self.kx as f64 * q.x + self.ky as f64 * q.y)
    }

    #[inline]
    pub fn value(&self, q: TorusPoint) -> f64 {
        let (s, c) = self.sin_cos(q);
        self.a * c + self.b * s
    }

    /// `(∂x, ∂y)` of the mode.
    #[inline]
    pub fn gradient(&self, q: TorusPoint) -> (f64, f64) {
        let (s, c) = self.sin_cos(q);
        let common = TAU * (self.b * c - self.a * s);
        (self.kx as f64 * common, self.ky as f64 * common)
    }

    fn degree(&self) -> u32 {
        self.kx.unsigned_abs().max(self.ky.unsigned_abs())
    }

    fn abs_bound(&self) -> f64 {
        self.a.abs() + self.b.abs()
    }
}

/// `(sin 2πt, cos 2πt)` with the argument reduced in turns, so quarter-turn
/// points give exact zeros and the result is exactly 1-periodic.
#[inline]
pub(crate) fn sin_cos_turns(t: f64) -> (f64, f64) {
    let r = t - t.round();
    let quarter = (4.0 * r).round();
    let (s, c) = (TAU * (r - 0.25 * quarter)).sin_cos();
    match quarter as i32 {
        0 => (s, c),
        1 => (c, -s),
        -1 => (-c, s),
        _ => (-s, -c),
    }
}

/// Smootherstep `6t⁵ − 15t⁴ + 10t³`: C² with vanishing first and second
/// derivatives at both ends.
#[inline]
fn smootherstep(t: f64) -> (f64, f64) {
    let t = t.clamp(0.0, 1.0);
    let value = t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
    let slope = 30.0 * t * t * (1.0 - t) * (1.0 - t);
    (value, slope)
}

/// A C² periodic function `f(x)` equal to `f_min` on a finite union of closed
/// intervals (the plateaus) and rising to `f_top` in the middle of every gap.
///
/// Plateaus are `[l, r]` pairs in `[0, 1)`, sorted and disjoint; a zero-width
/// plateau gives an isolated minimum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnProfile {
    pub f_min: f64,
    pub f_top: f64,
    pub plateaus: Vec<[f64; 2]>,
}

impl ColumnProfile {
    pub fn validate(&self) -> Result<()> {
        if !self.f_min.is_finite() || !self.f_top.is_finite() || self.f_min > self.f_top {
            return Err(Error::validation(format!(
                "profile needs finite f_min <= f_top, got f_min={} f_top={}",
                self.f_min, self.f_top
            )));
        }
        if self.plateaus.is_empty() {
            return Err(Error::validation("profile needs at least one plateau"));
        }
        for (i, &[l, r]) in self.plateaus.iter().enumerate() {
            if !(0.0..1.0).contains(&l) || !(0.0..1.0).contains(&r) || l > r {
                return Err(Error::validation(format!(
                    "plateau {i} = [{l}, {r}] must satisfy 0 <= l <= r < 1"
                )));
            }
            if i > 0 && self.plateaus[i - 1][1] >= l {
                return Err(Error::validation(format!(
                    "plateaus {} and {i} overlap or are unsorted",
                    i - 1
                )));
            }
        }
        let first = self.plateaus[0][0];
        let last = self.plateaus[self.plateaus.len() - 1][1];
        if last >= first + 1.0 {
            return Err(Error::validation("plateaus cover the whole circle"));
        }
        Ok(())
    }

    /// `(f(x), f'(x))`.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let x = x.rem_euclid(1.0);
        let p = &self.plateaus;
        let idx = p.partition_point(|iv| iv[0] <= x);
        // gap runs from `start` to `end` (lifted so that start <= x < end)
        let (start, end, xl) = if idx == 0 {
            (p[p.len() - 1][1] - 1.0, p[0][0], x)
        } else {
            let [_, r] = p[idx - 1];
            if x <= r {
                return (self.f_min, 0.0);
            }
            let end = if idx < p.len() { p[idx][0] } else { p[0][0] + 1.0 };
            (r, end, x)
        };
        let width = end - start;
        let u = (xl - start) / width;
        let rise = self.f_top - self.f_min;
        let (bump, dbump) = if u <= 0.5 {
            let (s, ds) = smootherstep(2.0 * u);
            (s, 2.0 * ds)
        } else {
            let (s, ds) = smootherstep(2.0 - 2.0 * u);
            (s, -2.0 * ds)
        };
        (self.f_min + rise * bump, rise * dbump / width)
    }

    fn is_constant(&self) -> bool {
        self.f_min == self.f_top
    }
}

/// A 1-form `η = η1 dx + η2 dy` on the flat torus.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OneForm {
    pub max_degree: u32,
    pub coeffs1: Vec<FourierTerm>,
    pub coeffs2: Vec<FourierTerm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ColumnProfile>,
}

impl OneForm {
    pub fn zero() -> Self {
        OneForm::default()
    }

    pub fn new(coeffs1: Vec<FourierTerm>, coeffs2: Vec<FourierTerm>) -> Self {
        let max_degree = coeffs1
            .iter()
            .chain(&coeffs2)
            .map(FourierTerm::degree)
            .max()
            .unwrap_or(0);
        OneForm {
            max_degree,
            coeffs1,
            coeffs2,
            profile: None,
        }
    }

    /// `η = (0, f(x))` for a column profile `f`.
    pub fn from_profile(profile: ColumnProfile) -> Self {
        OneForm {
            profile: Some(profile),
            ..OneForm::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, terms) in [("coeffs1", &self.coeffs1), ("coeffs2", &self.coeffs2)] {
            for t in terms {
                if !t.a.is_finite() || !t.b.is_finite() {
                    return Err(Error::validation(format!("{name}: non-finite coefficient")));
                }
                if t.degree() > self.max_degree {
                    return Err(Error::validation(format!(
                        "{name}: mode ({}, {}) exceeds max_degree {}",
                        t.kx, t.ky, self.max_degree
                    )));
                }
            }
        }
        if let Some(p) = &self.profile {
            p.validate()?;
        }
        Ok(())
    }

    /// `(η1(q), η2(q))`.
    pub fn eval(&self, q: TorusPoint) -> (f64, f64) {
        let e1 = self.coeffs1.iter().map(|t| t.value(q)).sum::<f64>();
        let mut e2 = self.coeffs2.iter().map(|t| t.value(q)).sum::<f64>();
        if let Some(p) = &self.profile {
            e2 += p.eval(q.x).0;
        }
        (e1, e2)
    }

    /// `B(q) = ∂x η2 − ∂y η1`.
    pub fn magnetic_field(&self, q: TorusPoint) -> f64 {
        let dx_eta2 = self.coeffs2.iter().map(|t| t.gradient(q).0).sum::<f64>();
        let dy_eta1 = self.coeffs1.iter().map(|t| t.gradient(q).1).sum::<f64>();
        let profile = self.profile.as_ref().map_or(0.0, |p| p.eval(q.x).1);
        dx_eta2 - dy_eta1 + profile
    }

    /// Fourier coefficients of `B`, merged over `±(kx, ky)`, keyed by the
    /// canonical frequency. Zero frequency never appears.
    fn field_coefficients(&self) -> BTreeMap<(i32, i32), (f64, f64, f64)> {
        // (cos coefficient, sin coefficient, magnitude of contributions)
        let mut out: BTreeMap<(i32, i32), (f64, f64, f64)> = BTreeMap::new();
        let mut push = |kx: i32, ky: i32, cos: f64, sin: f64| {
            if kx == 0 && ky == 0 {
                return;
            }
            let (key, sign) = if kx < 0 || (kx == 0 && ky < 0) {
                ((-kx, -ky), -1.0)
            } else {
                ((kx, ky), 1.0)
            };
            let e = out.entry(key).or_insert((0.0, 0.0, 0.0));
            e.0 += cos;
            e.1 += sign * sin;
            e.2 += cos.abs() + sin.abs();
        };
        // ∂x of η2
        for t in &self.coeffs2 {
            let w = TAU * t.kx as f64;
            push(t.kx, t.ky, w * t.b, -w * t.a);
        }
        // −∂y of η1
        for t in &self.coeffs1 {
            let w = TAU * t.ky as f64;
            push(t.kx, t.ky, -w * t.b, w * t.a);
        }
        out
    }

    /// True when `dη ≡ 0`, decided on the coefficients.
    pub fn is_closed(&self) -> bool {
        if self.profile.as_ref().is_some_and(|p| !p.is_constant()) {
            return false;
        }
        self.field_coefficients()
            .values()
            .all(|&(c, s, mag)| c.abs() <= 1e-13 * mag && s.abs() <= 1e-13 * mag)
    }

    /// True when `η` does not depend on `y`, so every vertical translation of
    /// the torus is a symmetry of the Lagrangian.
    pub fn is_y_invariant(&self) -> bool {
        self.coeffs1.iter().chain(&self.coeffs2).all(|t| t.ky == 0)
    }

    /// Upper bound on `‖η(q)‖` from the coefficients (the profile contributes
    /// `max |f|`).
    pub fn norm_bound(&self) -> f64 {
        let b1: f64 = self.coeffs1.iter().map(FourierTerm::abs_bound).sum();
        let mut b2: f64 = self.coeffs2.iter().map(FourierTerm::abs_bound).sum();
        if let Some(p) = &self.profile {
            b2 += p.f_min.abs().max(p.f_top.abs());
        }
        b1.hypot(b2)
    }

    /// `max ‖η‖` sampled on a `samples × samples` grid.
    pub fn sampled_sup_norm(&self, samples: usize) -> f64 {
        let mut best = 0.0f64;
        for j in 0..samples {
            for i in 0..samples {
                let q = TorusPoint::new(i as f64 / samples as f64, j as f64 / samples as f64);
                let (e1, e2) = self.eval(q);
                best = best.max(e1.hypot(e2));
            }
        }
        best
    }

    /// Sum of two forms. At most one of them may carry a profile.
    pub fn plus(&self, other: &OneForm) -> Result<OneForm> {
        let profile = match (&self.profile, &other.profile) {
            (Some(_), Some(_)) => {
                return Err(Error::validation("cannot add two forms that both carry a profile"))
            }
            (p, q) => p.clone().or_else(|| q.clone()),
        };
        Ok(OneForm {
            max_degree: self.max_degree.max(other.max_degree),
            coeffs1: self.coeffs1.iter().chain(&other.coeffs1).copied().collect(),
            coeffs2: self.coeffs2.iter().chain(&other.coeffs2).copied().collect(),
            profile,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<OneForm> {
        let form: OneForm = serde_json::from_str(s)?;
        form.validate()?;
        Ok(form)
    }
}
