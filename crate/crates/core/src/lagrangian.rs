//! Exact magnetic Lagrangians `L(q, v) = ‖v‖²/2 + ⟨η(q), v⟩` on the flat torus.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oneform::OneForm;

/// Point of `ℝ²/ℤ²`, coordinates kept in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    pub x: f64,
    pub y: f64,
}

#[inline]
fn reduce(t: f64) -> f64 {
    let r = t.rem_euclid(1.0);
    // rem_euclid of a tiny negative number rounds up to exactly 1.0
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

impl TorusPoint {
    pub fn new(x: f64, y: f64) -> Self {
        TorusPoint {
            x: reduce(x),
            y: reduce(y),
        }
    }

    /// Translate by a lifted displacement and reduce.
    pub fn shifted(self, dx: f64, dy: f64) -> Self {
        TorusPoint::new(self.x + dx, self.y + dy)
    }

    /// Flat torus distance (minimum over integer shifts).
    pub fn distance(self, other: TorusPoint) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx - dx.round()).hypot(dy - dy.round())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Velocity {
    pub v1: f64,
    pub v2: f64,
}

impl Velocity {
    pub const ZERO: Velocity = Velocity { v1: 0.0, v2: 0.0 };

    pub fn new(v1: f64, v2: f64) -> Self {
        Velocity { v1, v2 }
    }

    pub fn speed(self) -> f64 {
        self.v1.hypot(self.v2)
    }

    pub fn norm_sq(self) -> f64 {
        self.v1 * self.v1 + self.v2 * self.v2
    }

    pub fn is_finite(self) -> bool {
        self.v1.is_finite() && self.v2.is_finite()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub q: TorusPoint,
    pub v: Velocity,
}

impl PhaseState {
    pub fn new(x: f64, y: f64, v1: f64, v2: f64) -> Self {
        PhaseState {
            q: TorusPoint::new(x, y),
            v: Velocity::new(v1, v2),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.q.x.is_finite() && self.q.y.is_finite() && self.v.is_finite()
    }
}

/// A class `c = c1·dx + c2·dy` in `H¹(T², ℝ)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CohomologyClass {
    pub c1: f64,
    pub c2: f64,
}

impl CohomologyClass {
    pub const ZERO: CohomologyClass = CohomologyClass { c1: 0.0, c2: 0.0 };

    pub fn new(c1: f64, c2: f64) -> Self {
        CohomologyClass { c1, c2 }
    }

    /// Pairing with a lifted displacement (or a velocity).
    #[inline]
    pub fn pair(self, d1: f64, d2: f64) -> f64 {
        self.c1 * d1 + self.c2 * d2
    }
}

/// Kinetic energy `‖v‖²/2`; independent of the magnetic potential.
#[inline]
pub fn energy(s: &PhaseState) -> f64 {
    0.5 * s.v.norm_sq()
}

/// `J·(v1, v2) = (−v2, v1)`.
#[inline]
pub fn rotate_j(v: Velocity) -> Velocity {
    Velocity::new(-v.v2, v.v1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MagneticLagrangian {
    pub eta: OneForm,
}

impl MagneticLagrangian {
    pub fn new(eta: OneForm) -> Self {
        MagneticLagrangian { eta }
    }

    /// `L(q, v)` at a point and a velocity.
    #[inline]
    pub fn eval_at(&self, q: TorusPoint, v: Velocity) -> f64 {
        let (e1, e2) = self.eta.eval(q);
        0.5 * v.norm_sq() + e1 * v.v1 + e2 * v.v2
    }

    #[inline]
    pub fn eval(&self, s: &PhaseState) -> f64 {
        self.eval_at(s.q, s.v)
    }

    pub fn magnetic_field(&self, q: TorusPoint) -> f64 {
        self.eta.magnetic_field(q)
    }

    /// Euler–Lagrange field `(q̇, v̇) = (v, −B(q)·J·v)`.
    pub fn vector_field(&self, s: &PhaseState) -> (Velocity, Velocity) {
        let b = self.magnetic_field(s.q);
        let jv = rotate_j(s.v);
        (s.v, Velocity::new(-b * jv.v1, -b * jv.v2))
    }

    /// Pointwise lower bound `−max‖η‖²/2` of `L`, using the coefficient bound.
    pub fn lower_bound(&self) -> f64 {
        let m = self.eta.norm_bound();
        -0.5 * m * m
    }
}

/// Lifted displacement of every segment of a sampled path.
///
/// Positions are stored reduced, so each raw difference is corrected by the
/// integer shift that best matches the trapezoidal velocity prediction. This
/// keeps winding around the torus in the bookkeeping.
pub fn segment_displacements(path: &[(f64, PhaseState)]) -> Result<Vec<(f64, f64)>> {
    if path.len() < 2 {
        return Err(Error::validation("a path needs at least two samples"));
    }
    let mut out = Vec::with_capacity(path.len() - 1);
    for w in path.windows(2) {
        let (t0, s0) = w[0];
        let (t1, s1) = w[1];
        if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
            return Err(Error::validation(format!(
                "path times must be finite and strictly increasing ({t0} then {t1})"
            )));
        }
        let dt = t1 - t0;
        let raw = (s1.q.x - s0.q.x, s1.q.y - s0.q.y);
        let pred = (
            0.5 * (s0.v.v1 + s1.v.v1) * dt,
            0.5 * (s0.v.v2 + s1.v.v2) * dt,
        );
        out.push((
            raw.0 + (pred.0 - raw.0).round(),
            raw.1 + (pred.1 - raw.1).round(),
        ));
    }
    Ok(out)
}

/// Total lifted displacement of a path (its winding, for closed paths).
pub fn path_displacement(path: &[(f64, PhaseState)]) -> Result<(f64, f64)> {
    let segs = segment_displacements(path)?;
    Ok(segs
        .iter()
        .fold((0.0, 0.0), |acc, d| (acc.0 + d.0, acc.1 + d.1)))
}

/// Action `∫ [L(γ, γ̇) − c(γ̇) + k] dt` of a sampled polyline, midpoint rule
/// per segment with the secant velocity.
pub fn curve_action(
    lagrangian: &MagneticLagrangian,
    c: CohomologyClass,
    k: f64,
    path: &[(f64, PhaseState)],
) -> Result<f64> {
    let segs = segment_displacements(path)?;
    let mut total = 0.0;
    for (w, &(d1, d2)) in path.windows(2).zip(&segs) {
        let dt = w[1].0 - w[0].0;
        let mid = w[0].1.q.shifted(0.5 * d1, 0.5 * d2);
        let vel = Velocity::new(d1 / dt, d2 / dt);
        total += dt * lagrangian.eval_at(mid, vel) - c.pair(d1, d2) + k * dt;
    }
    Ok(total)
}
