//! Fixed-step RK4 integration of the Euler–Lagrange flow.

use std::io::Write;

use crate::error::{Error, Result};
use crate::lagrangian::{energy, MagneticLagrangian, PhaseState, TorusPoint, Velocity};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: PhaseState,
    /// Cumulative number of wraps in x and y.
    pub w1: i64,
    pub w2: i64,
}

impl Sample {
    /// Position on the universal cover.
    pub fn lifted(&self) -> (f64, f64) {
        (self.w1 as f64 + self.state.q.x, self.w2 as f64 + self.state.q.y)
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    /// Signed step; negative for backward integration.
    pub step: f64,
}

fn split_lift(t: f64) -> (f64, i64) {
    let w = t.floor();
    let r = t - w;
    if r >= 1.0 {
        (0.0, w as i64 + 1)
    } else {
        (r, w as i64)
    }
}

type Lifted = [f64; 4];

fn rhs(l: &MagneticLagrangian, s: &Lifted) -> Lifted {
    let state = PhaseState {
        q: TorusPoint::new(s[0], s[1]),
        v: Velocity::new(s[2], s[3]),
    };
    let (qd, vd) = l.vector_field(&state);
    [qd.v1, qd.v2, vd.v1, vd.v2]
}

fn rk4_step(l: &MagneticLagrangian, s: &Lifted, h: f64) -> Lifted {
    let axpy = |a: &Lifted, k: &Lifted, f: f64| -> Lifted {
        [a[0] + f * k[0], a[1] + f * k[1], a[2] + f * k[2], a[3] + f * k[3]]
    };
    let k1 = rhs(l, s);
    let k2 = rhs(l, &axpy(s, &k1, 0.5 * h));
    let k3 = rhs(l, &axpy(s, &k2, 0.5 * h));
    let k4 = rhs(l, &axpy(s, &k3, h));
    let mut out = *s;
    for i in 0..4 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn sample_of(t: f64, s: &Lifted) -> Sample {
    let (x, w1) = split_lift(s[0]);
    let (y, w2) = split_lift(s[1]);
    Sample {
        t,
        state: PhaseState {
            q: TorusPoint { x, y },
            v: Velocity::new(s[2], s[3]),
        },
        w1,
        w2,
    }
}

fn run(l: &MagneticLagrangian, s0: &PhaseState, duration: f64, h: f64, sign: f64) -> Result<Trajectory> {
    if !s0.is_finite() {
        return Err(Error::validation("initial state must be finite"));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::validation(format!("step must be positive, got {h}")));
    }
    if !(duration > 0.0) || !duration.is_finite() || h > duration {
        return Err(Error::validation(format!(
            "need 0 < step <= duration, got step {h}, duration {duration}"
        )));
    }
    let steps = ((duration / h).round() as usize).max(1);
    let hs = sign * h;
    let mut state: Lifted = [s0.q.x, s0.q.y, s0.v.v1, s0.v.v2];
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(sample_of(0.0, &state));
    for i in 1..=steps {
        state = rk4_step(l, &state, hs);
        samples.push(sample_of(i as f64 * hs, &state));
    }
    Ok(Trajectory { samples, step: hs })
}

/// Integrate forward over `[0, duration]` with step `h`. The number of steps
/// is `round(duration / h)`, so the final time is within `h/2` of `duration`.
pub fn integrate(l: &MagneticLagrangian, s0: &PhaseState, duration: f64, h: f64) -> Result<Trajectory> {
    run(l, s0, duration, h, 1.0)
}

/// Integrate backward in time (sample times are negative).
pub fn integrate_reverse(
    l: &MagneticLagrangian,
    s0: &PhaseState,
    duration: f64,
    h: f64,
) -> Result<Trajectory> {
    run(l, s0, duration, h, -1.0)
}

impl Trajectory {
    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        &self.samples[self.samples.len() - 1]
    }

    /// `max_t |E(s(t)) − E(s(0))|`.
    pub fn energy_drift(&self) -> f64 {
        let e0 = energy(&self.first().state);
        self.samples
            .iter()
            .map(|s| (energy(&s.state) - e0).abs())
            .fold(0.0, f64::max)
    }

    /// Composite Simpson estimate of `∫ v dt` (trapezoid on the last panel
    /// when the step count is odd).
    pub fn integrated_velocity(&self) -> (f64, f64) {
        let h = self.step;
        let v: Vec<(f64, f64)> = self.samples.iter().map(|s| (s.state.v.v1, s.state.v.v2)).collect();
        let n = v.len() - 1;
        let even = n - n % 2;
        let mut acc = (0.0, 0.0);
        let mut i = 0;
        while i < even {
            acc.0 += h / 3.0 * (v[i].0 + 4.0 * v[i + 1].0 + v[i + 2].0);
            acc.1 += h / 3.0 * (v[i].1 + 4.0 * v[i + 1].1 + v[i + 2].1);
            i += 2;
        }
        if n % 2 == 1 {
            acc.0 += 0.5 * h * (v[n - 1].0 + v[n].0);
            acc.1 += 0.5 * h * (v[n - 1].1 + v[n].1);
        }
        acc
    }

    /// Trajectory as a `(time, state)` path for [`crate::lagrangian::curve_action`].
    pub fn as_path(&self) -> Vec<(f64, PhaseState)> {
        let flip = self.step < 0.0;
        let mut out: Vec<(f64, PhaseState)> = self.samples.iter().map(|s| (s.t, s.state)).collect();
        if flip {
            out.reverse();
        }
        out
    }

    /// CSV with header `t,x,y,v1,v2,w1,w2`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x", "y", "v1", "v2", "w1", "w2"])?;
        for s in &self.samples {
            w.write_record([
                s.t.to_string(),
                s.state.q.x.to_string(),
                s.state.q.y.to_string(),
                s.state.v.v1.to_string(),
                s.state.v.v2.to_string(),
                s.w1.to_string(),
                s.w2.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
