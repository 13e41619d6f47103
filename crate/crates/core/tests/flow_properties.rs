use aubry::flow::{integrate, integrate_reverse};
use aubry::lagrangian::{MagneticLagrangian, PhaseState};
use aubry::oneform::{FourierTerm, OneForm};

fn field() -> MagneticLagrangian {
    MagneticLagrangian::new(OneForm::new(
        vec![FourierTerm::new(0.0, 0.3, 1, 1)],
        vec![FourierTerm::new(-1.0, 0.0, 0, 0), FourierTerm::new(1.0, 0.0, 2, 0), FourierTerm::new(0.2, 0.1, 1, 2)],
    ))
}

fn two_well() -> MagneticLagrangian {
    MagneticLagrangian::new(OneForm::new(
        vec![],
        vec![FourierTerm::new(-1.0, 0.0, 0, 0), FourierTerm::new(1.0, 0.0, 2, 0)],
    ))
}

fn starts() -> Vec<PhaseState> {
    vec![
        PhaseState::new(0.1, 0.2, 1.0, 0.5),
        PhaseState::new(0.6, 0.9, -0.7, 1.3),
        PhaseState::new(0.33, 0.05, 0.4, -1.1),
    ]
}

#[test]
fn energy_drift_is_fourth_order() {
    let l = field();
    for s0 in starts() {
        let coarse = integrate(&l, &s0, 4.0, 0.04).unwrap().energy_drift();
        let fine = integrate(&l, &s0, 4.0, 0.02).unwrap().energy_drift();
        let ratio = coarse / fine;
        assert!((8.0..=32.0).contains(&ratio), "{s0:?}: ratio {ratio}");
    }
}

#[test]
fn backward_run_returns_to_start() {
    // integrable field (η depends on x only), so errors do not grow exponentially
    let l = two_well();
    for s0 in starts() {
        let fwd = integrate(&l, &s0, 3.0, 0.01).unwrap();
        let end = fwd.last();
        let (x, y) = end.lifted();
        let s1 = PhaseState::new(x, y, end.state.v.v1, end.state.v.v2);
        let back = integrate_reverse(&l, &s1, 3.0, 0.01).unwrap();
        let (bx, by) = back.last().lifted();
        let v = back.last().state.v;
        let err = [bx - s1.q.x + x - s0.q.x, by - s1.q.y + y - s0.q.y, v.v1 - s0.v.v1, v.v2 - s0.v.v2]
            .iter()
            .fold(0.0f64, |m, d| m.max(d.abs()));
        let drift = fwd.energy_drift();
        assert!(err <= 10.0 * drift.max(1e-14), "{s0:?}: error {err:e}, drift {drift:e}");
    }
}

#[test]
fn windings_reconstruct_the_displacement() {
    let l = field();
    for s0 in starts() {
        let err = |h: f64| {
            let tr = integrate(&l, &s0, 5.0, h).unwrap();
            let (lx, ly) = tr.last().lifted();
            let (ix, iy) = tr.integrated_velocity();
            (lx - s0.q.x - ix).abs().max((ly - s0.q.y - iy).abs())
        };
        let (coarse, fine) = (err(0.02), err(0.01));
        assert!(fine < 1e-5, "{s0:?}: {fine:e}");
        assert!((8.0..=32.0).contains(&(coarse / fine)), "{s0:?}: {coarse:e} -> {fine:e}");
    }
}

#[test]
fn fast_orbits_wind_around() {
    let l = field();
    let tr = integrate(&l, &PhaseState::new(0.5, 0.5, 3.0, 0.0), 2.0, 1e-3).unwrap();
    assert!(tr.samples.iter().any(|s| s.w1 != 0 || s.w2 != 0));
    for s in &tr.samples {
        assert!((0.0..1.0).contains(&s.state.q.x) && (0.0..1.0).contains(&s.state.q.y));
    }
}
