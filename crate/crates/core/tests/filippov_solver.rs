mod common;

use twofold::ensemble::{inject, EnsembleConfig};
use twofold::filippov::*;
use twofold::model::*;
use twofold::rk::integrate_smooth;
use twofold::{State, SystemParams};

use common::{designed, sliding_points};

/// A state just off the escaping region next to the singularity; its slip
/// motion crosses the surface repeatedly.
fn crossing_start(p: &SystemParams, x_star: &State) -> (State, ContactKind) {
    let cfg = EnsembleConfig { n: 1, eps: 1e-3, seed: 7, t_max: 10.0, return_radius: 5e-3 };
    let inj = inject(x_star, p, &cfg).unwrap()[0];
    (inj.state, ContactKind::slip(inj.kick))
}

#[test]
fn crossings_switch_side_with_continuous_state() {
    let (p, d) = designed();
    let (s0, mode) = crossing_start(&p, &d.x_star);
    let segs = integrate(s0, mode, &p, &IntegratorOptions { t_max: 5.0, ..Default::default() }).unwrap();
    let crossings: Vec<usize> =
        (0..segs.len()).filter(|&i| segs[i].terminal.detail == EventDetail::Crossing).collect();
    assert!(crossings.len() >= 3, "{:?}", events(&segs));
    let tol_event = 1e-10 * p.velocity_scale();
    for &i in &crossings {
        let (a, b) = (&segs[i], &segs[i + 1]);
        assert_eq!(a.mode.side().unwrap().opposite(), b.mode.side().unwrap());
        assert_eq!(b.samples[0].state, a.terminal.state);
        assert_eq!(b.samples[0].t, a.terminal.time);
        let x = a.terminal.state;
        assert!(eval_h(&x, &p).abs() <= tol_event);
        let c = classify(&x, &p).unwrap();
        assert_eq!(c.tag, RegionTag::Crossing);
        assert_eq!(c.plus.signum(), c.minus.signum());
    }
}

#[test]
fn surface_hits_are_localized() {
    let (p, d) = designed();
    let tol_event = 1e-10 * p.velocity_scale();
    let (s0, mode) = crossing_start(&p, &d.x_star);
    let mut starts = vec![(s0, mode)];
    for s in [State::new(0.2, 0.1, -1.3), State::new(0.1, -0.2, -0.8), State::new(0.3, 0.0, -0.5)] {
        let side = Side::of(eval_h(&s, &p)).unwrap();
        starts.push((s, ContactKind::slip(side)));
    }
    let mut hits = 0;
    for (s0, mode) in starts {
        let segs = integrate(s0, mode, &p, &IntegratorOptions { t_max: 20.0, ..Default::default() }).unwrap();
        for e in events(&segs) {
            if e.kind == EventKind::SurfaceHit {
                hits += 1;
                assert!(eval_h(&e.state, &p).abs() <= tol_event, "{e:?}");
            }
        }
        for w in segs.windows(2) {
            assert!(w[1].samples[0].t >= w[0].samples[0].t);
            assert_eq!(w[1].samples[0].state, w[0].terminal.state);
        }
    }
    assert!(hits >= 5);
}

#[test]
fn stick_segments_stay_on_surface_with_admissible_force() {
    let (p, d) = designed();
    let opts = IntegratorOptions { t_max: 30.0, ..Default::default() };
    for s in sliding_points(&p, &d.x_star, 10, 31) {
        let segs = integrate(s, ContactKind::Stick, &p, &opts).unwrap();
        for seg in segs.iter().filter(|s| s.mode == ContactKind::Stick) {
            for smp in &seg.samples {
                assert!(eval_h(&smp.state, &p).abs() <= 1e-8, "{smp:?}");
                let l = smp.lambda.unwrap();
                assert!(l.abs() <= p.mu + 1e-9, "{smp:?}");
            }
            if seg.terminal.kind == EventKind::SlidingExit {
                let l = lambda_star(&seg.terminal.state, &p).unwrap();
                assert!((l.abs() - p.mu).abs() <= 1e-8);
            }
        }
    }
}

#[test]
fn sliding_into_the_singularity() {
    let (p, d) = designed();
    let s = State::new(0.25, 0.05, -1.1);
    let segs = integrate(s, ContactKind::SlipPositive, &p, &IntegratorOptions { t_max: 30.0, ..Default::default() })
        .unwrap();
    let ev = events(&segs);
    assert_eq!(ev[0].detail, EventDetail::StickEntry);
    let last = ev.last().unwrap();
    assert_eq!(last.kind, EventKind::SingularityHit);
    assert!(last.state.distance(&d.x_star) < 1e-6, "{last:?}");
}

#[test]
fn sliding_exit_departs_on_the_bound_side() {
    let (p, _) = designed();
    let s = State::new(0.1, -0.2, -0.8);
    let segs = integrate(s, ContactKind::SlipNegative, &p, &IntegratorOptions { t_max: 30.0, ..Default::default() })
        .unwrap();
    let i = segs.iter().position(|s| s.terminal.kind == EventKind::SlidingExit).expect("a sliding exit");
    let EventDetail::Bound(side) = segs[i].terminal.detail.clone() else { panic!() };
    assert_eq!(segs[i + 1].mode, ContactKind::slip(side));
    let x = segs[i].terminal.state;
    assert!((lambda_star(&x, &p).unwrap() - side.sign() * p.mu).abs() <= 1e-8 * p.mu);
    let next = &segs[i + 1].samples;
    assert!(next.len() > 2);
    assert!(side.sign() * eval_h(&next[2].state, &p) > 0.0);
}

#[test]
fn integration_is_deterministic() {
    let (p, d) = designed();
    let (s0, mode) = crossing_start(&p, &d.x_star);
    let opts = IntegratorOptions { t_max: 20.0, ..Default::default() };
    let a = integrate(s0, mode, &p, &opts).unwrap();
    let b = integrate(s0, mode, &p, &opts).unwrap();
    assert_eq!(a, b);
}

#[test]
fn backward_integration_recovers_crossing_point() {
    let (p, d) = designed();
    let (s0, mode) = crossing_start(&p, &d.x_star);
    let segs = integrate(s0, mode, &p, &IntegratorOptions { t_max: 5.0, ..Default::default() }).unwrap();
    let i = segs.iter().position(|s| s.terminal.detail == EventDetail::Crossing).unwrap();
    let (first, second) = (&segs[i], &segs[i + 1]);
    let side = second.mode.side().unwrap();
    let end = second.samples.last().unwrap();
    let f = |y: &nalgebra::Vector3<f64>| slip_field(&State::from_vector(y), side, &p);
    let path = integrate_smooth(&f, end.t, end.state.to_vector(), first.terminal.time, 1e-12, 1e-14);
    let back = State::from_vector(&path.last().unwrap().1);
    assert!(back.distance(&first.terminal.state) <= 1e-6, "{back:?} vs {:?}", first.terminal.state);
}

#[test]
fn target_ball_and_time_limit() {
    let (p, d) = designed();
    let s = State::new(0.25, 0.05, -1.1);
    let target = TargetBall { center: d.x_star, radius: 0.02, after_stick: true };
    let opts = IntegratorOptions { t_max: 30.0, target: Some(target), ..Default::default() };
    let segs = integrate(s, ContactKind::SlipPositive, &p, &opts).unwrap();
    let last = &segs.last().unwrap().terminal;
    assert_eq!(last.kind, EventKind::TargetReached);
    assert!((last.state.distance(&d.x_star) - 0.02).abs() < 1e-6);

    let opts = IntegratorOptions { t_max: 0.5, ..Default::default() };
    let segs = integrate(s, ContactKind::SlipPositive, &p, &opts).unwrap();
    let last = &segs.last().unwrap().terminal;
    assert_eq!((last.kind, last.time), (EventKind::TimeLimit, 0.5));
}

#[test]
fn invalid_starts_are_rejected() {
    let (p, d) = designed();
    let off = State::new(0.25, 0.05, -1.1);
    assert!(integrate(off, ContactKind::Stick, &p, &IntegratorOptions::default()).is_err());
    let h = eval_h(&off, &p);
    let wrong = if h > 0.0 { ContactKind::SlipNegative } else { ContactKind::SlipPositive };
    assert!(integrate(off, wrong, &p, &IntegratorOptions::default()).is_err());
    let bad = State::new(f64::NAN, 0.0, 0.0);
    assert!(integrate(bad, ContactKind::SlipPositive, &p, &IntegratorOptions::default()).is_err());

    // escaping-region stick only on request
    let cfg = EnsembleConfig { n: 1, eps: 1e-3, seed: 3, t_max: 1.0, return_radius: 5e-3 };
    let esc = inject(&d.x_star, &p, &cfg).unwrap()[0].on_surface;
    assert_eq!(classify(&esc, &p).unwrap().tag, RegionTag::Escaping);
    assert!(integrate(esc, ContactKind::Stick, &p, &IntegratorOptions::default()).is_err());
    let opts = IntegratorOptions { allow_escaping_stick: true, t_max: 0.1, ..Default::default() };
    assert!(integrate(esc, ContactKind::Stick, &p, &opts).is_ok());
}

#[test]
fn region_classification_near_singularity() {
    let (p, d) = designed();
    assert_eq!(classify(&d.x_star, &p).unwrap().tag, RegionTag::TwoFoldCandidate);
    assert!(classify(&State::new(0.25, 0.05, -1.1), &p).is_err());
    assert!(sliding_field(&d.x_star, &p).is_err());
    let s = sliding_points(&p, &d.x_star, 1, 5)[0];
    let f = sliding_field(&s, &p).unwrap();
    assert!(grad_h(&s, &p).dot(&f).abs() <= 1e-12 * f.norm());
}
