//! Event-driven integration of the piecewise-smooth system: slip phases on
//! either side of `h = 0`, sliding (stick) phases on the surface, and the
//! events that connect them.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::brent::brent;
use crate::error::{Error, Result};
use crate::model::{
    eval_g, eval_h, f_and_f_lambda_oriented, grad_h, moment_orientation, slip_field, ContactKind, Side,
};
use crate::params::{State, StateDerivative, SystemParams};
use crate::rk;

type V = Vector3<f64>;

/// Tolerances and limits for [`integrate`]. Velocity-like tolerances are
/// relative to [`SystemParams::velocity_scale`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorOptions {
    /// Final time (integration starts at `t = 0`).
    pub t_max: f64,
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    /// Surface events are localized to `|h| <= tol_event_rel * velocity_scale`.
    pub tol_event_rel: f64,
    /// Sliding exits are localized to `||lambda*| - mu| <= tol_lambda_rel * mu`.
    pub tol_lambda_rel: f64,
    /// Relative threshold on both normal speeds for a singularity hit.
    pub tol_sing: f64,
    /// Both slip components below `tol_zero_slip_rel * velocity_scale` stop the run.
    pub tol_zero_slip_rel: f64,
    pub blowup_bound: f64,
    pub max_steps: usize,
    pub max_segments: usize,
    /// Permit stick segments that start in the escaping region.
    pub allow_escaping_stick: bool,
    pub target: Option<TargetBall>,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            t_max: 10.0,
            rtol: 1e-10,
            atol: 1e-12,
            h_init: 1e-4,
            h_max: 0.05,
            tol_event_rel: 1e-10,
            tol_lambda_rel: 1e-10,
            tol_sing: 1e-7,
            tol_zero_slip_rel: 1e-8,
            blowup_bound: 1e6,
            max_steps: 2_000_000,
            max_segments: 100_000,
            allow_escaping_stick: false,
            target: None,
        }
    }
}

/// Ball whose entry ends the run, armed once the trajectory is outside it
/// (and, with `after_stick`, only after a stick segment has been entered).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetBall {
    pub center: State,
    pub radius: f64,
    pub after_stick: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    SurfaceHit,
    SlidingExit,
    SingularityHit,
    /// Both slip components vanish: the wheel is carried by the disc and the
    /// planar friction law is set-valued.
    ZeroSlip,
    TargetReached,
    TimeLimit,
    Blowup,
    /// The run cannot be continued unambiguously (grazing degeneracy, step
    /// size underflow, step or segment budget).
    Stalled,
}

impl EventKind {
    pub fn label(self) -> &'static str {
        match self {
            EventKind::SurfaceHit => "surface_hit",
            EventKind::SlidingExit => "sliding_exit",
            EventKind::SingularityHit => "singularity_hit",
            EventKind::ZeroSlip => "zero_slip",
            EventKind::TargetReached => "target_reached",
            EventKind::TimeLimit => "time_limit",
            EventKind::Blowup => "blowup",
            EventKind::Stalled => "stalled",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EventDetail {
    None,
    /// Surface hit followed by transversal crossing.
    Crossing,
    /// Surface hit in the sliding region.
    StickEntry,
    /// Surface touched tangentially; slip continues on the same side.
    Graze,
    /// Sliding exit with the stick force at `+mu` or `-mu`.
    Bound(Side),
    Note(String),
}

impl EventDetail {
    pub fn label(&self) -> String {
        match self {
            EventDetail::None => String::new(),
            EventDetail::Crossing => "crossing".into(),
            EventDetail::StickEntry => "stick_entry".into(),
            EventDetail::Graze => "graze".into(),
            EventDetail::Bound(Side::Positive) => "upper".into(),
            EventDetail::Bound(Side::Negative) => "lower".into(),
            EventDetail::Note(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub time: f64,
    pub state: State,
    pub detail: EventDetail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub state: State,
    /// Stick force; `None` in slip.
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySegment {
    pub mode: ContactKind,
    pub samples: Vec<Sample>,
    pub terminal: Event,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionTag {
    Crossing,
    Sliding,
    Escaping,
    TwoFoldCandidate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionClass {
    pub tag: RegionTag,
    pub lambda_star: Option<f64>,
    /// `h_x . f(x, +mu)`
    pub plus: f64,
    /// `h_x . f(x, -mu)`
    pub minus: f64,
}

/// `h_x . f(x, 0)` and `h_x . f_lambda` with the moment law oriented by `sign(g)`.
pub fn normal_speeds(s: &State, p: &SystemParams) -> (f64, f64) {
    let o = moment_orientation(s, p);
    normal_speeds_oriented(s, o, p)
}

fn normal_speeds_oriented(s: &State, o: f64, p: &SystemParams) -> (f64, f64) {
    let (f0, fl) = f_and_f_lambda_oriented(s, o, p);
    let gh = grad_h(s, p);
    (gh.dot(&f0), gh.dot(&fl))
}

/// Stick force that makes the stick field tangent to the surface.
pub fn lambda_star(s: &State, p: &SystemParams) -> Option<f64> {
    let (n, dl) = normal_speeds(s, p);
    if dl == 0.0 {
        None
    } else {
        Some(-n / dl)
    }
}

/// Classifies a point of the surface with the default tolerances.
pub fn classify(s: &State, p: &SystemParams) -> Result<RegionClass> {
    let o = IntegratorOptions::default();
    classify_with(s, p, o.tol_event_rel * p.velocity_scale(), o.tol_sing)
}

/// Classifies a point of the surface; `tol_event` bounds `|h|` and `tol_sing`
/// bounds both normal speeds for a two-fold candidate.
pub fn classify_with(s: &State, p: &SystemParams, tol_event: f64, tol_sing: f64) -> Result<RegionClass> {
    let h = eval_h(s, p);
    if !(h.abs() <= tol_event) {
        return Err(Error::OffSurface { h });
    }
    let (n, dl) = normal_speeds(s, p);
    Ok(region_from(n, dl, p.mu, tol_sing))
}

fn region_from(n: f64, dl: f64, mu: f64, tol_sing: f64) -> RegionClass {
    let plus = n + mu * dl;
    let minus = n - mu * dl;
    if n.abs() < tol_sing && dl.abs() < tol_sing {
        let lambda_star = if dl != 0.0 { Some(-n / dl) } else { None };
        return RegionClass { tag: RegionTag::TwoFoldCandidate, lambda_star, plus, minus };
    }
    if dl == 0.0 {
        return RegionClass { tag: RegionTag::Crossing, lambda_star: None, plus, minus };
    }
    let ls = -n / dl;
    let tag = if ls.abs() > mu {
        RegionTag::Crossing
    } else if dl < 0.0 {
        RegionTag::Sliding
    } else {
        RegionTag::Escaping
    };
    RegionClass { tag, lambda_star: Some(ls), plus, minus }
}

fn sliding_field_oriented(s: &State, o: f64, p: &SystemParams) -> V {
    let (f0, fl) = f_and_f_lambda_oriented(s, o, p);
    let gh = grad_h(s, p);
    f0 - (gh.dot(&f0) / gh.dot(&fl)) * fl
}

/// Filippov sliding field: the stick field with the force chosen to keep the
/// motion tangent to the surface.
pub fn sliding_field(s: &State, p: &SystemParams) -> Result<StateDerivative> {
    let o = IntegratorOptions::default();
    let (_, dl) = normal_speeds(s, p);
    if !(dl.abs() > o.tol_sing) {
        return Err(Error::NearSingularity(*s));
    }
    Ok(sliding_field_oriented(s, moment_orientation(s, p), p))
}

/// Moves `x` onto the surface along the gradient of `h`.
pub fn project_to_surface(x: &State, p: &SystemParams) -> State {
    let mut y = *x;
    for _ in 0..4 {
        let h = eval_h(&y, p);
        if h == 0.0 {
            break;
        }
        let gh = grad_h(&y, p);
        let n2 = gh.norm_squared();
        if n2 == 0.0 {
            break;
        }
        let next = State::from_vector(&(y.to_vector() - (h / n2) * gh));
        if eval_h(&next, p).abs() >= h.abs() {
            break;
        }
        y = next;
    }
    y
}

/// Second derivative of `h` along the stick field with force `side * mu`.
fn curvature(s: &State, side: Side, o: f64, p: &SystemParams) -> f64 {
    let lie = |x: &V| {
        let st = State::from_vector(x);
        let (f0, fl) = f_and_f_lambda_oriented(&st, o, p);
        grad_h(&st, p).dot(&(f0 + side.sign() * p.mu * fl))
    };
    let x = s.to_vector();
    let mut grad = V::zeros();
    for i in 0..3 {
        let step = 1e-6 * (1.0 + x[i].abs());
        let mut a = x;
        let mut b = x;
        a[i] += step;
        b[i] -= step;
        grad[i] = (lie(&a) - lie(&b)) / (2.0 * step);
    }
    let (f0, fl) = f_and_f_lambda_oriented(s, o, p);
    grad.dot(&(f0 + side.sign() * p.mu * fl))
}

#[derive(Debug, Clone, Copy)]
struct Tol {
    event: f64,
    lambda: f64,
    sing: f64,
    zero_slip: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Watch {
    Surface(Side),
    Upper,
    Lower,
    Denominator(f64),
    Adhesion(f64),
    Target,
}

struct Run<'a> {
    p: &'a SystemParams,
    o: &'a IntegratorOptions,
    tol: Tol,
    steps: usize,
    stick_seen: bool,
    target_armed: bool,
}

enum Next {
    Go(ContactKind, f64, State),
    Done,
}

/// Integrates from `s0` at `t = 0` in contact mode `mode0` until a terminal
/// event. Slip segments use the tyre law; stick segments use the sliding field
/// with drift projection back onto the surface.
pub fn integrate(
    s0: State,
    mode0: ContactKind,
    p: &SystemParams,
    opts: &IntegratorOptions,
) -> Result<Vec<TrajectorySegment>> {
    p.validate()?;
    if !(p.kappa > 0.0) {
        return Err(Error::InvalidParams(format!(
            "the tyre law needs a positive kappa, got {}",
            p.kappa
        )));
    }
    if !s0.is_finite() {
        return Err(Error::Domain(format!("initial state is not finite: {s0:?}")));
    }
    if !(opts.t_max >= 0.0) {
        return Err(Error::Domain(format!("t_max must be non-negative, got {}", opts.t_max)));
    }
    let vs = p.velocity_scale();
    let tol = Tol {
        event: opts.tol_event_rel * vs,
        lambda: opts.tol_lambda_rel * p.mu,
        sing: opts.tol_sing,
        zero_slip: opts.tol_zero_slip_rel * vs,
    };
    let h0 = eval_h(&s0, p);
    let mut start = s0;
    match mode0 {
        ContactKind::Stick => {
            if h0.abs() > tol.event {
                return Err(Error::OffSurface { h: h0 });
            }
            start = project_to_surface(&s0, p);
            let (n, dl) = normal_speeds(&start, p);
            let region = region_from(n, dl, p.mu, 0.0);
            match region.tag {
                RegionTag::Crossing => {
                    return Err(Error::Domain(format!(
                        "stick requested at a crossing point (lambda* = {:?})",
                        region.lambda_star
                    )))
                }
                RegionTag::Escaping if !opts.allow_escaping_stick => {
                    return Err(Error::Domain("stick requested in the escaping region".into()))
                }
                _ => {}
            }
        }
        _ => {
            let side = mode0.side().unwrap();
            if h0 * side.sign() < 0.0 {
                return Err(Error::ModeMismatch { h: h0 });
            }
        }
    }
    let mut run = Run { p, o: opts, tol, steps: 0, stick_seen: false, target_armed: false };
    let mut segments = Vec::new();
    let mut mode = mode0;
    let mut t = 0.0;
    let mut x = start;
    let mut idle = 0usize;
    loop {
        let (mut seg, next) = run.segment(mode, t, x);
        let t_end = seg.terminal.time;
        idle = if t_end > t { 0 } else { idle + 1 };
        let over = segments.len() + 1 >= opts.max_segments || idle > 8;
        match next {
            Next::Go(m, t1, x1) if !over => {
                segments.push(seg);
                mode = m;
                t = t1;
                x = x1;
            }
            Next::Go(..) => {
                seg.terminal = Event {
                    kind: EventKind::Stalled,
                    time: seg.terminal.time,
                    state: seg.terminal.state,
                    detail: EventDetail::Note(if idle > 8 {
                        "no progress across repeated switching".into()
                    } else {
                        "segment budget exhausted".into()
                    }),
                };
                segments.push(seg);
                break;
            }
            Next::Done => {
                segments.push(seg);
                break;
            }
        }
    }
    Ok(segments)
}

impl<'a> Run<'a> {
    fn field(&self, kind: ContactKind, o: f64, y: &V) -> V {
        let s = State::from_vector(y);
        match kind.side() {
            Some(side) => slip_field(&s, side, self.p),
            None => sliding_field_oriented(&s, o, self.p),
        }
    }

    fn watch_value(&self, w: Watch, s: &State, o: f64) -> f64 {
        let p = self.p;
        match w {
            Watch::Surface(side) => side.sign() * eval_h(s, p),
            Watch::Upper | Watch::Lower => {
                let (n, dl) = normal_speeds_oriented(s, o, p);
                let ls = -n / dl;
                if w == Watch::Upper {
                    p.mu - ls
                } else {
                    ls + p.mu
                }
            }
            Watch::Denominator(sign) => sign * normal_speeds_oriented(s, o, p).1,
            Watch::Adhesion(sign) => sign * eval_g(s, p) - self.tol.zero_slip,
            Watch::Target => {
                let b = self.o.target.as_ref().unwrap();
                s.distance(&b.center) - b.radius
            }
        }
    }

    fn target_usable(&self) -> bool {
        match &self.o.target {
            Some(b) => !b.after_stick || self.stick_seen,
            None => false,
        }
    }

    fn lambda_of(&self, kind: ContactKind, s: &State, o: f64) -> Option<f64> {
        match kind {
            ContactKind::Stick => {
                let (n, dl) = normal_speeds_oriented(s, o, self.p);
                Some(-n / dl)
            }
            _ => None,
        }
    }

    fn segment(&mut self, kind: ContactKind, t0: f64, x0: State) -> (TrajectorySegment, Next) {
        let p = self.p;
        let stick = kind == ContactKind::Stick;
        if stick {
            self.stick_seen = true;
        }
        let o = if stick { moment_orientation(&x0, p) } else { 1.0 };
        let mut watches: Vec<Watch> = match kind.side() {
            Some(side) => vec![Watch::Surface(side)],
            None => {
                let (_, dl) = normal_speeds_oriented(&x0, o, p);
                vec![Watch::Upper, Watch::Lower, Watch::Denominator(dl.signum()), Watch::Adhesion(o)]
            }
        };
        if self.o.target.is_some() {
            watches.push(Watch::Target);
        }
        let threshold = |w: Watch| if matches!(w, Watch::Surface(_)) { self.tol.event } else { 0.0 };
        let mut armed: Vec<bool> = watches
            .iter()
            .map(|&w| match w {
                Watch::Target => false,
                _ => self.watch_value(w, &x0, o) > threshold(w),
            })
            .collect();

        let mut samples = vec![Sample { t: t0, state: x0, lambda: self.lambda_of(kind, &x0, o) }];
        let (mut max_n, mut max_dl) = (0.0f64, 0.0f64);
        if stick {
            let (n, dl) = normal_speeds_oriented(&x0, o, p);
            max_n = n.abs();
            max_dl = dl.abs();
        }
        let mut t = t0;
        let mut y = x0.to_vector();
        let mut k1 = self.field(kind, o, &y);
        let mut h = self.o.h_init.min(self.o.h_max);

        let finish = |samples: Vec<Sample>, kind_e: EventKind, time: f64, state: State, detail: EventDetail| {
            let terminal = Event { kind: kind_e, time, state, detail };
            (TrajectorySegment { mode: kind, samples, terminal }, Next::Done)
        };

        loop {
            if let Some(tpos) = watches.iter().position(|&w| w == Watch::Target) {
                if self.target_usable() && !self.target_armed {
                    let s = State::from_vector(&y);
                    if self.watch_value(Watch::Target, &s, o) > 0.0 {
                        self.target_armed = true;
                    }
                }
                armed[tpos] = self.target_usable() && self.target_armed;
            }

            if t >= self.o.t_max {
                let s = State::from_vector(&y);
                return finish(samples, EventKind::TimeLimit, t, s, EventDetail::None);
            }
            if self.steps >= self.o.max_steps {
                let s = State::from_vector(&y);
                return finish(samples, EventKind::Stalled, t, s, EventDetail::Note("step budget exhausted".into()));
            }
            let remaining = self.o.t_max - t;
            let hs = h.min(self.o.h_max).min(remaining);
            let hmin = 1e-14 * t.abs().max(1.0);
            if hs < hmin && hs < remaining {
                let s = State::from_vector(&y);
                if stick {
                    let (n, dl) = normal_speeds_oriented(&s, o, p);
                    if n.abs() < 1e-4 * max_n && dl.abs() < 1e-4 * max_dl {
                        return finish(samples, EventKind::SingularityHit, t, s, EventDetail::None);
                    }
                }
                return finish(samples, EventKind::Stalled, t, s, EventDetail::Note("step size underflow".into()));
            }
            self.steps += 1;
            let f = |v: &V| self.field(kind, o, v);
            let st = rk::step(&f, t, &y, &k1, hs, self.o.rtol, self.o.atol);
            if !(st.err <= 1.0) {
                h = hs * rk::step_factor(st.err);
                continue;
            }
            let project = |v: V| -> State {
                let s = State::from_vector(&v);
                if stick {
                    project_to_surface(&s, p)
                } else {
                    s
                }
            };
            let s1 = project(st.y1);
            if !s1.is_finite() || s1.norm() > self.o.blowup_bound {
                let s = if s1.is_finite() { s1 } else { State::from_vector(&y) };
                let te = if s1.is_finite() { t + hs } else { t };
                samples.push(Sample { t: te, state: s, lambda: None });
                return finish(samples, EventKind::Blowup, te, s, EventDetail::None);
            }

            // a sign change seen only on the dense output shortens the step
            let end_vals: Vec<f64> = watches.iter().map(|&w| self.watch_value(w, &s1, o)).collect();
            let mut shorten = None;
            for theta in [0.25, 0.5, 0.75] {
                let si = project(st.interpolate(t + theta * hs));
                let hit = watches.iter().enumerate().any(|(i, &w)| {
                    armed[i] && end_vals[i] > 0.0 && self.watch_value(w, &si, o) <= 0.0
                });
                if hit {
                    shorten = Some(theta * hs);
                    break;
                }
            }
            if let Some(hn) = shorten {
                h = hn;
                continue;
            }

            let triggered: Vec<usize> = (0..watches.len()).filter(|&i| armed[i] && end_vals[i] <= 0.0).collect();
            if !triggered.is_empty() {
                let y0 = y;
                let k10 = k1;
                let eval_at = |tau: f64| -> State {
                    if tau <= 0.0 {
                        return State::from_vector(&y0);
                    }
                    project(rk::step(&f, t, &y0, &k10, tau, self.o.rtol, self.o.atol).y1)
                };
                let mut best: Option<(f64, State, Watch)> = None;
                for &i in &triggered {
                    let w = watches[i];
                    let ftol = match w {
                        Watch::Surface(_) => 0.5 * self.tol.event,
                        Watch::Upper | Watch::Lower => 0.5 * self.tol.lambda,
                        _ => 0.0,
                    };
                    let g0 = self.watch_value(w, &State::from_vector(&y0), o);
                    let (tau, _) = brent(
                        |tau| self.watch_value(w, &eval_at(tau), o),
                        0.0,
                        hs,
                        g0,
                        end_vals[i],
                        0.0,
                        ftol,
                        200,
                    );
                    if best.as_ref().is_none_or(|b| tau < b.0) {
                        best = Some((tau, eval_at(tau), w));
                    }
                }
                let (tau, se, w) = best.unwrap();
                let te = t + tau;
                return self.on_event(kind, o, samples, w, te, se);
            }

            t = if hs == remaining { self.o.t_max } else { t + hs };
            y = s1.to_vector();
            k1 = if stick { self.field(kind, o, &y) } else { st.k7 };
            samples.push(Sample { t, state: s1, lambda: self.lambda_of(kind, &s1, o) });
            for (i, &w) in watches.iter().enumerate() {
                if w == Watch::Target {
                    continue;
                }
                if !armed[i] {
                    if end_vals[i] > threshold(w) {
                        armed[i] = true;
                    } else if matches!(w, Watch::Surface(_)) && end_vals[i] < -self.tol.event {
                        return finish(
                            samples,
                            EventKind::Stalled,
                            t,
                            s1,
                            EventDetail::Note("slip left the surface on the wrong side".into()),
                        );
                    }
                }
            }
            if stick {
                let (n, dl) = normal_speeds_oriented(&s1, o, p);
                if n.abs() < self.tol.sing * max_n && dl.abs() < self.tol.sing * max_dl {
                    return finish(samples, EventKind::SingularityHit, t, s1, EventDetail::None);
                }
                max_n = max_n.max(n.abs());
                max_dl = max_dl.max(dl.abs());
            }
            h = hs * rk::step_factor(st.err);
        }
    }

    fn on_event(
        &mut self,
        kind: ContactKind,
        o: f64,
        mut samples: Vec<Sample>,
        w: Watch,
        te: f64,
        se: State,
    ) -> (TrajectorySegment, Next) {
        let p = self.p;
        let push = |samples: &mut Vec<Sample>, s: State| {
            if samples.last().is_none_or(|l| te > l.t) {
                samples.push(Sample { t: te, state: s, lambda: self.lambda_of(kind, &s, o) });
            }
        };
        let done = |samples: Vec<Sample>, k: EventKind, s: State, d: EventDetail| {
            (TrajectorySegment { mode: kind, samples, terminal: Event { kind: k, time: te, state: s, detail: d } }, Next::Done)
        };
        match w {
            Watch::Target => {
                push(&mut samples, se);
                done(samples, EventKind::TargetReached, se, EventDetail::None)
            }
            Watch::Adhesion(_) => {
                push(&mut samples, se);
                done(samples, EventKind::ZeroSlip, se, EventDetail::None)
            }
            Watch::Denominator(_) => {
                push(&mut samples, se);
                let (n, dl) = normal_speeds_oriented(&se, o, p);
                let detail = if n.abs() <= p.mu * dl.abs() + 1e-9 * p.velocity_scale() {
                    EventDetail::None
                } else {
                    EventDetail::Note(format!("normal speeds {n:e}, {dl:e}"))
                };
                done(samples, EventKind::SingularityHit, se, detail)
            }
            Watch::Upper | Watch::Lower => {
                push(&mut samples, se);
                let side = if w == Watch::Upper { Side::Positive } else { Side::Negative };
                let k = curvature(&se, side, o, p);
                let event = Event { kind: EventKind::SlidingExit, time: te, state: se, detail: EventDetail::Bound(side) };
                if side.sign() * k > 0.0 {
                    (TrajectorySegment { mode: kind, samples, terminal: event }, Next::Go(ContactKind::slip(side), te, se))
                } else {
                    done(
                        samples,
                        EventKind::Stalled,
                        se,
                        EventDetail::Note(format!("sliding exit without departure (curvature {k:e})")),
                    )
                }
            }
            Watch::Surface(side) => {
                let sp = project_to_surface(&se, p);
                push(&mut samples, sp);
                self.on_surface(kind, side, samples, te, sp)
            }
        }
    }

    fn on_surface(
        &mut self,
        kind: ContactKind,
        side: Side,
        samples: Vec<Sample>,
        te: f64,
        s: State,
    ) -> (TrajectorySegment, Next) {
        let p = self.p;
        let seg = |samples: Vec<Sample>, k: EventKind, d: EventDetail| TrajectorySegment {
            mode: kind,
            samples,
            terminal: Event { kind: k, time: te, state: s, detail: d },
        };
        let g = eval_g(&s, p);
        if g.abs() <= self.tol.zero_slip {
            return (seg(samples, EventKind::ZeroSlip, EventDetail::None), Next::Done);
        }
        let o = moment_orientation(&s, p);
        let (f0, fl) = f_and_f_lambda_oriented(&s, o, p);
        let gh = grad_h(&s, p);
        let (n, dl) = (gh.dot(&f0), gh.dot(&fl));
        let scale = gh.norm();
        if n.abs() < self.tol.sing * scale * f0.norm() && dl.abs() < self.tol.sing * scale * fl.norm() {
            return (seg(samples, EventKind::SingularityHit, EventDetail::None), Next::Done);
        }
        let speed = |sd: Side| n + sd.sign() * p.mu * dl;
        let sg = side.sign();
        if sg * speed(side) >= 0.0 {
            (seg(samples, EventKind::SurfaceHit, EventDetail::Graze), Next::Go(kind, te, s))
        } else if sg * speed(side.opposite()) < 0.0 {
            let next = ContactKind::slip(side.opposite());
            (seg(samples, EventKind::SurfaceHit, EventDetail::Crossing), Next::Go(next, te, s))
        } else {
            (seg(samples, EventKind::SurfaceHit, EventDetail::StickEntry), Next::Go(ContactKind::Stick, te, s))
        }
    }
}

/// All events of a run in order (one terminal event per segment).
pub fn events(segments: &[TrajectorySegment]) -> Vec<Event> {
    segments.iter().map(|s| s.terminal.clone()).collect()
}
