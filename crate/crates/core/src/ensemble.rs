//! Re-injection ensembles: members start near the singularity in the escaping
//! region, are kicked off the surface and followed until they come back.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filippov::{
    classify, integrate, Event, EventDetail, EventKind, IntegratorOptions, RegionTag, TargetBall,
    TrajectorySegment,
};
use crate::model::{eval_h, grad_h, ContactKind, Side};
use crate::params::{State, SystemParams};

const MAX_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub n: usize,
    pub eps: f64,
    pub seed: u64,
    pub t_max: f64,
    pub return_radius: f64,
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || !(self.eps > 0.0) || !(self.return_radius > 0.0) || !(self.t_max >= 0.0) {
            return Err(Error::Domain(format!("invalid ensemble configuration {self:?}")));
        }
        Ok(())
    }
}

/// Proposal of `(dr, domega)` offsets from the singularity; the speed follows
/// from `h = 0`.
pub trait InjectionSampler: Sync {
    fn propose(&self, rng: &mut ChaCha8Rng, eps: f64) -> (f64, f64);
}

/// Uniform on the disc of radius `eps` in the `(r, omega)` plane.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformDisc;

impl InjectionSampler for UniformDisc {
    fn propose(&self, rng: &mut ChaCha8Rng, eps: f64) -> (f64, f64) {
        loop {
            let a: f64 = rng.gen_range(-1.0..=1.0);
            let b: f64 = rng.gen_range(-1.0..=1.0);
            if a * a + b * b <= 1.0 {
                return (eps * a, eps * b);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Injection {
    pub member_id: usize,
    /// Escaping-region point on the surface.
    pub on_surface: State,
    pub kick: Side,
    /// Starting state after the off-surface kick.
    pub state: State,
}

/// Per-member random stream, independent of evaluation order.
pub fn member_rng(seed: u64, member_id: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(member_id as u64);
    rng
}

fn inject_member<S: InjectionSampler>(
    member_id: usize,
    x_star: &State,
    p: &SystemParams,
    cfg: &EnsembleConfig,
    sampler: &S,
) -> Result<Injection> {
    let (sg, cg) = p.gamma.sin_cos();
    if sg.abs() < 1e-12 {
        return Err(Error::Injection("the surface cannot be parametrized by (r, omega) when sin(gamma) = 0".into()));
    }
    let mut rng = member_rng(cfg.seed, member_id);
    for _ in 0..MAX_ATTEMPTS {
        let (dr, dw) = sampler.propose(&mut rng, cfg.eps);
        let r = x_star.r + dr;
        let w = x_star.omega + dw;
        let dw0 = w - p.omega0;
        let v = p.d * dw0 - r * dw0 * cg / sg;
        let s = State::new(r, v, w);
        if s.distance(x_star) > cfg.eps {
            continue;
        }
        let Ok(region) = classify(&s, p) else { continue };
        if region.tag != RegionTag::Escaping {
            continue;
        }
        let kick = if rng.gen::<bool>() { Side::Positive } else { Side::Negative };
        let gh = grad_h(&s, p);
        let dh = cfg.eps / 100.0;
        let mut state = State::from_vector(&(s.to_vector() + kick.sign() * dh / gh.norm_squared() * gh));
        if eval_h(&state, p) * kick.sign() <= 0.0 {
            state = State::from_vector(&(s.to_vector() + 2.0 * kick.sign() * dh / gh.norm_squared() * gh));
        }
        return Ok(Injection { member_id, on_surface: s, kick, state });
    }
    Err(Error::Injection(format!(
        "no escaping point found within eps = {} of the singularity after {MAX_ATTEMPTS} proposals",
        cfg.eps
    )))
}

/// Samples `cfg.n` escaping-region points near `x_star` with the given sampler.
pub fn inject_with<S: InjectionSampler>(
    x_star: &State,
    p: &SystemParams,
    cfg: &EnsembleConfig,
    sampler: &S,
) -> Result<Vec<Injection>> {
    cfg.validate()?;
    (0..cfg.n).into_par_iter().map(|i| inject_member(i, x_star, p, cfg, sampler)).collect()
}

/// Uniform re-injection, see [`UniformDisc`].
pub fn inject(x_star: &State, p: &SystemParams, cfg: &EnsembleConfig) -> Result<Vec<Injection>> {
    inject_with(x_star, p, cfg, &UniformDisc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleOutcome {
    pub member_id: usize,
    pub injected_state: State,
    pub kick: Side,
    pub events: Vec<Event>,
    pub segments: Vec<TrajectorySegment>,
    pub returned: bool,
    pub return_time: Option<f64>,
    pub singularity_return: bool,
    pub n_crossings: usize,
    pub n_stick_segments: usize,
    pub first_crossing: Option<State>,
    pub error: Option<String>,
}

impl EnsembleOutcome {
    pub fn terminal(&self) -> Option<&Event> {
        self.events.last()
    }
}

/// Integrates every injected member until it returns to the singularity, enters
/// the return ball after having slid, or runs out of time.
pub fn run_ensemble(
    x_star: &State,
    p: &SystemParams,
    cfg: &EnsembleConfig,
    opts: &IntegratorOptions,
) -> Result<Vec<EnsembleOutcome>> {
    let injections = inject(x_star, p, cfg)?;
    let opts = IntegratorOptions {
        t_max: cfg.t_max,
        target: Some(TargetBall { center: *x_star, radius: cfg.return_radius, after_stick: true }),
        ..opts.clone()
    };
    Ok(injections.par_iter().map(|inj| run_member(inj, p, &opts)).collect())
}

fn run_member(inj: &Injection, p: &SystemParams, opts: &IntegratorOptions) -> EnsembleOutcome {
    let mut out = EnsembleOutcome {
        member_id: inj.member_id,
        injected_state: inj.state,
        kick: inj.kick,
        events: Vec::new(),
        segments: Vec::new(),
        returned: false,
        return_time: None,
        singularity_return: false,
        n_crossings: 0,
        n_stick_segments: 0,
        first_crossing: None,
        error: None,
    };
    let segments = match integrate(inj.state, ContactKind::slip(inj.kick), p, opts) {
        Ok(s) => s,
        Err(e) => {
            out.error = Some(e.to_string());
            return out;
        }
    };
    out.events = segments.iter().map(|s| s.terminal.clone()).collect();
    out.n_crossings = out.events.iter().filter(|e| e.detail == EventDetail::Crossing).count();
    out.n_stick_segments = segments.iter().filter(|s| s.mode == ContactKind::Stick).count();
    out.first_crossing = out.events.iter().find(|e| e.detail == EventDetail::Crossing).map(|e| e.state);
    if let Some(last) = out.events.last() {
        match last.kind {
            EventKind::TargetReached => {
                out.returned = true;
                out.return_time = Some(last.time);
            }
            EventKind::SingularityHit => {
                out.returned = true;
                out.singularity_return = true;
                out.return_time = Some(last.time);
            }
            _ => {}
        }
    }
    out.segments = segments;
    out
}

/// Checks the recurrence pattern: slip with at least one crossing, entry into
/// stick, possibly further exit/slip/stick rounds, and a return to the
/// singularity or its neighbourhood.
pub fn follows_cycle_grammar(outcome: &EnsembleOutcome) -> bool {
    let ev = &outcome.events;
    let Some((last, body)) = ev.split_last() else { return false };
    if !matches!(last.kind, EventKind::SingularityHit | EventKind::TargetReached) {
        return false;
    }
    let mut crossings = 0;
    let mut slid = false;
    let mut in_stick = false;
    for e in body {
        match (e.kind, &e.detail, in_stick) {
            (EventKind::SurfaceHit, EventDetail::Crossing, false) => crossings += 1,
            (EventKind::SurfaceHit, EventDetail::Graze, false) => {}
            (EventKind::SurfaceHit, EventDetail::StickEntry, false) => {
                in_stick = true;
                slid = true;
            }
            (EventKind::SlidingExit, _, true) => in_stick = false,
            _ => return false,
        }
    }
    crossings > 0 && slid
}

/// Largest distance between first-crossing states of the members that cross.
pub fn first_crossing_spread(outcomes: &[EnsembleOutcome]) -> f64 {
    let pts: Vec<State> = outcomes.iter().filter_map(|o| o.first_crossing).collect();
    let mut best = 0.0f64;
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            best = best.max(a.distance(b));
        }
    }
    best
}
