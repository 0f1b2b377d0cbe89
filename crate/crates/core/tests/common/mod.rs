#![allow(dead_code)]

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twofold::filippov::{classify, RegionTag};
use twofold::singularity::{design_singularity, Design};
use twofold::{BaseParams, State, SystemParams};

pub const R_STAR: f64 = 0.1859;
pub const OMEGA_STAR: f64 = -1.037;

/// Reference turntable with the singularity designed at `(R_STAR, OMEGA_STAR)`.
pub fn designed() -> (SystemParams, Design) {
    let base = BaseParams::reference();
    let d = design_singularity(R_STAR, OMEGA_STAR, &base).unwrap();
    (base.with_design(d.k2, d.kappa).unwrap(), d)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Reduced field rebuilt from the free-body balances of the slider (across and
/// along the slit) and of the top disc, solved for the accelerations and the
/// slit reaction, then multiplied by the time-rescaling factor.
pub fn free_body_field(s: &State, force: f64, moment: f64, p: &SystemParams) -> Vector3<f64> {
    let (sg, cg) = p.gamma.sin_cos();
    let (r, v, w) = (s.r, s.v, s.omega);
    let m = p.m;
    let theta = m * p.beta * p.beta;
    let spring = -p.k2 * (r - p.r0) - p.c2 * v;
    // unknowns: (r'', omega', R1)
    let a = Matrix3::new(
        0.0, -m * r, -1.0, //
        m, -m * p.d, 0.0, //
        0.0, theta, -r,
    );
    let b = Vector3::new(
        -m * p.d * w * w + 2.0 * m * v * w - force * cg,
        spring + force * sg + m * r * w * w,
        -p.c1 * w + p.d * spring + moment,
    );
    let x = a.lu().solve(&b).expect("free-body system is regular");
    m * (p.beta * p.beta + r * r) * Vector3::new(v, x[0], x[1])
}

pub fn on_surface(p: &SystemParams, r: f64, omega: f64) -> State {
    let (sg, cg) = p.gamma.sin_cos();
    let dw = omega - p.omega0;
    State::new(r, p.d * dw - r * dw * cg / sg, omega)
}

/// Random points of the sliding region near the singularity.
pub fn sliding_points(p: &SystemParams, x_star: &State, n: usize, seed: u64) -> Vec<State> {
    let r = (x_star.r - 0.05, x_star.r + 0.05);
    let w = (x_star.omega - 0.15, x_star.omega + 0.05);
    sliding_points_in(p, r, w, n, seed)
}

/// Random points of the sliding region with `(r, omega)` in the given ranges.
pub fn sliding_points_in(p: &SystemParams, r: (f64, f64), w: (f64, f64), n: usize, seed: u64) -> Vec<State> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < n {
        let s = on_surface(p, rng.gen_range(r.0..r.1), rng.gen_range(w.0..w.1));
        if classify(&s, p).map(|c| c.tag) == Ok(RegionTag::Sliding) {
            out.push(s);
        }
    }
    out
}
