//! Two-fold singularities: design, search, curvature constants, normal form
//! and classification.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    eval_h, eval_p2, f_and_f_lambda, grad_h, grad_lie_f0, grad_lie_f_lambda, lie_f0, lie_f_lambda,
};
use crate::params::{BaseParams, State, SystemParams};

/// Designed singularity location and the device constants that place it there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub x_star: State,
    pub v_star: f64,
    pub kappa: f64,
    pub k2: f64,
    /// `h(x*)`
    pub residual_h: f64,
    /// `h_x . f(x*, +mu)`
    pub residual_plus: f64,
    /// `h_x . f(x*, -mu)`
    pub residual_minus: f64,
}

const DESIGN_TOL: f64 = 1e-9;

/// Chooses `kappa` and `k2` so that a two-fold singularity sits at
/// `(r_star, v*, omega_star)` on the surface, with `v*` fixed by `h = 0`.
pub fn design_singularity(r_star: f64, omega_star: f64, base: &BaseParams) -> Result<Design> {
    base.validate()?;
    let (sg, cg) = base.gamma.sin_cos();
    if r_star == 0.0 {
        return Err(Error::Denominator("r* = 0"));
    }
    if cg.abs() < 1e-14 {
        return Err(Error::Denominator("cos(gamma) = 0"));
    }
    if sg.abs() < 1e-14 {
        return Err(Error::Denominator("sin(gamma) = 0 (cot(gamma) in v*)"));
    }
    let BaseParams { d, m, beta, c1, c2, r0, omega0: w0, .. } = *base;
    if r_star - r0 == 0.0 {
        return Err(Error::Denominator("r* - r0 = 0"));
    }
    let (r, w) = (r_star, omega_star);
    let v = (w - w0) * (d - r * cg / sg);
    let kappa = -(2.0 * r * r + beta * beta * (1.0 - (2.0 * base.gamma).cos())) / (2.0 * r * cg);
    let probe = base.with_design(0.0, kappa)?;
    let p2 = eval_p2(r, &probe);
    if p2 == 0.0 {
        return Err(Error::Denominator("p2(r*) = 0"));
    }
    let b2 = beta * beta;
    let k2 = (sg * (b2 + r * r) * (m * r * w * w - c2 * v)
        - cg * (c1 * r * w + c2 * d * r * v + m * (r * r * (v * (w + w0) - d * w * w) + b2 * v * (w0 - w))))
        / ((r - r0) * p2);
    let p = base.with_design(k2, kappa)?;
    let x = State::new(r, v, w);
    let (f0, fl) = f_and_f_lambda(&x, &p);
    let gh = grad_h(&x, &p);
    let residual_h = eval_h(&x, &p);
    let residual_plus = gh.dot(&(f0 + p.mu * fl));
    let residual_minus = gh.dot(&(f0 - p.mu * fl));
    let worst = residual_h.abs().max(residual_plus.abs()).max(residual_minus.abs());
    if !(worst < DESIGN_TOL) {
        return Err(Error::DesignCheck(worst));
    }
    Ok(Design { x_star: x, v_star: v, kappa, k2, residual_h, residual_plus, residual_minus })
}

/// Window and seed density for [`find_singularities`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub n_r: usize,
    pub n_omega: usize,
    /// Speed seeds, used only when `h` does not depend on `v`.
    pub v_min: f64,
    pub v_max: f64,
}

impl SearchGrid {
    /// A window around the disc speed wide enough for the usual configurations.
    pub fn around(p: &SystemParams) -> Self {
        SearchGrid {
            r_min: -1.0,
            r_max: 1.0,
            omega_min: p.omega0 - 2.0,
            omega_max: p.omega0 + 2.0,
            n_r: 24,
            n_omega: 24,
            v_min: -1.0,
            v_max: 1.0,
        }
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![0.5 * (a + b)];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn residual(x: &State, p: &SystemParams) -> Vector3<f64> {
    Vector3::new(eval_h(x, p), lie_f0(x, p), lie_f_lambda(x.r, p))
}

fn jacobian(x: &State, p: &SystemParams) -> Matrix3<f64> {
    Matrix3::from_rows(&[
        grad_h(x, p).transpose(),
        grad_lie_f0(x, p).transpose(),
        grad_lie_f_lambda(x, p).transpose(),
    ])
}

fn newton(seed: State, p: &SystemParams) -> Option<State> {
    let mut x = seed;
    let mut res = residual(&x, p);
    for _ in 0..60 {
        if res.amax() <= 1e-13 {
            break;
        }
        let jac = jacobian(&x, p);
        let dx = jac.lu().solve(&(-res))?;
        let mut t = 1.0;
        loop {
            let trial = State::from_vector(&(x.to_vector() + t * dx));
            let tr = residual(&trial, p);
            if tr.norm() < res.norm() || t < 1e-6 {
                x = trial;
                res = tr;
                break;
            }
            t *= 0.5;
        }
        if !x.is_finite() || x.norm() > 1e6 {
            return None;
        }
    }
    if !(res.amax() <= 1e-12) {
        return None;
    }
    // isolated roots only: a singular Jacobian marks a curve of solutions
    let jac = jacobian(&x, p);
    let rows = (0..3).map(|i| jac.row(i).norm()).product::<f64>();
    if !(jac.determinant().abs() > 1e-9 * rows) {
        return None;
    }
    Some(x)
}

/// With `sin(gamma) = 0` the surface is `r (omega0 - omega) = 0`, so a root off
/// `r = 0` has `omega = omega0` exactly; `v` then follows from `h_x . f(x, 0)`,
/// which is affine in `v`.
fn snap(x: State, p: &SystemParams) -> State {
    if p.gamma.sin() != 0.0 || (x.omega - p.omega0).abs() > 1e-9 * (1.0 + p.omega0.abs()) {
        return x;
    }
    let at = |v: f64| lie_f0(&State::new(x.r, v, p.omega0), p);
    let (a, b) = (at(0.0), at(1.0) - at(0.0));
    if b == 0.0 {
        return x;
    }
    let y = State::new(x.r, -a / b, p.omega0);
    if residual(&y, p).amax() <= residual(&x, p).amax().max(1e-12) {
        y
    } else {
        x
    }
}

/// All isolated two-fold singularities reachable by Newton iteration from the
/// seed grid, sorted by `(r, omega, v)` and deduplicated at `1e-8`.
pub fn find_singularities(p: &SystemParams, grid: &SearchGrid) -> Vec<State> {
    let (sg, cg) = p.gamma.sin_cos();
    let mut seeds = Vec::new();
    for r in linspace(grid.r_min, grid.r_max, grid.n_r) {
        for w in linspace(grid.omega_min, grid.omega_max, grid.n_omega) {
            if sg.abs() > 1e-12 {
                let dw = w - p.omega0;
                seeds.push(State::new(r, p.d * dw - r * dw * cg / sg, w));
            } else {
                for v in linspace(grid.v_min, grid.v_max, 5) {
                    seeds.push(State::new(r, v, w));
                }
            }
        }
    }
    let mut roots: Vec<State> = seeds.par_iter().filter_map(|s| newton(*s, p)).map(|x| snap(x, p)).collect();
    roots.sort_by(|a, b| {
        a.r.total_cmp(&b.r).then(a.omega.total_cmp(&b.omega)).then(a.v.total_cmp(&b.v))
    });
    let mut out: Vec<State> = Vec::new();
    for x in roots {
        let dup = out.iter().any(|y| (x.to_vector() - y.to_vector()).amax() <= 1e-8);
        if !dup {
            out.push(x);
        }
    }
    out
}

/// Curvature constants `K^{sr} = d/dx (h_x . f(x, s mu)) . f(x, r mu)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaConstants {
    pub kpp: f64,
    pub kpm: f64,
    pub kmp: f64,
    pub kmm: f64,
}

fn kappa_from(gn: Vector3<f64>, gd: Vector3<f64>, x: &State, p: &SystemParams) -> KappaConstants {
    let (f0, fl) = f_and_f_lambda(x, p);
    let mu = p.mu;
    let k = |s: f64, r: f64| (gn + s * mu * gd).dot(&(f0 + r * mu * fl));
    KappaConstants { kpp: k(1.0, 1.0), kpm: k(1.0, -1.0), kmp: k(-1.0, 1.0), kmm: k(-1.0, -1.0) }
}

/// Curvature constants from the closed-form gradients.
pub fn kappa_constants(x: &State, p: &SystemParams) -> KappaConstants {
    kappa_from(grad_lie_f0(x, p), grad_lie_f_lambda(x, p), x, p)
}

/// Curvature constants with gradients by central differences of
/// `h_x . f`, step `1e-6 (1 + |x_i|)`.
pub fn kappa_constants_fd(x: &State, p: &SystemParams) -> KappaConstants {
    let lie = |y: &Vector3<f64>| {
        let s = State::from_vector(y);
        let (f0, fl) = f_and_f_lambda(&s, p);
        let gh = grad_h(&s, p);
        (gh.dot(&f0), gh.dot(&fl))
    };
    let xv = x.to_vector();
    let mut gn = Vector3::zeros();
    let mut gd = Vector3::zeros();
    for i in 0..3 {
        let step = 1e-6 * (1.0 + xv[i].abs());
        let mut a = xv;
        let mut b = xv;
        a[i] += step;
        b[i] -= step;
        let (na, da) = lie(&a);
        let (nb, db) = lie(&b);
        gn[i] = (na - nb) / (2.0 * step);
        gd[i] = (da - db) / (2.0 * step);
    }
    kappa_from(gn, gd, x, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseTag {
    /// Both eigenvalues negative: sliding flow funnels into the singularity.
    Case1,
    /// Both eigenvalues positive.
    Case2,
    /// Eigenvalues of opposite sign.
    Case3,
    /// `J1 J2 = 1`: a zero eigenvalue.
    Degenerate,
    /// Not both one-sided flows curve toward the surface.
    NotTeixeira,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularityReport {
    pub x_star: State,
    pub kpp: f64,
    pub kpm: f64,
    pub kmp: f64,
    pub kmm: f64,
    pub j1: f64,
    pub j2: f64,
    pub eig1: Option<f64>,
    pub eig2: Option<f64>,
    pub evec1: Option<[f64; 2]>,
    pub evec2: Option<[f64; 2]>,
    pub case_tag: CaseTag,
}

/// Eigenvalues `(larger, smaller)` of the normal-form matrix `[[j1, 1], [1, j2]]`.
pub fn eigenvalues(j1: f64, j2: f64) -> (f64, f64) {
    let disc = ((j1 - j2).powi(2) + 4.0).sqrt();
    (0.5 * (j1 + j2 + disc), 0.5 * (j1 + j2 - disc))
}

/// Case of a Teixeira singularity from its invariants.
pub fn case_of(j1: f64, j2: f64) -> CaseTag {
    let det = j1 * j2 - 1.0;
    if det.abs() <= 1e-12 * (j1 * j2).abs().max(1.0) {
        CaseTag::Degenerate
    } else if det < 0.0 {
        CaseTag::Case3
    } else if j1 < 0.0 {
        CaseTag::Case1
    } else {
        CaseTag::Case2
    }
}

/// Normal form and classification of the singularity at `x`.
pub fn normal_form(x: &State, p: &SystemParams) -> SingularityReport {
    let k = kappa_constants(x, p);
    let teixeira = k.kpp < 0.0 && 0.0 < k.kmm;
    let root = (k.kpp * k.kmm).abs().sqrt();
    let j1 = k.kmp / root;
    let j2 = -k.kpm / root;
    let mut report = SingularityReport {
        x_star: *x,
        kpp: k.kpp,
        kpm: k.kpm,
        kmp: k.kmp,
        kmm: k.kmm,
        j1,
        j2,
        eig1: None,
        eig2: None,
        evec1: None,
        evec2: None,
        case_tag: CaseTag::NotTeixeira,
    };
    if teixeira {
        let (l1, l2) = eigenvalues(j1, j2);
        report.eig1 = Some(l1);
        report.eig2 = Some(l2);
        report.evec1 = Some([l1 - j2, 1.0]);
        report.evec2 = Some([l2 - j2, 1.0]);
        report.case_tag = case_of(j1, j2);
    }
    report
}

/// Local sliding flow near the singularity in normal-form coordinates.
pub fn normal_form_flow(xi: f64, eta: f64, j1: f64, j2: f64) -> Result<(f64, f64)> {
    let s = xi + eta;
    if s == 0.0 {
        return Err(Error::Domain("normal-form flow is undefined on xi + eta = 0".into()));
    }
    Ok(((j1 * xi + eta) / s, (xi + j2 * eta) / s))
}
