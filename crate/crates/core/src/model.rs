//! Right-hand side of the reduced equations of motion.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{State, StateDerivative, SystemParams};
use crate::tyre;

/// Side of the switching surface `h = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Positive,
    Negative,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Positive => 1.0,
            Side::Negative => -1.0,
        }
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::Positive => Side::Negative,
            Side::Negative => Side::Positive,
        }
    }

    pub fn of(h: f64) -> Option<Side> {
        if h > 0.0 {
            Some(Side::Positive)
        } else if h < 0.0 {
            Some(Side::Negative)
        } else {
            None
        }
    }
}

/// Contact state at the wheel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ContactMode {
    SlipPositive,
    SlipNegative,
    Stick { lambda: f64 },
}

/// Contact state without the stick force, used to tag trajectory segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ContactKind {
    SlipPositive,
    SlipNegative,
    Stick,
}

impl ContactKind {
    pub fn slip(side: Side) -> Self {
        match side {
            Side::Positive => ContactKind::SlipPositive,
            Side::Negative => ContactKind::SlipNegative,
        }
    }

    pub fn side(self) -> Option<Side> {
        match self {
            ContactKind::SlipPositive => Some(Side::Positive),
            ContactKind::SlipNegative => Some(Side::Negative),
            ContactKind::Stick => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ContactKind::SlipPositive => "slip+",
            ContactKind::SlipNegative => "slip-",
            ContactKind::Stick => "stick",
        }
    }
}

impl ContactMode {
    pub fn kind(&self) -> ContactKind {
        match self {
            ContactMode::SlipPositive => ContactKind::SlipPositive,
            ContactMode::SlipNegative => ContactKind::SlipNegative,
            ContactMode::Stick { .. } => ContactKind::Stick,
        }
    }
}

/// Lateral relative velocity at the contact; the switching function.
pub fn eval_h(s: &State, p: &SystemParams) -> f64 {
    let (sg, cg) = p.gamma.sin_cos();
    let dw = s.omega - p.omega0;
    -(s.v - p.d * dw) * sg - s.r * dw * cg
}

/// Relative velocity at the contact in the rolling direction.
pub fn eval_g(s: &State, p: &SystemParams) -> f64 {
    let (sg, cg) = p.gamma.sin_cos();
    let dw = s.omega - p.omega0;
    -(s.v - p.d * dw) * cg + s.r * dw * sg
}

/// Gradient of `h` with respect to `(r, v, omega)`.
pub fn grad_h(s: &State, p: &SystemParams) -> Vector3<f64> {
    let (sg, cg) = p.gamma.sin_cos();
    Vector3::new(-(s.omega - p.omega0) * cg, -sg, p.d * sg - s.r * cg)
}

pub fn eval_p1(s: &State, p: &SystemParams) -> f64 {
    p.k2 * (p.r0 - s.r) - p.c2 * s.v + p.m * s.r * s.omega * s.omega
}

pub fn eval_p2(r: f64, p: &SystemParams) -> f64 {
    let (sg, cg) = p.gamma.sin_cos();
    p.d * r * cg + (p.beta * p.beta + r * r) * sg
}

/// Reduced field for given friction force `f` and moment `moment`.
pub fn field_with_forces(s: &State, force: f64, moment: f64, p: &SystemParams) -> StateDerivative {
    let cg = p.gamma.cos();
    let b2 = p.beta * p.beta;
    let r = s.r;
    let p1 = eval_p1(s, p);
    let p2 = eval_p2(r, p);
    let damp = (p.c1 + 2.0 * p.m * r * s.v) * s.omega;
    Vector3::new(
        p.m * (b2 + r * r) * s.v,
        (b2 + p.d * p.d + r * r) * p1 - p.d * damp + p2 * force + p.d * moment,
        p.d * p1 - damp + r * cg * force + moment,
    )
}

/// One-sided slip field on `side`, usable on the surface itself.
pub fn slip_field(s: &State, side: Side, p: &SystemParams) -> StateDerivative {
    let (force, moment) = tyre::scaled_one_sided(side, eval_h(s, p), eval_g(s, p), p);
    field_with_forces(s, force, moment, p)
}

/// Evaluates the reduced field in the given contact mode.
pub fn vector_field(s: &State, mode: ContactMode, p: &SystemParams) -> Result<StateDerivative> {
    match mode {
        ContactMode::Stick { lambda } => {
            if !(lambda.abs() <= p.mu) {
                return Err(Error::StickBound { lambda, mu: p.mu });
            }
            Ok(field_with_forces(s, lambda, p.kappa * lambda, p))
        }
        ContactMode::SlipPositive | ContactMode::SlipNegative => {
            let side = mode.kind().side().unwrap();
            let h = eval_h(s, p);
            if h * side.sign() < 0.0 {
                return Err(Error::ModeMismatch { h });
            }
            Ok(slip_field(s, side, p))
        }
    }
}

/// Stick field split as `f(x, 0)` and the direction `f_lambda` multiplying the
/// stick force, with the moment tied to the force by `M = kappa * lambda`.
pub fn f_and_f_lambda(s: &State, p: &SystemParams) -> (StateDerivative, StateDerivative) {
    f_and_f_lambda_oriented(s, 1.0, p)
}

/// As [`f_and_f_lambda`] with `M = orientation * kappa * lambda`.
///
/// The moment in slip carries a factor `sign(g)`, so the stick law that joins
/// continuously to the slip limits on either side uses `orientation = sign(g)`.
/// With `g > 0` this is the plain law `M = kappa * lambda`.
pub fn f_and_f_lambda_oriented(
    s: &State,
    orientation: f64,
    p: &SystemParams,
) -> (StateDerivative, StateDerivative) {
    let f0 = field_with_forces(s, 0.0, 0.0, p);
    let k = orientation * p.kappa;
    let f_lambda = Vector3::new(0.0, eval_p2(s.r, p) + p.d * k, s.r * p.gamma.cos() + k);
    (f0, f_lambda)
}

/// Orientation of the stick moment law at `s`: `sign(g)`, with `+1` at `g = 0`.
pub fn moment_orientation(s: &State, p: &SystemParams) -> f64 {
    if eval_g(s, p) < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Closed form of `h_x . f(x, 0)`.
pub fn lie_f0(s: &State, p: &SystemParams) -> f64 {
    let cg = p.gamma.cos();
    let b2 = p.beta * p.beta;
    let r = s.r;
    -p.m * (b2 + r * r) * (s.omega - p.omega0) * s.v * cg - eval_p2(r, p) * eval_p1(s, p)
        + r * cg * (p.c1 + 2.0 * p.m * r * s.v) * s.omega
}

/// Closed form of `h_x . f_lambda` for the plain moment law; depends on `r` only.
pub fn lie_f_lambda(r: f64, p: &SystemParams) -> f64 {
    let (sg, cg) = p.gamma.sin_cos();
    -(p.beta * p.beta * sg * sg + r * r + p.kappa * r * cg)
}

/// Gradient of [`lie_f0`].
pub fn grad_lie_f0(s: &State, p: &SystemParams) -> Vector3<f64> {
    let (sg, cg) = p.gamma.sin_cos();
    let b2 = p.beta * p.beta;
    let (r, v, w) = (s.r, s.v, s.omega);
    let dw = w - p.omega0;
    let p1 = eval_p1(s, p);
    let p2 = eval_p2(r, p);
    let dp2 = p.d * cg + 2.0 * r * sg;
    Vector3::new(
        -2.0 * p.m * r * dw * v * cg - dp2 * p1 + p2 * (p.k2 - p.m * w * w)
            + cg * w * (p.c1 + 4.0 * p.m * r * v),
        -p.m * (b2 + r * r) * dw * cg + p.c2 * p2 + 2.0 * p.m * r * r * w * cg,
        -p.m * (b2 + r * r) * v * cg - 2.0 * p.m * r * w * p2 + r * cg * (p.c1 + 2.0 * p.m * r * v),
    )
}

/// Gradient of [`lie_f_lambda`].
pub fn grad_lie_f_lambda(s: &State, p: &SystemParams) -> Vector3<f64> {
    Vector3::new(-(2.0 * s.r + p.kappa * p.gamma.cos()), 0.0, 0.0)
}
