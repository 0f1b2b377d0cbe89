use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Time derivative of a [`State`], in `(r, v, omega)` order.
pub type StateDerivative = Vector3<f64>;

/// Physical constants of the device.
///
/// `beta` is the radius of gyration of the top disc (`Theta = beta^2 m`),
/// `kappa` the arm tying the friction moment to the friction force in stick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    pub d: f64,
    pub m: f64,
    pub beta: f64,
    pub c1: f64,
    pub c2: f64,
    pub k2: f64,
    pub r0: f64,
    pub omega0: f64,
    pub mu: f64,
    pub gamma: f64,
    pub kappa: f64,
}

/// The constants that are fixed before `k2` and `kappa` are designed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseParams {
    pub d: f64,
    pub m: f64,
    pub beta: f64,
    pub c1: f64,
    pub c2: f64,
    pub r0: f64,
    pub omega0: f64,
    pub mu: f64,
    pub gamma: f64,
}

fn check_base(m: f64, beta: f64, mu: f64, gamma: f64, values: &[(&str, f64)]) -> Result<()> {
    for (name, x) in values {
        if !x.is_finite() {
            return Err(Error::InvalidParams(format!("{name} must be finite, got {x}")));
        }
    }
    if m <= 0.0 {
        return Err(Error::InvalidParams(format!("m must be positive, got {m}")));
    }
    if beta <= 0.0 {
        return Err(Error::InvalidParams(format!("beta must be positive, got {beta}")));
    }
    if mu <= 0.0 {
        return Err(Error::InvalidParams(format!("mu must be positive, got {mu}")));
    }
    if !(gamma > -std::f64::consts::PI && gamma <= std::f64::consts::PI) {
        return Err(Error::InvalidParams(format!("gamma must lie in (-pi, pi], got {gamma}")));
    }
    Ok(())
}

impl BaseParams {
    pub fn validate(&self) -> Result<()> {
        check_base(
            self.m,
            self.beta,
            self.mu,
            self.gamma,
            &[
                ("d", self.d),
                ("m", self.m),
                ("beta", self.beta),
                ("c1", self.c1),
                ("c2", self.c2),
                ("r0", self.r0),
                ("omega0", self.omega0),
                ("mu", self.mu),
                ("gamma", self.gamma),
            ],
        )
    }

    pub fn with_design(&self, k2: f64, kappa: f64) -> Result<SystemParams> {
        SystemParams::new(SystemParams {
            d: self.d,
            m: self.m,
            beta: self.beta,
            c1: self.c1,
            c2: self.c2,
            k2,
            r0: self.r0,
            omega0: self.omega0,
            mu: self.mu,
            gamma: self.gamma,
            kappa,
        })
    }

    /// The fixed constants of the reference turntable configuration.
    pub fn reference() -> Self {
        BaseParams {
            d: 1.0,
            m: 1.0,
            beta: 0.05,
            c1: 1e-3,
            c2: 1e-3,
            r0: 0.1,
            omega0: -1.0,
            mu: 1.0,
            gamma: -0.75 * std::f64::consts::PI,
        }
    }
}

impl SystemParams {
    /// Validates and returns the parameters.
    pub fn new(p: SystemParams) -> Result<Self> {
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.base().validate()?;
        for (name, x) in [("k2", self.k2), ("kappa", self.kappa)] {
            if !x.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be finite, got {x}")));
            }
        }
        Ok(())
    }

    pub fn base(&self) -> BaseParams {
        BaseParams {
            d: self.d,
            m: self.m,
            beta: self.beta,
            c1: self.c1,
            c2: self.c2,
            r0: self.r0,
            omega0: self.omega0,
            mu: self.mu,
            gamma: self.gamma,
        }
    }

    /// Moment of inertia of the top disc.
    pub fn theta(&self) -> f64 {
        self.beta * self.beta * self.m
    }

    /// Typical speed used to scale velocity-like tolerances.
    pub fn velocity_scale(&self) -> f64 {
        let s = self.omega0.abs() * (self.d.abs() + self.r0.abs() + self.beta);
        if s > 0.0 {
            s
        } else {
            1.0
        }
    }

    /// Positive factor `m (beta^2 + r^2)` relating rescaled time to physical time:
    /// `dt_physical = dt_rescaled * time_factor(r)`.
    pub fn time_factor(&self, r: f64) -> f64 {
        self.m * (self.beta * self.beta + r * r)
    }
}

/// Reduced phase point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub r: f64,
    pub v: f64,
    pub omega: f64,
}

impl State {
    pub fn new(r: f64, v: f64, omega: f64) -> Self {
        State { r, v, omega }
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.r, self.v, self.omega)
    }

    pub fn from_vector(x: &Vector3<f64>) -> Self {
        State { r: x[0], v: x[1], omega: x[2] }
    }

    pub fn is_finite(&self) -> bool {
        self.r.is_finite() && self.v.is_finite() && self.omega.is_finite()
    }

    pub fn norm(&self) -> f64 {
        self.to_vector().norm()
    }

    pub fn distance(&self, other: &State) -> f64 {
        (self.to_vector() - other.to_vector()).norm()
    }
}

/// Converts a sequence of rescaled-time samples to physical time by
/// integrating `dt_phys = m (beta^2 + r^2) dt` with the trapezoidal rule.
pub fn physical_times(samples: &[(f64, State)], p: &SystemParams) -> Vec<f64> {
    let mut out = Vec::with_capacity(samples.len());
    let mut acc = 0.0;
    for (i, (t, s)) in samples.iter().enumerate() {
        if i > 0 {
            let (t_prev, s_prev) = samples[i - 1];
            acc += 0.5 * (t - t_prev) * (p.time_factor(s.r) + p.time_factor(s_prev.r));
        }
        out.push(acc);
    }
    out
}
