//! Stretched-string tyre model: the raw three-regime law in the slip angle and
//! the scaled discontinuous law in the contact velocities `(h, g)`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Side;
use crate::params::SystemParams;

/// Contact-line constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TyreParams {
    /// Lateral stiffness.
    pub k: f64,
    /// Half-length of the contact patch.
    pub a: f64,
    /// Relaxation length.
    pub sigma: f64,
    /// Maximal static lateral pressure.
    pub delta: f64,
    /// Dynamic to static pressure ratio.
    pub rho: f64,
}

impl TyreParams {
    pub fn new(k: f64, a: f64, sigma: f64, delta: f64, rho: f64) -> Result<Self> {
        let tp = TyreParams { k, a, sigma, delta, rho };
        tp.validate()?;
        Ok(tp)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.k > 0.0
            && self.a > 0.0
            && self.sigma >= 0.0
            && self.delta > 0.0
            && self.rho > 0.0
            && self.rho <= 1.0
            && [self.k, self.a, self.sigma, self.delta, self.rho].iter().all(|x| x.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidTyre(format!("{self:?}")))
        }
    }

    /// Constants for which the raw law, after rescaling the slip angle, becomes
    /// the scaled law with friction-moment arm `kappa` (per unit `mu`).
    pub fn specialized(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(Error::InvalidTyre(format!("kappa must be positive, got {kappa}")));
        }
        let k = 1.0 / (3.0 * kappa);
        TyreParams::new(k, 3.0 * kappa, 0.0, k, 2.0 / 3.0)
    }

    /// Slip angles at which the slip point enters the patch (`x_s = -a`) and
    /// leaves it (`x_s = a`).
    pub fn boundary_angles(&self) -> (f64, f64) {
        let enter = arccot(self.k * (2.0 * self.a + self.sigma) / self.delta);
        let leave = if self.sigma > 0.0 { arccot(self.k * self.sigma / self.delta) } else { FRAC_PI_2 };
        (enter, leave)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    NoSlip,
    PartialSlip,
    CompleteSlip,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::NoSlip => "no_slip",
            Regime::PartialSlip => "partial_slip",
            Regime::CompleteSlip => "complete_slip",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TyreOutput {
    pub force: f64,
    pub moment: f64,
    pub regime: Regime,
}

/// Inverse cotangent with range `(0, pi)`.
pub fn arccot(x: f64) -> f64 {
    FRAC_PI_2 - x.atan()
}

/// Steady lateral deformation of the contact line at `x`, capped at `delta / k`.
pub fn deformation_profile(x: f64, phi: f64, tp: &TyreParams) -> Result<f64> {
    if x.abs() > tp.a || !(0.0..FRAC_PI_2).contains(&phi) {
        return Err(Error::Domain(format!("deformation profile at x = {x}, phi = {phi}")));
    }
    Ok(((tp.a + tp.sigma - x) * phi.tan()).min(tp.delta / tp.k))
}

/// Point of the contact line where the deformation saturates.
pub fn slip_boundary(phi: f64, tp: &TyreParams) -> Result<f64> {
    if !(phi > 0.0 && phi < FRAC_PI_2) {
        return Err(Error::Domain(format!("slip boundary needs 0 < phi < pi/2, got {phi}")));
    }
    Ok(tp.a + tp.sigma - tp.delta / (tp.k * phi.tan()))
}

/// Lateral force and aligning moment as functions of the slip angle.
pub fn force_moment_raw(phi: f64, tp: &TyreParams) -> Result<TyreOutput> {
    if !(0.0..=FRAC_PI_2).contains(&phi) {
        return Err(Error::Domain(format!("slip angle must lie in [0, pi/2], got {phi}")));
    }
    let TyreParams { k, a, sigma, delta, rho } = *tp;
    if phi == 0.0 {
        return Ok(TyreOutput { force: 0.0, moment: 0.0, regime: Regime::NoSlip });
    }
    let cot = if phi == FRAC_PI_2 { 0.0 } else { 1.0 / phi.tan() };
    let xs = a + sigma - delta * cot / k;
    if xs <= -a {
        let tan = phi.tan();
        return Ok(TyreOutput {
            force: 2.0 * a * k * (a + sigma) * tan,
            moment: 2.0 / 3.0 * a.powi(3) * k * tan,
            regime: Regime::NoSlip,
        });
    }
    if xs >= a {
        return Ok(TyreOutput { force: 2.0 * a * rho * delta, moment: 0.0, regime: Regime::CompleteSlip });
    }
    // sigma^2 tan(phi) vanishes with sigma, also at phi = pi/2
    let s2tan = if sigma == 0.0 { 0.0 } else { sigma * sigma * phi.tan() };
    let force = rho * delta * (2.0 * a + sigma) + delta * delta / (2.0 * k) * (1.0 - 2.0 * rho) * cot
        - 0.5 * k * s2tan;
    let moment = k * s2tan * (3.0 * a + sigma) / 6.0
        + delta * delta * cot * (2.0 * delta * cot - 3.0 * k * (a + sigma)) / (6.0 * k * k)
        - 0.5 * rho * delta * (xs * xs - a * a);
    Ok(TyreOutput { force, moment, regime: Regime::PartialSlip })
}

/// Rescaled slip angle `psi` for contact velocities `(h, g)`.
pub fn psi(h: f64, g: f64, kappa: f64) -> f64 {
    let base = arccot(6.0 * kappa);
    base + (1.0 - 2.0 / std::f64::consts::PI * base).abs() * h.abs().atan2(g.abs())
}

/// Scaled friction force and moment for `(h, g) != (0, 0)`.
pub fn force_moment_scaled(h: f64, g: f64, p: &SystemParams) -> Result<(f64, f64)> {
    if h == 0.0 && g == 0.0 {
        return Err(Error::Domain("friction law is undefined at h = g = 0".into()));
    }
    if h == 0.0 {
        return Ok((0.0, 0.0));
    }
    let side = if h > 0.0 { Side::Positive } else { Side::Negative };
    Ok(scaled_one_sided(side, h, g, p))
}

/// Scaled law with `sign(h)` replaced by `side`, so that it can be evaluated on
/// the surface as a one-sided limit. At `h = g = 0` the limit along `g > 0` is used.
pub fn scaled_one_sided(side: Side, h: f64, g: f64, p: &SystemParams) -> (f64, f64) {
    let cot = 1.0 / psi(h, g, p.kappa).tan();
    let sh = side.sign();
    let sgn_g = if g < 0.0 { -1.0 } else { 1.0 };
    let force = sh * p.mu * (4.0 / 3.0 - cot / (18.0 * p.kappa));
    let moment = sgn_g * sh * p.mu / 6.0 * cot;
    (force, moment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_angle_is_free() {
        let tp = TyreParams::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let out = force_moment_raw(0.0, &tp).unwrap();
        assert_eq!((out.force, out.moment, out.regime), (0.0, 0.0, Regime::NoSlip));
        for x in [-1.0, 0.0, 0.5] {
            assert_eq!(deformation_profile(x, 0.0, &tp).unwrap(), 0.0);
        }
    }

    #[test]
    fn right_angle_is_complete_slip() {
        let tp = TyreParams::new(1.3, 0.7, 0.4, 0.9, 0.8).unwrap();
        let out = force_moment_raw(FRAC_PI_2, &tp).unwrap();
        assert_eq!(out.regime, Regime::CompleteSlip);
        assert_relative_eq!(out.force, 2.0 * 0.7 * 0.8 * 0.9, epsilon = 1e-15);
        assert_eq!(out.moment, 0.0);
        assert!(force_moment_raw(1.6, &tp).is_err());
        assert!(force_moment_raw(-0.1, &tp).is_err());
    }

    #[test]
    fn leading_edge_relaxation() {
        let tp = TyreParams::new(2.0, 1.0, 0.6, 100.0, 1.0).unwrap();
        let phi = 0.3;
        let q_a = deformation_profile(tp.a, phi, &tp).unwrap();
        let slope = -phi.tan();
        assert_relative_eq!(tp.sigma * slope, -q_a, epsilon = 1e-14);
    }

    #[test]
    fn specialized_boundary() {
        for kappa in [0.1, 0.27, 0.8] {
            let tp = TyreParams::specialized(kappa).unwrap();
            let (enter, leave) = tp.boundary_angles();
            assert_relative_eq!(enter.tan(), 1.0 / (18.0 * tp.k * kappa * kappa), epsilon = 1e-12);
            assert_relative_eq!(slip_boundary(enter, &tp).unwrap(), -tp.a, epsilon = 1e-12);
            assert_eq!(leave, FRAC_PI_2);
        }
    }

    #[test]
    fn scaled_limits() {
        let p = crate::BaseParams::reference().with_design(2.2, 0.27).unwrap();
        let (f, m) = force_moment_scaled(1.0, 0.0, &p).unwrap();
        assert_relative_eq!(f, 4.0 / 3.0, epsilon = 1e-15);
        assert!(m.abs() < 1e-15);
        let (f, m) = force_moment_scaled(1e-300, 1.0, &p).unwrap();
        assert_relative_eq!(f, 1.0, epsilon = 1e-12);
        assert_relative_eq!(m, 0.27, epsilon = 1e-12);
        assert!(force_moment_scaled(0.0, 0.0, &p).is_err());
    }
}
