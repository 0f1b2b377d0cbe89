//! Dormand-Prince 5(4) steps with error estimate and dense output.

use nalgebra::Vector3;

type V = Vector3<f64>;


const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Result of one Dormand-Prince step.
#[derive(Debug, Clone)]
pub struct Step {
    pub t0: f64,
    pub h: f64,
    pub y0: V,
    pub y1: V,
    /// Derivative at the end point (first stage of the next step).
    pub k7: V,
    /// Scaled error norm; the step is acceptable when `<= 1`.
    pub err: f64,
    dense: [V; 5],
}

impl Step {
    /// Dense output at `t` within the step.
    pub fn interpolate(&self, t: f64) -> V {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let [r1, r2, r3, r4, r5] = &self.dense;
        r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)))
    }

    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }
}

/// Takes one step of size `h` from `(t0, y0)` with `k1 = f(y0)`.
pub fn step<F: Fn(&V) -> V>(f: &F, t0: f64, y0: &V, k1: &V, h: f64, rtol: f64, atol: f64) -> Step {
    let k2 = f(&(y0 + h * A21 * k1));
    let k3 = f(&(y0 + h * (A31 * k1 + A32 * k2)));
    let k4 = f(&(y0 + h * (A41 * k1 + A42 * k2 + A43 * k3)));
    let k5 = f(&(y0 + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4)));
    let k6 = f(&(y0 + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5)));
    let y1 = y0 + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
    let k7 = f(&y1);
    let e = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
    let mut acc = 0.0;
    for i in 0..3 {
        let sc = atol + rtol * y0[i].abs().max(y1[i].abs());
        acc += (e[i] / sc).powi(2);
    }
    let err = (acc / 3.0).sqrt();
    let ydiff = y1 - y0;
    let bspl = h * k1 - ydiff;
    let dense = [
        *y0,
        ydiff,
        bspl,
        ydiff - h * k7 - bspl,
        h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7),
    ];

    Step { t0, h, y0: *y0, y1, k7, err: if err.is_finite() { err } else { f64::INFINITY }, dense }
}

/// Step-size factor suggested by an error norm.
pub fn step_factor(err: f64) -> f64 {
    if err == 0.0 {
        5.0
    } else {
        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
    }
}

/// Integrates `y' = f(y)` over `[t0, t1]` (either direction) with adaptive steps.
/// Returns the accepted `(t, y)` samples including both ends.
pub fn integrate_smooth<F: Fn(&V) -> V>(f: &F, t0: f64, y0: V, t1: f64, rtol: f64, atol: f64) -> Vec<(f64, V)> {
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let mut out = vec![(t0, y0)];
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(&y);
    let mut h = dir * 1e-3 * (t1 - t0).abs().max(1e-12);
    while dir * (t1 - t) > 0.0 {
        if dir * (t + h - t1) > 0.0 {
            h = t1 - t;
        }
        let st = step(f, t, &y, &k1, h, rtol, atol);
        if st.err <= 1.0 {
            t = if dir * (t1 - st.t1()) <= 0.0 { t1 } else { st.t1() };
            y = st.y1;
            k1 = st.k7;
            out.push((t, y));
        }
        h *= step_factor(st.err);
        if h.abs() < 1e-14 * t.abs().max(1.0) {
            break;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let f = |y: &V| V::new(y[1], -y[0], 0.0);
        let path = integrate_smooth(&f, 0.0, V::new(1.0, 0.0, 0.0), 10.0, 1e-11, 1e-13);
        let (t, y) = path.last().unwrap();
        assert_eq!(*t, 10.0);
        assert!((y[0] - 10f64.cos()).abs() < 1e-9);
        let back = integrate_smooth(&f, 10.0, *y, 0.0, 1e-11, 1e-13);
        assert!((back.last().unwrap().1[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn dense_output_matches_solution() {
        let f = |y: &V| V::new(y[0], 0.0, 0.0);
        let y0 = V::new(1.0, 0.0, 0.0);
        let st = step(&f, 0.0, &y0, &f(&y0), 0.1, 1e-10, 1e-12);
        for i in 0..=10 {
            let t = 0.01 * i as f64;
            assert!((st.interpolate(t)[0] - t.exp()).abs() < 1e-8);
        }
        assert_eq!(st.interpolate(0.1), st.y1);
    }
}
