//! Dormand–Prince 5(4) stepping over a straight segment, shared by the
//! sheet transport and the frame transport.

use crate::error::{Error, Result};
use num_complex::Complex64;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth-order weights minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Step-size control settings for the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    pub initial_step: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-12, max_steps: 1_000_000, initial_step: 1e-2 }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidInput("rel_tol and abs_tol must be positive".into()));
        }
        if !(self.initial_step > 0.0) || self.max_steps == 0 {
            return Err(Error::InvalidInput("initial_step and max_steps must be positive".into()));
        }
        Ok(())
    }
}

type State<const N: usize> = [Complex64; N];

#[inline]
fn axpy<const N: usize>(y: &State<N>, terms: &[(f64, &State<N>)], h: f64) -> State<N> {
    let mut out = *y;
    for (coef, k) in terms {
        let s = coef * h;
        for i in 0..N {
            out[i] += k[i] * s;
        }
    }
    out
}

/// Stage evaluations of one Dormand–Prince step. Returns the fifth-order
/// solution, the error estimate and the derivative at the new point (FSAL).
#[inline]
fn dp_step<const N: usize, F>(f: &F, s: f64, y: &State<N>, k1: &State<N>, h: f64) -> (State<N>, State<N>, State<N>)
where
    F: Fn(f64, &State<N>) -> State<N>,
{
    let k2 = f(s + C2 * h, &axpy(y, &[(A21, k1)], h));
    let k3 = f(s + C3 * h, &axpy(y, &[(A31, k1), (A32, &k2)], h));
    let k4 = f(s + C4 * h, &axpy(y, &[(A41, k1), (A42, &k2), (A43, &k3)], h));
    let k5 = f(s + C5 * h, &axpy(y, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)], h));
    let k6 = f(s + h, &axpy(y, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], h));
    let y_new = axpy(y, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)], h);
    let k7 = f(s + h, &y_new);
    let mut err = [Complex64::new(0.0, 0.0); N];
    for i in 0..N {
        err[i] = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
    }
    (y_new, err, k7)
}

/// Adaptive integration of `dy/ds = f(s, y)` for `s` in `[0, length]`.
///
/// `on_accept` sees every accepted state and may abort the integration.
/// `h` is the suggested initial step and receives the last proposed step.
pub(crate) fn integrate_adaptive<const N: usize, F, M>(
    f: F,
    y0: State<N>,
    length: f64,
    h: &mut f64,
    cfg: &IntegratorConfig,
    steps: &mut usize,
    mut on_accept: M,
) -> Result<State<N>>
where
    F: Fn(f64, &State<N>) -> State<N>,
    M: FnMut(f64, &State<N>) -> Result<()>,
{
    let mut y = y0;
    let mut s = 0.0;
    if length == 0.0 {
        return Ok(y);
    }
    let mut k1 = f(0.0, &y);
    let h_min = 1e-14 * length.max(1.0);
    loop {
        let remaining = length - s;
        if remaining <= 1e-15 * length {
            return Ok(y);
        }
        let last = *h >= remaining;
        let step = if last { remaining } else { *h };
        let (y_new, err, k7) = dp_step(&f, s, &y, &k1, step);
        let mut err_norm: f64 = 0.0;
        for i in 0..N {
            let scale = cfg.abs_tol + cfg.rel_tol * y[i].norm().max(y_new[i].norm());
            err_norm = err_norm.max(err[i].norm() / scale);
        }
        if !err_norm.is_finite() {
            err_norm = 1e10;
        }
        let factor = if err_norm == 0.0 { 5.0 } else { (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0) };
        if err_norm <= 1.0 {
            *steps += 1;
            if *steps > cfg.max_steps {
                return Err(Error::StepLimitExceeded { max_steps: cfg.max_steps });
            }
            s = if last { length } else { s + step };
            y = y_new;
            k1 = k7;
            on_accept(s, &y)?;
            // keep the natural step size when the last step was truncated
            if !last || step * factor > *h {
                *h = step * factor;
            }
        } else {
            *h = step * factor;
            if *h < h_min {
                return Err(Error::StepSizeUnderflow { at: s });
            }
        }
    }
}

/// Fixed-step Dormand–Prince (fifth-order weights) with `n` equal steps.
pub(crate) fn integrate_fixed<const N: usize, F>(f: F, y0: State<N>, length: f64, n: usize) -> State<N>
where
    F: Fn(f64, &State<N>) -> State<N>,
{
    let mut y = y0;
    if length == 0.0 || n == 0 {
        return y;
    }
    let h = length / n as f64;
    for i in 0..n {
        let s = i as f64 * h;
        let k1 = f(s, &y);
        let (y_new, _, _) = dp_step(&f, s, &y, &k1, h);
        y = y_new;
    }
    y
}
