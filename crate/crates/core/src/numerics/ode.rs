//! Explicit Runge-Kutta integrators for first-order systems `y' = f(t, y)`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            initial_step: 1e-3,
            max_step: f64::INFINITY,
            max_steps: 1_000_000,
        }
    }
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone)]
pub struct OdeRun {
    pub t: f64,
    pub y: Vec<f64>,
    pub accepted: usize,
    pub rejected: usize,
    /// `true` when the observer asked to stop before reaching the end time.
    pub stopped_early: bool,
}

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
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy(out: &mut [f64], y: &[f64], h: f64, terms: &[(f64, &[f64])]) {
    for i in 0..y.len() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] = y[i] + h * acc;
    }
}

/// Dormand-Prince 5(4) with FSAL and PI-free step control.
///
/// `observer(t, y)` is called after every accepted step; returning `false`
/// stops the integration. Integrates backwards when `t1 < t0`.
pub fn dopri5<F, O>(f: F, t0: f64, y0: &[f64], t1: f64, opts: &OdeOptions, mut observer: O) -> Result<OdeRun>
where
    F: Fn(f64, &[f64], &mut [f64]),
    O: FnMut(f64, &[f64]) -> bool,
{
    let dim = y0.len();
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut h = opts.initial_step.min(opts.max_step).min((t1 - t0).abs()).max(1e-300);
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut k5 = vec![0.0; dim];
    let mut k6 = vec![0.0; dim];
    let mut k7 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];
    let mut ynew = vec![0.0; dim];
    f(t, &y, &mut k1);
    let (mut accepted, mut rejected) = (0usize, 0usize);
    while dir * (t1 - t) > 0.0 {
        if accepted + rejected >= opts.max_steps {
            return Err(Error::Integration(format!("step limit {} reached at t = {t}", opts.max_steps)));
        }
        if (t1 - t).abs() < h {
            h = (t1 - t).abs();
        }
        let hs = dir * h;
        axpy(&mut tmp, &y, hs, &[(A21, &k1)]);
        f(t + C2 * hs, &tmp, &mut k2);
        axpy(&mut tmp, &y, hs, &[(A31, &k1), (A32, &k2)]);
        f(t + C3 * hs, &tmp, &mut k3);
        axpy(&mut tmp, &y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        f(t + C4 * hs, &tmp, &mut k4);
        axpy(&mut tmp, &y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        f(t + C5 * hs, &tmp, &mut k5);
        axpy(&mut tmp, &y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        f(t + hs, &tmp, &mut k6);
        axpy(&mut ynew, &y, hs, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        f(t + hs, &ynew, &mut k7);
        let mut err = 0.0;
        for i in 0..dim {
            let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
            err += (e / sc) * (e / sc);
        }
        let err = (err / dim as f64).sqrt();
        if !err.is_finite() {
            return Err(Error::Integration(format!("non-finite error estimate at t = {t}")));
        }
        if err <= 1.0 {
            t += hs;
            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(&mut k1, &mut k7);
            accepted += 1;
            if !observer(t, &y) {
                return Ok(OdeRun { t, y, accepted, rejected, stopped_early: true });
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * fac).min(opts.max_step);
        } else {
            rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::Integration(format!("step size underflow at t = {t}")));
            }
        }
    }
    Ok(OdeRun { t, y, accepted, rejected, stopped_early: false })
}

/// One classical RK4 step of size `h`.
pub fn rk4_step<F>(f: &F, t: f64, y: &[f64], h: f64) -> Vec<f64>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    f(t, y, &mut k1);
    axpy(&mut tmp, y, 0.5 * h, &[(1.0, &k1)]);
    f(t + 0.5 * h, &tmp, &mut k2);
    axpy(&mut tmp, y, 0.5 * h, &[(1.0, &k2)]);
    f(t + 0.5 * h, &tmp, &mut k3);
    axpy(&mut tmp, y, h, &[(1.0, &k3)]);
    f(t + h, &tmp, &mut k4);
    (0..n)
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_energy() {
        let opts = OdeOptions { rtol: 1e-12, atol: 1e-14, ..Default::default() };
        let run = dopri5(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            &[1.0, 0.0],
            10.0,
            &opts,
            |_, _| true,
        )
        .unwrap();
        assert!((run.y[0] - 10f64.cos()).abs() < 1e-10);
        assert!((run.y[1] + 10f64.sin()).abs() < 1e-10);
    }

    #[test]
    fn backward_integration() {
        let opts = OdeOptions::default();
        let run = dopri5(|_, y, dy| dy[0] = y[0], 1.0, &[1.0], 0.0, &opts, |_, _| true).unwrap();
        assert!((run.y[0] - (-1f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn observer_stops() {
        let opts = OdeOptions::default();
        let run = dopri5(|_, _, dy| dy[0] = 1.0, 0.0, &[0.0], 10.0, &opts, |_, y| y[0] < 2.0).unwrap();
        assert!(run.stopped_early);
        assert!(run.t < 10.0);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let f = |_: f64, y: &[f64], dy: &mut [f64]| dy[0] = y[0];
        let err = |h: f64| {
            let mut y = vec![1.0];
            let steps = (1.0 / h).round() as usize;
            for i in 0..steps {
                y = rk4_step(&f, i as f64 * h, &y, h);
            }
            (y[0] - 1f64.exp()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
    }
}
