use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::fit::levenberg_marquardt;

/// `c0 + c1 exp(-rate (t - t_start)) cos(omega (t - t_start) + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub asymptotic_value: f64,
    pub amplitude: f64,
    pub rate: f64,
    pub omega: f64,
    pub phase: f64,
    pub t_start: f64,
    pub rms: f64,
    /// Peak-to-peak range of the data in the window.
    pub signal_range: f64,
    /// `rate > 0` and `rms < 1%` of the signal range.
    pub accepted: bool,
}

const MAX_SAMPLES: usize = 600;

/// Multistart nonlinear least-squares fit over samples with `t >= t_start`.
pub fn fit_decay(t: &[f64], y: &[f64], t_start: f64) -> Result<DecayFit> {
    let first = t.partition_point(|&v| v < t_start);
    let n = t.len() - first;
    if n < 8 {
        return Err(Error::FitFailure(format!("{n} samples after t = {t_start}")));
    }
    let stride = n.div_ceil(MAX_SAMPLES);
    let (ts, ys): (Vec<f64>, Vec<f64>) = (first..t.len()).step_by(stride).map(|i| (t[i] - t_start, y[i])).unzip();
    let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    let last = *ys.last().expect("n >= 8");
    let span = *ts.last().expect("n >= 8");
    if range <= 1e-14 * last.abs().max(1e-300) {
        return Ok(DecayFit {
            asymptotic_value: last,
            amplitude: 0.0,
            rate: f64::INFINITY,
            omega: 0.0,
            phase: 0.0,
            t_start,
            rms: 0.0,
            signal_range: range,
            accepted: true,
        });
    }
    let model = |p: &[f64], s: f64| p[0] + p[1] * (-p[2] * s).exp() * (p[3] * s + p[4]).cos();
    let residual = |p: &[f64]| ts.iter().zip(&ys).map(|(&s, &v)| model(p, s) - v).collect::<Vec<f64>>();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for &rate in &[0.5 / span, 2.0 / span, 8.0 / span, 0.3] {
        for &omega in &[0.0, 0.05, 0.2, 0.5] {
            let start = [last, ys[0] - last, rate, omega, 0.0];
            let fit = levenberg_marquardt(residual, &start, 200);
            if fit.rms.is_finite() && best.as_ref().is_none_or(|b| fit.rms < b.1) {
                best = Some((fit.params, fit.rms));
            }
        }
    }
    let (mut p, rms) = best.ok_or_else(|| Error::FitFailure("no finite fit".into()))?;
    // canonical form: nonnegative omega and amplitude
    if p[3] < 0.0 {
        p[3] = -p[3];
        p[4] = -p[4];
    }
    if p[1] < 0.0 {
        p[1] = -p[1];
        p[4] += std::f64::consts::PI;
    }
    p[4] = p[4].rem_euclid(2.0 * std::f64::consts::PI);
    Ok(DecayFit {
        asymptotic_value: p[0],
        amplitude: p[1],
        rate: p[2],
        omega: p[3],
        phase: p[4],
        t_start,
        rms,
        signal_range: range,
        accepted: p[2] > 0.0 && rms < 0.01 * range,
    })
}
