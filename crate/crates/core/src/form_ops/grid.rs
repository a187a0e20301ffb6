use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::StaticBackground;
use crate::numerics::ode::{dopri5, OdeOptions};

pub const MIN_POINTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    UniformR,
    /// Uniform in the tortoise coordinate `dr_* = dr / mu`.
    UniformTortoise,
}

/// Radial nodes `r_i = r(s_i)` for a uniform computational coordinate `s`,
/// with `jac_i = dr/ds` at each node.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    r: Vec<f64>,
    jac: Vec<f64>,
    h: f64,
    spacing: Spacing,
}

impl RadialGrid {
    /// `n` points uniform in `r` on `[r_a, r_b]`.
    pub fn uniform_r<B: StaticBackground + ?Sized>(bg: &B, r_a: f64, r_b: f64, n: usize) -> Result<Self> {
        check_endpoints(bg, r_a, r_b, n)?;
        let h = (r_b - r_a) / (n - 1) as f64;
        let r = (0..n).map(|i| r_a + h * i as f64).collect();
        Ok(Self { r, jac: vec![1.0; n], h, spacing: Spacing::UniformR })
    }

    /// `n` points uniform in `r` after trimming `inset` times the width of
    /// the static region from each end.
    pub fn uniform_r_inset<B: StaticBackground + ?Sized>(bg: &B, inset: f64, n: usize) -> Result<Self> {
        let (a, b) = inset_interval(bg, inset)?;
        Self::uniform_r(bg, a, b, n)
    }

    /// `n` points uniform in `r_*` between `r_a` and `r_b`.
    pub fn uniform_tortoise<B: StaticBackground + ?Sized>(bg: &B, r_a: f64, r_b: f64, n: usize) -> Result<Self> {
        check_endpoints(bg, r_a, r_b, n)?;
        let opts = OdeOptions { rtol: 1e-12, atol: 1e-14, ..OdeOptions::default() };
        let span = dopri5(|r, _y, dy| dy[0] = 1.0 / bg.mu(r), r_a, &[0.0], r_b, &opts, |_, _| true)?;
        let h = span.y[0] / (n - 1) as f64;
        let mut r = Vec::with_capacity(n);
        r.push(r_a);
        let mut cur = r_a;
        for _ in 1..n {
            let step = dopri5(|_s, y, dy| dy[0] = bg.mu(y[0]), 0.0, &[cur], h, &opts, |_, _| true)?;
            cur = step.y[0];
            r.push(cur);
        }
        *r.last_mut().expect("n >= 16") = r_b;
        let jac = r.iter().map(|&x| bg.mu(x)).collect();
        Ok(Self { r, jac, h, spacing: Spacing::UniformTortoise })
    }

    pub fn uniform_tortoise_inset<B: StaticBackground + ?Sized>(bg: &B, inset: f64, n: usize) -> Result<Self> {
        let (a, b) = inset_interval(bg, inset)?;
        Self::uniform_tortoise(bg, a, b, n)
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    /// `dr/ds` at each node.
    pub fn jac(&self) -> &[f64] {
        &self.jac
    }

    /// Step in the computational coordinate.
    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    /// Largest spacing in `r`.
    pub fn max_dr(&self) -> f64 {
        self.r.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Trapezoid quadrature weights for `integral f dr`.
    pub fn quadrature_weights(&self) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let end = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                end * self.h * self.jac[i]
            })
            .collect()
    }
}

fn inset_interval<B: StaticBackground + ?Sized>(bg: &B, inset: f64) -> Result<(f64, f64)> {
    if !(inset > 0.0 && inset < 0.5) {
        return Err(Error::InvalidParameter(format!("grid inset {inset} must lie in (0, 0.5)")));
    }
    let (lo, hi) = bg.static_region()?;
    let w = hi - lo;
    Ok((lo + inset * w, hi - inset * w))
}

fn check_endpoints<B: StaticBackground + ?Sized>(bg: &B, r_a: f64, r_b: f64, n: usize) -> Result<()> {
    if n < MIN_POINTS {
        return Err(Error::InvalidParameter(format!("radial grid needs at least {MIN_POINTS} points, got {n}")));
    }
    let (lo, hi) = bg.static_region()?;
    if !(lo < r_a && r_a < r_b && r_b < hi) {
        return Err(Error::HorizonDomain(format!(
            "grid [{r_a}, {r_b}] must lie strictly inside ({lo}, {hi})"
        )));
    }
    Ok(())
}
