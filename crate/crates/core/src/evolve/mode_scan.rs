//! Connection determinant of the stationary radial equation
//! `r^{-k} (r^k mu v')' + (sigma^2/mu - L/r^2) v = 0`.
//!
//! At each horizon the solution smooth across the future horizon behaves
//! like `x^s`, `x = |r - r_h|`, `s = -i sigma / |mu'(r_h)|`. Both are built
//! from Frobenius series, carried to the midpoint by an ODE solver, and
//! compared through their Wronskian, which vanishes exactly at resonances.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SdsParams;
use crate::numerics::ode::{dopri5, OdeOptions};
use crate::numerics::series::Series;

/// Sectors whose stationary problem is a single second-order ODE. The
/// spherically symmetric 1-form sector splits into its divergence, a
/// scalar with `l = 0`, and its curl, an `OmegaCoefficient` field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScanSector {
    Scalar { ell: usize },
    OmegaCoefficient,
}

impl ScanSector {
    fn weight_and_angular(self, n: usize) -> (f64, f64) {
        match self {
            ScanSector::Scalar { ell } => (n as f64 - 2.0, (ell * (ell + n - 3)) as f64),
            ScanSector::OmegaCoefficient => (2.0 - n as f64, 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrobeniusOptions {
    pub order: usize,
    /// Bound on the size of the last two series terms relative to the sum.
    pub series_tol: f64,
    pub ode_rtol: f64,
}

impl Default for FrobeniusOptions {
    fn default() -> Self {
        Self { order: 40, series_tol: 1e-12, ode_rtol: 1e-11 }
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `(r0 + e x)^k` as a series in `x`.
fn power(r0: f64, e: f64, k: i32, order: usize) -> Series {
    let s = Series::shifted_power(r0, k, order);
    if e < 0.0 {
        s.reflect()
    } else {
        s
    }
}

/// Value and `r`-derivative at `r0 + e x_m` of the Frobenius solution at
/// the horizon `r0`, normalized to leading coefficient 1. Returns the
/// matching radius as well.
fn frobenius_start(
    params: &SdsParams,
    sector: ScanSector,
    r0: f64,
    e: f64,
    reach: f64,
    sigma: Complex64,
    opts: &FrobeniusOptions,
) -> Result<(f64, Complex64, Complex64)> {
    let n = params.n();
    let (k, ang) = sector.weight_and_angular(n);
    let order = opts.order + 2;
    let lam = params.lambda_small();
    let mut mu = &Series::constant(c(1.0), order) - &power(r0, e, 3 - n as i32, order).scale(c(2.0 * params.mass()));
    mu = &mu - &power(r0, e, 2, order).scale(c(lam));
    mu.0[0] = c(0.0);
    let mu_x = mu.derivative();
    let m = mu.shift_down(1);
    let m0 = m.0[0].re;
    if !(m0 > 0.0) {
        return Err(Error::HorizonDomain(format!("mu does not vanish simply at r = {r0}")));
    }
    let inv_m = m.recip();
    let inv_r = power(r0, e, -1, order);
    let p = &(&mu_x + &(&mu * &inv_r).scale(c(e * k))) * &inv_m;
    let q = &(&Series::constant(sigma * sigma, order) - &(&(&mu * &inv_r) * &inv_r).scale(c(ang))) * &(&inv_m * &inv_m);
    let s = -Complex64::i() * sigma / m0;
    let indicial = |rho: Complex64| rho * (rho - 1.0) + p.0[0] * rho + q.0[0];
    let gap = -2.0 * s;
    if gap.im.abs() < 1e-9 && gap.re > 0.5 && (gap.re - gap.re.round()).abs() < 1e-9 {
        return Err(Error::IndicialCollision(gap.re.round() as i64));
    }
    let nn = opts.order;
    let mut coef = vec![c(0.0); nn + 1];
    coef[0] = c(1.0);
    for j in 1..=nn {
        let mut acc = c(0.0);
        for i in 1..=j {
            acc += coef[j - i] * ((s + (j - i) as f64) * p.0[i] + q.0[i]);
        }
        coef[j] = -acc / indicial(s + j as f64);
    }
    let mut xm = reach;
    for _ in 0..30 {
        let mut sum = c(0.0);
        let mut dsum = c(0.0);
        let mut xp = 1.0;
        let mut tail = 0.0f64;
        for (j, cj) in coef.iter().enumerate() {
            let term = cj * xp;
            sum += term;
            dsum += term * (s + j as f64);
            if j + 2 > nn {
                tail = tail.max(term.norm());
            }
            xp *= xm;
        }
        if tail <= opts.series_tol * sum.norm() && sum.is_finite() {
            let lead = (s * xm.ln()).exp();
            let v = lead * sum;
            let vx = lead * dsum / xm;
            return Ok((r0 + e * xm, v, vx * e));
        }
        xm *= 0.5;
    }
    Err(Error::SeriesDivergence(format!("no matching radius near r = {r0} for sigma = {sigma}")))
}

fn carry(
    params: &SdsParams,
    sector: ScanSector,
    from: (f64, Complex64, Complex64),
    to: f64,
    sigma: Complex64,
    rtol: f64,
) -> Result<(Complex64, Complex64)> {
    let (k, ang) = sector.weight_and_angular(params.n());
    let rhs = |r: f64, y: &[f64], dy: &mut [f64]| {
        let v = Complex64::new(y[0], y[1]);
        let w = Complex64::new(y[2], y[3]);
        let mu = params.mu(r);
        let acc = -((params.dmu(r) + k * mu / r) * w + (sigma * sigma / mu - ang / (r * r)) * v) / mu;
        dy[0] = w.re;
        dy[1] = w.im;
        dy[2] = acc.re;
        dy[3] = acc.im;
    };
    let scale = from.1.norm().max(from.2.norm()).max(1e-300);
    let opts = OdeOptions { rtol, atol: rtol * 1e-3 * scale, initial_step: 1e-4, ..OdeOptions::default() };
    let run = dopri5(rhs, from.0, &[from.1.re, from.1.im, from.2.re, from.2.im], to, &opts, |_, _| true)?;
    Ok((Complex64::new(run.y[0], run.y[1]), Complex64::new(run.y[2], run.y[3])))
}

/// Wronskian `v_- v_+' - v_-' v_+` at the midpoint between the horizons.
pub fn connection_determinant(params: &SdsParams, sector: ScanSector, sigma: Complex64, opts: &FrobeniusOptions) -> Result<Complex64> {
    let h = params.horizons()?;
    let w = h.r_plus - h.r_minus;
    let mid = 0.5 * (h.r_minus + h.r_plus);
    let left = frobenius_start(params, sector, h.r_minus, 1.0, 0.4 * h.r_minus.min(w), sigma, opts)?;
    let right = frobenius_start(params, sector, h.r_plus, -1.0, 0.4 * w, sigma, opts)?;
    let (vm, dvm) = carry(params, sector, left, mid, sigma, opts.ode_rtol)?;
    let (vp, dvp) = carry(params, sector, right, mid, sigma, opts.ode_rtol)?;
    Ok(vm * dvp - dvm * vp)
}

/// Relative Cauchy-Riemann defect `|d_y W - i d_x W| / |d_x W|` by central
/// differences of step `delta`.
pub fn cauchy_riemann_residual(
    params: &SdsParams,
    sector: ScanSector,
    sigma: Complex64,
    delta: f64,
    opts: &FrobeniusOptions,
) -> Result<f64> {
    let f = |z: Complex64| connection_determinant(params, sector, z, opts);
    let dx = (f(sigma + delta)? - f(sigma - delta)?) / (2.0 * delta);
    let dy = (f(sigma + Complex64::new(0.0, delta))? - f(sigma - Complex64::new(0.0, delta))?) / (2.0 * delta);
    Ok((dy - Complex64::i() * dx).norm() / dx.norm().max(dy.norm()))
}

/// Rectangle of `sigma` values, inclusive of both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanBox {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub step: f64,
}

impl Default for ScanBox {
    fn default() -> Self {
        Self { re_min: -2.0, re_max: 2.0, im_min: 0.02, im_max: 1.0, step: 0.02 }
    }
}

impl ScanBox {
    fn axes(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        if !(self.step > 0.0 && self.re_max > self.re_min && self.im_max > self.im_min) {
            return Err(Error::InvalidParameter(format!("bad scan box {self:?}")));
        }
        let ax = |a: f64, b: f64| {
            let m = ((b - a) / self.step).round() as usize;
            (0..=m).map(|i| a + (b - a) * i as f64 / m as f64).collect::<Vec<f64>>()
        };
        Ok((ax(self.re_min, self.re_max), ax(self.im_min, self.im_max)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanPoint {
    pub re: f64,
    pub im: f64,
    /// `None` when the point was skipped (indicial collision).
    pub det: Option<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeScan {
    pub sector: ScanSector,
    pub scan_box: ScanBox,
    pub options: FrobeniusOptions,
    pub n_re: usize,
    pub n_im: usize,
    /// Row-major in `im`, then `re`.
    pub points: Vec<ScanPoint>,
    pub skipped: usize,
    pub median_abs: f64,
    pub min_abs: f64,
    /// Largest phase change between neighbouring points; the cell winding
    /// numbers are reliable while this stays well below pi.
    pub max_phase_step: f64,
    /// Cells `(i_re, i_im)` with nonzero winding number and the number.
    pub zero_cells: Vec<(usize, usize, i64)>,
    pub det_at_zero: Complex64,
    /// `|det(0)| / median |det|`.
    pub zero_ratio: f64,
}

impl ModeScan {
    pub fn zero_count(&self) -> i64 {
        self.zero_cells.iter().map(|c| c.2).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("re_sigma,im_sigma,abs_det,arg_det\n");
        for p in &self.points {
            match p.det {
                Some(d) => out.push_str(&format!("{:.6},{:.6},{:.16e},{:.16e}\n", p.re, p.im, d.norm(), d.arg())),
                None => out.push_str(&format!("{:.6},{:.6},,\n", p.re, p.im)),
            }
        }
        out
    }
}

fn phase_step(a: Complex64, b: Complex64) -> f64 {
    (b / a).arg()
}

pub fn mode_scan(params: &SdsParams, sector: ScanSector, scan_box: &ScanBox, opts: &FrobeniusOptions) -> Result<ModeScan> {
    let (re, im) = scan_box.axes()?;
    let (n_re, n_im) = (re.len(), im.len());
    let grid: Vec<(f64, f64)> = im.iter().flat_map(|&y| re.iter().map(move |&x| (x, y))).collect();
    let points: Vec<ScanPoint> = grid
        .par_iter()
        .map(|&(x, y)| match connection_determinant(params, sector, Complex64::new(x, y), opts) {
            Ok(d) => Ok(ScanPoint { re: x, im: y, det: Some(d) }),
            Err(Error::IndicialCollision(_)) => Ok(ScanPoint { re: x, im: y, det: None }),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    let mut mags: Vec<f64> = points.iter().filter_map(|p| p.det.map(|d| d.norm())).collect();
    let skipped = points.len() - mags.len();
    mags.sort_by(f64::total_cmp);
    let median_abs = mags.get(mags.len() / 2).copied().unwrap_or(f64::NAN);
    let min_abs = mags.first().copied().unwrap_or(f64::NAN);
    let at = |i: usize, j: usize| points[j * n_re + i].det;
    let mut max_phase_step = 0.0f64;
    let mut zero_cells = Vec::new();
    for j in 0..n_im - 1 {
        for i in 0..n_re - 1 {
            let corners = [at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)];
            if corners.iter().any(|c| c.is_none()) {
                continue;
            }
            let z: Vec<Complex64> = corners.iter().map(|c| c.expect("checked")).collect();
            let mut total = 0.0;
            for a in 0..4 {
                let d = phase_step(z[a], z[(a + 1) % 4]);
                max_phase_step = max_phase_step.max(d.abs());
                total += d;
            }
            let wind = (total / (2.0 * std::f64::consts::PI)).round() as i64;
            if wind != 0 {
                zero_cells.push((i, j, wind));
            }
        }
    }
    let det_at_zero = connection_determinant(params, sector, Complex64::new(0.0, 0.0), opts)?;
    Ok(ModeScan {
        sector,
        scan_box: *scan_box,
        options: *opts,
        n_re,
        n_im,
        points,
        skipped,
        median_abs,
        min_abs,
        max_phase_step,
        zero_cells,
        det_at_zero,
        zero_ratio: det_at_zero.norm() / median_abs,
    })
}

/// Agreement of two scans differing in series order and ODE tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderStability {
    pub base_order: usize,
    pub max_relative_change: f64,
    pub zeros_base: i64,
    pub zeros_refined: i64,
}

pub fn order_stability(base: &ModeScan, refined: &ModeScan) -> OrderStability {
    let max_relative_change = base
        .points
        .iter()
        .zip(&refined.points)
        .filter_map(|(a, b)| Some((a.det? - b.det?).norm() / b.det?.norm()))
        .fold(0.0, f64::max);
    OrderStability {
        base_order: base.options.order,
        max_relative_change,
        zeros_base: base.zero_count(),
        zeros_refined: refined.zero_count(),
    }
}
