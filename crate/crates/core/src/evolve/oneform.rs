//! Spherically symmetric 1-forms `u = A d(tau) + B dr` on slices
//! `tau = t + H(r)`, `H' = s/mu`, `s = 1 - 2 (r - r_-)/(r_+ - r_-)`.
//!
//! The slices cross both future horizons, the metric components
//! `g^{tau tau} = q = (1 - s^2)/mu`, `g^{tau r} = -s`, `g^{rr} = -mu` are
//! smooth there, and past the horizons every characteristic leaves the grid,
//! so the ends need no boundary condition. In static components
//! `f_2 = A` and `f_1 = s A + mu B`.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::{check_cfl, default_probes_for, fit_decay, Bump, EvolutionState, ProbeTrace, TimeSeries};
use crate::error::{Error, Result};
use crate::geometry::SdsParams;
use crate::zero_modes::{basis_u_pm, OneFormMode, ZeroModeBasis};

/// Uniform grid in `r` reaching past both horizons, with each horizon at a
/// cell midpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlicedGrid {
    pub r: Vec<f64>,
    pub h: f64,
    pub r_minus: f64,
    pub r_plus: f64,
    pub s: Vec<f64>,
    pub q: Vec<f64>,
    pub mu: Vec<f64>,
}

impl SlicedGrid {
    pub fn new(params: &SdsParams, cells: usize, extension: f64) -> Result<Self> {
        if cells < 16 {
            return Err(Error::InvalidParameter(format!("{cells} cells between the horizons, need at least 16")));
        }
        if !(extension > 0.0 && extension <= 0.25) {
            return Err(Error::InvalidParameter(format!("extension {extension} not in (0, 0.25]")));
        }
        let hz = params.horizons()?;
        let w = hz.r_plus - hz.r_minus;
        let h = w / cells as f64;
        let m = ((extension * w / h).ceil() as usize).max(2);
        let count = cells + 2 * m + 2;
        let r0 = hz.r_minus - (m as f64 + 0.5) * h;
        if r0 <= 0.0 {
            return Err(Error::InvalidParameter("extension reaches r <= 0".into()));
        }
        let r: Vec<f64> = (0..count).map(|i| r0 + h * i as f64).collect();
        let s: Vec<f64> = r.iter().map(|&x| 1.0 - 2.0 * (x - hz.r_minus) / w).collect();
        let mu: Vec<f64> = r.iter().map(|&x| params.mu(x)).collect();
        let q: Vec<f64> = s.iter().zip(&mu).map(|(s, m)| (1.0 - s * s) / m).collect();
        if let Some(i) = q.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::DegenerateSpacetime(format!("slice not spacelike at r = {}", r[i])));
        }
        Ok(Self { r, h, r_minus: hz.r_minus, r_plus: hz.r_plus, s, q, mu })
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Largest characteristic speed `(1 + |s|)/q`.
    pub fn max_speed(&self) -> f64 {
        self.s.iter().zip(&self.q).map(|(s, q)| (1.0 + s.abs()) / q).fold(0.0, f64::max)
    }

    /// Indices of nodes between the horizons.
    pub fn static_range(&self) -> std::ops::Range<usize> {
        let a = self.r.partition_point(|&x| x < self.r_minus);
        let b = self.r.partition_point(|&x| x < self.r_plus);
        a..b
    }

    pub fn nearest(&self, r: f64) -> usize {
        (((r - self.r[0]) / self.h).round().max(0.0) as usize).min(self.len() - 1)
    }

    /// `(f_1, f_2)` from `(A, B)`.
    pub fn static_components(&self, a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let f1 = (0..self.len()).map(|i| self.s[i] * a[i] + self.mu[i] * b[i]).collect();
        (f1, a.to_vec())
    }
}

fn derivative(u: &[f64], h: f64, out: &mut [f64]) {
    let n = u.len();
    for i in 1..n - 1 {
        out[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
    }
    out[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
    out[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * h);
}

/// Time derivative of `[A, B, Phi, E]`, where `Phi` is the divergence and
/// `E = B_tau - A_r` the curl. `dissipation` scales a fourth-difference
/// Kreiss-Oliger term.
pub fn oneform_rhs(n: usize, grid: &SlicedGrid, y: &[Vec<f64>; 4], dissipation: f64) -> [Vec<f64>; 4] {
    let len = grid.len();
    let h = grid.h;
    let k = n as f64 - 2.0;
    let [a, b, phi, e] = y;
    let mut d_a = vec![0.0; len];
    let mut d_phi = vec![0.0; len];
    let mut d_e = vec![0.0; len];
    let mut d_w = vec![0.0; len];
    derivative(a, h, &mut d_a);
    derivative(phi, h, &mut d_phi);
    derivative(e, h, &mut d_e);
    let w: Vec<f64> = (0..len).map(|i| grid.s[i] * a[i] + grid.mu[i] * b[i]).collect();
    derivative(&w, h, &mut d_w);
    let mut out = [vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len]];
    for i in 0..len {
        let (s, q, mu, r) = (grid.s[i], grid.q[i], grid.mu[i], grid.r[i]);
        let curl_div = d_e[i] + k * e[i] / r;
        let e_t = (s * curl_div - d_phi[i]) / q;
        let b_t = d_a[i] + e[i];
        out[3][i] = e_t;
        out[2][i] = -mu * curl_div - s * e_t;
        out[1][i] = b_t;
        out[0][i] = (phi[i] + s * b_t + d_w[i] + k * w[i] / r) / q;
    }
    if dissipation > 0.0 {
        let c = dissipation * grid.max_speed() / (16.0 * h);
        for (f, d) in y.iter().zip(out.iter_mut()) {
            for i in 2..len - 2 {
                d[i] -= c * (f[i + 2] - 4.0 * f[i + 1] + 6.0 * f[i] - 4.0 * f[i - 1] + f[i - 2]);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OneFormConfig {
    pub cells: usize,
    /// Grid extension past each horizon, as a fraction of `r_+ - r_-`.
    pub extension: f64,
    pub cfl: f64,
    pub dissipation: f64,
    pub t_max: f64,
    pub sample_dt: f64,
    pub probes: Option<Vec<f64>>,
}

impl Default for OneFormConfig {
    fn default() -> Self {
        Self { cells: 400, extension: 0.05, cfl: 0.5, dissipation: 0.0, t_max: 200.0, sample_dt: 0.25, probes: None }
    }
}

/// Initial data in terms of `(A, B, Phi, E)`; bumps are functions of `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OneFormData {
    /// Bumps added to the background `c_plus u_+ + c_minus u_-`.
    Pulse {
        a: Option<Bump>,
        b: Option<Bump>,
        divergence: Option<Bump>,
        curl: Option<Bump>,
        #[serde(default)]
        c_plus: f64,
        #[serde(default)]
        c_minus: f64,
    },
    /// `c_plus u_+ + c_minus u_-`.
    ZeroModes { c_plus: f64, c_minus: f64 },
}

fn combine(basis: &ZeroModeBasis, cp: f64, cm: f64) -> OneFormMode {
    let (p, m) = (basis.u_plus, basis.u_minus);
    OneFormMode {
        n: p.n,
        f11: cp * p.f11 + cm * m.f11,
        f12: cp * p.f12 + cm * m.f12,
        f21: cp * p.f21 + cm * m.f21,
        f22: cp * p.f22 + cm * m.f22,
    }
}

impl OneFormData {
    fn sample(&self, params: &SdsParams, grid: &SlicedGrid) -> Result<[Vec<f64>; 4]> {
        let ev = |b: &Option<Bump>| -> Vec<f64> { grid.r.iter().map(|&r| b.map_or(0.0, |b| b.eval(r))).collect() };
        match self {
            OneFormData::Pulse { a, b, divergence, curl, c_plus, c_minus } => {
                let mut y = zero_mode_fields(params, grid, *c_plus, *c_minus)?;
                for (f, bump) in y.iter_mut().zip([a, b, divergence, curl]) {
                    for (v, x) in f.iter_mut().zip(ev(bump)) {
                        *v += x;
                    }
                }
                Ok(y)
            }
            OneFormData::ZeroModes { c_plus, c_minus } => zero_mode_fields(params, grid, *c_plus, *c_minus),
        }
    }
}

fn zero_mode_fields(params: &SdsParams, grid: &SlicedGrid, cp: f64, cm: f64) -> Result<[Vec<f64>; 4]> {
    if cp == 0.0 && cm == 0.0 {
        return Ok(std::array::from_fn(|_| vec![0.0; grid.len()]));
    }
    let mode = combine(&basis_u_pm(params)?, cp, cm);
    let n = params.n() as i32;
    let a: Vec<f64> = grid.r.iter().map(|&r| mode.f2(r)).collect();
    let b = (0..grid.len()).map(|i| (mode.f1(grid.r[i]) - grid.s[i] * a[i]) / grid.mu[i]).collect();
    let phi = vec![-(n - 1) as f64 * mode.f11; grid.len()];
    let e = grid.r.iter().map(|&r| (n - 3) as f64 * mode.f22 * r.powi(2 - n)).collect();
    Ok([a, b, phi, e])
}

/// Least-squares fit of `(f_1, f_2)` by `c_+ u_+ + c_- u_-` between the horizons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Projection {
    pub c_plus: f64,
    pub c_minus: f64,
    /// Max-norm of the part orthogonal to the span.
    pub residual: f64,
}

pub fn project_onto_zero_modes(grid: &SlicedGrid, basis: &ZeroModeBasis, f1: &[f64], f2: &[f64]) -> Projection {
    let (p, m) = (basis.u_plus, basis.u_minus);
    let mut ata = Matrix2::zeros();
    let mut atb = Vector2::zeros();
    let range = grid.static_range();
    for i in range.clone() {
        let r = grid.r[i];
        for (bp, bm, v) in [(p.f1(r), m.f1(r), f1[i]), (p.f2(r), m.f2(r), f2[i])] {
            ata += Matrix2::new(bp * bp, bp * bm, bm * bp, bm * bm);
            atb += Vector2::new(bp * v, bm * v);
        }
    }
    let c = ata.lu().solve(&atb).unwrap_or_else(Vector2::zeros);
    let mut residual = 0.0f64;
    for i in range {
        let r = grid.r[i];
        residual = residual
            .max((f1[i] - c[0] * p.f1(r) - c[1] * m.f1(r)).abs())
            .max((f2[i] - c[0] * p.f2(r) - c[1] * m.f2(r)).abs());
    }
    Projection { c_plus: c[0], c_minus: c[1], residual }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OneFormRun {
    pub dt: f64,
    pub h: f64,
    pub series: TimeSeries,
    pub initial_scale: f64,
    /// Max-norm change of `(f_1, f_2)` between the horizons over the run.
    pub change: f64,
    pub projection: Projection,
    pub final_state: EvolutionState,
    pub basis: ZeroModeBasis,
}

impl OneFormRun {
    /// Asymptotic `(c_+, c_-)` at each probe radius from decay fits of `f_1`
    /// and `f_2`.
    pub fn probe_projections(&self, t_start: f64) -> Result<Vec<[f64; 2]>> {
        let (p, m) = (self.basis.u_plus, self.basis.u_minus);
        self.series
            .probes
            .chunks(2)
            .map(|pair| {
                let r = pair[0].r;
                let c1 = fit_decay(&self.series.t, &pair[0].values, t_start)?.asymptotic_value;
                let c2 = fit_decay(&self.series.t, &pair[1].values, t_start)?.asymptotic_value;
                let mat = Matrix2::new(p.f1(r), m.f1(r), p.f2(r), m.f2(r));
                let c = mat
                    .lu()
                    .solve(&Vector2::new(c1, c2))
                    .ok_or_else(|| Error::FitFailure(format!("u_+ and u_- are dependent at r = {r}")))?;
                Ok([c[0], c[1]])
            })
            .collect()
    }
}

fn rk4(n: usize, grid: &SlicedGrid, y: &mut [Vec<f64>; 4], dt: f64, diss: f64) {
    let len = grid.len();
    let shifted = |base: &[Vec<f64>; 4], k: &[Vec<f64>; 4], c: f64| -> [Vec<f64>; 4] {
        std::array::from_fn(|f| (0..len).map(|i| base[f][i] + c * k[f][i]).collect())
    };
    let k1 = oneform_rhs(n, grid, y, diss);
    let k2 = oneform_rhs(n, grid, &shifted(y, &k1, 0.5 * dt), diss);
    let k3 = oneform_rhs(n, grid, &shifted(y, &k2, 0.5 * dt), diss);
    let k4 = oneform_rhs(n, grid, &shifted(y, &k3, dt), diss);
    for f in 0..4 {
        for i in 0..len {
            y[f][i] += dt / 6.0 * (k1[f][i] + 2.0 * k2[f][i] + 2.0 * k3[f][i] + k4[f][i]);
        }
    }
}

pub fn evolve_oneform(params: &SdsParams, data: &OneFormData, cfg: &OneFormConfig) -> Result<OneFormRun> {
    check_cfl(cfg.cfl)?;
    if !(cfg.t_max > 0.0 && cfg.sample_dt > 0.0 && cfg.dissipation >= 0.0) {
        return Err(Error::InvalidParameter("t_max, sample_dt must be positive and dissipation nonnegative".into()));
    }
    let n = params.n();
    let grid = SlicedGrid::new(params, cfg.cells, cfg.extension)?;
    let basis = basis_u_pm(params)?;
    let mut y = data.sample(params, &grid)?;
    let dt = cfg.cfl * grid.h / grid.max_speed();
    let radii = match &cfg.probes {
        Some(p) => p.clone(),
        None => default_probes_for(params)?,
    };
    let idx: Vec<usize> = radii.iter().map(|&r| grid.nearest(r)).collect();
    let (f1_0, f2_0) = grid.static_components(&y[0], &y[1]);
    let range = grid.static_range();
    let initial_scale = range.clone().map(|i| f1_0[i].abs().max(f2_0[i].abs())).fold(0.0, f64::max);
    let mut series = TimeSeries { t: vec![0.0], probes: Vec::new() };
    for &i in &idx {
        series.probes.push(ProbeTrace { label: format!("f1@r={:.6}", grid.r[i]), r: grid.r[i], values: vec![f1_0[i]] });
        series.probes.push(ProbeTrace { label: format!("f2@r={:.6}", grid.r[i]), r: grid.r[i], values: vec![f2_0[i]] });
    }
    let every = ((cfg.sample_dt / dt).round() as usize).max(1);
    let total = (cfg.t_max / dt).ceil() as usize;
    for step in 1..=total {
        rk4(n, &grid, &mut y, dt, cfg.dissipation);
        if step % 64 == 0 && y.iter().any(|f| f.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonfiniteField { step });
        }
        if step % every == 0 {
            series.t.push(step as f64 * dt);
            for (j, &i) in idx.iter().enumerate() {
                series.probes[2 * j].values.push(grid.s[i] * y[0][i] + grid.mu[i] * y[1][i]);
                series.probes[2 * j + 1].values.push(y[0][i]);
            }
        }
    }
    if y.iter().any(|f| f.iter().any(|v| !v.is_finite())) {
        return Err(Error::NonfiniteField { step: total });
    }
    let (f1, f2) = grid.static_components(&y[0], &y[1]);
    let change = range.map(|i| (f1[i] - f1_0[i]).abs().max((f2[i] - f2_0[i]).abs())).fold(0.0, f64::max);
    let projection = project_onto_zero_modes(&grid, &basis, &f1, &f2);
    let [a, b, phi, e] = y;
    Ok(OneFormRun {
        dt,
        h: grid.h,
        series,
        initial_scale,
        change,
        projection,
        final_state: EvolutionState {
            time: total as f64 * dt,
            dt,
            r: grid.r.clone(),
            field_names: ["A", "B", "divergence", "curl", "f1", "f2"].map(String::from).to_vec(),
            fields: vec![a, b, phi, e, f1, f2],
        },
        basis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p4() -> SdsParams {
        SdsParams::from_lambda(4, 1.0, 0.01).unwrap()
    }

    #[test]
    fn grid_places_horizons_mid_cell() {
        let g = SlicedGrid::new(&p4(), 100, 0.05).unwrap();
        let rm = g.static_range().start;
        assert!(((g.r[rm] - g.r_minus) - 0.5 * g.h).abs() < 1e-12);
        let rp = g.static_range().end;
        assert!(((g.r[rp] - g.r_plus) - 0.5 * g.h).abs() < 1e-9);
        assert!(g.q.iter().all(|&q| q > 0.0));
    }

    #[test]
    fn zero_modes_are_nearly_stationary() {
        let p = p4();
        let mut drifts = Vec::new();
        for cells in [100, 200] {
            let cfg = OneFormConfig { cells, t_max: 20.0, ..OneFormConfig::default() };
            let run = evolve_oneform(&p, &OneFormData::ZeroModes { c_plus: 1.0, c_minus: -0.5 }, &cfg).unwrap();
            assert!((run.projection.c_plus - 1.0).abs() < 1e-3 && (run.projection.c_minus + 0.5).abs() < 1e-3);
            drifts.push(run.change);
        }
        let ratio = drifts[0] / drifts[1];
        assert!(ratio > 3.0, "{drifts:?}");
    }

    #[test]
    fn pulse_settles_onto_background() {
        let p = p4();
        let cfg = OneFormConfig { cells: 400, t_max: 300.0, ..OneFormConfig::default() };
        let data = OneFormData::Pulse {
            a: Some(Bump { center: 4.0, width: 1.5, amplitude: 1.0 }),
            b: Some(Bump { center: 6.0, width: 1.0, amplitude: 0.2 }),
            divergence: Some(Bump { center: 5.0, width: 1.0, amplitude: 0.3 }),
            curl: Some(Bump { center: 3.5, width: 1.0, amplitude: 0.5 }),
            c_plus: 0.7,
            c_minus: -0.3,
        };
        let run = evolve_oneform(&p, &data, &cfg).unwrap();
        assert!(run.projection.residual < 1e-3 * run.initial_scale, "{:?}", run.projection);
        assert!((run.projection.c_plus - 0.7).abs() < 1e-3 && (run.projection.c_minus + 0.3).abs() < 1e-3);
        let probes = run.probe_projections(60.0).unwrap();
        for c in &probes {
            assert!((c[0] - 0.7).abs() < 1e-3 && (c[1] + 0.3).abs() < 1e-3, "{probes:?}");
        }
        let f = fit_decay(&run.series.t, &run.series.probes[1].values, 60.0).unwrap();
        assert!(f.accepted && f.rate > 0.0, "{f:?}");
    }

    #[test]
    fn compact_pulse_carries_no_zero_mode() {
        let cfg = OneFormConfig { cells: 200, t_max: 300.0, ..OneFormConfig::default() };
        let data = OneFormData::Pulse {
            a: Some(Bump { center: 4.0, width: 1.5, amplitude: 1.0 }),
            b: None,
            divergence: None,
            curl: Some(Bump { center: 3.5, width: 1.0, amplitude: 0.5 }),
            c_plus: 0.0,
            c_minus: 0.0,
        };
        let run = evolve_oneform(&p4(), &data, &cfg).unwrap();
        assert!(run.projection.c_plus.abs().max(run.projection.c_minus.abs()) < 1e-3, "{:?}", run.projection);
    }
}
