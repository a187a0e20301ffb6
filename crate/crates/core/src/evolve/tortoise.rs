use serde::{Deserialize, Serialize};

use super::{check_cfl, fit_decay, Bump, DecayFit, EvolutionState, ProbeTrace, TimeSeries};
use crate::error::{Error, Result};
use crate::geometry::SdsParams;
use crate::numerics::ode::{dopri5, OdeOptions};

/// `u_tt = u_** + k (mu/r) u_* - (mu L / r^2) u` in `(t, r_*)`.
///
/// `k = n-2` with `L = l(l+n-3)` is the scalar wave equation; `k = -(n-2)`,
/// `L = 0` governs the coefficient `K` of `K omega` and, through the Hodge
/// star, `r^{n-2} G` for `G dt ^ dr`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarTypeEquation {
    pub weight: i32,
    pub angular: f64,
}

impl ScalarTypeEquation {
    pub fn scalar(n: usize, ell: usize) -> Self {
        Self { weight: n as i32 - 2, angular: (ell * (ell + n - 3)) as f64 }
    }

    pub fn omega_coefficient(n: usize) -> Self {
        Self { weight: 2 - n as i32, angular: 0.0 }
    }
}

/// Nodes uniform in `r_*`, normalized by `r_*(r_p) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TortoiseGrid {
    pub x: Vec<f64>,
    pub r: Vec<f64>,
    pub h: f64,
}

impl TortoiseGrid {
    pub fn new(params: &SdsParams, x_min: f64, x_max: f64, h: f64) -> Result<Self> {
        if !(x_min < x_max && h > 0.0) {
            return Err(Error::InvalidParameter(format!("tortoise interval [{x_min}, {x_max}] with step {h}")));
        }
        let n = ((x_max - x_min) / h).round() as usize + 1;
        if n < 16 {
            return Err(Error::InvalidParameter(format!("{n} tortoise nodes, need at least 16")));
        }
        let h = (x_max - x_min) / (n - 1) as f64;
        let x: Vec<f64> = (0..n).map(|i| x_min + h * i as f64).collect();
        let rp = params.photon_sphere_radius();
        let opts = OdeOptions { rtol: 1e-12, atol: 1e-15, ..OdeOptions::default() };
        let mut r = vec![0.0; n];
        let split = x.partition_point(|&v| v < 0.0);
        let mut walk = |range: &mut dyn Iterator<Item = usize>| -> Result<()> {
            let (mut x0, mut r0) = (0.0, rp);
            for i in range {
                let run = dopri5(|_s, y, dy| dy[0] = params.mu(y[0]), x0, &[r0], x[i], &opts, |_, _| true)?;
                r0 = run.y[0];
                x0 = x[i];
                r[i] = r0;
            }
            Ok(())
        };
        walk(&mut (split..n))?;
        walk(&mut (0..split).rev())?;
        if let Some(i) = r.iter().position(|&v| !(params.mu(v) > 0.0)) {
            return Err(Error::HorizonDomain(format!("r_* = {} maps outside the static region", x[i])));
        }
        Ok(Self { x, r, h })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Index of the node whose radius is closest to `r`.
    pub fn nearest(&self, r: f64) -> usize {
        let mut best = 0;
        for (i, v) in self.r.iter().enumerate() {
            if (v - r).abs() < (self.r[best] - r).abs() {
                best = i;
            }
        }
        best
    }
}

/// Leapfrog with absorbing ends.
#[derive(Debug, Clone)]
pub struct ScalarStepper {
    drift: Vec<f64>,
    potential: Vec<f64>,
    weight: Vec<f64>,
    h: f64,
    dt: f64,
    prev: Vec<f64>,
    cur: Vec<f64>,
    next: Vec<f64>,
    pub steps: usize,
    pub time: f64,
}

impl ScalarStepper {
    /// `u0`, `v0`: field and time derivative at `t = 0` on the grid.
    pub fn new(params: &SdsParams, eq: ScalarTypeEquation, grid: &TortoiseGrid, cfl: f64, u0: &[f64], v0: &[f64]) -> Result<Self> {
        check_cfl(cfl)?;
        let mu: Vec<f64> = grid.r.iter().map(|&r| params.mu(r)).collect();
        let drift = grid.r.iter().zip(&mu).map(|(r, m)| eq.weight as f64 * m / r).collect();
        let potential = grid.r.iter().zip(&mu).map(|(r, m)| m * eq.angular / (r * r)).collect();
        let weight = grid.r.iter().map(|r| r.powi(eq.weight)).collect();
        let n = grid.len();
        let mut s = Self {
            drift,
            potential,
            weight,
            h: grid.h,
            dt: cfl * grid.h,
            prev: u0.to_vec(),
            cur: vec![0.0; n],
            next: vec![0.0; n],
            steps: 0,
            time: 0.0,
        };
        // second-order Taylor start
        let lu = s.spatial(u0);
        let dt = s.dt;
        for i in 0..n {
            s.cur[i] = u0[i] + dt * v0[i] + 0.5 * dt * dt * lu[i];
        }
        s.apply_outflow(u0, dt);
        s.steps = 1;
        s.time = dt;
        Ok(s)
    }

    fn spatial(&self, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        let h = self.h;
        let mut out = vec![0.0; n];
        for i in 1..n - 1 {
            out[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h) + self.drift[i] * (u[i + 1] - u[i - 1]) / (2.0 * h)
                - self.potential[i] * u[i];
        }
        out
    }

    /// Overwrites the end values of `cur` by one upwind step from `from`.
    fn apply_outflow(&mut self, from: &[f64], dt: f64) {
        let n = from.len();
        let c = dt / self.h;
        self.cur[0] = from[0] + c * (from[1] - from[0]);
        self.cur[n - 1] = from[n - 1] - c * (from[n - 1] - from[n - 2]);
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn current(&self) -> &[f64] {
        &self.cur
    }

    pub fn previous(&self) -> &[f64] {
        &self.prev
    }

    pub fn step(&mut self) -> Result<()> {
        let n = self.cur.len();
        let (h, dt) = (self.h, self.dt);
        let c = dt / h;
        for i in 1..n - 1 {
            let u = &self.cur;
            let lu = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h) + self.drift[i] * (u[i + 1] - u[i - 1]) / (2.0 * h)
                - self.potential[i] * u[i];
            self.next[i] = 2.0 * u[i] - self.prev[i] + dt * dt * lu;
        }
        // second-order absorbing ends: the centered (d_t -/+ d_*) u = 0 eliminates the ghost node
        self.next[0] = (2.0 * self.cur[0] - (1.0 - c) * self.prev[0] + 2.0 * c * c * (self.cur[1] - self.cur[0])) / (1.0 + c);
        self.next[n - 1] = (2.0 * self.cur[n - 1] - (1.0 - c) * self.prev[n - 1]
            + 2.0 * c * c * (self.cur[n - 2] - self.cur[n - 1]))
            / (1.0 + c);
        std::mem::swap(&mut self.prev, &mut self.cur);
        std::mem::swap(&mut self.cur, &mut self.next);
        self.steps += 1;
        self.time += dt;
        if self.steps % 64 == 0 && self.cur.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonfiniteField { step: self.steps });
        }
        Ok(())
    }

    /// Swaps the two time levels, which reverses the direction of time for
    /// the interior scheme.
    pub fn reverse(&mut self) {
        std::mem::swap(&mut self.prev, &mut self.cur);
        self.dt = -self.dt;
    }

    /// `sum h r^k (u_t^2 + u_*^2 + V u^2)` over interior nodes.
    /// Weighted energy with the gradient and potential terms staggered
    /// between the two stored time levels, which makes it nearly conserved
    /// by the interior leapfrog.
    pub fn energy(&self) -> f64 {
        let n = self.cur.len();
        let (h, dt) = (self.h, self.dt);
        let (u, v) = (&self.cur, &self.prev);
        let mut e = 0.0;
        for i in 1..n - 1 {
            let ut = (u[i] - v[i]) / dt;
            e += h * self.weight[i] * (ut * ut + self.potential[i] * u[i] * v[i]);
        }
        for i in 0..n - 1 {
            let w = 0.5 * (self.weight[i] + self.weight[i + 1]);
            e += h * w * (u[i + 1] - u[i]) * (v[i + 1] - v[i]) / (h * h);
        }
        e
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TortoiseConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub h: f64,
    pub cfl: f64,
    pub t_max: f64,
    pub sample_dt: f64,
    /// Probe radii; defaults to three radii around the photon sphere.
    pub probes: Option<Vec<f64>>,
}

impl Default for TortoiseConfig {
    fn default() -> Self {
        Self { x_min: -60.0, x_max: 150.0, h: 0.05, cfl: 0.5, t_max: 200.0, sample_dt: 0.25, probes: None }
    }
}

/// Initial data `u = offset + bump(r_*)`, `u_t = velocity(r_*)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarData {
    #[serde(default)]
    pub offset: f64,
    pub bump: Option<Bump>,
    pub velocity: Option<Bump>,
}

impl ScalarData {
    pub fn pulse(center: f64, width: f64, amplitude: f64) -> Self {
        Self { offset: 0.0, bump: Some(Bump { center, width, amplitude }), velocity: None }
    }

    pub fn constant(c: f64) -> Self {
        Self { offset: c, bump: None, velocity: None }
    }

    fn sample(&self, grid: &TortoiseGrid) -> (Vec<f64>, Vec<f64>) {
        let u = grid.x.iter().map(|&x| self.offset + self.bump.map_or(0.0, |b| b.eval(x))).collect();
        let v = grid.x.iter().map(|&x| self.velocity.map_or(0.0, |b| b.eval(x))).collect();
        (u, v)
    }
}

/// Three probe radii: the photon sphere and one on each side of it.
pub(crate) fn default_probes(params: &SdsParams) -> Result<Vec<f64>> {
    let h = params.horizons()?;
    Ok(vec![h.r_p - 0.3 * (h.r_p - h.r_minus), h.r_p, h.r_p + 0.3 * (h.r_plus - h.r_p)])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarRun {
    pub equation: ScalarTypeEquation,
    pub dt: f64,
    pub h: f64,
    pub series: TimeSeries,
    /// Discrete energy at the sample times.
    pub energy: Vec<f64>,
    pub final_state: EvolutionState,
}

impl ScalarRun {
    /// Decay fit of every probe over `t >= t_start`.
    pub fn fits(&self, t_start: f64) -> Vec<Result<DecayFit>> {
        self.series.probes.iter().map(|p| fit_decay(&self.series.t, &p.values, t_start)).collect()
    }
}

fn run_scalar_type(params: &SdsParams, eq: ScalarTypeEquation, data: &ScalarData, cfg: &TortoiseConfig, label: &str) -> Result<ScalarRun> {
    if !(cfg.t_max > 0.0 && cfg.sample_dt > 0.0) {
        return Err(Error::InvalidParameter("t_max and sample_dt must be positive".into()));
    }
    let grid = TortoiseGrid::new(params, cfg.x_min, cfg.x_max, cfg.h)?;
    let (u0, v0) = data.sample(&grid);
    let mut st = ScalarStepper::new(params, eq, &grid, cfg.cfl, &u0, &v0)?;
    let radii = match &cfg.probes {
        Some(p) => p.clone(),
        None => default_probes(params)?,
    };
    let idx: Vec<usize> = radii.iter().map(|&r| grid.nearest(r)).collect();
    let mut series = TimeSeries {
        t: vec![0.0],
        probes: idx
            .iter()
            .map(|&i| ProbeTrace { label: format!("{label}@r={:.6}", grid.r[i]), r: grid.r[i], values: vec![u0[i]] })
            .collect(),
    };
    let mut energy = vec![f64::NAN];
    let every = ((cfg.sample_dt / st.dt()).round() as usize).max(1);
    let total = (cfg.t_max / st.dt()).ceil() as usize;
    while st.steps < total {
        st.step()?;
        if st.steps % every == 0 {
            series.t.push(st.time);
            for (p, &i) in series.probes.iter_mut().zip(&idx) {
                p.values.push(st.current()[i]);
            }
            energy.push(st.energy());
        }
    }
    if st.current().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonfiniteField { step: st.steps });
    }
    Ok(ScalarRun {
        equation: eq,
        dt: st.dt(),
        h: grid.h,
        series,
        energy,
        final_state: EvolutionState {
            time: st.time,
            dt: st.dt(),
            r: grid.r.clone(),
            field_names: vec![label.to_string()],
            fields: vec![st.current().to_vec()],
        },
    })
}

pub fn evolve_scalar(params: &SdsParams, data: &ScalarData, ell: usize, cfg: &TortoiseConfig) -> Result<ScalarRun> {
    run_scalar_type(params, ScalarTypeEquation::scalar(params.n(), ell), data, cfg, "u")
}

/// Data for `K omega + G dt ^ dr`; `dual` prescribes `r^{n-2} G`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoFormData {
    pub omega: ScalarData,
    pub dual: ScalarData,
}

impl TwoFormData {
    /// Data of the Hodge dual, up to sign.
    pub fn hodge_dual(&self) -> Self {
        Self { omega: self.dual, dual: self.omega }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoFormRun {
    pub omega: ScalarRun,
    pub dual: ScalarRun,
}

impl TwoFormRun {
    /// Fitted coefficients of `omega` and `r^{2-n} dt ^ dr`, per probe.
    pub fn asymptote(&self, t_start: f64) -> Result<Vec<[f64; 2]>> {
        let a = self.omega.fits(t_start);
        let b = self.dual.fits(t_start);
        a.into_iter()
            .zip(b)
            .map(|(x, y)| Ok([x?.asymptotic_value, y?.asymptotic_value]))
            .collect()
    }
}

pub fn evolve_twoform(params: &SdsParams, data: &TwoFormData, cfg: &TortoiseConfig) -> Result<TwoFormRun> {
    let eq = ScalarTypeEquation::omega_coefficient(params.n());
    Ok(TwoFormRun {
        omega: run_scalar_type(params, eq, &data.omega, cfg, "K")?,
        dual: run_scalar_type(params, eq, &data.dual, cfg, "r^(n-2)G")?,
    })
}
