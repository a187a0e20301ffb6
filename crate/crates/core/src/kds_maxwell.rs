//! The stationary Kerr-de Sitter 2-form `u_{a,1}`, its Hodge dual, and
//! finite-difference checks that both solve Maxwell's equations.
//!
//! Boyer-Lindquist coordinates `(t, r, theta, phi)`, signature `(+,-,-,-)`.

use nalgebra::Matrix4;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::loglog_slope;
use crate::numerics::roots::brent;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KdsParams {
    pub mass: f64,
    pub cosmo: f64,
    pub spin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KdsHorizons {
    pub r_minus: f64,
    pub r_plus: f64,
}

impl KdsParams {
    pub fn new(mass: f64, cosmo: f64, spin: f64) -> Result<Self> {
        if !(mass > 0.0 && cosmo > 0.0 && spin.is_finite()) {
            return Err(Error::InvalidParameter(format!("need M > 0, Lambda > 0, finite a; got ({mass}, {cosmo}, {spin})")));
        }
        let p = Self { mass, cosmo, spin };
        p.horizons()?;
        Ok(p)
    }

    pub fn delta_r(&self, r: f64) -> f64 {
        let a2 = self.spin * self.spin;
        (r * r + a2) * (1.0 - self.cosmo * r * r / 3.0) - 2.0 * self.mass * r
    }

    pub fn delta_theta(&self, theta: f64) -> f64 {
        1.0 + self.cosmo * self.spin * self.spin * theta.cos().powi(2) / 3.0
    }

    pub fn chi(&self) -> f64 {
        1.0 + self.cosmo * self.spin * self.spin / 3.0
    }

    pub fn rho_sq(&self, r: f64, theta: f64) -> f64 {
        r * r + self.spin * self.spin * theta.cos().powi(2)
    }

    /// Event and cosmological horizons: the two largest positive roots of
    /// `Delta_r`, with `Delta_r > 0` between them.
    pub fn horizons(&self) -> Result<KdsHorizons> {
        let r_max = 2.0 * (3.0 / self.cosmo).sqrt() + 2.0 * self.mass;
        let samples = 4000;
        let mut roots = Vec::new();
        let mut prev = (1e-9 * r_max, self.delta_r(1e-9 * r_max));
        for i in 1..=samples {
            let r = r_max * i as f64 / samples as f64;
            let v = self.delta_r(r);
            if prev.1.signum() != v.signum() {
                roots.push(brent(|x| self.delta_r(x), prev.0, r, 1e-15)?);
            }
            prev = (r, v);
        }
        if roots.len() < 2 {
            return Err(Error::DegenerateSpacetime(format!("Delta_r has {} positive roots", roots.len())));
        }
        let (r_minus, r_plus) = (roots[roots.len() - 2], roots[roots.len() - 1]);
        if !(self.delta_r(0.5 * (r_minus + r_plus)) > 0.0) {
            return Err(Error::DegenerateSpacetime("no static region between the outer roots".into()));
        }
        Ok(KdsHorizons { r_minus, r_plus })
    }

    fn check_point(&self, r: f64, theta: f64) -> Result<()> {
        if !(self.delta_r(r) > 0.0) {
            return Err(Error::HorizonDomain(format!("Delta_r <= 0 at r = {r}")));
        }
        if theta.sin().abs() < 1e-12 {
            return Err(Error::AxisSingularity(theta));
        }
        Ok(())
    }
}

/// Metric components `g_{mu nu}`.
pub fn kds_metric(p: &KdsParams, r: f64, theta: f64) -> Result<Matrix4<f64>> {
    p.check_point(r, theta)?;
    let a = p.spin;
    let (s, rho2, chi2) = (theta.sin(), p.rho_sq(r, theta), p.chi().powi(2));
    let dr = p.delta_r(r);
    let dth = p.delta_theta(theta);
    // g = A (dt - a s^2 dphi)^2 - B (a dt - (r^2+a^2) dphi)^2 - rho^2 (dr^2/Delta_r + dtheta^2/Delta_theta)
    let ca = dr / (chi2 * rho2);
    let cb = dth * s * s / (chi2 * rho2);
    let w = r * r + a * a;
    let mut g = Matrix4::zeros();
    g[(0, 0)] = ca - cb * a * a;
    g[(0, 3)] = -ca * a * s * s + cb * a * w;
    g[(3, 0)] = g[(0, 3)];
    g[(3, 3)] = ca * a * a * s.powi(4) - cb * w * w;
    g[(1, 1)] = -rho2 / dr;
    g[(2, 2)] = -rho2 / dth;
    Ok(g)
}

/// `sqrt|det g| = rho^2 sin(theta) / chi^2`.
pub fn sqrt_abs_det(p: &KdsParams, r: f64, theta: f64) -> f64 {
    p.rho_sq(r, theta) * theta.sin().abs() / p.chi().powi(2)
}

/// Radial and angular profiles `(F_TR, F_ThetaPhi)`.
pub fn profiles(p: &KdsParams, r: f64, theta: f64) -> (f64, f64) {
    let (a, c) = (p.spin, theta.cos());
    let rho2 = r * r + a * a * c * c;
    ((r * r - a * a * c * c) / (rho2 * rho2), 2.0 * a * r * c / (rho2 * rho2))
}

/// Components of `F_TR (dt - a sin^2 dphi) ^ dr + F_ThetaPhi sin dtheta ^ (a dt - (r^2+a^2) dphi)`.
pub fn u_a1(p: &KdsParams, r: f64, theta: f64) -> Matrix4<f64> {
    let (ftr, ftp) = profiles(p, r, theta);
    two_form(p, r, theta, ftr, ftp)
}

fn two_form(p: &KdsParams, r: f64, theta: f64, ftr: f64, ftp: f64) -> Matrix4<f64> {
    let (a, s) = (p.spin, theta.sin());
    let mut f = Matrix4::zeros();
    let mut set = |i: usize, j: usize, v: f64| {
        f[(i, j)] = v;
        f[(j, i)] = -v;
    };
    set(0, 1, ftr);
    set(1, 3, a * s * s * ftr);
    set(0, 2, -a * s * ftp);
    set(2, 3, -(r * r + a * a) * s * ftp);
    f
}

/// Levi-Civita symbol with `eps_{t r theta phi} = +1`.
fn levi_civita(i: usize, j: usize, k: usize, l: usize) -> f64 {
    let idx = [i, j, k, l];
    for a in 0..4 {
        for b in a + 1..4 {
            if idx[a] == idx[b] {
                return 0.0;
            }
        }
    }
    let mut sign = 1.0;
    for a in 0..4 {
        for b in a + 1..4 {
            if idx[a] > idx[b] {
                sign = -sign;
            }
        }
    }
    sign
}

/// `F^{mu nu}` with both indices raised by the inverse metric.
pub fn raise(ginv: &Matrix4<f64>, f: &Matrix4<f64>) -> Matrix4<f64> {
    ginv * f * ginv.transpose()
}

/// `(*F)_{mu nu} = (1/2) sqrt|g| eps_{mu nu rho sigma} F^{rho sigma}`.
pub fn hodge_star(p: &KdsParams, r: f64, theta: f64, f: &Matrix4<f64>) -> Result<Matrix4<f64>> {
    let g = kds_metric(p, r, theta)?;
    let ginv = g.try_inverse().ok_or_else(|| Error::HorizonDomain(format!("singular metric at r = {r}")))?;
    let up = raise(&ginv, f);
    let vol = g.determinant().abs().sqrt();
    let mut out = Matrix4::zeros();
    for m in 0..4 {
        for n in 0..4 {
            let mut acc = 0.0;
            for a in 0..4 {
                for b in 0..4 {
                    acc += levi_civita(m, n, a, b) * up[(a, b)];
                }
            }
            out[(m, n)] = 0.5 * vol * acc;
        }
    }
    Ok(out)
}

/// `u_{a,2} = * u_{a,1}`.
pub fn u_a2(p: &KdsParams, r: f64, theta: f64) -> Result<Matrix4<f64>> {
    hodge_star(p, r, theta, &u_a1(p, r, theta))
}

/// Fields the Maxwell checks can be run on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KdsField {
    U1,
    U2,
    /// `u_{a,1}` with `F_TR` scaled by `1 + 0.01 r`; not a solution.
    PerturbedU1,
}

impl KdsField {
    pub fn components(self, p: &KdsParams, r: f64, theta: f64) -> Result<Matrix4<f64>> {
        match self {
            KdsField::U1 => Ok(u_a1(p, r, theta)),
            KdsField::U2 => u_a2(p, r, theta),
            KdsField::PerturbedU1 => {
                let (ftr, ftp) = profiles(p, r, theta);
                Ok(two_form(p, r, theta, ftr * (1.0 + 0.01 * r), ftp))
            }
        }
    }
}

/// Tensor grid in `(r, theta)` strictly inside the static region and away
/// from the axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid2D {
    pub r: Vec<f64>,
    pub theta: Vec<f64>,
}

pub const DEFAULT_THETA_MIN: f64 = 0.05;
/// Fraction of `r_+ - r_-` cut off at each horizon.
pub const DEFAULT_INSET: f64 = 0.1;

impl Grid2D {
    /// `n_r x n_theta` nodes on `[r_- + inset w, r_+ - inset w] x [theta_min, pi - theta_min]`
    /// with `w = r_+ - r_-`.
    pub fn annulus(p: &KdsParams, n_r: usize, n_theta: usize, inset: f64, theta_min: f64) -> Result<Self> {
        if n_r < 3 || n_theta < 3 {
            return Err(Error::InvalidParameter(format!("grid {n_r}x{n_theta} too small")));
        }
        if !(inset > 0.0 && inset < 0.5) {
            return Err(Error::InvalidParameter(format!("inset {inset} not in (0, 1/2)")));
        }
        if !(theta_min > 0.0 && theta_min < std::f64::consts::FRAC_PI_2) {
            return Err(Error::AxisSingularity(theta_min));
        }
        let h = p.horizons()?;
        let w = h.r_plus - h.r_minus;
        let (r0, r1) = (h.r_minus + inset * w, h.r_plus - inset * w);
        let (t0, t1) = (theta_min, std::f64::consts::PI - theta_min);
        Ok(Self {
            r: (0..n_r).map(|i| r0 + (r1 - r0) * i as f64 / (n_r - 1) as f64).collect(),
            theta: (0..n_theta).map(|j| t0 + (t1 - t0) * j as f64 / (n_theta - 1) as f64).collect(),
        })
    }

    pub fn h_r(&self) -> f64 {
        self.r[1] - self.r[0]
    }

    pub fn h_theta(&self) -> f64 {
        self.theta[1] - self.theta[0]
    }

    fn sample<T: Send, F: Fn(f64, f64) -> Result<T> + Sync>(&self, f: F) -> Result<Vec<Vec<T>>> {
        self.r
            .par_iter()
            .map(|&r| self.theta.iter().map(|&th| f(r, th)).collect::<Result<Vec<T>>>())
            .collect()
    }
}

/// Max-norm residual on the interior nodes of one grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelResidual {
    pub n_r: usize,
    pub n_theta: usize,
    pub h_r: f64,
    pub h_theta: f64,
    pub max_residual: f64,
    /// Per-component maxima: `(trθ, trφ, tθφ, rθφ)` for `dF`, `(t, r, θ, φ)` for the divergence.
    pub components: [f64; 4],
}

/// Central difference stencils of order 2 or 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stencil {
    Second,
    Fourth,
}

impl Stencil {
    pub fn order(self) -> usize {
        match self {
            Stencil::Second => 2,
            Stencil::Fourth => 4,
        }
    }

    fn reach(self) -> usize {
        self.order() / 2
    }

    fn apply(self, at: impl Fn(isize) -> Matrix4<f64>, h: f64) -> Matrix4<f64> {
        match self {
            Stencil::Second => (at(1) - at(-1)) / (2.0 * h),
            Stencil::Fourth => (at(-2) - at(2) + (at(1) - at(-1)) * 8.0) / (12.0 * h),
        }
    }
}

fn central(v: &[Vec<Matrix4<f64>>], i: usize, j: usize, hr: f64, ht: f64, st: Stencil) -> [Matrix4<f64>; 4] {
    [
        Matrix4::zeros(),
        st.apply(|k| v[(i as isize + k) as usize][j], hr),
        st.apply(|k| v[i][(j as isize + k) as usize], ht),
        Matrix4::zeros(),
    ]
}

fn interior_max<F: Fn(usize, usize) -> [f64; 4] + Sync>(grid: &Grid2D, reach: usize, f: F) -> [f64; 4] {
    (reach..grid.r.len() - reach)
        .into_par_iter()
        .map(|i| {
            let mut m = [0.0f64; 4];
            for j in reach..grid.theta.len() - reach {
                let v = f(i, j);
                for k in 0..4 {
                    m[k] = m[k].max(v[k].abs());
                }
            }
            m
        })
        .reduce(|| [0.0; 4], |a, b| [a[0].max(b[0]), a[1].max(b[1]), a[2].max(b[2]), a[3].max(b[3])])
}

fn level(grid: &Grid2D, components: [f64; 4]) -> LevelResidual {
    LevelResidual {
        n_r: grid.r.len(),
        n_theta: grid.theta.len(),
        h_r: grid.h_r(),
        h_theta: grid.h_theta(),
        max_residual: components.iter().copied().fold(0.0, f64::max),
        components,
    }
}

/// `dF` by central differences; `t` and `phi` derivatives vanish.
pub fn verify_closed(p: &KdsParams, grid: &Grid2D, field: KdsField, st: Stencil) -> Result<LevelResidual> {
    let vals = grid.sample(|r, th| field.components(p, r, th))?;
    let (hr, ht) = (grid.h_r(), grid.h_theta());
    let triples = [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)];
    let comps = interior_max(grid, st.reach(), |i, j| {
        let d = central(&vals, i, j, hr, ht, st);
        triples.map(|(l, m, n)| d[l][(m, n)] + d[m][(n, l)] + d[n][(l, m)])
    });
    Ok(level(grid, comps))
}

/// `(1/sqrt|g|) d_mu (sqrt|g| F^{mu nu})` by central differences.
pub fn verify_coclosed(p: &KdsParams, grid: &Grid2D, field: KdsField, st: Stencil) -> Result<LevelResidual> {
    let dens = grid.sample(|r, th| {
        let g = kds_metric(p, r, th)?;
        let ginv = g.try_inverse().ok_or_else(|| Error::HorizonDomain(format!("singular metric at r = {r}")))?;
        Ok(raise(&ginv, &field.components(p, r, th)?) * sqrt_abs_det(p, r, th))
    })?;
    let (hr, ht) = (grid.h_r(), grid.h_theta());
    let comps = interior_max(grid, st.reach(), |i, j| {
        let d = central(&dens, i, j, hr, ht, st);
        let vol = sqrt_abs_det(p, grid.r[i], grid.theta[j]);
        [0, 1, 2, 3].map(|nu| (d[1][(1, nu)] + d[2][(2, nu)]) / vol)
    });
    Ok(level(grid, comps))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxwellCheck {
    Closed,
    Coclosed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementStudy {
    pub field: KdsField,
    pub check: MaxwellCheck,
    pub spin: f64,
    pub stencil: Stencil,
    pub levels: Vec<LevelResidual>,
    /// Log-log slope of residual against `h_r`; `None` when every level is
    /// at round-off, where a slope carries no information.
    pub slope: Option<f64>,
    pub finest: f64,
}

/// Residuals below this are treated as round-off when fitting a slope.
pub const ROUNDOFF_FLOOR: f64 = 1e-12;

/// Runs one check on `n x n` grids for each `n` in `sizes`.
pub fn refinement_study(
    p: &KdsParams,
    field: KdsField,
    check: MaxwellCheck,
    sizes: &[usize],
    inset: f64,
    theta_min: f64,
    stencil: Stencil,
) -> Result<RefinementStudy> {
    let mut levels = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let grid = Grid2D::annulus(p, n, n, inset, theta_min)?;
        levels.push(match check {
            MaxwellCheck::Closed => verify_closed(p, &grid, field, stencil)?,
            MaxwellCheck::Coclosed => verify_coclosed(p, &grid, field, stencil)?,
        });
    }
    let usable: Vec<&LevelResidual> = levels.iter().filter(|l| l.max_residual > ROUNDOFF_FLOOR).collect();
    let slope = (usable.len() >= 2 && usable.len() == levels.len()).then(|| {
        let h: Vec<f64> = usable.iter().map(|l| l.h_r).collect();
        let e: Vec<f64> = usable.iter().map(|l| l.max_residual).collect();
        loglog_slope(&h, &e)
    });
    let finest = levels.last().map_or(f64::NAN, |l| l.max_residual);
    Ok(RefinementStudy { field, check, spin: p.spin, stencil, levels, slope, finest })
}
