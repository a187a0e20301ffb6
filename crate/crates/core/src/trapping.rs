//! Null-geodesic trapping at the photon sphere: Hamilton flow of the
//! rescaled principal symbol, the expansion rate `nu_min`, an escape
//! function check and the subprincipal bound needed for a spectral gap.

use nalgebra::{Matrix2, Matrix4, SymmetricEigen};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{HorizonData, SdsParams};
use crate::numerics::linear_fit;
use crate::numerics::ode::{dopri5, OdeOptions};

/// Phase-space point of the reduced flow; `eta_sq` is `|eta|^2` on the sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhasePoint {
    pub r: f64,
    pub xi: f64,
    pub eta_sq: f64,
    pub z: f64,
}

/// `Delta_r = r^2 mu`.
pub fn delta_r(p: &SdsParams, r: f64) -> f64 {
    r * r * p.mu(r)
}

fn d_delta_r(p: &SdsParams, r: f64) -> f64 {
    2.0 * r * p.mu(r) + r * r * p.dmu(r)
}

/// `d/dr (r^4 / Delta_r)`.
fn d_r4_over_delta(p: &SdsParams, r: f64) -> f64 {
    let d = delta_r(p, r);
    (4.0 * r.powi(3) * d - r.powi(4) * d_delta_r(p, r)) / (d * d)
}

/// `p = Delta_r xi^2 - (r^4 / Delta_r) z^2 + |eta|^2`.
pub fn principal_symbol(params: &SdsParams, x: PhasePoint) -> Result<f64> {
    let d = delta_r(params, x.r);
    if !(d > 0.0) {
        return Err(Error::HorizonDomain(format!("Delta_r = {d} <= 0 at r = {}", x.r)));
    }
    Ok(d * x.xi * x.xi - x.r.powi(4) / d * x.z * x.z + x.eta_sq)
}

/// `(dr/dt, dxi/dt)` of the Hamilton vector field.
fn hamilton_rhs(params: &SdsParams, r: f64, xi: f64, z: f64) -> (f64, f64) {
    (
        2.0 * delta_r(params, r) * xi,
        -(d_delta_r(params, r) * xi * xi - d_r4_over_delta(params, r) * z * z),
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub r: Vec<f64>,
    pub xi: Vec<f64>,
    /// Angle along the great circle traced on the sphere.
    pub phi: Vec<f64>,
    pub eta_sq: f64,
    pub z: f64,
    /// Largest `|p(t) - p(0)|` relative to the size of the terms of `p`.
    pub max_relative_drift: f64,
    /// The trajectory left the shrunken static region before the end time.
    pub escaped: bool,
}

/// Integrates the flow in `(r, xi, phi)` with `|eta|^2` conserved. The run
/// stops early, flagged as escaped, when `r` comes within `1e-3 (r_+ - r_-)`
/// of a horizon.
pub fn hamilton_flow(params: &SdsParams, start: PhasePoint, t_end: f64, opts: &OdeOptions) -> Result<Trajectory> {
    let h = params.horizons()?;
    let margin = 1e-3 * (h.r_plus - h.r_minus);
    let (lo, hi) = (h.r_minus + margin, h.r_plus - margin);
    if !(start.r > lo && start.r < hi) {
        return Err(Error::HorizonDomain(format!("start radius {} outside ({lo}, {hi})", start.r)));
    }
    let p0 = principal_symbol(params, start)?;
    let d0 = delta_r(params, start.r);
    let scale = (d0 * start.xi * start.xi).abs() + start.r.powi(4) / d0 * start.z * start.z + start.eta_sq;
    let eta = start.eta_sq.sqrt();
    let z = start.z;
    let mut tr = Trajectory {
        t: vec![0.0],
        r: vec![start.r],
        xi: vec![start.xi],
        phi: vec![0.0],
        eta_sq: start.eta_sq,
        z,
        max_relative_drift: 0.0,
        escaped: false,
    };
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
        let (dr, dxi) = hamilton_rhs(params, y[0], y[1], z);
        dy[0] = dr;
        dy[1] = dxi;
        dy[2] = 2.0 * eta;
    };
    dopri5(rhs, 0.0, &[start.r, start.xi, 0.0], t_end, opts, |t, y| {
        if !(y[0] > lo && y[0] < hi) {
            tr.escaped = true;
            return false;
        }
        let pt = PhasePoint { r: y[0], xi: y[1], eta_sq: start.eta_sq, z };
        if let Ok(pv) = principal_symbol(params, pt) {
            let d = delta_r(params, y[0]);
            let here = d * y[1] * y[1] + y[0].powi(4) / d * z * z + start.eta_sq;
            tr.max_relative_drift = tr.max_relative_drift.max((pv - p0).abs() / scale.max(here));
        }
        tr.t.push(t);
        tr.r.push(y[0]);
        tr.xi.push(y[1]);
        tr.phi.push(y[2]);
        true
    })?;
    Ok(tr)
}

/// Closed form `2 r_p ((n-1) / (1 - (n-1)/(n-3) r_p^2 lambda))^{1/2}`.
pub fn nu_min(params: &SdsParams) -> Result<f64> {
    let n = params.n() as f64;
    let rp = params.photon_sphere_radius();
    let radicand = 1.0 - (n - 1.0) / (n - 3.0) * rp * rp * params.lambda_small();
    if !(radicand > 0.0) {
        return Err(Error::DegenerateTrapping(format!("1 - (n-1)/(n-3) r_p^2 lambda = {radicand} <= 0")));
    }
    Ok(2.0 * rp * ((n - 1.0) / radicand).sqrt())
}

/// Linearization of the reduced flow at the trapped set in `(r - r_p, xi)`.
pub fn linearization(params: &SdsParams, z: f64) -> Matrix2<f64> {
    let rp = params.photon_sphere_radius();
    let mt = params.mu_tilde(rp);
    let k = params.n() as f64 - 3.0;
    Matrix2::new(0.0, 2.0 * rp.powi(4) * mt, 2.0 * k * rp.powi(-4) / (mt * mt) * z * z, 0.0)
}

/// Eigenvalues of [`linearization`], ascending.
pub fn linearization_eigenvalues(params: &SdsParams, z: f64) -> [f64; 2] {
    let m = linearization(params, z);
    let ev = m.complex_eigenvalues();
    let mut v = [ev[0].re, ev[1].re];
    v.sort_by(f64::total_cmp);
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovFit {
    pub exponent: f64,
    pub points_used: usize,
    pub window: (f64, f64),
}

/// Growth rate of `|r - r_p|` for a trajectory started on the unstable
/// direction, fitted log-linearly while `|r - r_p|` lies in `window`.
pub fn fit_lyapunov(params: &SdsParams, delta_r0: f64, window: (f64, f64), z: f64) -> Result<LyapunovFit> {
    let rp = params.photon_sphere_radius();
    let nu = nu_min(params)?;
    let a = 2.0 * rp.powi(4) * params.mu_tilde(rp);
    let xi0 = nu / a * delta_r0;
    let d = delta_r(params, rp + delta_r0);
    let eta_sq = ((rp + delta_r0).powi(4) / d * z * z - d * xi0 * xi0).max(0.0);
    let start = PhasePoint { r: rp + delta_r0, xi: xi0, eta_sq, z };
    let t_end = ((window.1 / delta_r0).ln() + 2.0) / nu;
    let opts = OdeOptions { rtol: 1e-12, atol: 1e-16, max_step: 0.02 / nu, ..OdeOptions::default() };
    let traj = hamilton_flow(params, start, t_end, &opts)?;
    let (mut ts, mut ls) = (Vec::new(), Vec::new());
    for (t, r) in traj.t.iter().zip(&traj.r) {
        let dr = (r - rp).abs();
        if dr >= window.0 && dr <= window.1 {
            ts.push(*t);
            ls.push(dr.ln());
        }
    }
    if ts.len() < 8 {
        return Err(Error::FitFailure(format!("only {} samples in the fitting window", ts.len())));
    }
    let (slope, _) = linear_fit(&ts, &ls);
    if !(slope.is_finite() && slope > 0.0) {
        return Err(Error::FitFailure(format!("fitted exponent {slope} is not positive")));
    }
    Ok(LyapunovFit { exponent: slope, points_used: ts.len(), window })
}

/// Imaginary part of the subprincipal symbol at the trapped set, relative to
/// the positive definite fiber inner product: only the `(TN, NT)` entries
/// survive.
pub fn subprincipal_matrix(params: &SdsParams, tau_sign: f64) -> Matrix4<f64> {
    let rp = params.photon_sphere_radius();
    let c = tau_sign.signum() * rp * rp * params.dmu(rp) / params.mu(rp);
    let mut q = Matrix4::zeros();
    q[(1, 2)] = c;
    q[(2, 1)] = c;
    q
}

/// Nonzero eigenvalues of [`subprincipal_matrix`], descending.
pub fn subprincipal_eigenvalues(params: &SdsParams) -> [f64; 2] {
    let ev = SymmetricEigen::new(subprincipal_matrix(params, 1.0)).eigenvalues;
    let mut v: Vec<f64> = ev.iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    [v[0], v[3]]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapReport {
    /// `r_p^2 lambda > (5-n)(n-3) / (4(n-1))`.
    pub holds: bool,
    pub margin: f64,
    pub threshold: f64,
    pub subprincipal: [f64; 2],
    pub nu_min: f64,
    /// `2 r_p < nu_min / 2`, evaluated independently.
    pub subprincipal_below_half_nu: bool,
}

pub fn gap_condition(params: &SdsParams) -> Result<GapReport> {
    let n = params.n() as f64;
    let rp = params.photon_sphere_radius();
    let threshold = (5.0 - n) * (n - 3.0) / (4.0 * (n - 1.0));
    let x = rp * rp * params.lambda_small();
    let nu = nu_min(params)?;
    let sub = subprincipal_eigenvalues(params);
    Ok(GapReport {
        holds: x > threshold,
        margin: x - threshold,
        threshold,
        subprincipal: sub,
        nu_min: nu,
        subprincipal_below_half_nu: sub[0] < nu / 2.0,
    })
}

/// Which family of points with `H_p F = 0` a sample belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    /// `xi = 0`, `r != r_p`.
    Turning,
    /// `r = r_p`, `xi != 0`.
    Crossing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EscapeSample {
    pub point: PhasePoint,
    pub kind: SampleKind,
    pub hp_f: f64,
    pub hp2_f: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EscapeReport {
    pub samples: usize,
    pub violations: usize,
    pub on_trapped_set: usize,
    pub min_hp2_f: f64,
    pub preview: Vec<EscapeSample>,
}

/// `(H_p F, H_p^2 F)` for `F = (r - r_p)^2` at a phase point.
pub fn escape_derivatives(params: &SdsParams, x: PhasePoint) -> (f64, f64) {
    let rp = params.photon_sphere_radius();
    let (dr, dxi) = hamilton_rhs(params, x.r, x.xi, x.z);
    let h2r = 2.0 * d_delta_r(params, x.r) * dr * x.xi + 2.0 * delta_r(params, x.r) * dxi;
    (2.0 * (x.r - rp) * dr, 2.0 * dr * dr + 2.0 * (x.r - rp) * h2r)
}

/// Samples characteristic points with `H_p F = 0` and counts those where
/// `H_p^2 F <= 0` away from the trapped set.
pub fn escape_function_check<R: Rng>(params: &SdsParams, sample_size: usize, rng: &mut R) -> Result<EscapeReport> {
    let h: HorizonData = params.horizons()?;
    let rp = h.r_p;
    let width = h.r_plus - h.r_minus;
    let trapped_tol = 1e-9 * width;
    let mut rep = EscapeReport {
        samples: sample_size,
        violations: 0,
        on_trapped_set: 0,
        min_hp2_f: f64::INFINITY,
        preview: Vec::new(),
    };
    for i in 0..sample_size {
        let z = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let r_lo = h.r_minus + 1e-3 * width;
        let r_hi = h.r_plus - 1e-3 * width;
        let (point, kind) = if i % 2 == 0 {
            let r = rng.gen_range(r_lo..r_hi);
            let d = delta_r(params, r);
            (PhasePoint { r, xi: 0.0, eta_sq: r.powi(4) / d, z }, SampleKind::Turning)
        } else {
            let d = delta_r(params, rp);
            let xi_max = rp * rp / d;
            let xi = rng.gen_range(-xi_max..xi_max);
            let eta_sq = (rp.powi(4) / d - d * xi * xi).max(0.0);
            (PhasePoint { r: rp, xi, eta_sq, z }, SampleKind::Crossing)
        };
        let (hp_f, hp2_f) = escape_derivatives(params, point);
        let on_gamma = (point.r - rp).abs() < trapped_tol && point.xi.abs() < trapped_tol;
        if on_gamma {
            rep.on_trapped_set += 1;
        } else {
            rep.min_hp2_f = rep.min_hp2_f.min(hp2_f);
            if !(hp2_f > 0.0) {
                rep.violations += 1;
            }
        }
        if rep.preview.len() < 16 {
            rep.preview.push(EscapeSample { point, kind, hp_f, hp2_f });
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, Serialize)]
pub struct TrappingReport {
    pub r_p: f64,
    pub nu_min: f64,
    pub linearization_eigenvalues: [f64; 2],
    pub subprincipal_eigs: [f64; 2],
    pub gap: GapReport,
    pub fitted_lyapunov: Option<LyapunovFit>,
    pub fit_relative_error: Option<f64>,
    pub escape: EscapeReport,
    pub phase_point_sample: Vec<PhasePoint>,
}

pub fn trapping_report<R: Rng>(params: &SdsParams, escape_samples: usize, rng: &mut R) -> Result<TrappingReport> {
    let nu = nu_min(params)?;
    let fit = fit_lyapunov(params, 1e-6, (1e-6, 1e-3), 1.0).ok();
    let escape = escape_function_check(params, escape_samples, rng)?;
    Ok(TrappingReport {
        r_p: params.photon_sphere_radius(),
        nu_min: nu,
        linearization_eigenvalues: linearization_eigenvalues(params, 1.0),
        subprincipal_eigs: subprincipal_eigenvalues(params),
        gap: gap_condition(params)?,
        fit_relative_error: fit.map(|f| (f.exponent - nu).abs() / nu),
        fitted_lyapunov: fit,
        phase_point_sample: escape.preview.iter().map(|s| s.point).collect(),
        escape,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::roots::bisect_predicate;
    use nalgebra::Matrix4 as M4;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p4() -> SdsParams {
        SdsParams::from_lambda(4, 1.0, 0.01).unwrap()
    }

    #[test]
    fn symbol_on_trapped_set_and_dual_metric() {
        let p = p4();
        let rp = p.photon_sphere_radius();
        let d = delta_r(&p, rp);
        let on = PhasePoint { r: rp, xi: 0.0, eta_sq: rp.powi(4) / d, z: 1.0 };
        assert!(principal_symbol(&p, on).unwrap().abs() < 1e-12 * on.eta_sq);
        let x = PhasePoint { r: 4.0, xi: 0.7, eta_sq: 0.0, z: 0.0 };
        assert!(principal_symbol(&p, x).unwrap() >= 0.0);
        assert!(principal_symbol(&p, PhasePoint { r: 1.0, ..x }).is_err());

        // -r^2 G(zeta) with the inverse of g = diag(mu, -1/mu, -r^2, -r^2) at the equator
        let (r, xi, eth, eph, z) = (4.5, -0.3, 0.8, 1.1, 1.0);
        let g = M4::from_diagonal(&nalgebra::Vector4::new(p.mu(r), -1.0 / p.mu(r), -r * r, -r * r));
        let gi = g.try_inverse().unwrap();
        let zeta = nalgebra::Vector4::new(-z, xi, eth, eph);
        let oracle = -r * r * (zeta.transpose() * gi * zeta)[0];
        let ours = principal_symbol(&p, PhasePoint { r, xi, eta_sq: eth * eth + eph * eph, z }).unwrap();
        assert!((oracle - ours).abs() < 1e-12 * ours.abs().max(1.0));
    }

    #[test]
    fn trapped_set_is_fixed() {
        let p = p4();
        let rp = p.photon_sphere_radius();
        let d = delta_r(&p, rp);
        let start = PhasePoint { r: rp, xi: 0.0, eta_sq: rp.powi(4) / d, z: 1.0 };
        // the point is hyperbolic, so round-off grows like exp(nu_min t)
        let tr = hamilton_flow(&p, start, 1.0, &OdeOptions::default()).unwrap();
        assert!(tr.r.iter().all(|r| (r - rp).abs() < 1e-8));
        assert!(tr.xi.iter().all(|x| x.abs() < 1e-8));
        // angular motion is uniform: separations of nearby geodesics stay bounded linearly
        let last = tr.phi.len() - 1;
        assert!((tr.phi[last] - 2.0 * start.eta_sq.sqrt() * tr.t[last]).abs() < 1e-9);
    }

    #[test]
    fn nu_min_closed_form_and_linearization() {
        let p = p4();
        let nu = nu_min(&p).unwrap();
        assert!((nu - 6.0 * (3.0f64 / 0.73).sqrt()).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 4..=8 {
            for _ in 0..20 {
                let q = SdsParams::random_nondegenerate(n, &mut rng);
                let nu = nu_min(&q).unwrap();
                let ev = linearization_eigenvalues(&q, 1.0);
                assert!((ev[1] - nu).abs() < 1e-12 * nu && (ev[0] + nu).abs() < 1e-12 * nu);
                let m = linearization(&q, 1.0);
                assert!(m.trace().abs() < 1e-15);
                assert!((m.determinant() + nu * nu).abs() < 1e-11 * nu * nu);
            }
        }
    }

    #[test]
    fn lyapunov_fit_matches() {
        for p in [p4(), SdsParams::from_lambda(5, 0.7, 0.05).unwrap()] {
            let nu = nu_min(&p).unwrap();
            let fit = fit_lyapunov(&p, 1e-6, (1e-6, 1e-3), 1.0).unwrap();
            let err = (fit.exponent - nu).abs() / nu;
            assert!(err < 1e-3, "fit {} vs {nu}: {err:e}", fit.exponent);
        }
    }

    #[test]
    fn symbol_conserved_on_random_trajectories() {
        let p = p4();
        let h = p.horizons().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let opts = OdeOptions { rtol: 1e-14, atol: 1e-16, ..OdeOptions::default() };
        for _ in 0..20 {
            let w = h.r_plus - h.r_minus;
            let r = rng.gen_range(h.r_minus + 0.1 * w..h.r_plus - 0.1 * w);
            // null covectors, where the flow matters
            let d = delta_r(&p, r);
            let xi = rng.gen_range(-0.5..0.5) * r * r / d;
            let x = PhasePoint { r, xi, eta_sq: r.powi(4) / d - d * xi * xi, z: 1.0 };
            let t_end = 2.0;
            let tr = hamilton_flow(&p, x, t_end, &opts).unwrap();
            let elapsed = tr.t.last().copied().unwrap();
            assert!(tr.max_relative_drift <= 1e-9 * elapsed.max(1.0), "drift {} over {elapsed} escaped {}", tr.max_relative_drift, tr.escaped);
        }
    }

    #[test]
    fn escape_function_positive() {
        let p = p4();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rep = escape_function_check(&p, 10_000, &mut rng).unwrap();
        assert_eq!(rep.violations, 0);
        assert!(rep.min_hp2_f > 0.0);
        for s in &rep.preview {
            assert!(s.hp_f.abs() < 1e-9);
            assert!(principal_symbol(&p, s.point).unwrap().abs() < 1e-9 * (1.0 + s.point.eta_sq));
        }
    }

    #[test]
    fn gap_condition_verdicts() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in 4..=8 {
            for _ in 0..100 {
                let q = SdsParams::random_nondegenerate(n, &mut rng);
                let g = gap_condition(&q).unwrap();
                assert_eq!(g.holds, g.subprincipal_below_half_nu);
                assert!((g.subprincipal[0] - 2.0 * q.photon_sphere_radius()).abs() < 1e-10 * g.subprincipal[0]);
                assert!((g.subprincipal[0] + g.subprincipal[1]).abs() < 1e-10 * g.subprincipal[0]);
                if n >= 5 {
                    assert!(g.holds);
                }
            }
        }
        let lam = bisect_predicate(
            |l| gap_condition(&SdsParams::from_lambda(4, 1.0, l).unwrap()).unwrap().subprincipal_below_half_nu,
            1e-4,
            0.03,
            200,
        );
        assert!((9.0 * lam - 1.0 / 12.0).abs() < 1e-12, "{}", 9.0 * lam);
        assert!(!gap_condition(&SdsParams::from_lambda(4, 1.0, 0.009).unwrap()).unwrap().holds);
        assert!(gap_condition(&SdsParams::from_lambda(4, 1.0, 0.0095).unwrap()).unwrap().holds);
    }
}
