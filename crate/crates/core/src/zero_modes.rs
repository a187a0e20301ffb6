//! Stationary resonant states of `d + delta` and of the wave operator on
//! Schwarzschild-de Sitter space: closed-form radial profiles, the horizon
//! matching system and the dual-state bookkeeping.

use nalgebra::{Matrix2, Matrix2x4, Matrix4, Vector4};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::form_ops::{AngularSector, Comp, FormSection4, RadialGrid};
use crate::geometry::{SdsParams, StaticBackground};

/// A power `r^exponent` solving one of the stationary radial equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PowerLaw {
    pub exponent: i32,
}

impl PowerLaw {
    pub fn eval(self, r: f64) -> f64 {
        r.powi(self.exponent)
    }
}

/// Fundamental solutions of `d/dr r^{2-n} d/dr r^{n-2} f_1 = 0` and
/// `r^{2-n} d/dr r^{n-2} d/dr f_2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RadialOdeBasis {
    pub n: usize,
    pub f1: [PowerLaw; 2],
    pub f2: [PowerLaw; 2],
}

pub fn radial_ode_basis(n: usize) -> RadialOdeBasis {
    let n = n as i32;
    RadialOdeBasis {
        n: n as usize,
        f1: [PowerLaw { exponent: 1 }, PowerLaw { exponent: 2 - n }],
        f2: [PowerLaw { exponent: 0 }, PowerLaw { exponent: 3 - n }],
    }
}

/// Coefficient `c` with `d/dr r^{2-n} d/dr r^{n-2} r^k = c r^{k-2}`.
pub fn f1_operator_on_power(n: usize, k: i32) -> i64 {
    let n = n as i64;
    let k = k as i64;
    (n - 2 + k) * (k - 1)
}

/// Coefficient `c` with `r^{2-n} d/dr r^{n-2} d/dr r^k = c r^{k-2}`.
pub fn f2_operator_on_power(n: usize, k: i32) -> i64 {
    let n = n as i64;
    let k = k as i64;
    k * (n + k - 3)
}

/// Stationary 1-form `f_1 alpha^{-2} dr + f_2 dt` with
/// `f_1 = f11 r + f12 r^{2-n}` and `f_2 = f21 + f22 r^{3-n}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OneFormMode {
    pub n: usize,
    pub f11: f64,
    pub f12: f64,
    pub f21: f64,
    pub f22: f64,
}

impl OneFormMode {
    pub fn f1(&self, r: f64) -> f64 {
        self.f11 * r + self.f12 * r.powi(2 - self.n as i32)
    }

    pub fn f2(&self, r: f64) -> f64 {
        self.f21 + self.f22 * r.powi(3 - self.n as i32)
    }

    /// Components `u_TN = alpha^{-1} f_1`, `u_NT = alpha^{-1} f_2` in the
    /// constant sector.
    pub fn section<B: StaticBackground + ?Sized>(&self, bg: &B, grid: &RadialGrid) -> FormSection4 {
        FormSection4::from_real_fn(1, AngularSector::constant(self.n - 2), grid, |c, r| match c {
            Comp::TN => self.f1(r) / bg.alpha(r),
            Comp::NT => self.f2(r) / bg.alpha(r),
            _ => 0.0,
        })
    }

    /// Largest violation of `f_2(r_-) = f_1(r_-)`, `f_2(r_+) = -f_1(r_+)`.
    pub fn matching_defect(&self, r_minus: f64, r_plus: f64) -> f64 {
        let a = (self.f2(r_minus) - self.f1(r_minus)).abs();
        let b = (self.f2(r_plus) + self.f1(r_plus)).abs();
        a.max(b)
    }
}

/// Horizon matching conditions for `(f11, f12, f21, f22)`.
pub fn matching_system(params: &SdsParams) -> Result<Matrix2x4<f64>> {
    let h = params.horizons()?;
    let m = matching_matrix_at(params.n(), h.r_minus, h.r_plus);
    let rank = numerical_rank(&m);
    if rank != 2 {
        return Err(Error::RankDeficiency { rank });
    }
    Ok(m)
}

fn matching_matrix_at(n: usize, rm: f64, rp: f64) -> Matrix2x4<f64> {
    let (a, b) = (2 - n as i32, 3 - n as i32);
    Matrix2x4::new(
        rm, rm.powi(a), -1.0, -rm.powi(b), //
        rp, rp.powi(a), 1.0, rp.powi(b),
    )
}

fn numerical_rank(m: &Matrix2x4<f64>) -> usize {
    let sv = m.svd(false, false).singular_values;
    let tol = sv.max() * 4.0 * f64::EPSILON;
    sv.iter().filter(|s| **s > tol).count()
}

/// Singular values of the matching system and the relative size of its
/// action on the computed null directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchingRankReport {
    pub singular_values: [f64; 2],
    pub rank: usize,
    /// `max |A v| / |A|` over an orthonormal basis `v` of the null space.
    pub null_residual: f64,
}

pub fn matching_rank_report(params: &SdsParams) -> Result<MatchingRankReport> {
    let h = params.horizons()?;
    let m = matching_matrix_at(params.n(), h.r_minus, h.r_plus);
    // Pad to a square matrix so that the SVD exposes all four right singular vectors.
    let mut sq = Matrix4::zeros();
    sq.fixed_view_mut::<2, 4>(0, 0).copy_from(&m);
    let svd = sq.svd(false, true);
    let vt = svd.v_t.expect("requested right singular vectors");
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|a, b| sv[*b].total_cmp(&sv[*a]));
    let top = sv[order[0]];
    let mut null_residual: f64 = 0.0;
    for &k in &order[2..] {
        let v: Vector4<f64> = vt.row(k).transpose();
        null_residual = null_residual.max((m * v).norm() / top);
    }
    Ok(MatchingRankReport {
        singular_values: [top, sv[order[1]]],
        rank: numerical_rank(&m),
        null_residual,
    })
}

/// Basis `u_+`, `u_-` of stationary 1-form resonant states and the labels
/// of their Hodge duals, which span the `(n-1)`-form states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroModeBasis {
    pub n: usize,
    pub r_minus: f64,
    pub r_plus: f64,
    /// `f_1(r_-) = 0`, `f_1(r_+) = 1`.
    pub u_plus: OneFormMode,
    /// `f_1(r_-) = 1`, `f_1(r_+) = 0`.
    pub u_minus: OneFormMode,
    /// 2-norm condition number of the 4x4 normalization system.
    pub condition_number: f64,
    pub dual_labels: [String; 2],
}

pub fn basis_u_pm(params: &SdsParams) -> Result<ZeroModeBasis> {
    let m = matching_system(params)?;
    let h = params.horizons()?;
    let n = params.n();
    let (rm, rp) = (h.r_minus, h.r_plus);
    let a = 2 - n as i32;
    let mut sys = Matrix4::zeros();
    sys.fixed_view_mut::<2, 4>(0, 0).copy_from(&m);
    sys.row_mut(2).copy_from_slice(&[rm, rm.powi(a), 0.0, 0.0]);
    sys.row_mut(3).copy_from_slice(&[rp, rp.powi(a), 0.0, 0.0]);
    let sv = sys.svd(false, false).singular_values;
    let condition_number = sv.max() / sv.min();
    let lu = sys.lu();
    let solve = |at_minus: f64, at_plus: f64| -> Result<OneFormMode> {
        let c = lu
            .solve(&Vector4::new(0.0, 0.0, at_minus, at_plus))
            .ok_or(Error::RankDeficiency { rank: 3 })?;
        Ok(OneFormMode { n, f11: c[0], f12: c[1], f21: c[2], f22: c[3] })
    };
    Ok(ZeroModeBasis {
        n,
        r_minus: rm,
        r_plus: rp,
        u_plus: solve(0.0, 1.0)?,
        u_minus: solve(1.0, 0.0)?,
        condition_number,
        dual_labels: ["*u_plus".into(), "*u_minus".into()],
    })
}

/// Reduced system showing that no nonzero 1-form is both closed and coclosed
/// while satisfying the matching conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct H1Certificate {
    pub n: usize,
    /// Rows act on `(f_1(r_-), f21)`: `f_2(r_-) = f_1(r_-)` and `f_2(r_+) = -f_1(r_+)`
    /// with `f_2 = f21` and `f_1 = f_1(r_-) (r / r_-)^{2-n}`.
    pub matrix: [[f64; 2]; 2],
    pub determinant: f64,
    pub trivial: bool,
}

pub fn h1_triviality_certificate(params: &SdsParams) -> Result<H1Certificate> {
    let h = params.horizons()?;
    let n = params.n();
    let ratio = (h.r_plus / h.r_minus).powi(2 - n as i32);
    let m = Matrix2::new(1.0, -1.0, ratio, 1.0);
    let det = m.determinant();
    Ok(H1Certificate {
        n,
        matrix: [[1.0, -1.0], [ratio, 1.0]],
        determinant: det,
        trivial: det != 0.0 && det.is_finite(),
    })
}

/// A named stationary state sampled on a grid.
#[derive(Debug, Clone)]
pub struct StationaryState {
    pub label: String,
    pub degree: usize,
    pub section: FormSection4,
}

/// The stationary 2-form and `(n-2)`-form states `omega` and `r^{-(n-2)} dt ^ dr`.
pub fn stationary_2forms<B: StaticBackground + ?Sized>(bg: &B, grid: &RadialGrid) -> Vec<StationaryState> {
    let n = bg.dim();
    let s = n - 2;
    let omega = FormSection4::from_real_fn(s, AngularSector::volume(s), grid, |_, _| 1.0);
    let dtdr = FormSection4::from_real_fn(2, AngularSector::constant(s), grid, |c, r| {
        if c == Comp::NN {
            r.powi(-(s as i32))
        } else {
            0.0
        }
    });
    vec![
        StationaryState { label: "omega".into(), degree: s, section: omega },
        StationaryState { label: format!("r^-{s} dt^dr"), degree: 2, section: dtdr },
    ]
}

/// All stationary states annihilated by both `d` and `delta`: the constant,
/// the 2-form and `(n-2)`-form states, and `r^{n-2} dt ^ dr ^ omega`.
pub fn harmonic_states<B: StaticBackground + ?Sized>(bg: &B, grid: &RadialGrid) -> Vec<StationaryState> {
    let n = bg.dim();
    let s = n - 2;
    let mut out = vec![StationaryState {
        label: "1".into(),
        degree: 0,
        section: FormSection4::from_real_fn(0, AngularSector::constant(s), grid, |_, _| 1.0),
    }];
    out.extend(stationary_2forms(bg, grid));
    out.push(StationaryState {
        label: format!("r^{s} dt^dr^omega"),
        degree: n,
        section: FormSection4::from_real_fn(n, AngularSector::volume(s), grid, |c, r| {
            if c == Comp::NN {
                r.powi(s as i32)
            } else {
                0.0
            }
        }),
    });
    out
}

/// Labels and degrees of a basis of the stationary states of the wave
/// operator; `harmonic` marks those also annihilated by `d + delta`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StateLabel {
    pub label: String,
    pub degree: usize,
    pub harmonic: bool,
}

pub fn state_catalog(n: usize) -> Vec<StateLabel> {
    let s = n - 2;
    let mk = |label: String, degree: usize, harmonic: bool| StateLabel { label, degree, harmonic };
    vec![
        mk("1".into(), 0, true),
        mk("u_plus".into(), 1, false),
        mk("u_minus".into(), 1, false),
        mk(format!("r^-{s} dt^dr"), 2, true),
        mk("omega".into(), s, true),
        mk("*u_plus".into(), n - 1, false),
        mk("*u_minus".into(), n - 1, false),
        mk(format!("r^{s} dt^dr^omega"), n, true),
    ]
}

/// `dim K^k` for `k = 0..=n` counted from [`state_catalog`].
pub fn k_dims(n: usize) -> Vec<usize> {
    count(n, state_catalog(n).iter().map(|s| s.degree))
}

/// `dim H^k` for `k = 0..=n` counted from [`state_catalog`].
pub fn h_dims(n: usize) -> Vec<usize> {
    count(n, state_catalog(n).iter().filter(|s| s.harmonic).map(|s| s.degree))
}

fn count<I: Iterator<Item = usize>>(n: usize, degrees: I) -> Vec<usize> {
    let mut v = vec![0; n + 1];
    for d in degrees {
        v[d] += 1;
    }
    v
}

/// Where a dual state is supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    /// The closed static region `r_- <= r <= r_+`.
    StaticRegion,
    EventHorizon,
    CosmologicalHorizon,
}

/// Symbolic description of a dual resonant state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DualState {
    pub label: String,
    pub degree: usize,
    pub support: Support,
    /// Dual state of `d + delta` (otherwise only of the wave operator).
    pub harmonic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualStateTable {
    pub n: usize,
    pub states: Vec<DualState>,
    pub k_star_dims: Vec<usize>,
    pub h_star_dims: Vec<usize>,
    /// Resonant states of `d + delta` and their duals never share a form degree.
    pub orthogonal: bool,
}

pub fn dual_state_table(n: usize) -> DualStateTable {
    let s = n - 2;
    let ds = |label: &str, degree: usize, support: Support, harmonic: bool| DualState {
        label: label.to_string(),
        degree,
        support,
        harmonic,
    };
    let states = vec![
        ds("1_X", 0, Support::StaticRegion, false),
        ds("delta(r=r_-) dr", 1, Support::EventHorizon, true),
        ds("delta(r=r_+) dr", 1, Support::CosmologicalHorizon, true),
        ds(&format!("1_X r^-{s} dt^dr"), 2, Support::StaticRegion, false),
        ds("1_X omega", s, Support::StaticRegion, false),
        ds("delta(r=r_-) dr^omega", n - 1, Support::EventHorizon, true),
        ds("delta(r=r_+) dr^omega", n - 1, Support::CosmologicalHorizon, true),
        ds(&format!("1_X r^{s} dt^dr^omega"), n, Support::StaticRegion, false),
    ];
    let k_star_dims = count(n, states.iter().map(|d| d.degree));
    let h_star_dims = count(n, states.iter().filter(|d| d.harmonic).map(|d| d.degree));
    let h = h_dims(n);
    let orthogonal = (0..=n).all(|k| h[k] == 0 || h_star_dims[k] == 0);
    DualStateTable { n, states, k_star_dims, h_star_dims, orthogonal }
}

/// Complex copy of a real closed-form profile, used when comparing against
/// evolved data.
pub fn profile_values(mode: &OneFormMode, r: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let f1 = r.iter().map(|&x| Complex64::new(mode.f1(x), 0.0)).collect();
    let f2 = r.iter().map(|&x| Complex64::new(mode.f2(x), 0.0)).collect();
    (f1, f2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::form_ops::{annihilation_residual, assemble_box, assemble_d, assemble_delta};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

    #[test]
    fn radial_basis_solves_odes() {
        let b = radial_ode_basis(4);
        assert_eq!(b.f1.map(|p| p.exponent), [1, -2]);
        assert_eq!(b.f2.map(|p| p.exponent), [0, -1]);
        for n in 4..=10 {
            let b = radial_ode_basis(n);
            for k in b.f1 {
                assert_eq!(f1_operator_on_power(n, k.exponent), 0);
            }
            for k in b.f2 {
                assert_eq!(f2_operator_on_power(n, k.exponent), 0);
            }
            assert_ne!(f1_operator_on_power(n, 0), 0);
            assert_ne!(f2_operator_on_power(n, 1), 0);
        }
    }

    #[test]
    fn matching_rank_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 4..=7 {
            for _ in 0..50 {
                let p = SdsParams::random_nondegenerate(n, &mut rng);
                let rep = matching_rank_report(&p).unwrap();
                assert_eq!(rep.rank, 2);
                assert!(rep.null_residual < 1e-14, "{rep:?}");
                let h = h1_triviality_certificate(&p).unwrap();
                assert!(h.determinant > 0.0 && h.trivial);
            }
        }
    }

    #[test]
    fn normalized_modes() {
        let p = SdsParams::from_lambda(4, 1.0, 0.01).unwrap();
        let b = basis_u_pm(&p).unwrap();
        let (rm, rp) = (b.r_minus, b.r_plus);
        assert!(b.u_minus.matching_defect(rm, rp) < 1e-10);
        assert!(b.u_plus.matching_defect(rm, rp) < 1e-10);
        assert!((b.u_minus.f1(rm) - 1.0).abs() < 1e-12 && b.u_minus.f1(rp).abs() < 1e-12);
        assert!(b.u_plus.f1(rm).abs() < 1e-12 && (b.u_plus.f1(rp) - 1.0).abs() < 1e-12);
        assert_eq!(b.dual_labels[0], "*u_plus");
    }

    #[test]
    fn small_lambda_coefficients_stay_finite() {
        for lambda in [1e-2, 1e-3, 1e-4] {
            let p = SdsParams::from_lambda(4, 1.0, lambda).unwrap();
            let b = basis_u_pm(&p).unwrap();
            for m in [b.u_plus, b.u_minus] {
                assert!([m.f11, m.f12, m.f21, m.f22].iter().all(|c| c.is_finite()));
            }
            assert!(b.condition_number.is_finite());
        }
    }

    #[test]
    fn h1_certificate_n4_and_n6() {
        let p = SdsParams::from_lambda(4, 1.0, 0.01).unwrap();
        let h = p.horizons().unwrap();
        let c = h1_triviality_certificate(&p).unwrap();
        assert!((c.determinant - ((h.r_plus / h.r_minus).powi(-2) + 1.0)).abs() < 1e-15);
        let p6 = SdsParams::from_lambda(6, 1.0, 0.01).unwrap();
        let h6 = p6.horizons().unwrap();
        let c6 = h1_triviality_certificate(&p6).unwrap();
        assert!((c6.matrix[1][0] - (h6.r_plus / h6.r_minus).powi(-4)).abs() < 1e-15);
        assert!(c6.determinant > 1.0);
    }

    #[test]
    fn stationary_states_are_harmonic() {
        for n in [4, 5, 6] {
            let p = SdsParams::from_lambda(n, 1.0, 0.01).unwrap();
            let g = RadialGrid::uniform_r_inset(&p, 0.02, 128).unwrap();
            for st in harmonic_states(&p, &g) {
                let s = st.section.sector;
                let k = st.degree;
                if k < n {
                    let d = assemble_d(&p, &g, k, s, ZERO, 2).unwrap();
                    assert!(annihilation_residual(&d, &st.section).unwrap() < 1e-10, "d {}", st.label);
                }
                let e = assemble_delta(&p, &g, k, s, ZERO, 2).unwrap();
                assert!(annihilation_residual(&e, &st.section).unwrap() < 1e-10, "delta {}", st.label);
            }
        }
    }

    #[test]
    fn box_annihilates_one_form_modes_at_second_order() {
        let p = SdsParams::from_lambda(4, 1.0, 0.01).unwrap();
        let b = basis_u_pm(&p).unwrap();
        let mut res = Vec::new();
        for pts in [64, 128, 256] {
            let g = RadialGrid::uniform_r_inset(&p, 0.02, pts).unwrap();
            let bx = assemble_box(&p, &g, 1, AngularSector::constant(2), ZERO, 2).unwrap();
            res.push(annihilation_residual(&bx, &b.u_plus.section(&p, &g)).unwrap());
        }
        assert!((res[1] / res[2]).log2() > 1.8, "{res:?}");
    }

    #[test]
    fn dimensions_and_duals() {
        assert_eq!(k_dims(4), vec![1, 2, 2, 2, 1]);
        assert_eq!(h_dims(4), vec![1, 0, 2, 0, 1]);
        assert_eq!(k_dims(5), vec![1, 2, 1, 1, 2, 1]);
        let t = dual_state_table(4);
        assert_eq!(t.k_star_dims, vec![1, 2, 2, 2, 1]);
        assert_eq!(t.h_star_dims[0], 0);
        assert_eq!(t.h_star_dims[2], 0);
        assert!(t.orthogonal);
        for n in 4..=8 {
            let t = dual_state_table(n);
            assert_eq!(t.k_star_dims, k_dims(n));
            assert_eq!(t.h_star_dims.iter().sum::<usize>(), 4);
        }
    }
}
