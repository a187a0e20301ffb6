//! Static de Sitter space: stationary states on the static patch and the
//! indicial algebra of the wave operator at the conformal boundary of
//! global de Sitter space.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::form_ops::{AngularSector, Comp, FormSection4, RadialGrid};
use crate::geometry::StaticBackground;
use crate::zero_modes::{StateLabel, StationaryState};

/// Static patch `mu = 1 - r^2` on `0 < r < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DeSitterStatic {
    pub n: usize,
}

impl DeSitterStatic {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidParameter(format!("n = {n} must be >= 4")));
        }
        Ok(Self { n })
    }
}

impl StaticBackground for DeSitterStatic {
    fn dim(&self) -> usize {
        self.n
    }

    fn mu(&self, r: f64) -> f64 {
        1.0 - r * r
    }

    fn dmu(&self, r: f64) -> f64 {
        -2.0 * r
    }

    fn static_region(&self) -> Result<(f64, f64)> {
        Ok((0.0, 1.0))
    }
}

/// Monic quadratic `s^2 + b s + c` with integer coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Quadratic {
    pub b: i64,
    pub c: i64,
}

impl Quadratic {
    pub fn eval(&self, s: i64) -> i64 {
        s * s + self.b * s + self.c
    }

    /// Integer roots in ascending order, or `None` if they are not integers.
    pub fn integer_roots(&self) -> Option<[i64; 2]> {
        let disc = self.b * self.b - 4 * self.c;
        if disc < 0 {
            return None;
        }
        let sq = (disc as f64).sqrt().round() as i64;
        if sq * sq != disc || (-self.b + sq) % 2 != 0 {
            return None;
        }
        Some([(-self.b - sq) / 2, (-self.b + sq) / 2])
    }
}

/// Indicial polynomials `(tangential, normal)` of the wave operator on `k`-forms.
pub fn indicial_polynomial_box(k: usize, n: usize) -> (Quadratic, Quadratic) {
    let (k, n) = (k as i64, n as i64);
    (
        Quadratic { b: -(n - 1), c: k * (n - k - 1) },
        Quadratic { b: -(n - 1), c: (k - 1) * (n - k) },
    )
}

/// Indicial roots of `d + delta` on `k`-forms, as a multiset.
pub fn indicial_roots_ddelta(k: usize, n: usize) -> [i64; 2] {
    let mut r = [k as i64, n as i64 - k as i64];
    r.sort();
    r
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndicialRow {
    pub degree: usize,
    /// Absent in top degree.
    pub tangential: Option<[i64; 2]>,
    /// Absent in degree zero.
    pub normal: Option<[i64; 2]>,
    pub ddelta: [i64; 2],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndicialTable {
    pub n: usize,
    pub rows: Vec<IndicialRow>,
}

impl IndicialTable {
    pub fn all_nonnegative(&self) -> bool {
        self.rows
            .iter()
            .flat_map(|r| r.tangential.into_iter().chain(r.normal).flatten())
            .all(|s| s >= 0)
    }

    pub fn zero_never_double(&self) -> bool {
        self.rows
            .iter()
            .flat_map(|r| r.tangential.into_iter().chain(r.normal))
            .all(|[a, b]| !(a == 0 && b == 0))
    }

    /// Degrees in which `0` is an indicial root of the wave operator, i.e.
    /// where waves settle to a stationary state instead of decaying to zero.
    pub fn degrees_with_zero_root(&self) -> Vec<usize> {
        self.rows
            .iter()
            .filter(|r| r.tangential.into_iter().chain(r.normal).flatten().any(|s| s == 0))
            .map(|r| r.degree)
            .collect()
    }

    /// Smallest positive root over all degrees and both parts.
    pub fn slowest_decay_root(&self) -> Option<i64> {
        self.rows
            .iter()
            .flat_map(|r| r.tangential.into_iter().chain(r.normal).flatten())
            .filter(|s| *s > 0)
            .min()
    }
}

/// Closed-form table of indicial roots: tangential `{k, n-1-k}`, normal
/// `{k-1, n-k}`, and `{k, n-k}` for `d + delta`.
pub fn table_41(n: usize) -> Result<IndicialTable> {
    if n < 4 {
        return Err(Error::InvalidParameter(format!("n = {n} must be >= 4")));
    }
    let sorted = |a: i64, b: i64| if a <= b { [a, b] } else { [b, a] };
    let rows = (0..=n)
        .map(|k| {
            let (ki, ni) = (k as i64, n as i64);
            IndicialRow {
                degree: k,
                tangential: (k < n).then(|| sorted(ki, ni - 1 - ki)),
                normal: (k > 0).then(|| sorted(ki - 1, ni - ki)),
                ddelta: indicial_roots_ddelta(k, n),
            }
        })
        .collect();
    Ok(IndicialTable { n, rows })
}

/// Which time coefficient to use for the 1-form state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum K1Variant {
    /// `-alpha^{-2} r dr + dt`, annihilated by the wave operator.
    Corrected,
    /// `-alpha^{-2} r dr + alpha^{-1} dt`.
    AlphaInverseDt,
}

/// The 1-form `-alpha^{-2} r dr + c(r) dt` in the constant sector.
pub fn ds_k1_generator(n: usize, grid: &RadialGrid, variant: K1Variant) -> FormSection4 {
    FormSection4::from_real_fn(1, AngularSector::constant(n - 2), grid, |c, r| {
        let a = (1.0 - r * r).sqrt();
        match (c, variant) {
            (Comp::TN, _) => -r / a,
            (Comp::NT, K1Variant::Corrected) => 1.0 / a,
            (Comp::NT, K1Variant::AlphaInverseDt) => 1.0 / (a * a),
            _ => 0.0,
        }
    })
}

/// The constant, the volume form `r^{n-2} dt ^ dr ^ omega` and the 1-form
/// generator.
pub fn ds_static_states(n: usize, grid: &RadialGrid) -> Vec<StationaryState> {
    let s = n - 2;
    vec![
        StationaryState {
            label: "1".into(),
            degree: 0,
            section: FormSection4::from_real_fn(0, AngularSector::constant(s), grid, |_, _| 1.0),
        },
        StationaryState {
            label: "-alpha^-2 r dr + dt".into(),
            degree: 1,
            section: ds_k1_generator(n, grid, K1Variant::Corrected),
        },
        StationaryState {
            label: "*1".into(),
            degree: n,
            section: FormSection4::from_real_fn(n, AngularSector::volume(s), grid, |c, r| {
                if c == Comp::NN {
                    r.powi(s as i32)
                } else {
                    0.0
                }
            }),
        },
    ]
}

/// Basis labels of the de Sitter stationary states of the wave operator.
pub fn ds_state_catalog(n: usize) -> Vec<StateLabel> {
    let mk = |label: &str, degree: usize, harmonic: bool| StateLabel { label: label.into(), degree, harmonic };
    vec![
        mk("1", 0, true),
        mk("-alpha^-2 r dr + dt", 1, false),
        mk("*(-alpha^-2 r dr + dt)", n - 1, false),
        mk("*1", n, true),
    ]
}

/// `dim K^k` on de Sitter space, `k = 0..=n`.
pub fn ds_k_dims(n: usize) -> Vec<usize> {
    let mut v = vec![0; n + 1];
    for s in ds_state_catalog(n) {
        v[s.degree] += 1;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohomology::{betti_ds, dim_k};
    use crate::form_ops::{annihilation_residual, assemble_box, assemble_d, assemble_delta};
    use num_complex::Complex64;

    const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

    #[test]
    fn quadratics() {
        for n in 4..=10 {
            for k in 0..=n {
                let (t, m) = indicial_polynomial_box(k, n);
                let tr = t.integer_roots().unwrap();
                assert_eq!(tr[0] + tr[1], n as i64 - 1);
                assert_eq!(t.eval(tr[0]), 0);
                assert_eq!(m.eval(m.integer_roots().unwrap()[1]), 0);
            }
        }
        assert_eq!(indicial_polynomial_box(0, 4).0.integer_roots(), Some([0, 3]));
        assert_eq!(Quadratic { b: 0, c: 2 }.integer_roots(), None);
    }

    #[test]
    fn ddelta_roots() {
        assert_eq!(indicial_roots_ddelta(0, 4), [0, 4]);
        assert_eq!(indicial_roots_ddelta(2, 4), [2, 2]);
    }

    #[test]
    fn table_matches_polynomials() {
        let t4 = table_41(4).unwrap();
        assert_eq!(t4.rows[2].tangential, Some([1, 2]));
        assert_eq!(t4.rows[1].normal, Some([0, 3]));
        assert_eq!(t4.rows[0].normal, None);
        assert_eq!(t4.rows[4].tangential, None);
        for n in 4..=10 {
            let t = table_41(n).unwrap();
            assert!(t.all_nonnegative() && t.zero_never_double());
            assert_eq!(t.degrees_with_zero_root(), vec![0, 1, n - 1, n]);
            assert_eq!(t.slowest_decay_root(), Some(1));
            for row in &t.rows {
                let (tq, nq) = indicial_polynomial_box(row.degree, n);
                if let Some(r) = row.tangential {
                    assert_eq!(Some(r), tq.integer_roots());
                }
                if let Some(r) = row.normal {
                    assert_eq!(Some(r), nq.integer_roots());
                }
            }
        }
    }

    #[test]
    fn dims_match_cohomology() {
        for n in 4..=8 {
            let b = betti_ds(n).unwrap();
            let dk: Vec<usize> = (0..=n).map(|k| dim_k(k, &b)).collect();
            assert_eq!(ds_k_dims(n), dk);
        }
    }

    #[test]
    fn static_states() {
        let n = 4;
        let ds = DeSitterStatic::new(n).unwrap();
        let mut box_res = Vec::new();
        for pts in [64, 128, 256] {
            let g = RadialGrid::uniform_r_inset(&ds, 0.02, pts).unwrap();
            let states = ds_static_states(n, &g);
            let one = &states[0];
            let b0 = assemble_box(&ds, &g, 0, one.section.sector, ZERO, 2).unwrap();
            assert!(annihilation_residual(&b0, &one.section).unwrap() < 1e-12);
            let k1 = &states[1];
            let b1 = assemble_box(&ds, &g, 1, k1.section.sector, ZERO, 2).unwrap();
            box_res.push(annihilation_residual(&b1, &k1.section).unwrap());
            if pts == 256 {
                let d = assemble_d(&ds, &g, 1, k1.section.sector, ZERO, 2).unwrap();
                let e = assemble_delta(&ds, &g, 1, k1.section.sector, ZERO, 2).unwrap();
                let dd = annihilation_residual(&d, &k1.section).unwrap();
                let de = annihilation_residual(&e, &k1.section).unwrap();
                assert!(dd.hypot(de) > 10.0 * box_res[2]);
                let printed = ds_k1_generator(n, &g, K1Variant::AlphaInverseDt);
                assert!(annihilation_residual(&b1, &printed).unwrap() > 1e3 * box_res[2]);
            }
        }
        assert!((box_res[1] / box_res[2]).log2() > 1.8, "{box_res:?}");
    }
}
