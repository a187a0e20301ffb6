//! Random test sections and helpers shared by the integration tests.
#![allow(dead_code)]

use formres::form_ops::{assemble_box, assemble_d, assemble_delta, AngularSector, Comp, FormSection4, RadialGrid};
use formres::SdsParams;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

pub fn sectors(n: usize) -> Vec<AngularSector> {
    vec![
        AngularSector::constant(n - 2),
        AngularSector::volume(n - 2),
        AngularSector::harmonic(n - 2, 1),
        AngularSector::harmonic(n - 2, 3),
    ]
}

pub fn sigmas(rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    vec![ZERO, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(0.05..0.5))]
}

/// Cubic polynomials in `r` with random complex coefficients, optionally
/// multiplied by a bump supported in the middle of `[a, b]`.
pub struct TestSection {
    pub coef: [[Complex64; 4]; 4],
    pub center: f64,
    pub bump: Option<(f64, f64)>,
}

impl TestSection {
    pub fn random(rng: &mut ChaCha8Rng, a: f64, b: f64, compact: bool) -> Self {
        let mut coef = [[ZERO; 4]; 4];
        for row in coef.iter_mut() {
            for c in row.iter_mut() {
                *c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        let w = b - a;
        Self { coef, center: 0.5 * (a + b), bump: compact.then_some((a + 0.2 * w, b - 0.2 * w)) }
    }

    pub fn sample(&self, p: usize, sector: AngularSector, grid: &RadialGrid) -> FormSection4 {
        FormSection4::from_fn(p, sector, grid, |c, r| {
            let x = (r - self.center) / self.center;
            let poly = self.coef[c as usize].iter().rev().fold(ZERO, |acc, k| acc * x + k);
            let env = match self.bump {
                Some((lo, hi)) if r > lo && r < hi => (-1.0 / ((r - lo) * (hi - r)) * (hi - lo)).exp(),
                Some(_) => 0.0,
                None => 1.0,
            };
            poly * env
        })
    }
}

pub fn interior_max(s: &FormSection4, frac: f64) -> f64 {
    let n = s.get(Comp::ALL.into_iter().find(|&c| s.has(c)).unwrap_or(Comp::TT)).len();
    if n == 0 {
        return 0.0;
    }
    let skip = (frac * n as f64).ceil() as usize;
    s.max_abs_range(skip, n - skip)
}

pub fn valid(n: usize, p: usize, sector: AngularSector) -> bool {
    Comp::ALL.iter().any(|c| sector.has_fiber(c.sphere_degree(p))) && p <= n
}

/// `(max |box u - (d delta + delta d) u|, max |box u|)` away from the ends.
pub fn hodge_defect(
    bg: &SdsParams,
    points: usize,
    p: usize,
    sector: AngularSector,
    sigma: Complex64,
    t: &TestSection,
    order: usize,
) -> (f64, f64) {
    let n = bg.n();
    let grid = RadialGrid::uniform_r_inset(bg, 0.1, points).unwrap();
    let u = t.sample(p, sector, &grid);
    let bx = assemble_box(bg, &grid, p, sector, sigma, order).unwrap().apply(&u).unwrap();
    let mut lap = FormSection4::zeros(p, sector, grid.len());
    if valid(n, p + 1, sector) && p < n {
        let d = assemble_d(bg, &grid, p, sector, sigma, order).unwrap();
        let e = assemble_delta(bg, &grid, p + 1, sector, sigma, order).unwrap();
        lap = e.apply(&d.apply(&u).unwrap()).unwrap();
    }
    if p > 0 && valid(n, p - 1, sector) {
        let e = assemble_delta(bg, &grid, p, sector, sigma, order).unwrap();
        let d = assemble_d(bg, &grid, p - 1, sector, sigma, order).unwrap();
        lap = lap.add(&d.apply(&e.apply(&u).unwrap()).unwrap());
    }
    (interior_max(&bx.sub(&lap), 0.1), interior_max(&bx, 0.1))
}

