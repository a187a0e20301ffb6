//! Schwarzschild-de Sitter metric functions, horizons and derived constants.
//!
//! The metric is `g = mu dt^2 - (mu^{-1} dr^2 + r^2 domega^2)` on
//! `R_t x (r_-, r_+) x S^{n-2}` with
//! `mu(r) = 1 - 2 M / r^{n-3} - lambda r^2` and `lambda = 2 Lambda / ((n-2)(n-1))`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::roots::brent;

/// A static spacetime `alpha^2 dt^2 - (mu^{-1} dr^2 + r^2 domega^2)` with `alpha = mu^{1/2}`.
///
/// The form operators only need the dimension and the radial function `mu`.
pub trait StaticBackground: Sync {
    /// Spacetime dimension `n`.
    fn dim(&self) -> usize;
    fn mu(&self, r: f64) -> f64;
    fn dmu(&self, r: f64) -> f64;

    /// Radial interval `(r_lo, r_hi)` on which `mu > 0`.
    fn static_region(&self) -> Result<(f64, f64)>;

    fn alpha(&self, r: f64) -> f64 {
        self.mu(r).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdsParams {
    n: usize,
    mass: f64,
    cosmo: f64,
}

/// Horizon radii, the trapped radius and the surface-gravity constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizonData {
    pub r_minus: f64,
    pub r_plus: f64,
    pub r_p: f64,
    pub beta_minus: f64,
    pub beta_plus: f64,
}

impl HorizonData {
    /// Surface gravity `1/beta` at the event horizon.
    pub fn kappa_minus(&self) -> f64 {
        1.0 / self.beta_minus
    }

    pub fn kappa_plus(&self) -> f64 {
        1.0 / self.beta_plus
    }
}

impl SdsParams {
    pub fn new(n: usize, mass: f64, cosmo: f64) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidParameter(format!("spacetime dimension n = {n} must be >= 4")));
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidParameter(format!("mass = {mass} must be positive")));
        }
        if !(cosmo.is_finite() && cosmo > 0.0) {
            return Err(Error::InvalidParameter(format!("cosmological constant = {cosmo} must be positive")));
        }
        Ok(Self { n, mass, cosmo })
    }

    /// Build from the reduced constant `lambda` instead of `Lambda`.
    pub fn from_lambda(n: usize, mass: f64, lambda: f64) -> Result<Self> {
        let nf = n as f64;
        Self::new(n, mass, lambda * (nf - 2.0) * (nf - 1.0) / 2.0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn cosmo(&self) -> f64 {
        self.cosmo
    }

    /// `lambda = 2 Lambda / ((n-2)(n-1))`.
    pub fn lambda_small(&self) -> f64 {
        let nf = self.n as f64;
        2.0 * self.cosmo / ((nf - 2.0) * (nf - 1.0))
    }

    fn k(&self) -> i32 {
        self.n as i32 - 3
    }

    pub fn mu(&self, r: f64) -> f64 {
        1.0 - 2.0 * self.mass * r.powi(-self.k()) - self.lambda_small() * r * r
    }

    pub fn dmu(&self, r: f64) -> f64 {
        let k = self.k();
        2.0 * self.mass * k as f64 * r.powi(-k - 1) - 2.0 * self.lambda_small() * r
    }

    pub fn d2mu(&self, r: f64) -> f64 {
        let k = self.k() as f64;
        -2.0 * self.mass * k * (k + 1.0) * r.powi(-self.k() - 2) - 2.0 * self.lambda_small()
    }

    /// `mu / r^2`.
    pub fn mu_tilde(&self, r: f64) -> f64 {
        self.mu(r) / (r * r)
    }

    /// `d/dr (mu / r^2) = -2 r^{-n} (r^{n-3} - (n-1) M)`.
    pub fn dmu_tilde(&self, r: f64) -> f64 {
        let nf = self.n as f64;
        -2.0 * r.powi(-(self.n as i32)) * (r.powi(self.k()) - (nf - 1.0) * self.mass)
    }

    /// Strict inequality `M^2 lambda^{n-3} < (n-3)^{n-3} / (n-1)^{n-1}`.
    pub fn check_nondegeneracy(&self) -> bool {
        self.mass * self.mass * self.lambda_small().powi(self.k()) < Self::nondegeneracy_bound(self.n)
    }

    /// Right-hand side `(n-3)^{n-3} / (n-1)^{n-1}` of the nondegeneracy condition.
    pub fn nondegeneracy_bound(n: usize) -> f64 {
        let nf = n as f64;
        (nf - 3.0).powi(n as i32 - 3) / (nf - 1.0).powi(n as i32 - 1)
    }

    /// Closed form `r_p = ((n-1) M)^{1/(n-3)}`, the critical point of `mu / r^2`.
    pub fn photon_sphere_radius(&self) -> f64 {
        ((self.n as f64 - 1.0) * self.mass).powf(1.0 / (self.n as f64 - 3.0))
    }

    /// Horizons by Brent iteration on analytically signed brackets, with a
    /// Newton polish using the exact `mu'`.
    pub fn horizons(&self) -> Result<HorizonData> {
        if !self.check_nondegeneracy() {
            return Err(Error::DegenerateSpacetime(format!(
                "M^2 lambda^(n-3) = {} is not below {}",
                self.mass * self.mass * self.lambda_small().powi(self.k()),
                Self::nondegeneracy_bound(self.n)
            )));
        }
        let r_p = self.photon_sphere_radius();
        // mu < 0 wherever 2M/r^{n-3} >= 1.
        let lo = (2.0 * self.mass).powf(1.0 / self.k() as f64);
        // mu(R) <= 1 - lambda R^2 = -1.
        let hi = (2.0 / self.lambda_small()).sqrt();
        let f = |r: f64| self.mu(r);
        let r_minus = self.polish(brent(f, lo, r_p, 1e-13)?, lo, r_p);
        let r_plus = self.polish(brent(f, r_p, hi, 1e-13)?, r_p, hi);
        if !(0.0 < r_minus && r_minus < r_p && r_p < r_plus) {
            return Err(Error::RootBracketFailure(format!(
                "horizon ordering violated: {r_minus} < {r_p} < {r_plus}"
            )));
        }
        Ok(HorizonData {
            r_minus,
            r_plus,
            r_p,
            beta_minus: 2.0 / self.dmu(r_minus),
            beta_plus: -2.0 / self.dmu(r_plus),
        })
    }

    fn polish(&self, mut r: f64, lo: f64, hi: f64) -> f64 {
        for _ in 0..3 {
            let step = self.mu(r) / self.dmu(r);
            let next = r - step;
            if !(next > lo && next < hi) || self.mu(next).abs() > self.mu(r).abs() {
                break;
            }
            r = next;
        }
        r
    }

    /// Uniformly random nondegenerate parameters in dimension `n`: the mass is
    /// drawn from `[0.2, 5]` and `M^2 lambda^{n-3}` from `(0.02, 0.98)` times
    /// the critical bound.
    pub fn random_nondegenerate<R: Rng>(n: usize, rng: &mut R) -> Self {
        let mass = rng.gen_range(0.2..5.0);
        let frac = rng.gen_range(0.02..0.98);
        let lambda = (frac * Self::nondegeneracy_bound(n) / (mass * mass)).powf(1.0 / (n as f64 - 3.0));
        Self::from_lambda(n, mass, lambda).expect("sampled parameters are valid")
    }
}

impl StaticBackground for SdsParams {
    fn dim(&self) -> usize {
        self.n
    }

    fn mu(&self, r: f64) -> f64 {
        SdsParams::mu(self, r)
    }

    fn dmu(&self, r: f64) -> f64 {
        SdsParams::dmu(self, r)
    }

    fn static_region(&self) -> Result<(f64, f64)> {
        let h = self.horizons()?;
        Ok((h.r_minus, h.r_plus))
    }
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn horizon_invariants(n in 4usize..=8, mass in 0.1f64..10.0, frac in 0.01f64..0.99) {
            let lambda = (frac * SdsParams::nondegeneracy_bound(n) / (mass * mass)).powf(1.0 / (n as f64 - 3.0));
            let p = SdsParams::from_lambda(n, mass, lambda).unwrap();
            prop_assert!(p.check_nondegeneracy());
            let h = p.horizons().unwrap();
            prop_assert!(0.0 < h.r_minus && h.r_minus < h.r_p && h.r_p < h.r_plus);
            for r in [h.r_minus, h.r_plus] {
                prop_assert!(p.mu(r).abs() <= 1e-10 * (1.0 + p.dmu(r).abs()));
            }
            prop_assert!(p.mu(h.r_p) > 0.0);
            prop_assert!(h.beta_minus > 0.0 && h.beta_plus > 0.0);
            // r_p is the unique critical point of mu / r^2
            let scale = p.mu_tilde(h.r_p) / h.r_p;
            prop_assert!(p.dmu_tilde(h.r_p).abs() < 1e-10 * scale.abs().max(1e-300));
            prop_assert!(p.dmu_tilde(0.9 * h.r_p) > 0.0 && p.dmu_tilde(1.1 * h.r_p) < 0.0);
        }
    }

    #[test]
    fn schwarzschild_limit() {
        let mut prev = f64::INFINITY;
        for lambda in [1e-2, 1e-3, 1e-4, 1e-5] {
            let h = SdsParams::from_lambda(4, 1.0, lambda).unwrap().horizons().unwrap();
            let gap = h.r_minus - 2.0;
            assert!(gap > 0.0 && gap < 20.0 * lambda);
            assert!(gap < prev);
            prev = gap;
        }
    }
}
