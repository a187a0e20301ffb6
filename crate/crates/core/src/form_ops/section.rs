use num_complex::Complex64;

use super::grid::RadialGrid;
use super::AngularSector;
use crate::error::{Error, Result};
use crate::geometry::StaticBackground;

/// Component slots of the time/radial splitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Comp {
    TT = 0,
    TN = 1,
    NT = 2,
    NN = 3,
}

impl Comp {
    pub const ALL: [Comp; 4] = [Comp::TT, Comp::TN, Comp::NT, Comp::NN];

    /// Sphere degree of this component for a form of degree `p`.
    pub fn sphere_degree(self, p: usize) -> i64 {
        p as i64
            - match self {
                Comp::TT => 0,
                Comp::TN | Comp::NT => 1,
                Comp::NN => 2,
            }
    }

    fn has_dt(self) -> bool {
        matches!(self, Comp::NT | Comp::NN)
    }
}

/// A `p`-form in one angular sector, sampled on a radial grid. Components
/// whose sphere degree carries no fiber in the sector have length zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FormSection4 {
    pub degree: usize,
    pub sector: AngularSector,
    comps: [Vec<Complex64>; 4],
}

impl FormSection4 {
    pub fn zeros(degree: usize, sector: AngularSector, len: usize) -> Self {
        let comps = Comp::ALL.map(|c| {
            if sector.has_fiber(c.sphere_degree(degree)) {
                vec![Complex64::new(0.0, 0.0); len]
            } else {
                Vec::new()
            }
        });
        Self { degree, sector, comps }
    }

    /// Samples `f(component, r)` on every present component.
    pub fn from_fn<F>(degree: usize, sector: AngularSector, grid: &RadialGrid, f: F) -> Self
    where
        F: Fn(Comp, f64) -> Complex64,
    {
        let mut s = Self::zeros(degree, sector, grid.len());
        for c in Comp::ALL {
            for (v, &r) in s.comps[c as usize].iter_mut().zip(grid.r()) {
                *v = f(c, r);
            }
        }
        s
    }

    /// Real-valued variant of [`FormSection4::from_fn`].
    pub fn from_real_fn<F>(degree: usize, sector: AngularSector, grid: &RadialGrid, f: F) -> Self
    where
        F: Fn(Comp, f64) -> f64,
    {
        Self::from_fn(degree, sector, grid, |c, r| Complex64::new(f(c, r), 0.0))
    }

    pub fn has(&self, c: Comp) -> bool {
        !self.comps[c as usize].is_empty()
    }

    pub fn get(&self, c: Comp) -> &[Complex64] {
        &self.comps[c as usize]
    }

    pub fn get_mut(&mut self, c: Comp) -> &mut [Complex64] {
        &mut self.comps[c as usize]
    }

    /// Replaces a present component.
    pub fn set(&mut self, c: Comp, values: Vec<Complex64>) -> Result<()> {
        let slot = &mut self.comps[c as usize];
        if slot.len() != values.len() {
            return Err(Error::SectorMismatch(format!(
                "component {c:?} has length {}, got {}",
                slot.len(),
                values.len()
            )));
        }
        *slot = values;
        Ok(())
    }

    pub fn sub(&self, other: &FormSection4) -> FormSection4 {
        self.axpy(-1.0, other)
    }

    pub fn add(&self, other: &FormSection4) -> FormSection4 {
        self.axpy(1.0, other)
    }

    fn axpy(&self, s: f64, other: &FormSection4) -> FormSection4 {
        let mut out = self.clone();
        for c in Comp::ALL {
            for (a, b) in out.comps[c as usize].iter_mut().zip(&other.comps[c as usize]) {
                *a += b * s;
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Max modulus over grid indices `lo..hi`.
    pub fn max_abs_range(&self, lo: usize, hi: usize) -> f64 {
        self.comps
            .iter()
            .filter(|c| !c.is_empty())
            .flat_map(|c| c[lo..hi].iter())
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }
}

/// Fiber weight of a component in the spacetime pairing of `p`-forms. The
/// sign is negative for each spacelike factor and the radius power comes from
/// the round metric `r^2 domega^2` on the sphere part.
pub fn fiber_weight(p: usize, c: Comp, r: f64) -> f64 {
    let spacelike = if c.has_dt() { p as i64 - 1 } else { p as i64 };
    let sign = if spacelike.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    sign * r.powi(-2 * c.sphere_degree(p) as i32)
}

/// Indefinite pairing `integral <u, v>_g r^{n-2} dr` induced by the Lorentzian
/// metric. Both `d(sigma)` and `delta(conj sigma)` are formal adjoints with
/// respect to it.
pub fn spacetime_pairing<B: StaticBackground + ?Sized>(
    bg: &B,
    grid: &RadialGrid,
    u: &FormSection4,
    v: &FormSection4,
) -> Result<Complex64> {
    if u.degree != v.degree || u.sector != v.sector {
        return Err(Error::SectorMismatch("pairing needs equal degree and sector".into()));
    }
    let n = bg.dim() as i32;
    let w = grid.quadrature_weights();
    let mut acc = Complex64::new(0.0, 0.0);
    for c in Comp::ALL {
        if !u.has(c) {
            continue;
        }
        for (i, &r) in grid.r().iter().enumerate() {
            let g = fiber_weight(u.degree, c, r) * r.powi(n - 2) * w[i];
            acc += u.get(c)[i] * v.get(c)[i].conj() * g;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SdsParams;

    #[test]
    fn component_layout() {
        let p = SdsParams::from_lambda(4, 1.0, 0.01).unwrap();
        let g = RadialGrid::uniform_r_inset(&p, 0.1, 16).unwrap();
        let s = FormSection4::zeros(1, AngularSector::constant(2), g.len());
        assert!(!s.has(Comp::TT) && s.has(Comp::TN) && s.has(Comp::NT) && !s.has(Comp::NN));
        let w = FormSection4::zeros(2, AngularSector::volume(2), g.len());
        assert!(w.has(Comp::TT) && !w.has(Comp::TN));
        let y = FormSection4::zeros(2, AngularSector::harmonic(2, 1), g.len());
        assert!(!y.has(Comp::TT) && y.has(Comp::TN) && y.has(Comp::NT) && y.has(Comp::NN));
    }

    #[test]
    fn weights_signs() {
        assert_eq!(fiber_weight(0, Comp::TT, 2.0), 1.0);
        assert_eq!(fiber_weight(1, Comp::NT, 2.0), 1.0);
        assert_eq!(fiber_weight(1, Comp::TN, 2.0), -1.0);
        assert_eq!(fiber_weight(2, Comp::TT, 2.0), 1.0 / 16.0);
    }
}
