//! Block operators `d`, `delta` and the wave operator on differential forms
//! over a static background, reduced to a single angular sector and
//! discretized on a radial grid.
//!
//! A `p`-form is split as
//! `u = u_TT + alpha^{-1} dr ^ u_TN + alpha dt ^ u_NT + alpha dt ^ alpha^{-1} dr ^ u_NN`
//! with sphere degrees `p, p-1, p-1, p-2` for the four components.

mod assemble;
mod grid;
mod matching;
mod radial;
mod section;

pub use assemble::{
    annihilation_residual, annihilation_residual_with_buffer, assemble_box, assemble_d,
    assemble_delta, partial_r_star, BlockRadialOperator, Summand, DEFAULT_HORIZON_BUFFER,
};
pub use grid::{RadialGrid, Spacing};
pub use matching::{matching_matrix, HorizonSide};
pub use radial::RadialOp;
pub use section::{fiber_weight, spacetime_pairing, Comp, FormSection4};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Angular family of forms on `S^{n-2}` in which the sphere operators act by
/// scalars. Each family has at most one basis element per sphere degree, and
/// the basis is normalized so that the fiber norms are 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SectorKind {
    /// Constant functions.
    ConstantScalar,
    /// `Y` and `dY / sqrt(eigenvalue)` for a nonconstant eigenfunction `Y`.
    ScalarHarmonic { eigenvalue: f64 },
    /// The volume form `omega` of the round sphere.
    VolumeForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularSector {
    pub kind: SectorKind,
    pub sphere_dim: usize,
}

impl AngularSector {
    pub fn constant(sphere_dim: usize) -> Self {
        Self { kind: SectorKind::ConstantScalar, sphere_dim }
    }

    pub fn volume(sphere_dim: usize) -> Self {
        Self { kind: SectorKind::VolumeForm, sphere_dim }
    }

    /// Degree-`ell` scalar harmonics, eigenvalue `ell (ell + sphere_dim - 1)`.
    /// `ell = 0` is the constant sector.
    pub fn harmonic(sphere_dim: usize, ell: u32) -> Self {
        if ell == 0 {
            return Self::constant(sphere_dim);
        }
        let l = ell as f64;
        Self {
            kind: SectorKind::ScalarHarmonic { eigenvalue: l * (l + sphere_dim as f64 - 1.0) },
            sphere_dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sphere_dim < 2 {
            return Err(Error::SectorMismatch(format!("sphere dimension {} < 2", self.sphere_dim)));
        }
        if let SectorKind::ScalarHarmonic { eigenvalue } = self.kind {
            if !(eigenvalue.is_finite() && eigenvalue > 0.0) {
                return Err(Error::SectorMismatch(format!("harmonic eigenvalue {eigenvalue} must be positive")));
            }
        }
        Ok(())
    }

    /// Whether the sector has a basis element in sphere degree `q`.
    pub fn has_fiber(&self, q: i64) -> bool {
        match self.kind {
            SectorKind::ConstantScalar => q == 0,
            SectorKind::ScalarHarmonic { .. } => q == 0 || q == 1,
            SectorKind::VolumeForm => q == self.sphere_dim as i64,
        }
    }

    /// Scalar action of `d_S` from degree `q` to `q + 1`.
    pub fn d_sphere(&self, q: i64) -> f64 {
        match self.kind {
            SectorKind::ScalarHarmonic { eigenvalue } if q == 0 => eigenvalue.sqrt(),
            _ => 0.0,
        }
    }

    /// Scalar action of `delta_S` from degree `q` to `q - 1`.
    pub fn delta_sphere(&self, q: i64) -> f64 {
        match self.kind {
            SectorKind::ScalarHarmonic { eigenvalue } if q == 1 => eigenvalue.sqrt(),
            _ => 0.0,
        }
    }

    /// Scalar action of the Hodge Laplacian `d_S delta_S + delta_S d_S` in degree `q`.
    pub fn laplacian(&self, q: i64) -> f64 {
        match self.kind {
            SectorKind::ScalarHarmonic { eigenvalue } if self.has_fiber(q) => eigenvalue,
            _ => 0.0,
        }
    }
}
