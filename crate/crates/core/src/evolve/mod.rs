//! Time-domain evolution in spherically symmetric sectors and a
//! frequency-domain resonance scan.
//!
//! Scalar-type equations (functions, and the `omega` / `dt ^ dr` pair of
//! 2-forms) are evolved by leapfrog in the tortoise coordinate. The 1-form
//! sector couples its two components through terms that do not decay at the
//! horizons, so it is evolved on slices that cross both horizons instead.

mod fit;
mod mode_scan;
mod oneform;
mod tortoise;

use serde::{Deserialize, Serialize};

pub use fit::{fit_decay, DecayFit};
pub use mode_scan::{
    cauchy_riemann_residual, connection_determinant, mode_scan, order_stability, FrobeniusOptions, ModeScan, OrderStability,
    ScanBox, ScanPoint, ScanSector,
};
pub use oneform::{
    evolve_oneform, oneform_rhs, project_onto_zero_modes, OneFormConfig, OneFormData, OneFormRun, Projection,
    SlicedGrid,
};
use tortoise::default_probes as default_probes_for;
pub use tortoise::{
    evolve_scalar, evolve_twoform, ScalarData, ScalarRun, ScalarStepper, ScalarTypeEquation, TortoiseConfig, TortoiseGrid,
    TwoFormData, TwoFormRun,
};

/// Largest admissible Courant number.
pub const CFL_LIMIT: f64 = 0.9;

/// Smooth bump `amplitude * exp(1 - 1/(1 - y^2))`, `y = (x - center)/width`,
/// supported in `|y| < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
}

impl Bump {
    pub fn eval(&self, x: f64) -> f64 {
        let y = (x - self.center) / self.width;
        if y.abs() >= 1.0 {
            0.0
        } else {
            self.amplitude * (1.0 - 1.0 / (1.0 - y * y)).exp()
        }
    }
}

/// Samples of one field at a fixed radius.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeTrace {
    pub label: String,
    pub r: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeries {
    pub t: Vec<f64>,
    pub probes: Vec<ProbeTrace>,
}

impl TimeSeries {
    /// CSV with header `t,<label>,...`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for p in &self.probes {
            out.push(',');
            out.push_str(&p.label);
        }
        out.push('\n');
        for (i, t) in self.t.iter().enumerate() {
            out.push_str(&format!("{t:.10e}"));
            for p in &self.probes {
                out.push_str(&format!(",{:.16e}", p.values[i]));
            }
            out.push('\n');
        }
        out
    }
}

/// Snapshot of the evolved fields.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolutionState {
    pub time: f64,
    pub dt: f64,
    /// Radius of each node.
    pub r: Vec<f64>,
    pub field_names: Vec<String>,
    pub fields: Vec<Vec<f64>>,
}

fn check_cfl(cfl: f64) -> crate::Result<()> {
    if !(cfl > 0.0 && cfl <= CFL_LIMIT) {
        return Err(crate::Error::CflViolation { cfl, limit: CFL_LIMIT });
    }
    Ok(())
}
