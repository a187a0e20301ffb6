//! Run configuration: a versioned JSON document with one task per run.
//!
//! ```json
//! {
//!   "version": "1",
//!   "spacetime": { "kind": "sds", "n": 4, "mass": 1.0, "lambda": 0.01 },
//!   "task": { "kind": "trapping" },
//!   "numerics": { "escape_samples": 10000 },
//!   "output": { "directory": "out", "formats": ["csv", "json"] }
//! }
//! ```

use std::path::PathBuf;

use formres::desitter::DeSitterStatic;
use formres::evolve::{Bump, FrobeniusOptions, OneFormConfig, OneFormData, ScalarData, ScanBox, ScanSector, TortoiseConfig, TwoFormData};
use formres::kds_maxwell::{KdsField, KdsParams, MaxwellCheck, Stencil};
use formres::SdsParams;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: &str = "1";
pub const DEFAULT_SEED: u64 = 20_240_601;
pub const DEFAULT_OUT_DIR: &str = "formres-out";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: String,
    pub spacetime: SpacetimeConfig,
    pub task: Task,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpacetimeKind {
    Sds,
    Ds,
    Kds,
}

/// `cosmo` is `Lambda`; `lambda` is the reduced constant. Give one of them
/// for `sds`, `cosmo` for `kds`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpacetimeConfig {
    pub kind: SpacetimeKind,
    pub n: Option<usize>,
    pub mass: Option<f64>,
    pub cosmo: Option<f64>,
    pub lambda: Option<f64>,
    pub spin: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Task {
    Geometry {},
    Trapping {},
    ZeroModes {},
    Cohomology {},
    DsTable {},
    KdsVerify {
        #[serde(default = "all_fields")]
        fields: Vec<KdsField>,
        #[serde(default = "both_checks")]
        checks: Vec<MaxwellCheck>,
    },
    Evolve {
        sector: EvolveSector,
    },
    ModeScan {
        sector: ScanSector,
        #[serde(default)]
        scan_box: ScanBox,
    },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Geometry {} => "geometry",
            Task::Trapping {} => "trapping",
            Task::ZeroModes {} => "zero-modes",
            Task::Cohomology {} => "cohomology",
            Task::DsTable {} => "ds-table",
            Task::KdsVerify { .. } => "kds-verify",
            Task::Evolve { .. } => "evolve",
            Task::ModeScan { .. } => "mode-scan",
        }
    }
}

fn all_fields() -> Vec<KdsField> {
    vec![KdsField::U1, KdsField::U2, KdsField::PerturbedU1]
}

fn both_checks() -> Vec<MaxwellCheck> {
    vec![MaxwellCheck::Closed, MaxwellCheck::Coclosed]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EvolveSector {
    Scalar {
        #[serde(default)]
        ell: usize,
        data: ScalarData,
    },
    OneForm {
        data: OneFormData,
    },
    TwoForm {
        data: TwoFormData,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    pub seed: Option<u64>,
    /// Radial samples for profile tables.
    pub grid_points: usize,
    pub escape_samples: usize,
    pub stencil_order: usize,
    /// Grid sizes of the Kerr-de Sitter refinement study.
    pub sizes: Vec<usize>,
    pub inset: f64,
    pub theta_min: f64,
    /// Start of the decay-fit window for evolutions.
    pub fit_start: f64,
    pub tortoise: TortoiseConfig,
    pub sliced: OneFormConfig,
    pub frobenius: FrobeniusOptions,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            seed: None,
            grid_points: 201,
            escape_samples: 10_000,
            stencil_order: 4,
            sizes: vec![32, 64, 128, 256],
            inset: formres::kds_maxwell::DEFAULT_INSET,
            theta_min: formres::kds_maxwell::DEFAULT_THETA_MIN,
            fit_start: 40.0,
            tortoise: TortoiseConfig::default(),
            sliced: OneFormConfig::default(),
            frobenius: FrobeniusOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: Option<PathBuf>,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: None, formats: vec![Format::Csv, Format::Json] }
    }
}

/// Validated background.
#[derive(Debug, Clone, Copy)]
pub enum Spacetime {
    Sds(SdsParams),
    Ds(DeSitterStatic),
    Kds(KdsParams),
}

impl Spacetime {
    pub fn n(&self) -> usize {
        match self {
            Spacetime::Sds(p) => p.n(),
            Spacetime::Ds(d) => d.n,
            Spacetime::Kds(_) => 4,
        }
    }
}

/// A configuration that passed every check, ready for dispatch.
#[derive(Debug, Clone)]
pub struct Validated {
    pub config: RunConfig,
    pub spacetime: Spacetime,
    pub stencil: Stencil,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn fail<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

fn require<T: Copy>(v: Option<T>, what: &str, kind: &str) -> Result<T, ConfigError> {
    v.ok_or_else(|| ConfigError(format!("spacetime.{what} is required for kind {kind}")))
}

pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
    serde_json::from_str(text).map_err(|e| ConfigError(format!("config does not match schema {SCHEMA_VERSION}: {e}")))
}

fn spacetime(s: &SpacetimeConfig) -> Result<Spacetime, ConfigError> {
    let lib = |e: formres::Error| ConfigError(format!("spacetime: {e}"));
    match s.kind {
        SpacetimeKind::Sds => {
            let n = require(s.n, "n", "sds")?;
            let mass = require(s.mass, "mass", "sds")?;
            if s.spin.is_some_and(|a| a != 0.0) {
                return fail("spacetime.spin must be absent for kind sds");
            }
            let p = match (s.cosmo, s.lambda) {
                (Some(c), None) => SdsParams::new(n, mass, c),
                (None, Some(l)) => SdsParams::from_lambda(n, mass, l),
                _ => return fail("spacetime: give exactly one of cosmo (Lambda) and lambda for kind sds"),
            }
            .map_err(lib)?;
            // nondegeneracy: both horizons must exist
            p.horizons().map_err(lib)?;
            Ok(Spacetime::Sds(p))
        }
        SpacetimeKind::Ds => {
            let n = require(s.n, "n", "ds")?;
            if s.mass.is_some() || s.cosmo.is_some() || s.lambda.is_some() || s.spin.is_some() {
                return fail("spacetime: kind ds takes only n (units with Lambda fixed)");
            }
            Ok(Spacetime::Ds(DeSitterStatic::new(n).map_err(lib)?))
        }
        SpacetimeKind::Kds => {
            if s.n.is_some_and(|n| n != 4) {
                return fail("spacetime.n must be 4 for kind kds");
            }
            if s.lambda.is_some() {
                return fail("spacetime: kind kds takes cosmo (Lambda), not lambda");
            }
            let mass = require(s.mass, "mass", "kds")?;
            let cosmo = require(s.cosmo, "cosmo", "kds")?;
            let spin = s.spin.unwrap_or(0.0);
            Ok(Spacetime::Kds(KdsParams::new(mass, cosmo, spin).map_err(lib)?))
        }
    }
}

fn positive(v: f64, what: &str) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        fail(format!("{what} = {v} must be positive"))
    }
}

fn check_cfl(cfl: f64, what: &str) -> Result<(), ConfigError> {
    positive(cfl, what)?;
    if cfl > formres::evolve::CFL_LIMIT {
        return fail(format!("{what} = {cfl} exceeds the CFL limit {}", formres::evolve::CFL_LIMIT));
    }
    Ok(())
}

fn numerics(nm: &Numerics, task: &Task) -> Result<Stencil, ConfigError> {
    let stencil = match nm.stencil_order {
        2 => Stencil::Second,
        4 => Stencil::Fourth,
        k => return fail(format!("numerics.stencil_order = {k} must be 2 or 4")),
    };
    if nm.grid_points < 2 {
        return fail("numerics.grid_points must be at least 2");
    }
    if nm.escape_samples == 0 {
        return fail("numerics.escape_samples must be at least 1");
    }
    if nm.sizes.is_empty() || nm.sizes.iter().any(|&s| s < 16) {
        return fail("numerics.sizes must be nonempty with every size >= 16");
    }
    if !(nm.inset > 0.0 && nm.inset < 0.5) {
        return fail(format!("numerics.inset = {} must lie in (0, 0.5)", nm.inset));
    }
    if !(nm.theta_min > 0.0 && nm.theta_min < 0.5 * std::f64::consts::FRAC_PI_2) {
        return fail(format!("numerics.theta_min = {} must lie in (0, pi/4)", nm.theta_min));
    }
    let t = &nm.tortoise;
    check_cfl(t.cfl, "numerics.tortoise.cfl")?;
    positive(t.h, "numerics.tortoise.h")?;
    positive(t.t_max, "numerics.tortoise.t_max")?;
    positive(t.sample_dt, "numerics.tortoise.sample_dt")?;
    if !(t.x_min < t.x_max) {
        return fail("numerics.tortoise.x_min must be below x_max");
    }
    let s = &nm.sliced;
    check_cfl(s.cfl, "numerics.sliced.cfl")?;
    positive(s.t_max, "numerics.sliced.t_max")?;
    positive(s.sample_dt, "numerics.sliced.sample_dt")?;
    if s.cells < 16 {
        return fail("numerics.sliced.cells must be at least 16");
    }
    if !(s.extension > 0.0 && s.extension <= 0.25) {
        return fail("numerics.sliced.extension must lie in (0, 0.25]");
    }
    if !(s.dissipation >= 0.0 && s.dissipation.is_finite()) {
        return fail("numerics.sliced.dissipation must be nonnegative");
    }
    let f = &nm.frobenius;
    if f.order < 4 {
        return fail("numerics.frobenius.order must be at least 4");
    }
    positive(f.series_tol, "numerics.frobenius.series_tol")?;
    positive(f.ode_rtol, "numerics.frobenius.ode_rtol")?;
    if !(nm.fit_start >= 0.0) {
        return fail("numerics.fit_start must be nonnegative");
    }
    if let Task::Evolve { sector } = task {
        let t_max = match sector {
            EvolveSector::OneForm { .. } => s.t_max,
            _ => t.t_max,
        };
        if nm.fit_start >= t_max {
            return fail(format!("numerics.fit_start = {} must be below t_max = {t_max}", nm.fit_start));
        }
        let bumps: Vec<Option<Bump>> = match sector {
            EvolveSector::Scalar { data, .. } => vec![data.bump, data.velocity],
            EvolveSector::TwoForm { data } => vec![data.omega.bump, data.omega.velocity, data.dual.bump, data.dual.velocity],
            EvolveSector::OneForm { data: OneFormData::Pulse { a, b, divergence, curl, .. } } => vec![*a, *b, *divergence, *curl],
            EvolveSector::OneForm { .. } => vec![],
        };
        if bumps.iter().flatten().any(|b| !(b.width > 0.0 && b.center.is_finite() && b.amplitude.is_finite())) {
            return fail("evolve data: every bump needs a positive width and finite center and amplitude");
        }
    }
    if let Task::ModeScan { scan_box: b, .. } = task {
        positive(b.step, "task.scan_box.step")?;
        if !(b.re_min < b.re_max && b.im_min < b.im_max) {
            return fail("task.scan_box must have re_min < re_max and im_min < im_max");
        }
        if b.im_min < 0.0 {
            return fail("task.scan_box.im_min must be >= 0 (the scan covers the closed upper half plane)");
        }
    }
    Ok(stencil)
}

/// All checks run here, before any task starts.
pub fn validate(config: RunConfig, seed_override: Option<u64>) -> Result<Validated, ConfigError> {
    if config.version != SCHEMA_VERSION {
        return fail(format!("config version \"{}\" is not supported; expected \"{SCHEMA_VERSION}\"", config.version));
    }
    let st = spacetime(&config.spacetime)?;
    let kind = config.spacetime.kind;
    let allowed: &[SpacetimeKind] = match &config.task {
        Task::Geometry {} | Task::Trapping {} | Task::ZeroModes {} | Task::Evolve { .. } | Task::ModeScan { .. } => &[SpacetimeKind::Sds],
        Task::Cohomology {} => &[SpacetimeKind::Sds, SpacetimeKind::Ds],
        Task::DsTable {} => &[SpacetimeKind::Ds],
        Task::KdsVerify { .. } => &[SpacetimeKind::Kds],
    };
    if !allowed.contains(&kind) {
        return fail(format!("task {} is not defined for spacetime kind {kind:?}", config.task.name()));
    }
    if let Task::KdsVerify { fields, checks } = &config.task {
        if fields.is_empty() || checks.is_empty() {
            return fail("task kds-verify needs at least one field and one check");
        }
    }
    if config.output.formats.is_empty() {
        return fail("output.formats must list csv, json or both");
    }
    let stencil = numerics(&config.numerics, &config.task)?;
    let seed = seed_override.or(config.numerics.seed).unwrap_or(DEFAULT_SEED);
    Ok(Validated { config, spacetime: st, stencil, seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sds(task: &str) -> String {
        format!(r#"{{"version":"1","spacetime":{{"kind":"sds","n":4,"mass":1.0,"lambda":0.01}},"task":{task}}}"#)
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let v = validate(parse(&sds(r#"{"kind":"trapping"}"#)).unwrap(), None).unwrap();
        assert_eq!(v.seed, DEFAULT_SEED);
        assert_eq!(v.stencil, Stencil::Fourth);
        assert_eq!(v.config.numerics.escape_samples, 10_000);
        assert!(matches!(v.spacetime, Spacetime::Sds(_)));
    }

    #[test]
    fn rejects_bad_inputs_with_the_broken_rule() {
        let e = validate(parse(&sds(r#"{"kind":"trapping"}"#).replace("\"n\":4", "\"n\":3")).unwrap(), None).unwrap_err();
        assert!(e.0.contains("n = 3 must be >= 4"), "{e}");
        let e = validate(parse(&sds(r#"{"kind":"ds-table"}"#)).unwrap(), None).unwrap_err();
        assert!(e.0.contains("not defined"), "{e}");
        let e = validate(parse(&sds(r#"{"kind":"trapping"}"#).replace("0.01", "0.2")).unwrap(), None).unwrap_err();
        assert!(e.0.contains("degenerate"), "{e}");
        assert!(parse(&sds(r#"{"kind":"trapping","extra":1}"#)).is_err());
        assert!(parse(&sds(r#"{"kind":"nonsense"}"#)).is_err());
    }

    #[test]
    fn cfl_and_seed_override() {
        let text = sds(r#"{"kind":"evolve","sector":{"kind":"scalar","data":{"offset":1.0}}}"#).replace(
            r#""task""#,
            r#""numerics":{"seed":5,"tortoise":{"cfl":0.95}},"task""#,
        );
        let e = validate(parse(&text).unwrap(), None).unwrap_err();
        assert!(e.0.contains("CFL"), "{e}");
        let ok = text.replace("0.95", "0.5");
        assert_eq!(validate(parse(&ok).unwrap(), Some(9)).unwrap().seed, 9);
        assert_eq!(validate(parse(&ok).unwrap(), None).unwrap().seed, 5);
    }
}
