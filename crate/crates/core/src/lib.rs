//! Numerical toolkit for differential forms on Schwarzschild-de Sitter and
//! de Sitter spacetimes: form operators, stationary zero modes, trapping,
//! cohomology bookkeeping, Kerr-de Sitter Maxwell checks and time evolution.

pub mod cohomology;
pub mod desitter;
pub mod evolve;
pub mod error;
pub mod form_ops;
pub mod geometry;
pub mod kds_maxwell;
pub mod zero_modes;
pub mod numerics;
pub mod trapping;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use geometry::{HorizonData, SdsParams, StaticBackground};
