use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HorizonSide {
    /// Event horizon `r_-`.
    Minus,
    /// Cosmological horizon `r_+`.
    Plus,
}

impl HorizonSide {
    /// The `-+` sign attached to the side: `+1` at `r_-`, `-1` at `r_+`.
    pub fn mp(self) -> f64 {
        match self {
            HorizonSide::Minus => 1.0,
            HorizonSide::Plus => -1.0,
        }
    }
}

/// Change of basis taking components that are smooth across the horizon on
/// `side` to the `(TT, TN, NT, NN)` components, evaluated at `alpha`.
///
/// Smoothness of `u` at `r_-` forces `f_2 = f_1` there for `u_TN = alpha^{-1} f_1`,
/// `u_NT = alpha^{-1} f_2`, and `f_2 = -f_1` at `r_+`.
pub fn matching_matrix(side: HorizonSide, alpha: f64) -> Matrix4<f64> {
    let ia = 1.0 / alpha;
    Matrix4::new(
        1.0, 0.0, 0.0, 0.0, //
        0.0, alpha, side.mp() * ia, 0.0, //
        0.0, 0.0, ia, 0.0, //
        0.0, 0.0, 0.0, 1.0,
    )
}
