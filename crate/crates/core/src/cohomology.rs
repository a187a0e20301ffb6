//! Dimensions of stationary resonant state spaces from Betti numbers of the
//! spatial slice `X` and its boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which spatial topology the Betti data describes. Exact harmonic
/// dimensions are only known for the two built-in cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// `[r_-, r_+] x S^{n-2}`.
    SchwarzschildDeSitter,
    /// Closed unit ball.
    DeSitter,
    Custom,
}

/// Betti numbers of the compact `(n-1)`-manifold `X`, of its boundary and of
/// the pair, indexed by degree `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BettiData {
    pub n: usize,
    pub topology: Topology,
    pub b_absolute: Vec<usize>,
    pub b_boundary: Vec<usize>,
    pub b_relative: Vec<usize>,
}

impl BettiData {
    /// Builds the relative numbers by Poincare-Lefschetz duality,
    /// `b_rel[k] = b_abs[n-1-k]`. Missing high-degree entries are zero.
    pub fn new(n: usize, b_absolute: &[usize], b_boundary: &[usize]) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("dimension {n} too small")));
        }
        if b_absolute.len() > n || b_boundary.len() > n {
            return Err(Error::InvalidParameter(format!(
                "Betti vectors of an {}-manifold have at most {n} entries",
                n - 1
            )));
        }
        let pad = |v: &[usize]| {
            let mut w = v.to_vec();
            w.resize(n, 0);
            w
        };
        let b_absolute = pad(b_absolute);
        let b_relative = (0..n).map(|k| b_absolute[n - 1 - k]).collect();
        Ok(Self { n, topology: Topology::Custom, b_absolute, b_boundary: pad(b_boundary), b_relative })
    }

    fn at(v: &[usize], k: i64) -> usize {
        if k < 0 {
            0
        } else {
            v.get(k as usize).copied().unwrap_or(0)
        }
    }
}

fn sphere_betti(dim: usize) -> Vec<usize> {
    let mut v = vec![0; dim + 1];
    v[0] += 1;
    v[dim] += 1;
    v
}

pub fn betti_sds(n: usize) -> Result<BettiData> {
    if n < 4 {
        return Err(Error::InvalidParameter(format!("n = {n} must be >= 4")));
    }
    let s = sphere_betti(n - 2);
    let bdry: Vec<usize> = s.iter().map(|b| 2 * b).collect();
    let mut b = BettiData::new(n, &s, &bdry)?;
    b.topology = Topology::SchwarzschildDeSitter;
    Ok(b)
}

pub fn betti_ds(n: usize) -> Result<BettiData> {
    if n < 4 {
        return Err(Error::InvalidParameter(format!("n = {n} must be >= 4")));
    }
    let mut b = BettiData::new(n, &[1], &sphere_betti(n - 2))?;
    b.topology = Topology::DeSitter;
    Ok(b)
}

/// `dim K^k = b_abs[k] + b_rel[k-1] + b_bdry[k-1]`.
pub fn dim_k(k: usize, b: &BettiData) -> usize {
    let k = k as i64;
    BettiData::at(&b.b_absolute, k) + BettiData::at(&b.b_relative, k - 1) + BettiData::at(&b.b_boundary, k - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HBounds {
    pub lower: usize,
    pub upper: usize,
    /// Known exact value, only for the built-in topologies.
    pub exact: Option<usize>,
}

/// Bounds on `dim H^k` from the (not necessarily right-exact) sequence.
pub fn dim_h_bounds(k: usize, b: &BettiData) -> HBounds {
    let ki = k as i64;
    let lower = BettiData::at(&b.b_absolute, ki) + BettiData::at(&b.b_relative, ki - 1);
    let upper = lower + BettiData::at(&b.b_boundary, ki - 1);
    // On both built-in backgrounds no boundary class lifts to a harmonic
    // state, so the lower bound is attained.
    let exact = match b.topology {
        Topology::SchwarzschildDeSitter | Topology::DeSitter => Some(lower),
        Topology::Custom if lower == upper => Some(lower),
        Topology::Custom => None,
    };
    HBounds { lower, upper, exact }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CohomologyTable {
    pub n: usize,
    pub topology: Topology,
    pub dim_k: Vec<usize>,
    pub h_lower: Vec<usize>,
    pub h_upper: Vec<usize>,
    pub h_exact: Vec<Option<usize>>,
}

pub fn table(b: &BettiData) -> CohomologyTable {
    let ks = 0..=b.n;
    let bounds: Vec<HBounds> = ks.clone().map(|k| dim_h_bounds(k, b)).collect();
    CohomologyTable {
        n: b.n,
        topology: b.topology,
        dim_k: ks.map(|k| dim_k(k, b)).collect(),
        h_lower: bounds.iter().map(|h| h.lower).collect(),
        h_upper: bounds.iter().map(|h| h.upper).collect(),
        h_exact: bounds.iter().map(|h| h.exact).collect(),
    }
}
