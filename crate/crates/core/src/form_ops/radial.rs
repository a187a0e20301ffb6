use num_complex::Complex64;

use super::grid::RadialGrid;
use crate::error::{Error, Result};

/// Sparse banded linear operator on grid functions.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialOp {
    rows: Vec<Vec<(usize, Complex64)>>,
}

impl RadialOp {
    pub fn zero(n: usize) -> Self {
        Self { rows: vec![Vec::new(); n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::diag((0..n).map(|_| Complex64::new(1.0, 0.0)).collect())
    }

    pub fn diag(values: Vec<Complex64>) -> Self {
        Self { rows: values.into_iter().enumerate().map(|(i, v)| vec![(i, v)]).collect() }
    }

    /// Multiplication by a real function of `r`.
    pub fn mul<F: Fn(f64) -> f64>(grid: &RadialGrid, f: F) -> Self {
        Self::diag(grid.r().iter().map(|&r| Complex64::new(f(r), 0.0)).collect())
    }

    /// `d/dr` by finite differences of order 2 or 4 in the computational
    /// coordinate, one-sided near the ends.
    pub fn deriv(grid: &RadialGrid, order: usize) -> Result<Self> {
        let n = grid.len();
        let h = grid.step();
        let (interior, edge): (&[f64], Vec<Vec<f64>>) = match order {
            2 => (&[-0.5, 0.0, 0.5], vec![vec![-1.5, 2.0, -0.5]]),
            4 => (
                &[1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0],
                vec![
                    vec![-25.0 / 12.0, 4.0, -3.0, 16.0 / 12.0, -0.25],
                    vec![-0.25, -10.0 / 12.0, 1.5, -0.5, 1.0 / 12.0],
                ],
            ),
            _ => return Err(Error::InvalidParameter(format!("stencil order {order} is not 2 or 4"))),
        };
        let half = interior.len() / 2;
        let mut rows = vec![Vec::new(); n];
        for (i, row) in rows.iter_mut().enumerate() {
            let scale = 1.0 / (h * grid.jac()[i]);
            if i < edge.len() {
                for (k, c) in edge[i].iter().enumerate() {
                    row.push((k, Complex64::new(c * scale, 0.0)));
                }
            } else if i >= n - edge.len() {
                let m = n - 1 - i;
                for (k, c) in edge[m].iter().enumerate() {
                    row.push((n - 1 - k, Complex64::new(-c * scale, 0.0)));
                }
                row.sort_by_key(|e| e.0);
            } else {
                for (k, c) in interior.iter().enumerate() {
                    if *c != 0.0 {
                        row.push((i + k - half, Complex64::new(c * scale, 0.0)));
                    }
                }
            }
        }
        Ok(Self { rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |(j, _)| i.abs_diff(*j)))
            .max()
            .unwrap_or(0)
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.rows.iter().map(|row| row.iter().map(|(j, a)| a * x[*j]).sum()).collect()
    }

    /// `self o other`.
    pub fn compose(&self, other: &RadialOp) -> RadialOp {
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut acc: Vec<(usize, Complex64)> = Vec::new();
                for (k, a) in row {
                    for (j, b) in &other.rows[*k] {
                        acc.push((*j, a * b));
                    }
                }
                merge(acc)
            })
            .collect();
        RadialOp { rows }
    }

    pub fn add(&self, other: &RadialOp) -> RadialOp {
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| merge(a.iter().chain(b.iter()).copied().collect()))
            .collect();
        RadialOp { rows }
    }

    pub fn scale(&self, c: Complex64) -> RadialOp {
        RadialOp { rows: self.rows.iter().map(|r| r.iter().map(|(j, a)| (*j, a * c)).collect()).collect() }
    }
}

fn merge(mut entries: Vec<(usize, Complex64)>) -> Vec<(usize, Complex64)> {
    entries.sort_by_key(|e| e.0);
    let mut out: Vec<(usize, Complex64)> = Vec::with_capacity(entries.len());
    for (j, a) in entries {
        match out.last_mut() {
            Some(last) if last.0 == j => last.1 += a,
            _ => out.push((j, a)),
        }
    }
    out
}
