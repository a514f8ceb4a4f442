//! Pointwise dense 3x3 linear algebra over fields.

use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::grid::Grid3;
use ndarray::Array3;
use rayon::prelude::*;

/// General (not necessarily symmetric) 3x3 matrix field, row-major components.
#[derive(Debug, Clone)]
pub struct Matrix3Field {
    grid: Grid3,
    comps: Vec<Array3<f64>>,
}

impl Matrix3Field {
    pub fn from_fn(grid: Grid3, f: impl Fn([f64; 3]) -> [[f64; 3]; 3]) -> Self {
        let n = grid.n();
        let shape = (n[0], n[1], n[2]);
        let mut comps: Vec<Array3<f64>> = (0..9).map(|_| Array3::zeros(shape)).collect();
        for i in 0..n[0] {
            for j in 0..n[1] {
                for k in 0..n[2] {
                    let m = f(grid.coords([i, j, k]));
                    for r in 0..3 {
                        for c in 0..3 {
                            comps[3 * r + c][(i, j, k)] = m[r][c];
                        }
                    }
                }
            }
        }
        Matrix3Field { grid, comps }
    }

    /// From nine row-major component arrays.
    pub fn from_components(grid: Grid3, comps: Vec<Array3<f64>>) -> crate::error::Result<Self> {
        if comps.len() != 9 {
            return Err(Error::Shape(format!(
                "matrix field needs 9 component arrays, got {}",
                comps.len()
            )));
        }
        let n = grid.n();
        for arr in &comps {
            if arr.dim() != (n[0], n[1], n[2]) {
                return Err(Error::Shape(format!(
                    "matrix component has shape {:?}, grid expects {:?}",
                    arr.dim(),
                    n
                )));
            }
        }
        Ok(Matrix3Field { grid, comps })
    }

    pub fn grid(&self) -> Grid3 {
        self.grid
    }

    pub fn at(&self, idx: [usize; 3]) -> [[f64; 3]; 3] {
        let t = (idx[0], idx[1], idx[2]);
        let mut m = [[0.0; 3]; 3];
        for r in 0..3 {
            for c in 0..3 {
                m[r][c] = self.comps[3 * r + c][t];
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .map(|a| a.iter().fold(0.0_f64, |m, &v| m.max(v.abs())))
            .fold(0.0, f64::max)
    }
}

/// Solves a 3x3 system in place by Gaussian elimination with partial
/// pivoting. Returns the determinant alongside the solution.
pub fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> ([f64; 3], f64) {
    let mut m = a;
    let mut rhs = b;
    let mut det = 1.0;
    for col in 0..3 {
        let mut piv = col;
        for r in col + 1..3 {
            if m[r][col].abs() > m[piv][col].abs() {
                piv = r;
            }
        }
        if piv != col {
            m.swap(piv, col);
            rhs.swap(piv, col);
            det = -det;
        }
        let d = m[col][col];
        det *= d;
        if d == 0.0 {
            return ([f64::NAN; 3], 0.0);
        }
        for r in col + 1..3 {
            let f = m[r][col] / d;
            for c in col..3 {
                m[r][c] -= f * m[col][c];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let mut s = rhs[r];
        for c in r + 1..3 {
            s -= m[r][c] * x[c];
        }
        x[r] = s / m[r][r];
    }
    (x, det)
}

/// Node-wise solve A x = b. Errors with the worst node if any determinant
/// falls below `1e-12 * scale`, where the scale is the cube of the global
/// max-abs entry of A.
pub fn pointwise_solve3(a: &Matrix3Field, b: &VectorField) -> Result<VectorField> {
    let grid = a.grid();
    let n = grid.n();
    let scale = a.max_abs().powi(3).max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale;

    let total = grid.node_count();
    let results: Vec<([f64; 3], f64)> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let idx = unflatten(flat, n);
            solve3(a.at(idx), b.at(idx))
        })
        .collect();

    let mut worst = (0usize, f64::INFINITY);
    for (flat, (_, det)) in results.iter().enumerate() {
        if det.abs() < worst.1 {
            worst = (flat, det.abs());
        }
    }
    if worst.1 < tol {
        let (_, det) = results[worst.0];
        return Err(Error::SingularPoint {
            node: unflatten(worst.0, n),
            det,
        });
    }

    let shape = (n[0], n[1], n[2]);
    let mut comps = [
        Array3::zeros(shape),
        Array3::zeros(shape),
        Array3::zeros(shape),
    ];
    for (flat, (x, _)) in results.iter().enumerate() {
        let idx = unflatten(flat, n);
        let t = (idx[0], idx[1], idx[2]);
        for c in 0..3 {
            comps[c][t] = x[c];
        }
    }
    VectorField::from_components(grid, comps)
}

fn unflatten(flat: usize, n: [usize; 3]) -> [usize; 3] {
    let k = flat % n[2];
    let j = (flat / n[2]) % n[1];
    let i = flat / (n[1] * n[2]);
    [i, j, k]
}

/// 3x3 inverse via `solve3` against the identity columns.
pub fn invert3(a: [[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let mut inv = [[0.0; 3]; 3];
    for c in 0..3 {
        let mut e = [0.0; 3];
        e[c] = 1.0;
        let (x, det) = solve3(a, e);
        if det == 0.0 || !x.iter().all(|v| v.is_finite()) {
            return None;
        }
        for r in 0..3 {
            inv[r][c] = x[r];
        }
    }
    Some(inv)
}
