//! Fourier spectral differentiation and trigonometric interpolation on
//! uniform periodic grids.
//!
//! Derivatives multiply mode m by `i * 2π m / period` (Nyquist mode dropped,
//! as required for the derivative of a real signal on an even grid) and are
//! exact for resolved trigonometric polynomials.

use ndarray::{Array2, Array3};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::{Arc, Mutex, OnceLock};

type Plan = Arc<dyn Fft<f64>>;

fn plan_cache() -> &'static Mutex<HashMap<(usize, bool), Plan>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, bool), Plan>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn plan(n: usize, inverse: bool) -> Plan {
    let mut cache = plan_cache().lock().unwrap();
    cache
        .entry((n, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

/// Signed wavenumber index of DFT bin m on an even grid of n nodes,
/// with the Nyquist bin mapped to zero.
fn signed_mode(m: usize, n: usize) -> i64 {
    if m < n / 2 {
        m as i64
    } else if m == n / 2 {
        0
    } else {
        m as i64 - n as i64
    }
}

/// Differentiates every contiguous row of length `n` in `buf` in place.
fn diff_rows(buf: &mut [Complex64], n: usize, period: f64) {
    let fwd = plan(n, false);
    let inv = plan(n, true);
    let mult: Vec<Complex64> = (0..n)
        .map(|m| {
            let k = TAU * signed_mode(m, n) as f64 / period;
            Complex64::new(0.0, k / n as f64)
        })
        .collect();
    buf.par_chunks_mut(n).for_each(|row| {
        fwd.process(row);
        for (v, w) in row.iter_mut().zip(&mult) {
            *v *= *w;
        }
        inv.process(row);
    });
}

/// Spectral partial derivative of a 3-d periodic array along `axis`.
pub fn derivative3(values: &Array3<f64>, axis: usize, period: f64) -> Array3<f64> {
    assert!(axis < 3);
    let perm = match axis {
        0 => [1, 2, 0],
        1 => [0, 2, 1],
        _ => [0, 1, 2],
    };
    let moved = values.view().permuted_axes(perm);
    let owned = moved.as_standard_layout().into_owned();
    let dim = owned.dim();
    let n = dim.2;
    let mut buf: Vec<Complex64> = owned.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    diff_rows(&mut buf, n, period);
    let flat: Vec<f64> = buf.iter().map(|c| c.re).collect();
    let out = Array3::from_shape_vec(dim, flat).unwrap();
    let inv_perm = match axis {
        0 => [2, 0, 1],
        1 => [0, 2, 1],
        _ => [0, 1, 2],
    };
    out.permuted_axes(inv_perm).as_standard_layout().into_owned()
}

/// Spectral partial derivative of a 2-d periodic array along `axis`.
pub fn derivative2(values: &Array2<f64>, axis: usize, period: f64) -> Array2<f64> {
    assert!(axis < 2);
    let moved = if axis == 0 {
        values.view().reversed_axes()
    } else {
        values.view()
    };
    let owned = moved.as_standard_layout().into_owned();
    let dim = owned.dim();
    let n = dim.1;
    let mut buf: Vec<Complex64> = owned.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    diff_rows(&mut buf, n, period);
    let flat: Vec<f64> = buf.iter().map(|c| c.re).collect();
    let out = Array2::from_shape_vec(dim, flat).unwrap();
    if axis == 0 {
        out.reversed_axes().as_standard_layout().into_owned()
    } else {
        out
    }
}

/// Spectral derivative of a periodic 1-d sample vector.
pub fn derivative1(values: &[f64], period: f64) -> Vec<f64> {
    let n = values.len();
    let mut buf: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    diff_rows(&mut buf, n, period);
    buf.iter().map(|c| c.re).collect()
}

fn fft2_forward(values: &Array2<f64>) -> Array2<Complex64> {
    let (n0, n1) = values.dim();
    let mut buf: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let row_plan = plan(n1, false);
    buf.chunks_mut(n1).for_each(|row| row_plan.process(row));
    let a = Array2::from_shape_vec((n0, n1), buf).unwrap();
    let t = a.reversed_axes().as_standard_layout().into_owned();
    let mut buf: Vec<Complex64> = t.iter().cloned().collect();
    let col_plan = plan(n0, false);
    buf.chunks_mut(n0).for_each(|row| col_plan.process(row));
    Array2::from_shape_vec((n1, n0), buf)
        .unwrap()
        .reversed_axes()
        .as_standard_layout()
        .into_owned()
}

/// Trigonometric interpolant of a real periodic 2-d sample array; evaluates
/// the band-limited interpolant at arbitrary points. Exact on resolved
/// trigonometric polynomials. Coefficients below 1e-14 of the largest one
/// are dropped, so near-band-limited data evaluates in a handful of terms.
pub struct Interp2 {
    n: [usize; 2],
    period: [f64; 2],
    modes: Vec<(usize, usize, Complex64)>,
}

impl Interp2 {
    pub fn new(values: &Array2<f64>, period: [f64; 2]) -> Self {
        let (n0, n1) = values.dim();
        let coeffs = fft2_forward(values);
        let peak = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.norm()));
        let cutoff = 1e-14 * peak;
        let modes = coeffs
            .indexed_iter()
            .filter(|(_, c)| c.norm() > cutoff)
            .map(|((m, k), c)| (m, k, *c))
            .collect();
        Interp2 {
            n: [n0, n1],
            period,
            modes,
        }
    }

    fn basis(&self, axis: usize, m: usize, xhat: f64) -> Complex64 {
        let n = self.n[axis];
        let mt = if m <= n / 2 { m as i64 } else { m as i64 - n as i64 };
        if m == n / 2 {
            // real cosine treatment of the unpaired Nyquist bin
            Complex64::new((mt as f64 * xhat).cos(), 0.0)
        } else {
            Complex64::from_polar(1.0, mt as f64 * xhat)
        }
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        let x0 = TAU * x[0] / self.period[0];
        let x1 = TAU * x[1] / self.period[1];
        let mut sum = Complex64::new(0.0, 0.0);
        for &(m, k, c) in &self.modes {
            sum += c * self.basis(0, m, x0) * self.basis(1, k, x1);
        }
        sum.re / (self.n[0] * self.n[1]) as f64
    }
}
