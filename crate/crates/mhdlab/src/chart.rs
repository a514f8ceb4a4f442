//! Periodic 2-d charts: scalar fields on a (u, v) rectangle with periodic
//! identification, the Gauss scalar-curvature formula for orthogonal
//! metrics E du^2 + G dv^2, and charts built by integrating the two
//! commuting frame flows on a slice.

use crate::error::{Error, Result};
use crate::spectral::{derivative2, Interp2};
use ndarray::Array2;

/// Uniform periodic chart grid; node (i, j) sits at (i hu, j hv) with the
/// endpoint excluded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartGrid {
    n: [usize; 2],
    extent: [f64; 2],
}

impl ChartGrid {
    pub fn new(n: [usize; 2], extent: [f64; 2]) -> Result<Self> {
        for &ni in &n {
            if ni < 4 || ni % 2 != 0 {
                return Err(Error::Parameter(format!(
                    "chart needs an even node count >= 4 per axis, got {ni}"
                )));
            }
        }
        if extent.iter().any(|&e| !(e.is_finite() && e > 0.0)) {
            return Err(Error::Parameter(format!("bad chart extent {extent:?}")));
        }
        Ok(ChartGrid { n, extent })
    }

    pub fn n(&self) -> [usize; 2] {
        self.n
    }

    pub fn extent(&self) -> [f64; 2] {
        self.extent
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.extent[axis] / self.n[axis] as f64
    }

    /// Coordinate of node k, wrapped into [-extent/2, extent/2) so the chart
    /// origin (node 0) is an interior point of the periodic cell.
    pub fn centered_coord(&self, axis: usize, k: usize) -> f64 {
        let x = k as f64 * self.spacing(axis);
        let e = self.extent[axis];
        if x >= e / 2.0 {
            x - e
        } else {
            x
        }
    }
}

/// Real scalar field on a periodic chart.
#[derive(Debug, Clone)]
pub struct ChartField {
    grid: ChartGrid,
    values: Array2<f64>,
}

impl ChartField {
    pub fn from_fn(grid: ChartGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let values = Array2::from_shape_fn((n[0], n[1]), |(i, j)| {
            f(grid.centered_coord(0, i), grid.centered_coord(1, j))
        });
        ChartField { grid, values }
    }

    pub fn from_values(grid: ChartGrid, values: Array2<f64>) -> Result<Self> {
        let n = grid.n();
        if values.dim() != (n[0], n[1]) {
            return Err(Error::Shape(format!(
                "chart field has shape {:?}, grid expects {:?}",
                values.dim(),
                n
            )));
        }
        Ok(ChartField { grid, values })
    }

    pub fn grid(&self) -> ChartGrid {
        self.grid
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn at_origin(&self) -> f64 {
        self.values[(0, 0)]
    }

    pub fn derivative(&self, axis: usize) -> ChartField {
        ChartField {
            grid: self.grid,
            values: derivative2(&self.values, axis, self.grid.extent[axis]),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ChartField {
        ChartField {
            grid: self.grid,
            values: self.values.mapv(&f),
        }
    }

    pub fn mul(&self, other: &ChartField) -> ChartField {
        ChartField {
            grid: self.grid,
            values: &self.values * &other.values,
        }
    }

    pub fn sub(&self, other: &ChartField) -> ChartField {
        ChartField {
            grid: self.grid,
            values: &self.values - &other.values,
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, &v| m.max(v.abs()))
    }
}

/// Scalar curvature of the orthogonal chart metric E du^2 + G dv^2:
///
///   s = -(1/(EG)) (E_vv + G_uu - 1/2 ((E_u G_u + E_v^2)/E + (E_v G_v + G_u^2)/G))
///
/// evaluated with spectral derivatives on the periodic chart.
pub fn scalar_curvature_orthogonal(e: &ChartField, g: &ChartField) -> Result<ChartField> {
    if e.grid() != g.grid() {
        return Err(Error::Shape("chart fields on different grids".into()));
    }
    if e.min() <= 0.0 || g.min() <= 0.0 {
        return Err(Error::Positivity(format!(
            "chart metric coefficients must be positive (min E = {:.3e}, min G = {:.3e})",
            e.min(),
            g.min()
        )));
    }
    let eu = e.derivative(0);
    let ev = e.derivative(1);
    let gu = g.derivative(0);
    let gv = g.derivative(1);
    let evv = ev.derivative(1);
    let guu = gu.derivative(0);

    let ev2 = &ev.values * &ev.values;
    let gu2 = &gu.values * &gu.values;
    let bracket = &evv.values + &guu.values
        - 0.5 * ((&eu.values * &gu.values + ev2) / &e.values
            + (&ev.values * &gv.values + gu2) / &g.values);
    let s = -bracket / (&e.values * &g.values);
    ChartField::from_values(e.grid(), s)
}

/// C-infinity bump: exp(1 - 1/(1 - r2/R^2)) inside r < R, 0 outside, 1 at 0.
pub fn smooth_bump(r2: f64, radius: f64) -> f64 {
    let q = r2 / (radius * radius);
    if q < 1.0 {
        (1.0 - 1.0 / (1.0 - q)).exp()
    } else {
        0.0
    }
}

/// Quadratic chart profile rho = 1 + c beta(r) u^2 with beta a bump equal to
/// 1 near the origin: rho(0) = 1, rho_u(0) = rho_v(0) = 0, rho_uu(0) = 2c.
pub fn chart_quadratic_profile(
    grid: ChartGrid,
    c: f64,
    support_radius: f64,
) -> Result<ChartField> {
    let half = [grid.extent()[0] / 2.0, grid.extent()[1] / 2.0];
    if !(support_radius > 0.0) || support_radius >= half[0].min(half[1]) {
        return Err(Error::Parameter(format!(
            "support radius {support_radius} must lie in (0, {})",
            half[0].min(half[1])
        )));
    }
    let rho = ChartField::from_fn(grid, |u, v| {
        1.0 + c * smooth_bump(u * u + v * v, support_radius) * u * u
    });
    if rho.min() <= 0.0 {
        return Err(Error::Parameter(format!(
            "profile not positive (min rho = {:.6e}); reduce |c| or the support radius",
            rho.min()
        )));
    }
    Ok(rho)
}

/// Chart map H(u, v) on a periodic 2-torus slice, built by following the
/// u-flow then the v-flow of two (commuting) slice vector fields from a base
/// point, with a fixed RK4 step.
pub struct FlowChart {
    /// Slice coordinates (theta, phi) of every chart node.
    points: Array2<[f64; 2]>,
}

impl FlowChart {
    /// `u_field` / `v_field`: slice components of the two frame fields as
    /// interpolants; `base`: starting point on the slice; `step`: RK4 step.
    pub fn build(
        chart: ChartGrid,
        u_field: &[Interp2; 2],
        v_field: &[Interp2; 2],
        base: [f64; 2],
        step: f64,
    ) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::Parameter("RK4 step must be positive".into()));
        }
        let n = chart.n();
        let hu = chart.spacing(0);
        let hv = chart.spacing(1);
        let mut points = Array2::from_elem((n[0], n[1]), [0.0_f64; 2]);

        // march the u-line first, then each v-line; chart node k sits at the
        // centered coordinate, so walk forward for the first half and
        // backward for the rest
        let mut row_start = vec![[0.0_f64; 2]; n[0]];
        row_start[0] = base;
        for i in 1..n[0] {
            let dir = if chart.centered_coord(0, i) >= chart.centered_coord(0, i - 1) {
                1.0
            } else {
                // wrap from +extent/2 to -extent/2: restart from base
                f64::NAN
            };
            if dir.is_nan() {
                row_start[i] = flow(base, u_field, chart.centered_coord(0, i), step);
            } else {
                row_start[i] = flow(row_start[i - 1], u_field, hu, step);
            }
        }
        for i in 0..n[0] {
            points[(i, 0)] = row_start[i];
            for j in 1..n[1] {
                if chart.centered_coord(1, j) >= chart.centered_coord(1, j - 1) {
                    points[(i, j)] = flow(points[(i, j - 1)], v_field, hv, step);
                } else {
                    points[(i, j)] =
                        flow(row_start[i], v_field, chart.centered_coord(1, j), step);
                }
            }
        }
        Ok(FlowChart { points })
    }

    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        self.points[(i, j)]
    }

    /// Pulls a slice scalar field back onto the chart.
    pub fn sample(&self, chart: ChartGrid, field: &Interp2) -> ChartField {
        let n = chart.n();
        let values = Array2::from_shape_fn((n[0], n[1]), |(i, j)| field.eval(self.points[(i, j)]));
        ChartField { grid: chart, values }
    }
}

/// RK4 integration of dx/dt = V(x) for (possibly negative) time t.
fn flow(start: [f64; 2], field: &[Interp2; 2], t: f64, step: f64) -> [f64; 2] {
    if t == 0.0 {
        return start;
    }
    let nsteps = (t.abs() / step).ceil().max(1.0) as usize;
    let h = t / nsteps as f64;
    let eval = |x: [f64; 2]| -> [f64; 2] { [field[0].eval(x), field[1].eval(x)] };
    let mut x = start;
    for _ in 0..nsteps {
        let k1 = eval(x);
        let k2 = eval([x[0] + 0.5 * h * k1[0], x[1] + 0.5 * h * k1[1]]);
        let k3 = eval([x[0] + 0.5 * h * k2[0], x[1] + 0.5 * h * k2[1]]);
        let k4 = eval([x[0] + h * k3[0], x[1] + h * k3[1]]);
        x[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        x[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
    }
    x
}
