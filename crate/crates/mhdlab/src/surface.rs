//! Invariant coordinate 2-tori {zeta = zeta0}: induced metrics, the
//! commuting frame (X~_S, Y_S) with its closed dual co-frame (omega, eta),
//! scalar curvature (orthogonal Gauss formula and general Brioschi formula),
//! and weighted-harmonic residuals of the pulled-back field 1-form.
//!
//! Only coordinate slices are supported; every built-in example has
//! p = p(zeta), so general isosurface extraction adds nothing here.

use crate::chart::{ChartField, ChartGrid, FlowChart};
use crate::error::{Error, Result};
use crate::exterior::{d_scalar, flat};
use crate::field::{det3, MetricField, ScalarField, VectorField};
use crate::grid::Grid3;
use crate::linalg::invert3;
use crate::mhd::GuidedFlow;
use crate::spectral::{derivative2, Interp2};
use ndarray::Array2;

/// Tolerance below which a frame field's zeta-component must stay (relative
/// to the field's own scale) for the field to count as tangent.
pub const TANGENCY_TOL: f64 = 1e-10;

/// A coordinate slice {zeta = zeta0} with its induced metric.
#[derive(Debug, Clone)]
pub struct SurfaceTorus {
    parent: Grid3,
    index: usize,
    zeta0: f64,
    n: [usize; 2],
    period: [f64; 2],
    /// Induced metric components (h_tt, h_tp, h_pp).
    h: [Array2<f64>; 3],
    /// Level value of p on the slice.
    level: f64,
    /// |grad p|_g restricted to the slice.
    grad_norm: Array2<f64>,
}

fn slice_of(arr: &ndarray::Array3<f64>, index: usize) -> Array2<f64> {
    arr.index_axis(ndarray::Axis(0), index).to_owned()
}

impl SurfaceTorus {
    pub fn parent_grid(&self) -> Grid3 {
        self.parent
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn zeta0(&self) -> f64 {
        self.zeta0
    }

    pub fn n(&self) -> [usize; 2] {
        self.n
    }

    pub fn period(&self) -> [f64; 2] {
        self.period
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn h(&self) -> &[Array2<f64>; 3] {
        &self.h
    }

    pub fn grad_norm(&self) -> &Array2<f64> {
        &self.grad_norm
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.period[axis] / self.n[axis] as f64
    }

    /// Restriction of a 3-d node array to the slice.
    pub fn restrict(&self, arr: &ndarray::Array3<f64>) -> Array2<f64> {
        slice_of(arr, self.index)
    }

    /// sqrt(det h) on the slice.
    pub fn area_density(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.n[0], self.n[1]));
        for ((i, j), v) in out.indexed_iter_mut() {
            let t = (i, j);
            let det = self.h[0][t] * self.h[2][t] - self.h[1][t] * self.h[1][t];
            *v = det.sqrt();
        }
        out
    }

    /// Integral of a slice scalar against the induced area form.
    pub fn integrate(&self, f: &Array2<f64>) -> f64 {
        let da = self.area_density();
        let cell = self.spacing(0) * self.spacing(1);
        f.iter().zip(da.iter()).map(|(a, b)| a * b).sum::<f64>() * cell
    }

    pub fn area(&self) -> f64 {
        let ones = Array2::ones((self.n[0], self.n[1]));
        self.integrate(&ones)
    }
}

/// Extracts the slice through the grid node nearest to `zeta0`, verifying
/// that p is constant along the slice (NotLevelError otherwise) and regular
/// across it (CriticalError otherwise).
pub fn extract_slice(
    g: &MetricField,
    p: &ScalarField,
    zeta0: f64,
    tol: f64,
) -> Result<SurfaceTorus> {
    let grid = g.grid();
    let index = grid.nearest_node(0, zeta0);
    extract_slice_at_index(g, p, index, tol)
}

pub fn extract_slice_at_index(
    g: &MetricField,
    p: &ScalarField,
    index: usize,
    tol: f64,
) -> Result<SurfaceTorus> {
    let grid = g.grid();
    let n3 = grid.n();
    if index >= n3[0] {
        return Err(Error::Parameter(format!(
            "slice index {index} out of range 0..{}",
            n3[0]
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::Parameter("slice tolerance must be positive".into()));
    }
    let dp = d_scalar(p);

    // scale for dp comparisons: the global max of |dp| with a floor that
    // keeps exactly-constant p from passing the regularity test
    let min_period = grid.period().iter().cloned().fold(f64::INFINITY, f64::min);
    let p_scale = p.max_abs().max(1.0);
    let dp_scale = dp.max_abs().max(p_scale / min_period);

    // p must be constant along the slice
    let p_slice = slice_of(p.values(), index);
    let mean = p_slice.iter().sum::<f64>() / p_slice.len() as f64;
    let mut level_defect = 0.0_f64;
    for &v in p_slice.iter() {
        level_defect = level_defect.max((v - mean).abs());
    }
    let mut tangential = 0.0_f64;
    for c in 1..3 {
        let d = slice_of(dp.comp(c), index);
        for &v in d.iter() {
            tangential = tangential.max(v.abs());
        }
    }
    if level_defect > tol * p_scale || tangential > tol * dp_scale {
        return Err(Error::NotLevel(format!(
            "p varies along the slice at index {index}: value defect {level_defect:.3e}, \
             tangential |dp| {tangential:.3e}"
        )));
    }

    // p must be regular across the slice: |grad p|_g bounded below
    let mut grad_norm = Array2::zeros((n3[1], n3[2]));
    for i in 0..n3[1] {
        for j in 0..n3[2] {
            let idx = [index, i, j];
            let ginv = invert3(g.at(idx)).ok_or_else(|| Error::SingularPoint {
                node: idx,
                det: det3(&g.at(idx)),
            })?;
            let d = [
                dp.comp_at(0, idx),
                dp.comp_at(1, idx),
                dp.comp_at(2, idx),
            ];
            let mut s = 0.0;
            for r in 0..3 {
                for c in 0..3 {
                    s += ginv[r][c] * d[r] * d[c];
                }
            }
            grad_norm[(i, j)] = s.max(0.0).sqrt();
        }
    }
    let min_grad = grad_norm.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_grad <= tol * dp_scale {
        return Err(Error::Critical(format!(
            "dp vanishes on the slice at index {index}: min |grad p| = {min_grad:.3e} \
             (threshold {:.3e})",
            tol * dp_scale
        )));
    }

    let h = [
        slice_of(g.comp(3), index), // tt
        slice_of(g.comp(4), index), // tp
        slice_of(g.comp(5), index), // pp
    ];
    // positive definiteness of the induced block
    for i in 0..n3[1] {
        for j in 0..n3[2] {
            let t = (i, j);
            let det = h[0][t] * h[2][t] - h[1][t] * h[1][t];
            if !(h[0][t] > 0.0 && det > 0.0) {
                return Err(Error::Positivity(format!(
                    "induced metric not positive definite at slice node ({i}, {j})"
                )));
            }
        }
    }

    Ok(SurfaceTorus {
        parent: grid,
        index,
        zeta0: grid.coord(0, index),
        n: [n3[1], n3[2]],
        period: [grid.period()[1], grid.period()[2]],
        h,
        level: mean,
        grad_norm,
    })
}

// ---------------------------------------------------------------------------
// Slice 2-d calculus helpers
// ---------------------------------------------------------------------------

/// d of a slice 1-form (w_t, w_p): the dt^dp coefficient of dw.
pub fn slice_d_one_form(s: &SurfaceTorus, w: &[Array2<f64>; 2]) -> Array2<f64> {
    derivative2(&w[1], 0, s.period[0]) - derivative2(&w[0], 1, s.period[1])
}

/// Coordinate commutator of two slice vector fields.
pub fn slice_commutator(
    s: &SurfaceTorus,
    a: &[Array2<f64>; 2],
    b: &[Array2<f64>; 2],
) -> [Array2<f64>; 2] {
    let d = |arr: &Array2<f64>, ax: usize| derivative2(arr, ax, s.period[ax]);
    let mut out = [Array2::zeros(a[0].dim()), Array2::zeros(a[0].dim())];
    for i in 0..2 {
        out[i] = &a[0] * &d(&b[i], 0) + &a[1] * &d(&b[i], 1)
            - &b[0] * &d(&a[i], 0)
            - &b[1] * &d(&a[i], 1);
    }
    out
}

// ---------------------------------------------------------------------------
// The commuting frame and its co-frame
// ---------------------------------------------------------------------------

/// Frame (X~_S, Y_S), dual closed co-frame (omega, eta), and the induced
/// metric coefficients E = 1/alpha(X), G = g(Y, Y) on the slice, together
/// with the construction residuals (raw max-norms).
#[derive(Debug, Clone)]
pub struct SurfaceFrame {
    pub xs: [Array2<f64>; 2],
    pub ys: [Array2<f64>; 2],
    pub omega: [Array2<f64>; 2],
    pub eta: [Array2<f64>; 2],
    pub e_coef: Array2<f64>,
    pub g_coef: Array2<f64>,
    /// max over nodes and frame pairings of |<coframe, frame> - delta|.
    pub duality_residual: f64,
    /// max |d omega| and max |d eta|.
    pub closure_omega: f64,
    pub closure_eta: f64,
    /// max |h - (E omega x omega + G eta x eta)|.
    pub reconstruction_residual: f64,
    /// max |omega - pullback of alpha|.
    pub alpha_pullback_residual: f64,
    /// max |[X~_S, Y_S]|.
    pub commutator_residual: f64,
}

/// Builds the frame from a valid guided flow and an adapted metric. Errors:
/// TangencyError if X~ or Y has a zeta-component on the slice,
/// FrameDegeneracyError if the restricted frame degenerates anywhere.
pub fn induced_frame_metric(
    s: &SurfaceTorus,
    gf: &GuidedFlow,
    g: &MetricField,
) -> Result<SurfaceFrame> {
    let xt = gf.x_tilde();
    let y = gf.companion()?.clone();

    let xt_scale = xt.max_abs();
    let y_scale = y.max_abs();
    let xt_z = s.restrict(xt.comp(0));
    let y_z = s.restrict(y.comp(0));
    let worst_xt = xt_z.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
    let worst_y = y_z.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
    if worst_xt > TANGENCY_TOL * xt_scale.max(1.0) {
        return Err(Error::Tangency(format!(
            "X~ has zeta-component {worst_xt:.3e} on the slice"
        )));
    }
    if worst_y > TANGENCY_TOL * y_scale.max(1.0) {
        return Err(Error::Tangency(format!(
            "companion field has zeta-component {worst_y:.3e} on the slice"
        )));
    }

    let xs = [s.restrict(xt.comp(1)), s.restrict(xt.comp(2))];
    let ys = [s.restrict(y.comp(1)), s.restrict(y.comp(2))];

    // invert the frame node-wise to get the dual co-frame
    let n = s.n();
    let mut omega = [Array2::zeros((n[0], n[1])), Array2::zeros((n[0], n[1]))];
    let mut eta = [Array2::zeros((n[0], n[1])), Array2::zeros((n[0], n[1]))];
    let det_scale = xt_scale * y_scale;
    for i in 0..n[0] {
        for j in 0..n[1] {
            let t = (i, j);
            let det = xs[0][t] * ys[1][t] - xs[1][t] * ys[0][t];
            if det.abs() <= 1e-12 * det_scale.max(f64::MIN_POSITIVE) {
                return Err(Error::FrameDegeneracy(format!(
                    "frame determinant {det:.3e} at slice node ({i}, {j})"
                )));
            }
            // rows of the inverse of [[xs0, xs1], [ys0, ys1]]
            omega[0][t] = ys[1][t] / det;
            omega[1][t] = -ys[0][t] / det;
            eta[0][t] = -xs[1][t] / det;
            eta[1][t] = xs[0][t] / det;
        }
    }

    let e_coef = s.restrict(gf.alpha_x().values()).mapv(|v| 1.0 / v);
    let g_coef = s.restrict(g.inner(&y, &y).values());

    // residuals
    let mut duality = 0.0_f64;
    let mut reconstruction = 0.0_f64;
    for i in 0..n[0] {
        for j in 0..n[1] {
            let t = (i, j);
            let pairs = [
                (omega[0][t] * xs[0][t] + omega[1][t] * xs[1][t], 1.0),
                (omega[0][t] * ys[0][t] + omega[1][t] * ys[1][t], 0.0),
                (eta[0][t] * xs[0][t] + eta[1][t] * xs[1][t], 0.0),
                (eta[0][t] * ys[0][t] + eta[1][t] * ys[1][t], 1.0),
            ];
            for (v, want) in pairs {
                duality = duality.max((v - want).abs());
            }
            let hh = [
                (s.h[0][t], (0, 0)),
                (s.h[1][t], (0, 1)),
                (s.h[2][t], (1, 1)),
            ];
            for (hv, (a, b)) in hh {
                let rec = e_coef[t] * omega[a][t] * omega[b][t] + g_coef[t] * eta[a][t] * eta[b][t];
                reconstruction = reconstruction.max((hv - rec).abs());
            }
        }
    }

    let closure_omega = {
        let d = slice_d_one_form(s, &omega);
        d.iter().fold(0.0_f64, |m, &v| m.max(v.abs()))
    };
    let closure_eta = {
        let d = slice_d_one_form(s, &eta);
        d.iter().fold(0.0_f64, |m, &v| m.max(v.abs()))
    };

    let alpha = gf.alpha();
    let mut alpha_pullback = 0.0_f64;
    for (c, om) in omega.iter().enumerate() {
        let a = s.restrict(alpha.comp(c + 1));
        for (x, y) in om.iter().zip(a.iter()) {
            alpha_pullback = alpha_pullback.max((x - y).abs());
        }
    }

    let br = slice_commutator(s, &xs, &ys);
    let commutator_residual = br
        .iter()
        .map(|a| a.iter().fold(0.0_f64, |m, &v| m.max(v.abs())))
        .fold(0.0, f64::max);

    Ok(SurfaceFrame {
        xs,
        ys,
        omega,
        eta,
        e_coef,
        g_coef,
        duality_residual: duality,
        closure_omega,
        closure_eta,
        reconstruction_residual: reconstruction,
        alpha_pullback_residual: alpha_pullback,
        commutator_residual,
    })
}

// ---------------------------------------------------------------------------
// Scalar curvature of the induced metric
// ---------------------------------------------------------------------------

/// Scalar curvature (twice the Gauss curvature) of the slice metric via the
/// Brioschi formula for a general h = E dt^2 + 2F dt dp + G dp^2.
pub fn scalar_curvature_2d(s: &SurfaceTorus) -> Result<Array2<f64>> {
    let e = &s.h[0];
    let f = &s.h[1];
    let g = &s.h[2];
    let du = |a: &Array2<f64>| derivative2(a, 0, s.period[0]);
    let dv = |a: &Array2<f64>| derivative2(a, 1, s.period[1]);

    let eu = du(e);
    let ev = dv(e);
    let gu = du(g);
    let gv = dv(g);
    let fu = du(f);
    let fv = dv(f);
    let evv = dv(&ev);
    let guu = du(&gu);
    let fuv = dv(&fu);

    let n = s.n();
    let mut out = Array2::zeros((n[0], n[1]));
    for i in 0..n[0] {
        for j in 0..n[1] {
            let t = (i, j);
            let m1 = [
                [
                    -0.5 * evv[t] + fuv[t] - 0.5 * guu[t],
                    0.5 * eu[t],
                    fu[t] - 0.5 * ev[t],
                ],
                [fv[t] - 0.5 * gu[t], e[t], f[t]],
                [0.5 * gv[t], f[t], g[t]],
            ];
            let m2 = [
                [0.0, 0.5 * ev[t], 0.5 * gu[t]],
                [0.5 * ev[t], e[t], f[t]],
                [0.5 * gu[t], f[t], g[t]],
            ];
            let den = e[t] * g[t] - f[t] * f[t];
            if den <= 0.0 {
                return Err(Error::Positivity(format!(
                    "induced metric degenerate at slice node ({i}, {j})"
                )));
            }
            let k = (det3(&m1) - det3(&m2)) / (den * den);
            out[t] = 2.0 * k;
        }
    }
    Ok(out)
}

/// Integral of the scalar curvature over the slice; zero for a 2-torus.
pub fn gauss_bonnet_integral(s: &SurfaceTorus) -> Result<f64> {
    let sc = scalar_curvature_2d(s)?;
    Ok(s.integrate(&sc))
}

// ---------------------------------------------------------------------------
// Weighted-harmonic residuals
// ---------------------------------------------------------------------------

/// Codifferential residual for a slice 1-form with weight P:
/// delta(P w) = -(1/sqrt h) (d_t (sqrt h (Pw)^t) + d_p (sqrt h (Pw)^p)).
fn codifferential_weighted(
    s: &SurfaceTorus,
    w: &[Array2<f64>; 2],
    weight: &Array2<f64>,
) -> Array2<f64> {
    let n = s.n();
    let sqrt_h = s.area_density();
    let mut flux_t = Array2::zeros((n[0], n[1]));
    let mut flux_p = Array2::zeros((n[0], n[1]));
    for i in 0..n[0] {
        for j in 0..n[1] {
            let t = (i, j);
            let det = s.h[0][t] * s.h[2][t] - s.h[1][t] * s.h[1][t];
            // inverse induced metric
            let inv = [
                [s.h[2][t] / det, -s.h[1][t] / det],
                [-s.h[1][t] / det, s.h[0][t] / det],
            ];
            let up = [
                inv[0][0] * w[0][t] + inv[0][1] * w[1][t],
                inv[1][0] * w[0][t] + inv[1][1] * w[1][t],
            ];
            flux_t[t] = sqrt_h[t] * weight[t] * up[0];
            flux_p[t] = sqrt_h[t] * weight[t] * up[1];
        }
    }
    let div = derivative2(&flux_t, 0, s.period[0]) + derivative2(&flux_p, 1, s.period[1]);
    -div / &sqrt_h
}

/// Closedness and weighted-coclosedness residuals (raw max-norms) of the
/// pullback of i_X g with an explicit weight.
pub fn p_harmonic_residuals_with_weight(
    s: &SurfaceTorus,
    g: &MetricField,
    x: &VectorField,
    weight: &Array2<f64>,
) -> Result<(f64, f64)> {
    let alpha = flat(g, x);
    let w = [s.restrict(alpha.comp(1)), s.restrict(alpha.comp(2))];
    let closed = slice_d_one_form(s, &w)
        .iter()
        .fold(0.0_f64, |m, &v| m.max(v.abs()));
    let co = codifferential_weighted(s, &w, weight)
        .iter()
        .fold(0.0_f64, |m, &v| m.max(v.abs()));
    Ok((closed, co))
}

/// Residuals of the defining pair `d w = 0`, `delta(P w) = 0` for
/// w = pullback of i_X g and P = 1 / |grad p| on the slice.
pub fn p_harmonic_check(
    s: &SurfaceTorus,
    g: &MetricField,
    x: &VectorField,
    _p: &ScalarField,
) -> Result<(f64, f64)> {
    let weight = s.grad_norm.mapv(|v| 1.0 / v);
    p_harmonic_residuals_with_weight(s, g, x, &weight)
}

// ---------------------------------------------------------------------------
// Charts from slice data
// ---------------------------------------------------------------------------

/// Pulls the frame-metric coefficients (E, G) back onto a chart built by
/// integrating the frame flows from `base` (slice coordinates), giving the
/// chart pair (E~, G~) in which the induced metric reads E~ du^2 + G~ dv^2.
pub fn chart_metric_from_frame(
    s: &SurfaceTorus,
    frame: &SurfaceFrame,
    base: [f64; 2],
    chart: ChartGrid,
) -> Result<(ChartField, ChartField)> {
    let period = s.period;
    let mk = |a: &Array2<f64>| Interp2::new(a, period);
    let u_field = [mk(&frame.xs[0]), mk(&frame.xs[1])];
    let v_field = [mk(&frame.ys[0]), mk(&frame.ys[1])];
    let min_period = period[0].min(period[1]);
    let fc = FlowChart::build(chart, &u_field, &v_field, base, min_period / 512.0)?;
    let e = fc.sample(chart, &mk(&frame.e_coef));
    let g = fc.sample(chart, &mk(&frame.g_coef));
    Ok((e, g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::VolumeForm;
    use crate::field::KForm;
    use crate::mhd::validate_guided_flow;
    use std::f64::consts::{PI, TAU};

    fn grid() -> Grid3 {
        Grid3::cubic(32).unwrap()
    }

    /// Shear equilibrium with a = 2 + sin z, b = cos z.
    fn shear_bundle() -> (MetricField, VectorField, ScalarField, KForm) {
        let g = MetricField::identity(grid());
        let a = |z: f64| 2.0 + z.sin();
        let b = |z: f64| z.cos();
        let x = VectorField::from_fn(grid(), |c| [0.0, a(c[0]), b(c[0])]);
        let p = ScalarField::from_fn(grid(), |c| 0.5 * (a(c[0]).powi(2) + b(c[0]).powi(2)));
        let alpha = KForm::one_form_fn(grid(), |c| [0.0, a(c[0]), b(c[0])]);
        (g, x, p, alpha)
    }

    #[test]
    fn extract_slice_accepts_regular_levels() {
        let (g, _, p, _) = shear_bundle();
        let s = extract_slice(&g, &p, 0.0, 1e-8).unwrap();
        assert_eq!(s.index(), 0);
        assert!((s.level() - 2.5).abs() < 1e-12); // p(0) = (4 + 1)/2
        assert!((s.grad_norm().iter().fold(0.0_f64, |m, &v| m.max(v)) - 2.0).abs() < 1e-10);
    }

    #[test]
    fn critical_slice_is_rejected() {
        let (g, _, p, _) = shear_bundle();
        // dp = 2 cos z dz vanishes at z = pi/2 (node 8 of 32)
        assert!(matches!(
            extract_slice(&g, &p, PI / 2.0, 1e-8),
            Err(Error::Critical(_))
        ));
    }

    #[test]
    fn globally_constant_pressure_is_critical() {
        let g = MetricField::identity(grid());
        // a = sin z, b = cos z gives p = 1/2 everywhere
        let p = ScalarField::constant(grid(), 0.5);
        assert!(matches!(
            extract_slice(&g, &p, 0.0, 1e-8),
            Err(Error::Critical(_))
        ));
    }

    #[test]
    fn non_level_slice_is_rejected() {
        let g = MetricField::identity(grid());
        let p = ScalarField::from_fn(grid(), |c| c[1].cos());
        assert!(matches!(
            extract_slice(&g, &p, 0.0, 1e-8),
            Err(Error::NotLevel(_))
        ));
    }

    fn shear_frame() -> (SurfaceTorus, SurfaceFrame) {
        let (g, x, p, alpha) = shear_bundle();
        let mu = VolumeForm::coordinate(grid());
        let gf = validate_guided_flow(&x, &alpha, &mu, &p, None).unwrap();
        let s = extract_slice(&g, &p, 0.0, 1e-8).unwrap();
        let frame = induced_frame_metric(&s, &gf, &g).unwrap();
        (s, frame)
    }

    #[test]
    fn frame_duality_closure_and_reconstruction() {
        let (_, frame) = shear_frame();
        assert!(frame.duality_residual < 1e-12);
        assert!(frame.closure_omega < 1e-10);
        assert!(frame.closure_eta < 1e-10);
        assert!(frame.reconstruction_residual < 1e-10);
        assert!(frame.alpha_pullback_residual < 1e-10);
        assert!(frame.commutator_residual < 1e-10);
    }

    #[test]
    fn degenerate_companion_is_frame_error() {
        // constant profiles: dp = 0 globally is critical, so perturb only b
        // to keep dp nonzero while Y stays zero is impossible; instead use
        // constant a, b with a tilted pressure-free bundle: the companion
        // vanishes, and frame construction must fail on the slice.
        let g = MetricField::identity(grid());
        let x = VectorField::from_fn(grid(), |_| [0.0, 2.0, 0.5]);
        let alpha = KForm::one_form_fn(grid(), |_| [0.0, 2.0, 0.5]);
        let mu = VolumeForm::coordinate(grid());
        let p = ScalarField::constant(grid(), 0.0);
        let gf = validate_guided_flow(&x, &alpha, &mu, &p, None).unwrap();
        // fabricate a slice against a different pressure so extraction works
        let q = ScalarField::from_fn(grid(), |c| c[0].sin());
        let s = extract_slice(&g, &q, 0.0, 1e-8).unwrap();
        assert!(matches!(
            induced_frame_metric(&s, &gf, &g),
            Err(Error::FrameDegeneracy(_))
        ));
    }

    #[test]
    fn flat_slice_curvature_vanishes_and_gauss_bonnet_holds() {
        let (s, _) = shear_frame();
        let sc = scalar_curvature_2d(&s).unwrap();
        let worst = sc.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
        assert!(worst < 1e-8);
        assert!(gauss_bonnet_integral(&s).unwrap().abs() < 1e-6 * s.area());
    }

    #[test]
    fn brioschi_matches_orthogonal_formula_on_diagonal_metrics() {
        // build a curved diagonal slice metric by hand
        let g3 = MetricField::from_fn(grid(), |c| {
            let e = 1.3 + 0.2 * c[1].cos() * c[2].sin();
            let gpp = 0.9 + 0.1 * (c[1] + c[2]).cos();
            [1.0, 0.0, 0.0, e, 0.0, gpp]
        })
        .unwrap();
        let p = ScalarField::from_fn(grid(), |c| c[0].sin() + 2.0 * c[0].cos());
        let s = extract_slice(&g3, &p, 0.0, 1e-8).unwrap();
        let brioschi = scalar_curvature_2d(&s).unwrap();

        let chart = ChartGrid::new([32, 32], [TAU, TAU]).unwrap();
        let e = ChartField::from_values(chart, s.h()[0].clone()).unwrap();
        let g = ChartField::from_values(chart, s.h()[2].clone()).unwrap();
        let orth = crate::chart::scalar_curvature_orthogonal(&e, &g).unwrap();

        let mut worst = 0.0_f64;
        for (a, b) in brioschi.iter().zip(orth.values().iter()) {
            worst = worst.max((a - b).abs());
        }
        let scale = orth.max_abs().max(1.0);
        assert!(worst < 1e-8 * scale, "disagreement {worst:.3e}");

        // nontrivial curvature really is present
        assert!(orth.max_abs() > 0.05);
        // and the total curvature still integrates to zero
        assert!(gauss_bonnet_integral(&s).unwrap().abs() < 1e-6 * s.area());
    }

    #[test]
    fn brioschi_is_invariant_under_torus_shear() {
        // push a curved diagonal slice metric through the unimodular torus
        // map (t, p) -> (t, t + p); the pulled-back metric has a genuine
        // off-diagonal component and its curvature must be the pulled-back
        // curvature field
        let e = |t: f64, p: f64| 1.3 + 0.25 * t.cos() * p.sin();
        let gg = |t: f64, p: f64| 0.9 + 0.2 * (t + p).cos();
        let base = MetricField::from_fn(grid(), |c| [1.0, 0.0, 0.0, e(c[1], c[2]), 0.0, gg(c[1], c[2])])
            .unwrap();
        let sheared = MetricField::from_fn(grid(), |c| {
            let (t, q) = (c[1], c[1] + c[2]);
            let (ev, gv) = (e(t, q), gg(t, q));
            [1.0, 0.0, 0.0, ev + gv, gv, gv]
        })
        .unwrap();
        let p = ScalarField::from_fn(grid(), |c| c[0].sin());
        let s_base = extract_slice(&base, &p, 0.0, 1e-8).unwrap();
        let s_sheared = extract_slice(&sheared, &p, 0.0, 1e-8).unwrap();
        let k_base = scalar_curvature_2d(&s_base).unwrap();
        let k_sheared = scalar_curvature_2d(&s_sheared).unwrap();

        let n = s_base.n();
        let mut worst = 0.0_f64;
        let mut scale = 0.0_f64;
        for i in 0..n[0] {
            for j in 0..n[1] {
                // node (i, j) of the sheared chart maps to (i, i + j)
                let expect = k_base[(i, (i + j) % n[1])];
                worst = worst.max((k_sheared[(i, j)] - expect).abs());
                scale = scale.max(expect.abs());
            }
        }
        assert!(scale > 0.05, "fixture must be genuinely curved");
        assert!(worst < 1e-8 * scale, "shear invariance defect {worst:.3e}");
        assert!(gauss_bonnet_integral(&s_sheared).unwrap().abs() < 1e-6 * s_sheared.area());
    }

    #[test]
    fn p_harmonic_residuals_vanish_for_shear_equilibrium() {
        let (g, x, p, _) = shear_bundle();
        let s = extract_slice(&g, &p, 0.0, 1e-8).unwrap();
        let (closed, co) = p_harmonic_check(&s, &g, &x, &p).unwrap();
        assert!(closed < 1e-8, "closedness {closed:.3e}");
        assert!(co < 1e-8, "coclosedness {co:.3e}");
    }

    #[test]
    fn wrong_weight_is_detected_on_sheared_metrics() {
        // with the off-diagonal eps f coupling, |grad p| varies within the
        // slice; replacing the weight by 1 must break coclosedness visibly
        let bundle = crate::bundles::default_killing_t3(grid()).unwrap();
        let s = extract_slice(&bundle.g, &bundle.p, 0.0, 1e-8).unwrap();
        let (_, co_right) = p_harmonic_check(&s, &bundle.g, &bundle.x, &bundle.p).unwrap();
        assert!(co_right < 1e-8);

        let ones = Array2::ones((s.n()[0], s.n()[1]));
        let (_, co_wrong) =
            p_harmonic_residuals_with_weight(&s, &bundle.g, &bundle.x, &ones).unwrap();
        assert!(co_wrong > 1e-4, "flat weight slipped through: {co_wrong:.3e}");
    }

    #[test]
    fn frame_coefficients_match_closed_forms_on_sheared_family() {
        // E = 1/((1 + iota0^2) b^2), G = g_eps(Y, Y) on the slice
        let bundle = crate::bundles::default_killing_t3(grid()).unwrap();
        let gf = bundle.guided_flow(None).unwrap();
        let s = extract_slice(&bundle.g, &bundle.p, 0.0, 1e-8).unwrap();
        let frame = induced_frame_metric(&s, &gf, &bundle.g).unwrap();

        let b0: f64 = 2.0; // b(0) = 2 + sin 0
        let e_expect = 1.0 / (2.0 * b0 * b0);
        let mut worst_e = 0.0_f64;
        for &v in frame.e_coef.iter() {
            worst_e = worst_e.max((v - e_expect).abs());
        }
        assert!(worst_e < 1e-10 * e_expect, "E defect {worst_e:.3e}");

        let refs = crate::bundles::reference_values(&bundle).unwrap();
        let g_expect = s.restrict(refs.y_norm2.values());
        let mut worst_g = 0.0_f64;
        let mut scale = 0.0_f64;
        for (a, b) in frame.g_coef.iter().zip(g_expect.iter()) {
            worst_g = worst_g.max((a - b).abs());
            scale = scale.max(b.abs());
        }
        assert!(worst_g < 1e-10 * scale, "G defect {worst_g:.3e}");
    }

    #[test]
    fn zero_field_has_zero_residuals() {
        let (g, _, p, _) = shear_bundle();
        let s = extract_slice(&g, &p, 0.0, 1e-8).unwrap();
        let x = VectorField::zero(grid());
        let (closed, co) = p_harmonic_check(&s, &g, &x, &p).unwrap();
        assert!(closed == 0.0 || closed < 1e-15);
        assert!(co == 0.0 || co < 1e-15);
    }
}
