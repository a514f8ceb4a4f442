//! Equilibrium residuals, Beltrami analysis, guided flows, and companion
//! fields.
//!
//! Sign convention: the equilibrium condition checked throughout is
//!
//!   curl X x X + grad p = 0,      div X = 0,
//!
//! equivalently `i_X d(i_X g) = -dp`. Both built-in example families satisfy
//! this with their stated pressures.

use crate::error::{Error, Result};
use crate::exterior::{
    cross, curl, d_scalar, directional_derivative, divergence, exterior_derivative, flat,
    gradient, interior_product, interior_volume, invert_interior_volume, lie_derivative_form,
    volume_form, wedge, VolumeForm,
};
use crate::field::{KForm, MetricField, ScalarField, VectorField};
use crate::report::Report;
use std::sync::OnceLock;

pub const DEFAULT_TOLERANCE: f64 = 1e-8;

/// Result of checking `curl X x X + grad p = 0, div X = 0` for a metric.
#[derive(Debug, Clone)]
pub struct EquilibriumReport {
    pub momentum_residual: VectorField,
    pub div_residual: ScalarField,
    pub momentum_max: f64,
    pub div_max: f64,
    /// Scale `max g(X,X)` the momentum residual is measured against.
    pub momentum_scale: f64,
    /// Scale `sqrt(max g(X,X))` the divergence residual is measured against.
    pub div_scale: f64,
    pub tolerance: f64,
    pub verdict: bool,
}

impl EquilibriumReport {
    pub fn to_report(&self, name: &str) -> Report {
        let mut r = Report::new(name, self.tolerance, self.verdict);
        r.push("momentum_rel", self.momentum_max / self.momentum_scale.max(f64::MIN_POSITIVE));
        r.push("divergence_rel", self.div_max / self.div_scale.max(f64::MIN_POSITIVE));
        r
    }
}

/// Momentum and divergence residuals of (X, p) on (M, g), with the volume
/// form taken from g. Verdict holds iff both max-norms stay below
/// `tol * scale` with the scales recorded in the report.
pub fn mhd_residual(
    g: &MetricField,
    x: &VectorField,
    p: &ScalarField,
    tol: Option<f64>,
) -> Result<EquilibriumReport> {
    let tol = tol.unwrap_or(DEFAULT_TOLERANCE);
    let mu = volume_form(g);
    let curl_x = curl(g, x, &mu)?;
    let lorentz = cross(g, &curl_x, x, &mu)?;
    let grad_p = gradient(g, p)?;
    let momentum_residual = lorentz.add(&grad_p);
    let div_residual = divergence(&mu, x)?;

    let momentum_scale = g.inner(x, x).max();
    let div_scale = momentum_scale.sqrt();
    let momentum_max = momentum_residual.max_abs();
    let div_max = div_residual.max_abs();
    let verdict = momentum_max <= tol * momentum_scale && div_max <= tol * div_scale;
    Ok(EquilibriumReport {
        momentum_residual,
        div_residual,
        momentum_max,
        div_max,
        momentum_scale,
        div_scale,
        tolerance: tol,
        verdict,
    })
}

/// Bernoulli conversion p = -(g(X,X)/2 + P).
pub fn bernoulli_convert(g: &MetricField, x: &VectorField, big_p: &ScalarField) -> ScalarField {
    g.inner(x, x).scaled(0.5).add(big_p).scaled(-1.0)
}

/// Proportionality factor of a (candidate) Beltrami field.
#[derive(Debug, Clone)]
pub struct BeltramiFactor {
    /// lambda = g(curl X, X) / g(X, X) on unmasked nodes, 0 on masked ones.
    pub lambda: ScalarField,
    /// max over unmasked nodes of |curl X - lambda X| / max|curl X|.
    pub colinearity_residual: f64,
    /// max over unmasked nodes of |d lambda (X)| (first-integral defect).
    pub first_integral_residual: f64,
    /// Number of masked nodes (where |X|_g <= 1e-8 max|X|_g).
    pub masked: usize,
}

/// Masking threshold for the Beltrami quotient, relative to max |X|_g.
pub const BELTRAMI_MASK: f64 = 1e-8;

pub fn beltrami_factor(
    g: &MetricField,
    x: &VectorField,
    mu: &VolumeForm,
) -> Result<BeltramiFactor> {
    let grid = x.grid();
    let curl_x = curl(g, x, mu)?;
    let xx = g.inner(x, x);
    let cx = g.inner(&curl_x, x);
    let max_norm = xx.max().max(0.0).sqrt();
    let threshold = BELTRAMI_MASK * max_norm;

    let n = grid.n();
    let mut masked = 0usize;
    let mut lambda_values = ndarray::Array3::zeros((n[0], n[1], n[2]));
    for i in 0..n[0] {
        for j in 0..n[1] {
            for k in 0..n[2] {
                let idx = [i, j, k];
                let nx = xx.at(idx).max(0.0).sqrt();
                if nx <= threshold {
                    masked += 1;
                } else {
                    lambda_values[(i, j, k)] = cx.at(idx) / xx.at(idx);
                }
            }
        }
    }
    if masked == grid.node_count() {
        return Err(Error::AllMasked(
            "X vanishes everywhere at the masking threshold".into(),
        ));
    }
    let lambda = ScalarField::from_values(grid, lambda_values)?;

    let curl_scale = curl_x.max_abs();
    let dlambda = d_scalar(&lambda);
    let dlambda_x = interior_product(x, &dlambda)?;
    let mut colin = 0.0_f64;
    let mut first_integral = 0.0_f64;
    for i in 0..n[0] {
        for j in 0..n[1] {
            for k in 0..n[2] {
                let idx = [i, j, k];
                let nx = xx.at(idx).max(0.0).sqrt();
                if nx <= threshold {
                    continue;
                }
                let l = lambda.at(idx);
                let cv = curl_x.at(idx);
                let xv = x.at(idx);
                for c in 0..3 {
                    colin = colin.max((cv[c] - l * xv[c]).abs());
                }
                first_integral = first_integral.max(dlambda_x.comp_at(0, idx).abs());
            }
        }
    }
    let colinearity_residual = if curl_scale > f64::MIN_POSITIVE {
        colin / curl_scale
    } else {
        0.0
    };
    Ok(BeltramiFactor {
        lambda,
        colinearity_residual,
        first_integral_residual: first_integral,
        masked,
    })
}

/// Validation record for a guided-flow quadruple.
#[derive(Debug, Clone)]
pub struct GuidedFlowReport {
    /// min alpha(X) over the grid; positive by construction (hard check).
    pub alpha_x_min: f64,
    /// |d i_X mu| / (max|mu| max|X|).
    pub volume_residual: f64,
    /// |dp(X)| / (max|dp| max|X|).
    pub pressure_residual: f64,
    /// |d alpha ^ dp| / (max|d alpha| max|dp|).
    pub twist_residual: f64,
    pub tolerance: f64,
    pub valid: bool,
}

impl GuidedFlowReport {
    pub fn to_report(&self, name: &str) -> Report {
        let mut r = Report::new(name, self.tolerance, self.valid);
        r.push("alpha_x_min", self.alpha_x_min);
        r.push("volume_rel", self.volume_residual);
        r.push("pressure_rel", self.pressure_residual);
        r.push("twist_rel", self.twist_residual);
        r
    }
}

/// A validated guided-flow quadruple (X, alpha, mu, p) with its companion
/// field cached on first use (write-once).
#[derive(Debug)]
pub struct GuidedFlow {
    x: VectorField,
    alpha: KForm,
    mu: VolumeForm,
    p: ScalarField,
    alpha_x: ScalarField,
    report: GuidedFlowReport,
    companion: OnceLock<VectorField>,
}

fn rel(residual: f64, scale: f64) -> f64 {
    if scale > f64::MIN_POSITIVE {
        residual / scale
    } else {
        residual
    }
}

/// Checks alpha(X) > 0 (hard PositivityError otherwise) and the three
/// residual conditions `L_X mu = 0`, `dp(X) = 0`, `d alpha ^ dp = 0`, each
/// normalized by its operand scales and compared against `tol`.
pub fn validate_guided_flow(
    x: &VectorField,
    alpha: &KForm,
    mu: &VolumeForm,
    p: &ScalarField,
    tol: Option<f64>,
) -> Result<GuidedFlow> {
    let tol = tol.unwrap_or(DEFAULT_TOLERANCE);
    if alpha.degree() != 1 {
        return Err(Error::Degree("alpha must be a 1-form".into()));
    }
    let alpha_x_form = interior_product(x, alpha)?;
    let alpha_x = ScalarField::from_values(x.grid(), alpha_x_form.comp(0).clone())?;
    let alpha_x_min = alpha_x.min();
    if alpha_x_min <= 0.0 {
        return Err(Error::Positivity(format!(
            "alpha(X) must be positive everywhere; min = {alpha_x_min:.6e}"
        )));
    }

    let x_scale = x.max_abs();
    let ix_mu = interior_volume(x, mu);
    let vol = exterior_derivative(&ix_mu)?.max_abs();
    let mu_scale = mu.density_field().max_abs();

    let dp = d_scalar(p);
    let dpx = interior_product(x, &dp)?.max_abs();

    let dalpha = exterior_derivative(alpha)?;
    let twist = wedge(&dalpha, &dp)?.max_abs();

    let report = GuidedFlowReport {
        alpha_x_min,
        volume_residual: rel(vol, mu_scale * x_scale),
        pressure_residual: rel(dpx, dp.max_abs() * x_scale),
        twist_residual: rel(twist, dalpha.max_abs() * dp.max_abs()),
        tolerance: tol,
        valid: false,
    };
    let valid = report.volume_residual <= tol
        && report.pressure_residual <= tol
        && report.twist_residual <= tol;
    Ok(GuidedFlow {
        x: x.clone(),
        alpha: alpha.clone(),
        mu: mu.clone(),
        p: p.clone(),
        alpha_x,
        report: GuidedFlowReport { valid, ..report },
        companion: OnceLock::new(),
    })
}

impl GuidedFlow {
    pub fn x(&self) -> &VectorField {
        &self.x
    }

    pub fn alpha(&self) -> &KForm {
        &self.alpha
    }

    pub fn mu(&self) -> &VolumeForm {
        &self.mu
    }

    pub fn p(&self) -> &ScalarField {
        &self.p
    }

    /// The positive scalar alpha(X).
    pub fn alpha_x(&self) -> &ScalarField {
        &self.alpha_x
    }

    pub fn report(&self) -> &GuidedFlowReport {
        &self.report
    }

    pub fn is_valid(&self) -> bool {
        self.report.valid
    }

    /// The normalized direction field X~ = X / alpha(X).
    pub fn x_tilde(&self) -> VectorField {
        self.x.scaled_by(&self.alpha_x.map(|v| 1.0 / v))
    }

    /// The companion field: the unique Y with i_Y mu = alpha ^ dp / alpha(X).
    /// Computed once and cached.
    pub fn companion(&self) -> Result<&VectorField> {
        if !self.report.valid {
            return Err(Error::Parameter(
                "companion field requested for an invalid guided flow".into(),
            ));
        }
        if let Some(y) = self.companion.get() {
            return Ok(y);
        }
        let dp = d_scalar(&self.p);
        let num = wedge(&self.alpha, &dp)?;
        let scaled = num.scaled_by(&self.alpha_x.map(|v| 1.0 / v));
        let y = invert_interior_volume(&scaled, &self.mu)?;
        let _ = self.companion.set(y);
        Ok(self.companion.get().expect("just set"))
    }
}

/// Free-function form of [`GuidedFlow::companion`].
pub fn companion_field(gf: &GuidedFlow) -> Result<VectorField> {
    gf.companion().cloned()
}

/// Coordinate Lie bracket [X, Y]^i = X^j d_j Y^i - Y^j d_j X^i.
pub fn commutator(x: &VectorField, y: &VectorField) -> VectorField {
    let grid = x.grid();
    let period = grid.period();
    let d = |a: &ndarray::Array3<f64>, ax: usize| crate::spectral::derivative3(a, ax, period[ax]);
    let mut comps = Vec::with_capacity(3);
    for i in 0..3 {
        let mut acc = ndarray::Array3::zeros(x.comp(0).dim());
        for j in 0..3 {
            acc = acc + x.comp(j) * &d(y.comp(i), j) - y.comp(j) * &d(x.comp(i), j);
        }
        comps.push(acc);
    }
    let mut it = comps.into_iter();
    VectorField::from_components(grid, [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()])
        .expect("valid by construction")
}

/// Max-norm residuals of the quasi-symmetry conditions for a candidate
/// symmetry u: L_u(alpha(X)), L_u(i_X mu), L_u(alpha), with alpha = i_X g.
#[derive(Debug, Clone)]
pub struct QuasiSymmetryResiduals {
    pub field_strength: f64,
    pub flux: f64,
    pub one_form: f64,
}

pub fn quasisymmetry_residual(
    g: &MetricField,
    x: &VectorField,
    mu: &VolumeForm,
    u: &VectorField,
) -> Result<QuasiSymmetryResiduals> {
    let alpha = flat(g, x);
    let alpha_x_form = interior_product(x, &alpha)?;
    let alpha_x = ScalarField::from_values(x.grid(), alpha_x_form.comp(0).clone())?;
    let field_strength = directional_derivative(u, &alpha_x).max_abs();
    let flux = lie_derivative_form(u, &interior_volume(x, mu))?.max_abs();
    let one_form = lie_derivative_form(u, &alpha)?.max_abs();
    Ok(QuasiSymmetryResiduals {
        field_strength,
        flux,
        one_form,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid3;

    fn grid() -> Grid3 {
        Grid3::cubic(32).unwrap()
    }

    /// Flat-torus shear family: X = a(z) dt + b(z) dp, p = (a^2 + b^2)/2.
    fn shear(a: impl Fn(f64) -> f64 + Copy, b: impl Fn(f64) -> f64 + Copy) -> (MetricField, VectorField, ScalarField, KForm) {
        let g = MetricField::identity(grid());
        let x = VectorField::from_fn(grid(), |c| [0.0, a(c[0]), b(c[0])]);
        let p = ScalarField::from_fn(grid(), |c| 0.5 * (a(c[0]).powi(2) + b(c[0]).powi(2)));
        let alpha = KForm::one_form_fn(grid(), |c| [0.0, a(c[0]), b(c[0])]);
        (g, x, p, alpha)
    }

    #[test]
    fn shear_family_is_an_equilibrium() {
        let (g, x, p, _) = shear(|z| 2.0 + z.sin(), |z| z.cos());
        let rep = mhd_residual(&g, &x, &p, None).unwrap();
        assert!(rep.verdict, "momentum {:.3e} div {:.3e}", rep.momentum_max, rep.div_max);
        assert!(rep.momentum_max <= 1e-10 * rep.momentum_scale);
    }

    #[test]
    fn shear_curl_matches_hand_computation() {
        // curl(a dt + b dp) = -b' dt + a' dp and the Lorentz term is -grad p
        let (g, x, _, _) = shear(|z| 2.0 + z.sin(), |z| z.cos());
        let mu = volume_form(&g);
        let c = curl(&g, &x, &mu).unwrap();
        let expect = VectorField::from_fn(grid(), |cd| [0.0, cd[0].sin(), cd[0].cos()]);
        assert!(c.sub(&expect).max_abs() < 1e-12 * expect.max_abs());
    }

    #[test]
    fn constant_field_zero_pressure_is_equilibrium() {
        let g = MetricField::identity(grid());
        let x = VectorField::from_fn(grid(), |_| [0.0, 1.0, 0.0]);
        let p = ScalarField::constant(grid(), 0.0);
        assert!(mhd_residual(&g, &x, &p, None).unwrap().verdict);
    }

    #[test]
    fn bernoulli_conversion() {
        let g = MetricField::identity(grid());
        let x = VectorField::zero(grid());
        let c = ScalarField::constant(grid(), 3.5);
        let p = bernoulli_convert(&g, &x, &c);
        assert!((p.max() + 3.5).abs() < 1e-15 && (p.min() + 3.5).abs() < 1e-15);

        // round trip: P from p then p from P
        let x = VectorField::from_fn(grid(), |cd| [cd[0].sin(), 1.0, cd[1].cos()]);
        let p0 = ScalarField::from_fn(grid(), |cd| cd[0].cos() + 0.2 * cd[2].sin());
        let big_p = bernoulli_convert(&g, &x, &p0); // reuse: -(|X|^2/2 + p0)
        let p1 = bernoulli_convert(&g, &x, &big_p);
        // p1 = -(|X|^2/2 - |X|^2/2 - p0) = p0
        assert!(p1.sub(&p0).max_abs() < 1e-14 * p0.max_abs().max(1.0));
    }

    #[test]
    fn beltrami_unit_eigenfield() {
        let g = MetricField::identity(grid());
        let mu = volume_form(&g);
        let x = VectorField::from_fn(grid(), |c| [0.0, c[0].sin(), c[0].cos()]);
        let bf = beltrami_factor(&g, &x, &mu).unwrap();
        assert_eq!(bf.masked, 0);
        assert!((bf.lambda.max() - 1.0).abs() < 1e-10);
        assert!((bf.lambda.min() - 1.0).abs() < 1e-10);
        assert!(bf.colinearity_residual < 1e-10);
        assert!(bf.first_integral_residual < 1e-10);
    }

    #[test]
    fn twisted_circle_profile_has_nonconstant_factor() {
        // X = R cos(w(z)) dt + R sin(w(z)) dp is Beltrami with
        // lambda = -w'(z): nonconstant for nonlinear w, and still a first
        // integral of X since X has no z-component.
        let g = MetricField::identity(grid());
        let mu = volume_form(&g);
        let w = |z: f64| z + 0.3 * z.sin();
        let dw = |z: f64| 1.0 + 0.3 * z.cos();
        let x = VectorField::from_fn(grid(), |c| {
            [0.0, 1.7 * w(c[0]).cos(), 1.7 * w(c[0]).sin()]
        });
        let bf = beltrami_factor(&g, &x, &mu).unwrap();
        assert_eq!(bf.masked, 0);
        assert!(bf.colinearity_residual < 1e-10, "{:.3e}", bf.colinearity_residual);
        assert!(bf.first_integral_residual < 1e-10, "{:.3e}", bf.first_integral_residual);
        let expect = ScalarField::from_fn(grid(), |c| -dw(c[0]));
        assert!(bf.lambda.sub(&expect).max_abs() < 1e-10 * expect.max_abs());
        // genuinely nonconstant
        assert!(bf.lambda.max() - bf.lambda.min() > 0.5);
    }

    #[test]
    fn curl_free_field_has_zero_factor() {
        let g = MetricField::identity(grid());
        let mu = volume_form(&g);
        let x = VectorField::from_fn(grid(), |_| [0.0, 1.0, 0.0]);
        let bf = beltrami_factor(&g, &x, &mu).unwrap();
        assert!(bf.lambda.max_abs() < 1e-12);
        assert!(bf.colinearity_residual == 0.0 || bf.colinearity_residual < 1e-12);
    }

    #[test]
    fn all_masked_error() {
        let g = MetricField::identity(grid());
        let mu = volume_form(&g);
        let x = VectorField::zero(grid());
        assert!(matches!(
            beltrami_factor(&g, &x, &mu),
            Err(Error::AllMasked(_))
        ));
    }

    #[test]
    fn guided_flow_positivity_is_hard() {
        let x = VectorField::from_fn(grid(), |_| [0.0, 1.0, 0.0]);
        let alpha = KForm::one_form_fn(grid(), |_| [0.0, -1.0, 0.0]);
        let mu = VolumeForm::coordinate(grid());
        let p = ScalarField::constant(grid(), 0.0);
        assert!(matches!(
            validate_guided_flow(&x, &alpha, &mu, &p, None),
            Err(Error::Positivity(_))
        ));
    }

    #[test]
    fn shear_quadruple_is_a_guided_flow() {
        let (_, x, p, alpha) = shear(|z| 2.0 + z.sin(), |z| z.cos());
        let mu = VolumeForm::coordinate(grid());
        let gf = validate_guided_flow(&x, &alpha, &mu, &p, None).unwrap();
        assert!(gf.is_valid(), "{:?}", gf.report());
    }

    #[test]
    fn shear_companion_matches_hand_computation() {
        // Y = ((a a' + b b')/(a^2 + b^2)) (b dt - a dp)
        let a = |z: f64| 2.0 + z.sin();
        let b = |z: f64| z.cos();
        let da = |z: f64| z.cos();
        let db = |z: f64| -z.sin();
        let (_, x, p, alpha) = shear(a, b);
        let mu = VolumeForm::coordinate(grid());
        let gf = validate_guided_flow(&x, &alpha, &mu, &p, None).unwrap();
        let y = gf.companion().unwrap();
        let expect = VectorField::from_fn(grid(), |c| {
            let z = c[0];
            let f = (a(z) * da(z) + b(z) * db(z)) / (a(z).powi(2) + b(z).powi(2));
            [0.0, f * b(z), -f * a(z)]
        });
        assert!(y.sub(&expect).max_abs() < 1e-10 * expect.max_abs());
    }

    #[test]
    fn companion_vanishes_for_constant_pressure() {
        let (_, x, _, alpha) = shear(|_| 2.0, |_| 0.5);
        let p = ScalarField::constant(grid(), 0.0);
        let mu = VolumeForm::coordinate(grid());
        let gf = validate_guided_flow(&x, &alpha, &mu, &p, None).unwrap();
        assert!(gf.companion().unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn companion_annihilates_alpha_and_dp() {
        let (_, x, p, alpha) = shear(|z| 2.0 + z.sin(), |z| z.cos());
        let mu = VolumeForm::coordinate(grid());
        let gf = validate_guided_flow(&x, &alpha, &mu, &p, None).unwrap();
        let y = gf.companion().unwrap();
        let ay = interior_product(y, &alpha).unwrap().max_abs();
        let dpy = interior_product(y, &d_scalar(&p)).unwrap().max_abs();
        let scale = y.max_abs().max(1.0);
        assert!(ay < 1e-10 * alpha.max_abs() * scale);
        assert!(dpy < 1e-10 * d_scalar(&p).max_abs().max(1.0) * scale);
    }

    #[test]
    fn companion_matches_cross_product_route() {
        let (g, x, p, alpha) = shear(|z| 2.0 + z.sin(), |z| z.cos());
        let mu = volume_form(&g);
        let gf = validate_guided_flow(&x, &alpha, &mu, &p, None).unwrap();
        let y = gf.companion().unwrap();
        let grad_p = gradient(&g, &p).unwrap();
        let xgp = cross(&g, &x, &grad_p, &mu).unwrap();
        let alt = xgp.scaled_by(&g.inner(&x, &x).map(|v| 1.0 / v));
        assert!(y.sub(&alt).max_abs() < 1e-10 * y.max_abs().max(1.0));
    }

    #[test]
    fn commutator_cases() {
        let et = VectorField::from_fn(grid(), |_| [0.0, 1.0, 0.0]);
        let ep = VectorField::from_fn(grid(), |_| [0.0, 0.0, 1.0]);
        assert!(commutator(&et, &ep).max_abs() < 1e-13);

        // [f dt, dt] = -(dt f) dt
        let f = |c: [f64; 3]| 2.0 + (c[1]).sin();
        let df = |c: [f64; 3]| (c[1]).cos();
        let fet = VectorField::from_fn(grid(), |c| [0.0, f(c), 0.0]);
        let br = commutator(&fet, &et);
        let expect = VectorField::from_fn(grid(), |c| [0.0, -df(c), 0.0]);
        assert!(br.sub(&expect).max_abs() < 1e-12);
    }

    #[test]
    fn xtilde_commutes_with_companion() {
        let (_, x, p, alpha) = shear(|z| 2.0 + z.sin(), |z| z.cos());
        let mu = VolumeForm::coordinate(grid());
        let gf = validate_guided_flow(&x, &alpha, &mu, &p, None).unwrap();
        let xt = gf.x_tilde();
        let y = gf.companion().unwrap();
        let br = commutator(&xt, y);
        assert!(br.max_abs() < 1e-10 * xt.max_abs().max(y.max_abs()));
    }

    #[test]
    fn quasisymmetry_translation_symmetry() {
        let (g, x, _, _) = shear(|_| 2.0, |_| 0.5);
        let mu = volume_form(&g);
        let qs = quasisymmetry_residual(&g, &x, &mu, &x).unwrap();
        assert!(qs.field_strength < 1e-12 && qs.flux < 1e-12 && qs.one_form < 1e-12);

        let zero = VectorField::zero(grid());
        let qs0 = quasisymmetry_residual(&g, &x, &mu, &zero).unwrap();
        assert!(qs0.field_strength == 0.0 && qs0.flux == 0.0 && qs0.one_form == 0.0);
    }
}
