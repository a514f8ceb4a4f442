//! Adapted metrics: membership tests for the class
//! `{g : i_X g = alpha, mu_g = mu}` and the frame-based perturbation g^rho
//! that moves inside it.
//!
//! g^rho is assembled by frame inversion: with F = (X, Y, grad p) as columns
//! and the Gram matrix D = diag(alpha(X), rho g(Y,Y), g(grad p, grad p)/rho),
//! the perturbed metric is F^{-T} D F^{-1} on the support of rho - 1 and g
//! elsewhere. The frame is g-orthogonal, so rho = 1 reproduces g and the
//! assembled metric keeps i_X g^rho = alpha and mu_{g^rho} = mu.

use crate::archive::{field_io_read, field_io_write, write_atomic, FieldBundle, FieldEntry};
use crate::chart::smooth_bump;
use crate::error::{Error, Result};
use crate::exterior::{d_scalar, flat, gradient, volume_form, VolumeForm};
use crate::field::{det3, MetricField, ScalarField, VectorField};
use crate::grid::Grid3;
use crate::linalg::invert3;
use crate::report::Report;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Residuals of the two adaptedness identities.
#[derive(Debug, Clone)]
pub struct AdaptednessReport {
    /// max |i_X g - alpha| (raw max-norm over nodes and components).
    pub alpha_residual: f64,
    /// max |sqrt(det g) - mu|.
    pub volume_residual: f64,
    /// Scales the verdict measures against: max|alpha| and max|mu|.
    pub alpha_scale: f64,
    pub volume_scale: f64,
    pub tolerance: f64,
    pub verdict: bool,
}

impl AdaptednessReport {
    pub fn to_report(&self, name: &str) -> Report {
        let mut r = Report::new(name, self.tolerance, self.verdict);
        r.push("alpha_residual", self.alpha_residual);
        r.push("volume_residual", self.volume_residual);
        r
    }
}

/// Checks i_X g = alpha and mu_g = mu at tolerance `tol` (relative to the
/// max-norms of alpha and mu).
pub fn is_adapted(
    g: &MetricField,
    x: &VectorField,
    alpha: &crate::field::KForm,
    mu: &VolumeForm,
    tol: f64,
) -> Result<AdaptednessReport> {
    if alpha.degree() != 1 {
        return Err(Error::Degree("alpha must be a 1-form".into()));
    }
    let ixg = flat(g, x);
    let alpha_residual = ixg.sub(alpha)?.max_abs();
    let mug = volume_form(g);
    let volume_residual = mug.residual_against(mu);
    let alpha_scale = alpha.max_abs().max(1.0);
    let volume_scale = mu.density_field().max_abs().max(1.0);
    let verdict =
        alpha_residual <= tol * alpha_scale && volume_residual <= tol * volume_scale;
    Ok(AdaptednessReport {
        alpha_residual,
        volume_residual,
        alpha_scale,
        volume_scale,
        tolerance: tol,
        verdict,
    })
}

/// Where a profile differs from 1.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub enum Support {
    Empty,
    Ball { center: [f64; 3], radius: f64 },
}

impl Support {
    pub fn contains(&self, grid: Grid3, idx: [usize; 3]) -> bool {
        match self {
            Support::Empty => false,
            Support::Ball { center, radius } => {
                grid.distance(grid.coords(idx), *center) < *radius
            }
        }
    }
}

/// A positive conformal-factor profile rho with rho - 1 compactly supported
/// in a declared region.
#[derive(Debug, Clone)]
pub struct PerturbationProfile {
    rho: ScalarField,
    support: Support,
    min_rho: f64,
}

impl PerturbationProfile {
    pub fn rho(&self) -> &ScalarField {
        &self.rho
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    /// Positivity certificate from an exhaustive grid scan.
    pub fn min_rho(&self) -> f64 {
        self.min_rho
    }

    /// Identity profile (rho = 1 everywhere, empty support).
    pub fn identity(grid: Grid3) -> Self {
        PerturbationProfile {
            rho: ScalarField::constant(grid, 1.0),
            support: Support::Empty,
            min_rho: 1.0,
        }
    }

    /// Serializes as a one-entry field archive plus a JSON support
    /// descriptor next to it.
    pub fn write_archive(&self, dir: &Path) -> Result<()> {
        let grid = self.rho.grid();
        let mut bundle = FieldBundle::new(grid);
        bundle.insert("rho", FieldEntry::Scalar(self.rho.clone()));
        field_io_write(dir, &bundle)?;
        let desc = serde_json::to_string_pretty(&self.support)?;
        write_atomic(&dir.join("support.json"), desc.as_bytes())?;
        Ok(())
    }

    pub fn read_archive(dir: &Path) -> Result<Self> {
        let bundle = field_io_read(dir)?;
        let rho = bundle.scalar("rho")?.clone();
        let raw = std::fs::read_to_string(dir.join("support.json"))
            .map_err(|e| Error::Format(format!("missing support.json: {e}")))?;
        let support: Support =
            serde_json::from_str(&raw).map_err(|e| Error::Format(format!("bad support: {e}")))?;
        let min_rho = rho.min();
        if min_rho <= 0.0 {
            return Err(Error::Positivity(format!(
                "profile must be positive; min rho = {min_rho:.6e}"
            )));
        }
        Ok(PerturbationProfile {
            rho,
            support,
            min_rho,
        })
    }
}

/// Smooth bump profile rho = 1 + amplitude * exp(1 - 1/(1 - (d/radius)^2))
/// inside the periodic coordinate ball, 1 outside.
pub fn bump_profile(
    grid: Grid3,
    center: [f64; 3],
    radius: f64,
    amplitude: f64,
) -> Result<PerturbationProfile> {
    let half_min = grid.period().iter().cloned().fold(f64::INFINITY, f64::min) / 2.0;
    if !(radius > 0.0) || radius >= half_min {
        return Err(Error::Parameter(format!(
            "bump radius {radius} must lie in (0, {half_min})"
        )));
    }
    if !(amplitude > -1.0) || !amplitude.is_finite() {
        return Err(Error::Parameter(format!(
            "bump amplitude {amplitude} must exceed -1"
        )));
    }
    if amplitude == 0.0 {
        return Ok(PerturbationProfile::identity(grid));
    }
    let rho = ScalarField::from_fn(grid, |x| {
        let mut d2 = 0.0;
        for i in 0..3 {
            let d = grid.wrap(i, x[i] - center[i]);
            d2 += d * d;
        }
        1.0 + amplitude * smooth_bump(d2, radius)
    });
    let min_rho = rho.min();
    if min_rho <= 0.0 {
        return Err(Error::Positivity(format!(
            "bump profile dips to {min_rho:.6e}"
        )));
    }
    Ok(PerturbationProfile {
        rho,
        support: Support::Ball { center, radius },
        min_rho,
    })
}

/// Minimum relative size of |X| and |dp| required on the support.
pub const SUPPORT_MIN_REL: f64 = 1e-8;

/// Builds g^rho. Requires alpha = i_X g by construction (alpha is derived
/// internally) and checks mu = mu_g; on the support, X and dp must be
/// bounded away from zero so the frame (X, Y, grad p) stays invertible.
pub fn perturb_metric(
    g: &MetricField,
    x: &VectorField,
    p: &ScalarField,
    profile: &PerturbationProfile,
    mu: &VolumeForm,
) -> Result<MetricField> {
    let grid = g.grid();
    if profile.min_rho() <= 0.0 {
        return Err(Error::Positivity(format!(
            "profile must be positive; min rho = {:.6e}",
            profile.min_rho()
        )));
    }
    let mug = volume_form(g);
    let mu_defect = mug.residual_against(mu);
    let mu_scale = mu.density_field().max_abs().max(1.0);
    if mu_defect > 1e-10 * mu_scale {
        return Err(Error::Parameter(format!(
            "mu differs from the metric volume form by {mu_defect:.3e}; \
             the perturbation preserves only mu = mu_g"
        )));
    }

    if profile.support() == &Support::Empty {
        return Ok(g.clone());
    }

    // the declared support must really carry all of rho - 1, since the
    // assembly only touches nodes inside it
    {
        let n = grid.n();
        for i in 0..n[0] {
            for j in 0..n[1] {
                for k in 0..n[2] {
                    let idx = [i, j, k];
                    if !profile.support().contains(grid, idx)
                        && (profile.rho().at(idx) - 1.0).abs() > 1e-12
                    {
                        return Err(Error::Parameter(format!(
                            "profile differs from 1 outside its declared support at node {idx:?}"
                        )));
                    }
                }
            }
        }
    }

    let alpha = flat(g, x);
    let dp = d_scalar(p);
    let grad_p = gradient(g, p)?;
    let alpha_x = g.inner(x, x);
    let gyy_scale = x.max_abs().max(1.0);
    let dp_scale = dp.max_abs().max(f64::MIN_POSITIVE);
    let x_scale = x.max_abs().max(f64::MIN_POSITIVE);

    let n = grid.n();
    let mut comps: [ndarray::Array3<f64>; 6] = [
        g.comp(0).clone(),
        g.comp(1).clone(),
        g.comp(2).clone(),
        g.comp(3).clone(),
        g.comp(4).clone(),
        g.comp(5).clone(),
    ];

    for i in 0..n[0] {
        for j in 0..n[1] {
            for k in 0..n[2] {
                let idx = [i, j, k];
                if !profile.support().contains(grid, idx) {
                    continue;
                }
                let t = (i, j, k);
                let rho = profile.rho().at(idx);

                // support preconditions: X and dp bounded away from zero
                let xv = x.at(idx);
                let dpv = [dp.comp_at(0, idx), dp.comp_at(1, idx), dp.comp_at(2, idx)];
                let xnorm = (xv[0].powi(2) + xv[1].powi(2) + xv[2].powi(2)).sqrt();
                let dpnorm = (dpv[0].powi(2) + dpv[1].powi(2) + dpv[2].powi(2)).sqrt();
                if xnorm <= SUPPORT_MIN_REL * x_scale {
                    return Err(Error::FrameDegeneracy(format!(
                        "X vanishes inside the support at node {idx:?} (|X| = {xnorm:.3e})"
                    )));
                }
                if dpnorm <= SUPPORT_MIN_REL * dp_scale {
                    return Err(Error::FrameDegeneracy(format!(
                        "dp vanishes inside the support at node {idx:?} (|dp| = {dpnorm:.3e})"
                    )));
                }

                // local companion Y with i_Y mu = alpha ^ dp / alpha(X)
                let av = [
                    alpha.comp_at(0, idx),
                    alpha.comp_at(1, idx),
                    alpha.comp_at(2, idx),
                ];
                let ax = alpha_x.at(idx);
                let m = mu.density()[t];
                let w_zt = (av[0] * dpv[1] - av[1] * dpv[0]) / ax;
                let w_zp = (av[0] * dpv[2] - av[2] * dpv[0]) / ax;
                let w_tp = (av[1] * dpv[2] - av[2] * dpv[1]) / ax;
                let yv = [w_tp / m, -w_zp / m, w_zt / m];

                let gv = grad_p.at(idx);
                let frame = [
                    [xv[0], yv[0], gv[0]],
                    [xv[1], yv[1], gv[1]],
                    [xv[2], yv[2], gv[2]],
                ];
                let fdet = det3(&frame);
                let frame_scale = xnorm
                    * (yv[0].powi(2) + yv[1].powi(2) + yv[2].powi(2)).sqrt().max(
                        SUPPORT_MIN_REL * gyy_scale * dp_scale,
                    )
                    * (gv[0].powi(2) + gv[1].powi(2) + gv[2].powi(2)).sqrt();
                if fdet.abs() <= 1e-12 * frame_scale.max(f64::MIN_POSITIVE) {
                    return Err(Error::FrameDegeneracy(format!(
                        "frame determinant {fdet:.3e} inside the support at node {idx:?}"
                    )));
                }
                let finv = invert3(frame).ok_or(Error::FrameDegeneracy(format!(
                    "frame not invertible at node {idx:?}"
                )))?;

                let gm = g.at(idx);
                let dot = |a: [f64; 3], b: [f64; 3]| -> f64 {
                    let mut s = 0.0;
                    for r in 0..3 {
                        for c in 0..3 {
                            s += gm[r][c] * a[r] * b[c];
                        }
                    }
                    s
                };
                let diag = [ax, rho * dot(yv, yv), dot(gv, gv) / rho];

                // g^rho = F^{-T} D F^{-1}
                let mut out = [[0.0_f64; 3]; 3];
                for r in 0..3 {
                    for c in 0..3 {
                        let mut s = 0.0;
                        for l in 0..3 {
                            s += finv[l][r] * diag[l] * finv[l][c];
                        }
                        out[r][c] = s;
                    }
                }
                comps[0][t] = out[0][0];
                comps[1][t] = out[0][1];
                comps[2][t] = out[0][2];
                comps[3][t] = out[1][1];
                comps[4][t] = out[1][2];
                comps[5][t] = out[2][2];
            }
        }
    }

    MetricField::from_components(grid, comps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::KForm;
    use crate::mhd::{mhd_residual, validate_guided_flow};
    use std::f64::consts::PI;

    fn grid() -> Grid3 {
        Grid3::cubic(32).unwrap()
    }

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
    fn scaled_alpha_fails_adaptedness() {
        let (g, x, alpha, _) = {
            let (g, x, _, alpha) = shear_bundle();
            (g, x, alpha, ())
        };
        let mu = volume_form(&g);
        let ok = is_adapted(&g, &x, &alpha, &mu, 1e-10).unwrap();
        assert!(ok.verdict);

        let scaled = alpha.scaled(2.0);
        let bad = is_adapted(&g, &x, &scaled, &mu, 1e-10).unwrap();
        assert!(!bad.verdict);
        // residual equals max|alpha| when alpha is doubled
        assert!((bad.alpha_residual - alpha.max_abs()).abs() < 1e-12);
    }

    #[test]
    fn bump_profile_shape() {
        let center = [0.5, PI, 1.0];
        let prof = bump_profile(grid(), center, 0.8, 0.3).unwrap();
        let idx = [
            grid().nearest_node(0, center[0]),
            grid().nearest_node(1, center[1]),
            grid().nearest_node(2, center[2]),
        ];
        // node exactly at the center only if center is on-grid; use value there
        let at_center = prof.rho().at(idx);
        assert!(at_center <= 1.3 + 1e-12 && at_center > 1.25);
        assert!((prof.min_rho() - 1.0).abs() < 1e-12);

        let neg = bump_profile(grid(), center, 0.8, -0.4).unwrap();
        assert!((neg.min_rho() - 0.6).abs() < 0.05);

        assert!(bump_profile(grid(), center, 0.8, 0.0).unwrap().support() == &Support::Empty);
        assert!(matches!(
            bump_profile(grid(), center, PI, 0.3),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            bump_profile(grid(), center, 0.8, -1.5),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn identity_profile_returns_metric_bitwise() {
        let (g, x, p, _) = shear_bundle();
        let mu = volume_form(&g);
        let prof = bump_profile(grid(), [0.0, 0.0, 0.0], 0.5, 0.0).unwrap();
        let out = perturb_metric(&g, &x, &p, &prof, &mu).unwrap();
        for c in 0..6 {
            for (a, b) in out.comp(c).iter().zip(g.comp(c).iter()) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    fn good_profile() -> PerturbationProfile {
        // support near zeta = 0 where dp = 2 cos z dz is bounded away from 0
        bump_profile(grid(), [0.0, 2.0, 4.0], 0.7, 0.3).unwrap()
    }

    #[test]
    fn perturbed_metric_is_adapted_and_keeps_equilibrium() {
        let (g, x, p, alpha) = shear_bundle();
        let mu = volume_form(&g);
        let gr = perturb_metric(&g, &x, &p, &good_profile(), &mu).unwrap();

        let rep = is_adapted(&gr, &x, &alpha, &mu, 1e-10).unwrap();
        assert!(
            rep.verdict,
            "alpha {:.3e} volume {:.3e}",
            rep.alpha_residual, rep.volume_residual
        );

        // metric really changed
        let mut delta = 0.0_f64;
        for c in 0..6 {
            for (a, b) in gr.comp(c).iter().zip(g.comp(c).iter()) {
                delta = delta.max((a - b).abs());
            }
        }
        assert!(delta > 1e-3, "perturbation too small: {delta:.3e}");

        // equilibrium persists
        assert!(mhd_residual(&gr, &x, &p, None).unwrap().verdict);

        // guided-flow validity persists with the shared (alpha, mu)
        let gf = validate_guided_flow(&x, &alpha, &mu, &p, None).unwrap();
        assert!(gf.is_valid());
    }

    #[test]
    fn frame_is_orthogonal_and_gram_matches_diag() {
        let (g, x, p, _) = shear_bundle();
        let mu = volume_form(&g);
        let prof = good_profile();
        let gr = perturb_metric(&g, &x, &p, &prof, &mu).unwrap();

        // rebuild the frame the same way and check the Gram matrix of g^rho
        let alpha = flat(&g, &x);
        let dp = d_scalar(&p);
        let grad_p = gradient(&g, &p).unwrap();
        let alpha_x = g.inner(&x, &x);
        let n = grid().n();
        let mut worst_offdiag = 0.0_f64;
        let mut worst_diag = 0.0_f64;
        let mut inside = 0usize;
        for i in 0..n[0] {
            for j in 0..n[1] {
                for k in 0..n[2] {
                    let idx = [i, j, k];
                    if !prof.support().contains(grid(), idx) {
                        continue;
                    }
                    inside += 1;
                    let rho = prof.rho().at(idx);
                    let t = (i, j, k);
                    let av = [
                        alpha.comp_at(0, idx),
                        alpha.comp_at(1, idx),
                        alpha.comp_at(2, idx),
                    ];
                    let dpv = [dp.comp_at(0, idx), dp.comp_at(1, idx), dp.comp_at(2, idx)];
                    let ax = alpha_x.at(idx);
                    let m = mu.density()[t];
                    let w_zt = (av[0] * dpv[1] - av[1] * dpv[0]) / ax;
                    let w_zp = (av[0] * dpv[2] - av[2] * dpv[0]) / ax;
                    let w_tp = (av[1] * dpv[2] - av[2] * dpv[1]) / ax;
                    let yv = [w_tp / m, -w_zp / m, w_zt / m];
                    let xv = x.at(idx);
                    let gv = grad_p.at(idx);

                    let grm = gr.at(idx);
                    let dot = |a: [f64; 3], b: [f64; 3]| -> f64 {
                        let mut s = 0.0;
                        for r in 0..3 {
                            for c in 0..3 {
                                s += grm[r][c] * a[r] * b[c];
                            }
                        }
                        s
                    };
                    let g0 = g.at(idx);
                    let dot0 = |a: [f64; 3], b: [f64; 3]| -> f64 {
                        let mut s = 0.0;
                        for r in 0..3 {
                            for c in 0..3 {
                                s += g0[r][c] * a[r] * b[c];
                            }
                        }
                        s
                    };
                    worst_offdiag = worst_offdiag
                        .max(dot(xv, yv).abs())
                        .max(dot(xv, gv).abs())
                        .max(dot(yv, gv).abs());
                    worst_diag = worst_diag
                        .max((dot(xv, xv) - ax).abs() / ax.max(1.0))
                        .max((dot(yv, yv) - rho * dot0(yv, yv)).abs() / dot0(yv, yv).max(1e-30))
                        .max(
                            (dot(gv, gv) - dot0(gv, gv) / rho).abs() / dot0(gv, gv).max(1e-30),
                        );

                    // rho cancels in the product of the two scaled entries
                    let lhs = dot(gv, gv) * dot(yv, yv);
                    let rhs = dot0(gv, gv) * dot0(yv, yv);
                    assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0));
                }
            }
        }
        assert!(inside > 0);
        assert!(worst_offdiag < 1e-10, "off-diagonal {worst_offdiag:.3e}");
        assert!(worst_diag < 1e-10, "diagonal defect {worst_diag:.3e}");
    }

    #[test]
    fn support_over_critical_pressure_is_frame_error() {
        let (g, x, p, _) = shear_bundle();
        let mu = volume_form(&g);
        // dp vanishes at zeta = pi/2
        let prof = bump_profile(grid(), [PI / 2.0, 1.0, 1.0], 0.5, 0.2).unwrap();
        assert!(matches!(
            perturb_metric(&g, &x, &p, &prof, &mu),
            Err(Error::FrameDegeneracy(_))
        ));
    }

    #[test]
    fn wrong_volume_form_is_rejected() {
        let (g, x, p, _) = shear_bundle();
        let mu = VolumeForm::from_density(ScalarField::constant(grid(), 2.0)).unwrap();
        assert!(matches!(
            perturb_metric(&g, &x, &p, &good_profile(), &mu),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn profile_archive_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let prof = good_profile();
        prof.write_archive(dir.path()).unwrap();
        let back = PerturbationProfile::read_archive(dir.path()).unwrap();
        assert_eq!(back.support(), prof.support());
        assert!(back.rho().sub(prof.rho()).max_abs() == 0.0);
    }
}
