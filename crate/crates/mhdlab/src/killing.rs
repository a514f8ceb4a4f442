//! Killing-equation residuals, symmetry reports for candidate fields, the
//! N-functional on pressure-level tori, and the unique-peak genericity test
//! that certifies the absence of continuous symmetries.
//!
//! No eigen-solver search for unknown Killing fields is attempted: the lab
//! evaluates residuals of candidate fields and certifies nonexistence only
//! through the N-functional route.

use crate::error::{Error, Result};
use crate::exterior::{directional_derivative, flat, lie_derivative_form, volume_form};
use crate::field::{KForm, MetricField, ScalarField, SymTensorField, VectorField};
use crate::mhd::{commutator, GuidedFlow};
use crate::report::Report;
use crate::surface::{extract_slice, SurfaceTorus};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// (L_K g)_ij = K^m d_m g_ij + g_mj d_i K^m + g_im d_j K^m, with spectral
/// derivatives.
pub fn lie_derivative_metric(g: &MetricField, k: &VectorField) -> SymTensorField {
    let grid = g.grid();
    let period = grid.period();
    let d = |a: &ndarray::Array3<f64>, ax: usize| crate::spectral::derivative3(a, ax, period[ax]);

    // derivative tables
    let dg: Vec<[ndarray::Array3<f64>; 3]> = (0..6)
        .map(|c| [d(g.comp(c), 0), d(g.comp(c), 1), d(g.comp(c), 2)])
        .collect();
    let dk: Vec<[ndarray::Array3<f64>; 3]> = (0..3)
        .map(|c| [d(k.comp(c), 0), d(k.comp(c), 1), d(k.comp(c), 2)])
        .collect();

    let slot = |i: usize, j: usize| -> usize {
        match (i.min(j), i.max(j)) {
            (0, 0) => 0,
            (0, 1) => 1,
            (0, 2) => 2,
            (1, 1) => 3,
            (1, 2) => 4,
            (2, 2) => 5,
            _ => unreachable!(),
        }
    };

    let n = grid.n();
    let mut comps: Vec<ndarray::Array3<f64>> = Vec::with_capacity(6);
    for (c, &(i, j)) in crate::field::SYM_INDEX.iter().enumerate() {
        let mut acc = ndarray::Array3::zeros((n[0], n[1], n[2]));
        for m in 0..3 {
            acc = acc + k.comp(m) * &dg[c][m];
            acc = acc + g.comp(slot(m, j)) * &dk[m][i];
            acc = acc + g.comp(slot(i, m)) * &dk[m][j];
        }
        comps.push(acc);
    }
    let arr: [ndarray::Array3<f64>; 6] = comps.try_into().expect("six components");
    SymTensorField::from_components(grid, arr)
}

/// Max-norm residuals of a candidate symmetry K against (g, X, p), together
/// with the underlying fields for closed-form comparisons.
#[derive(Debug, Clone)]
pub struct SymmetryReport {
    pub killing_residual: f64,
    pub field_residual: f64,
    pub pressure_residual: f64,
    pub alpha_residual: f64,
    pub volume_residual: f64,
    pub lie_g: SymTensorField,
    pub lie_x: VectorField,
    pub k_p: ScalarField,
    pub lie_alpha: KForm,
    pub lie_mu: KForm,
}

impl SymmetryReport {
    pub fn to_report(&self, name: &str, tol: f64) -> Report {
        let mut r = Report::new(name, tol, self.killing_residual <= tol);
        r.push("killing_residual", self.killing_residual);
        r.push("field_residual", self.field_residual);
        r.push("pressure_residual", self.pressure_residual);
        r.push("alpha_residual", self.alpha_residual);
        r.push("volume_residual", self.volume_residual);
        r
    }
}

/// All five residuals; alpha = i_X g and mu = mu_g are derived from the
/// metric, and the Lie derivatives of forms use the Cartan formula.
pub fn symmetry_report(
    g: &MetricField,
    x: &VectorField,
    p: &ScalarField,
    k: &VectorField,
) -> Result<SymmetryReport> {
    let lie_g = lie_derivative_metric(g, k);
    let lie_x = commutator(k, x);
    let k_p = directional_derivative(k, p);
    let alpha = flat(g, x);
    let lie_alpha = lie_derivative_form(k, &alpha)?;
    let mu = volume_form(g);
    let lie_mu = lie_derivative_form(k, &mu.as_kform())?;
    Ok(SymmetryReport {
        killing_residual: lie_g.max_abs(),
        field_residual: lie_x.max_abs(),
        pressure_residual: k_p.max_abs(),
        alpha_residual: lie_alpha.max_abs(),
        volume_residual: lie_mu.max_abs(),
        lie_g,
        lie_x,
        k_p,
        lie_alpha,
        lie_mu,
    })
}

/// N(g) = g(Y, Y) restricted to a slice. TangencyError if Y is not tangent.
pub fn n_functional(
    g: &MetricField,
    s: &SurfaceTorus,
    y: &VectorField,
) -> Result<Array2<f64>> {
    let yz = s.restrict(y.comp(0));
    let worst = yz.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
    if worst > crate::surface::TANGENCY_TOL * y.max_abs().max(1.0) {
        return Err(Error::Tangency(format!(
            "Y has zeta-component {worst:.3e} on the slice"
        )));
    }
    Ok(s.restrict(g.inner(y, y).values()))
}

/// Outcome of the unique-peak test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenericityVerdict {
    pub is_generic: bool,
    /// Node indices (theta, phi) of the global max (lexicographically first).
    pub peak_node: [usize; 2],
    /// Slice coordinates of the peak.
    pub peak_coords: [f64; 2],
    pub peak_value: f64,
    /// Largest value at periodic distance greater than the disk radius.
    pub runner_up: f64,
    pub gap: f64,
    pub disk_radius: f64,
    /// Effective minimum gap used for the verdict.
    pub min_gap: f64,
}

/// Default relative minimum gap: 1e-6 of the value range, guarding against
/// certifying flat-to-round-off peaks.
pub const DEFAULT_MIN_GAP_REL: f64 = 1e-6;

/// Locates the global max and the best value outside the periodic disk of
/// `disk_radius` around it; generic iff the gap clears `min_gap`
/// (defaulting to 1e-6 of the value range).
pub fn genericity_test(
    values: &Array2<f64>,
    period: [f64; 2],
    disk_radius: f64,
    min_gap: Option<f64>,
) -> Result<GenericityVerdict> {
    let (n0, n1) = values.dim();
    if !(disk_radius > 0.0) || disk_radius >= period[0].min(period[1]) / 2.0 {
        return Err(Error::Parameter(format!(
            "disk radius {disk_radius} must lie in (0, {})",
            period[0].min(period[1]) / 2.0
        )));
    }
    let h = [period[0] / n0 as f64, period[1] / n1 as f64];

    // lexicographically first global max
    let mut peak_node = [0usize, 0usize];
    let mut peak_value = f64::NEG_INFINITY;
    let mut min_value = f64::INFINITY;
    for i in 0..n0 {
        for j in 0..n1 {
            let v = values[(i, j)];
            min_value = min_value.min(v);
            if v > peak_value {
                peak_value = v;
                peak_node = [i, j];
            }
        }
    }

    let wrap = |d: f64, p: f64| -> f64 {
        let mut w = d % p;
        if w < -p / 2.0 {
            w += p;
        } else if w >= p / 2.0 {
            w -= p;
        }
        w
    };
    let peak_coords = [peak_node[0] as f64 * h[0], peak_node[1] as f64 * h[1]];
    let mut runner_up = f64::NEG_INFINITY;
    for i in 0..n0 {
        for j in 0..n1 {
            let dt = wrap(i as f64 * h[0] - peak_coords[0], period[0]);
            let dp = wrap(j as f64 * h[1] - peak_coords[1], period[1]);
            if (dt * dt + dp * dp).sqrt() > disk_radius {
                runner_up = runner_up.max(values[(i, j)]);
            }
        }
    }
    let gap = peak_value - runner_up;
    let min_gap = min_gap.unwrap_or(DEFAULT_MIN_GAP_REL * (peak_value - min_value));
    Ok(GenericityVerdict {
        is_generic: gap > 0.0 && gap >= min_gap,
        peak_node,
        peak_coords,
        peak_value,
        runner_up,
        gap,
        disk_radius,
        min_gap,
    })
}

/// Certification outcome: the N-functional data on the slice plus the
/// genericity verdict.
#[derive(Debug, Clone)]
pub struct SymmetryBreakingCertificate {
    pub slice_index: usize,
    pub zeta0: f64,
    pub n_values: Array2<f64>,
    pub verdict: GenericityVerdict,
    pub certified: bool,
}

impl SymmetryBreakingCertificate {
    pub fn to_report(&self) -> Report {
        let mut r = Report::new("symmetry-breaking-certificate", self.verdict.min_gap, self.certified);
        r.push("peak_value", self.verdict.peak_value);
        r.push("runner_up", self.verdict.runner_up);
        r.push("gap", self.verdict.gap);
        r.push("disk_radius", self.verdict.disk_radius);
        r
    }
}

/// Computes the companion field, restricts N(g) = g(Y, Y) to the slice at
/// `zeta0`, and runs the unique-peak test. "Certified" means the peak is
/// isolated at the stated radius and gap.
pub fn certify_symmetry_breaking(
    g: &MetricField,
    gf: &GuidedFlow,
    zeta0: f64,
    disk_radius: f64,
    min_gap: Option<f64>,
) -> Result<SymmetryBreakingCertificate> {
    let s = extract_slice(g, gf.p(), zeta0, 1e-8)?;
    let y = gf.companion()?;
    let n_values = n_functional(g, &s, y)?;
    let verdict = genericity_test(&n_values, s.period(), disk_radius, min_gap)?;
    Ok(SymmetryBreakingCertificate {
        slice_index: s.index(),
        zeta0: s.zeta0(),
        n_values,
        certified: verdict.is_generic,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::d_scalar;
    use crate::grid::Grid3;
    use std::f64::consts::{PI, TAU};

    fn grid() -> Grid3 {
        Grid3::cubic(32).unwrap()
    }

    #[test]
    fn translations_are_killing_for_flat_metric() {
        let g = MetricField::identity(grid());
        let et = VectorField::from_fn(grid(), |_| [0.0, 1.0, 0.0]);
        assert!(lie_derivative_metric(&g, &et).max_abs() < 1e-13);
    }

    #[test]
    fn zeta_independent_metrics_have_dzeta_killing() {
        let g = MetricField::from_fn(grid(), |c| {
            [
                1.0 + 0.2 * c[1].cos(),
                0.0,
                0.05 * (c[1] + c[2]).sin(),
                1.1,
                0.1 * c[2].cos(),
                0.9,
            ]
        })
        .unwrap();
        let ez = VectorField::from_fn(grid(), |_| [1.0, 0.0, 0.0]);
        assert!(lie_derivative_metric(&g, &ez).max_abs() < 1e-12);
    }

    #[test]
    fn stretching_field_matches_formula() {
        // K = sin(z) dz on the flat metric: (L_K g)_zz = 2 cos z, rest 0
        let g = MetricField::identity(grid());
        let k = VectorField::from_fn(grid(), |c| [c[0].sin(), 0.0, 0.0]);
        let lg = lie_derivative_metric(&g, &k);
        let expect = ScalarField::from_fn(grid(), |c| 2.0 * c[0].cos());
        let mut worst = 0.0_f64;
        let n = grid().n();
        for i in 0..n[0] {
            for j in 0..n[1] {
                for l in 0..n[2] {
                    let idx = [i, j, l];
                    worst = worst.max((lg.entry_at(0, 0, idx) - expect.at(idx)).abs());
                    for (a, b) in [(0, 1), (0, 2), (1, 1), (1, 2), (2, 2)] {
                        worst = worst.max(lg.entry_at(a, b, idx).abs());
                    }
                }
            }
        }
        assert!(worst < 1e-12);
    }

    #[test]
    fn symmetry_report_trivial_cases() {
        let g = MetricField::identity(grid());
        let x = VectorField::from_fn(grid(), |_| [0.0, 2.0, 0.5]);
        let p = ScalarField::constant(grid(), 0.25);
        let rep = symmetry_report(&g, &x, &p, &x).unwrap();
        assert!(rep.killing_residual < 1e-12);
        assert!(rep.field_residual < 1e-12);
        assert!(rep.pressure_residual < 1e-12);
        assert!(rep.alpha_residual < 1e-12);
        assert!(rep.volume_residual < 1e-12);

        let zero = VectorField::zero(grid());
        let rep0 = symmetry_report(&g, &x, &p, &zero).unwrap();
        assert!(rep0.killing_residual == 0.0 && rep0.field_residual == 0.0);
    }

    #[test]
    fn killing_chain_bounds_dkp() {
        // Killing + commuting implies d(K p) small (the preserved-pressure
        // chain), checked on a translation symmetry of the shear family.
        let g = MetricField::identity(grid());
        let x = VectorField::from_fn(grid(), |_| [0.0, 2.0, 0.5]);
        let p = ScalarField::from_fn(grid(), |c| (c[0]).sin());
        let k = VectorField::from_fn(grid(), |_| [0.0, 1.0, 1.0]);
        let rep = symmetry_report(&g, &x, &p, &k).unwrap();
        assert!(rep.killing_residual < 1e-10 && rep.field_residual < 1e-10);
        let dkp = d_scalar(&rep.k_p).max_abs();
        assert!(dkp < 1e-8, "d(Kp) = {dkp:.3e}");
    }

    #[test]
    fn genericity_basic_cases() {
        let n = 64;
        let period = [TAU, TAU];
        let grid2 = |f: &dyn Fn(f64, f64) -> f64| {
            Array2::from_shape_fn((n, n), |(i, j)| {
                f(TAU * i as f64 / n as f64, TAU * j as f64 / n as f64)
            })
        };

        let constant = grid2(&|_, _| 2.5);
        let v = genericity_test(&constant, period, PI / 4.0, None).unwrap();
        assert!(!v.is_generic);
        assert_eq!(v.gap, 0.0);

        let unique = grid2(&|t, p| t.cos() + p.cos());
        let v = genericity_test(&unique, period, PI / 4.0, None).unwrap();
        assert!(v.is_generic);
        assert_eq!(v.peak_node, [0, 0]);
        // exhaustive scan oracle for the gap
        let mut oracle = f64::NEG_INFINITY;
        for i in 0..n {
            for j in 0..n {
                let (t, p) = (TAU * i as f64 / n as f64, TAU * j as f64 / n as f64);
                let dt = if t >= PI { t - TAU } else { t };
                let dp = if p >= PI { p - TAU } else { p };
                if (dt * dt + dp * dp).sqrt() > PI / 4.0 {
                    oracle = oracle.max(t.cos() + p.cos());
                }
            }
        }
        assert!((v.gap - (2.0 - oracle)).abs() < 1e-12);

        // two antipodal global maxima: not generic at any disk radius < pi
        let twin = grid2(&|t, p| t.cos() * p.cos());
        let v = genericity_test(&twin, period, PI / 4.0, None).unwrap();
        assert!(!v.is_generic);
        assert!(v.gap.abs() < 1e-12);
    }

    #[test]
    fn genericity_is_scale_invariant() {
        let n = 32;
        let vals = Array2::from_shape_fn((n, n), |(i, j)| {
            (TAU * i as f64 / n as f64).cos() + 0.4 * (TAU * j as f64 / n as f64).sin()
        });
        let v0 = genericity_test(&vals, [TAU, TAU], 0.7, None).unwrap();
        let scaled = vals.mapv(|v| 3.5 * v - 11.0);
        let v1 = genericity_test(&scaled, [TAU, TAU], 0.7, None).unwrap();
        assert_eq!(v0.is_generic, v1.is_generic);
        assert_eq!(v0.peak_node, v1.peak_node);
    }

    #[test]
    fn genericity_radius_validation() {
        let vals = Array2::zeros((16, 16));
        assert!(genericity_test(&vals, [TAU, TAU], PI, None).is_err());
        assert!(genericity_test(&vals, [TAU, TAU], -1.0, None).is_err());
    }

    #[test]
    fn certificate_is_stable_under_axis_relabeling() {
        // swapping theta and phi (with iota0 = 1 self-consistent data and the
        // swapped f profile) must relabel the peak without changing the
        // verdict
        use crate::bundles::{example_killing_t3, AxisProfile, SurfaceProfile};
        let g = grid();
        let b = AxisProfile::from_fn(g, |z| 2.0 + z.sin());
        let f = SurfaceProfile::from_fn(g, |t, p| 0.5 * t.cos() + 0.3 * p.cos());
        let f_swapped = SurfaceProfile::from_fn(g, |t, p| 0.5 * p.cos() + 0.3 * t.cos());

        let bundle = example_killing_t3(g, &b, 1.0, 0.05, &f).unwrap();
        let swapped = example_killing_t3(g, &b, 1.0, 0.05, &f_swapped).unwrap();
        let gf = bundle.guided_flow(None).unwrap();
        let gf_swapped = swapped.guided_flow(None).unwrap();
        let c0 = certify_symmetry_breaking(&bundle.g, &gf, 0.0, PI / 4.0, None).unwrap();
        let c1 = certify_symmetry_breaking(&swapped.g, &gf_swapped, 0.0, PI / 4.0, None).unwrap();
        assert_eq!(c0.certified, c1.certified);
        assert_eq!(
            [c0.verdict.peak_node[1], c0.verdict.peak_node[0]],
            c1.verdict.peak_node
        );
        assert!((c0.verdict.gap - c1.verdict.gap).abs() < 1e-12);
    }
}
