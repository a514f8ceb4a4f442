//! Built-in closed-form equilibrium families and their reference values.
//!
//! Two families are provided, named `example-6.4` and `example-6.5` on the
//! wire (CLI `reproduce`, `bundle.json`):
//!
//! * the flat-torus shear family X = a(z) dt + b(z) dp with pressure
//!   p = (a^2 + b^2)/2 on the identity metric, and
//! * the sheared-metric family X = b(z)(dt + iota0 dp) with the adapted
//!   metric family g_eps whose (theta, phi) block carries an off-diagonal
//!   eps f(theta, phi) coupling; here p = (1 + iota0^2) b^2 / 2, the
//!   companion field is Y = b'(z)(iota0 dt - dp), and
//!   g_eps(Y, Y) = b'^2 (1 + iota0^2)(1 - eps (iota0 + 1/iota0) f).
//!
//! Profiles are sampled fields (arbitrary smooth periodic data can be
//! injected); trigonometric built-ins cover the defaults.

use crate::archive::{field_io_write, write_atomic, FieldBundle, FieldEntry};
use crate::error::{Error, Result};
use crate::exterior::VolumeForm;
use crate::field::{KForm, MetricField, ScalarField, VectorField};
use crate::grid::Grid3;
use crate::mhd::{validate_guided_flow, GuidedFlow};
use crate::spectral::derivative1;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Periodic profile of the zeta axis, sampled at grid nodes, with its
/// spectral derivative.
#[derive(Debug, Clone)]
pub struct AxisProfile {
    values: Vec<f64>,
    deriv: Vec<f64>,
}

impl AxisProfile {
    pub fn from_fn(grid: Grid3, f: impl Fn(f64) -> f64) -> Self {
        let n = grid.n()[0];
        let period = grid.period()[0];
        let values: Vec<f64> = (0..n).map(|k| f(k as f64 * period / n as f64)).collect();
        let deriv = derivative1(&values, period);
        AxisProfile { values, deriv }
    }

    pub fn from_samples(grid: Grid3, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n()[0] {
            return Err(Error::Shape(format!(
                "profile has {} samples, axis has {} nodes",
                values.len(),
                grid.n()[0]
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape("profile has non-finite samples".into()));
        }
        let deriv = derivative1(&values, grid.period()[0]);
        Ok(AxisProfile { values, deriv })
    }

    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn deriv(&self, k: usize) -> f64 {
        self.deriv[k]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Extends the profile to a 3-d scalar field constant in (theta, phi).
    pub fn as_field(&self, grid: Grid3) -> ScalarField {
        let n = grid.n();
        let values = ndarray::Array3::from_shape_fn((n[0], n[1], n[2]), |(i, _, _)| self.values[i]);
        ScalarField::from_values(grid, values).expect("valid by construction")
    }

    pub fn deriv_field(&self, grid: Grid3) -> ScalarField {
        let n = grid.n();
        let values = ndarray::Array3::from_shape_fn((n[0], n[1], n[2]), |(i, _, _)| self.deriv[i]);
        ScalarField::from_values(grid, values).expect("valid by construction")
    }
}

/// Profile on the (theta, phi) torus, sampled at slice nodes.
#[derive(Debug, Clone)]
pub struct SurfaceProfile {
    values: Array2<f64>,
}

impl SurfaceProfile {
    pub fn from_fn(grid: Grid3, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let values = Array2::from_shape_fn((n[1], n[2]), |(j, k)| {
            f(grid.coord(1, j), grid.coord(2, k))
        });
        SurfaceProfile { values }
    }

    /// Unique-peak default: f = (cos theta + cos phi)/2.
    pub fn unique_peak(grid: Grid3) -> Self {
        Self::from_fn(grid, |t, p| 0.5 * (t.cos() + p.cos()))
    }

    /// Two antipodal peaks: f = cos theta cos phi.
    pub fn two_peak(grid: Grid3) -> Self {
        Self::from_fn(grid, |t, p| t.cos() * p.cos())
    }

    pub fn at(&self, j: usize, k: usize) -> f64 {
        self.values[(j, k)]
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BundleKind {
    #[serde(rename = "example-6.4")]
    FamilyT3,
    #[serde(rename = "example-6.5")]
    KillingT3,
}

impl BundleKind {
    pub fn name(&self) -> &'static str {
        match self {
            BundleKind::FamilyT3 => "example-6.4",
            BundleKind::KillingT3 => "example-6.5",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BundleParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iota0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

/// A complete equilibrium bundle: metric, field, 1-form, volume form,
/// pressure, and (when available in closed form) the companion field.
#[derive(Debug)]
pub struct ExampleBundle {
    pub kind: BundleKind,
    pub grid: Grid3,
    pub g: MetricField,
    pub x: VectorField,
    pub alpha: KForm,
    pub mu: VolumeForm,
    pub p: ScalarField,
    pub y_closed_form: VectorField,
    pub params: BundleParams,
    profiles: BundleProfiles,
}

#[derive(Debug, Clone)]
enum BundleProfiles {
    Family,
    Killing { b: AxisProfile, f: SurfaceProfile },
}

impl ExampleBundle {
    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn guided_flow(&self, tol: Option<f64>) -> Result<GuidedFlow> {
        validate_guided_flow(&self.x, &self.alpha, &self.mu, &self.p, tol)
    }

    /// Serializes the fields plus a `bundle.json` naming the family and
    /// parameters.
    pub fn write_archive(&self, dir: &Path) -> Result<()> {
        let mut fb = FieldBundle::new(self.grid);
        fb.insert("g", FieldEntry::Metric(self.g.clone()));
        fb.insert("X", FieldEntry::Vector(self.x.clone()));
        fb.insert("alpha", FieldEntry::Form(self.alpha.clone()));
        fb.insert("mu", FieldEntry::Form(self.mu.as_kform()));
        fb.insert("p", FieldEntry::Scalar(self.p.clone()));
        fb.insert("Y_closed", FieldEntry::Vector(self.y_closed_form.clone()));
        field_io_write(dir, &fb)?;
        #[derive(Serialize)]
        struct BundleMeta<'a> {
            name: &'a str,
            parameters: &'a BundleParams,
            roles: std::collections::BTreeMap<&'a str, &'a str>,
        }
        let roles = [
            ("metric", "g"),
            ("field", "X"),
            ("one_form", "alpha"),
            ("volume", "mu"),
            ("pressure", "p"),
            ("companion_closed_form", "Y_closed"),
        ]
        .into_iter()
        .collect();
        let meta = BundleMeta {
            name: self.name(),
            parameters: &self.params,
            roles,
        };
        write_atomic(
            &dir.join("bundle.json"),
            serde_json::to_string_pretty(&meta)?.as_bytes(),
        )?;
        Ok(())
    }
}

/// Flat-torus shear family: X = a(z) dt + b(z) dp, p = (a^2 + b^2)/2 on the
/// identity metric.
pub fn example_family_t3(grid: Grid3, a: &AxisProfile, b: &AxisProfile) -> ExampleBundle {
    let af = a.as_field(grid);
    let bf = b.as_field(grid);
    let daf = a.deriv_field(grid);
    let dbf = b.deriv_field(grid);

    let g = MetricField::identity(grid);
    let zero = ScalarField::constant(grid, 0.0);
    let x = vector_from_scalars(&zero, &af, &bf);
    let alpha = KForm::from_components(
        grid,
        1,
        vec![
            zero.values().clone(),
            af.values().clone(),
            bf.values().clone(),
        ],
    )
    .expect("valid by construction");
    let mu = VolumeForm::coordinate(grid);
    let p = af.mul(&af).add(&bf.mul(&bf)).scaled(0.5);

    // Y = ((a a' + b b')/(a^2 + b^2)) (b dt - a dp)
    let denom = af.mul(&af).add(&bf.mul(&bf));
    let coef = af
        .mul(&daf)
        .add(&bf.mul(&dbf))
        .zip(&denom, |num, den| num / den);
    let y = vector_from_scalars(&zero, &coef.mul(&bf), &coef.mul(&af).scaled(-1.0));

    ExampleBundle {
        kind: BundleKind::FamilyT3,
        grid,
        g,
        x,
        alpha,
        mu,
        p,
        y_closed_form: y,
        params: BundleParams {
            iota0: None,
            epsilon: None,
        },
        profiles: BundleProfiles::Family,
    }
}

/// Sheared-metric family with the adapted metric g_eps. Requires b > 0,
/// iota0 != 0, and eps small enough that 1 - eps (iota0 + 1/iota0) f stays
/// positive (checked by grid scan).
pub fn example_killing_t3(
    grid: Grid3,
    b: &AxisProfile,
    iota0: f64,
    eps: f64,
    f: &SurfaceProfile,
) -> Result<ExampleBundle> {
    if !(iota0 != 0.0 && iota0.is_finite()) {
        return Err(Error::Parameter("iota0 must be nonzero".into()));
    }
    if b.min() <= 0.0 {
        return Err(Error::Parameter(format!(
            "profile b must be positive; min = {:.6e}",
            b.min()
        )));
    }
    let chi = iota0 + 1.0 / iota0;
    let n = grid.n();
    let mut min_factor = f64::INFINITY;
    for j in 0..n[1] {
        for k in 0..n[2] {
            min_factor = min_factor.min(1.0 - eps * chi * f.at(j, k));
        }
    }
    if min_factor <= 0.0 {
        return Err(Error::Parameter(format!(
            "1 - eps (iota0 + 1/iota0) f reaches {min_factor:.6e}; shrink |eps|"
        )));
    }

    let bf = b.as_field(grid);
    let dbf = b.deriv_field(grid);
    let zero = ScalarField::constant(grid, 0.0);

    let g = MetricField::from_fn(grid, |c| {
        let fj = sample_surface(f, grid, c);
        let factor = 1.0 - eps * chi * fj;
        [
            1.0 / factor,
            0.0,
            0.0,
            1.0 - iota0 * eps * fj,
            eps * fj,
            1.0 - eps * fj / iota0,
        ]
    })?;

    let x = vector_from_scalars(&zero, &bf, &bf.scaled(iota0));
    let alpha = KForm::from_components(
        grid,
        1,
        vec![
            zero.values().clone(),
            bf.values().clone(),
            bf.scaled(iota0).values().clone(),
        ],
    )
    .expect("valid by construction");
    let mu = VolumeForm::coordinate(grid);
    let p = bf.mul(&bf).scaled(0.5 * (1.0 + iota0 * iota0));
    let y = vector_from_scalars(&zero, &dbf.scaled(iota0), &dbf.scaled(-1.0));

    Ok(ExampleBundle {
        kind: BundleKind::KillingT3,
        grid,
        g,
        x,
        alpha,
        mu,
        p,
        y_closed_form: y,
        params: BundleParams {
            iota0: Some(iota0),
            epsilon: Some(eps),
        },
        profiles: BundleProfiles::Killing {
            b: b.clone(),
            f: f.clone(),
        },
    })
}

fn sample_surface(f: &SurfaceProfile, grid: Grid3, coords: [f64; 3]) -> f64 {
    let j = grid.nearest_node(1, coords[1]);
    let k = grid.nearest_node(2, coords[2]);
    f.at(j, k)
}

fn vector_from_scalars(z: &ScalarField, t: &ScalarField, p: &ScalarField) -> VectorField {
    VectorField::from_components(
        z.grid(),
        [
            z.values().clone(),
            t.values().clone(),
            p.values().clone(),
        ],
    )
    .expect("valid by construction")
}

/// Default parameters: b = 2 + sin z, iota0 = 1, eps = 0.05,
/// f = (cos theta + cos phi)/2.
pub fn default_killing_t3(grid: Grid3) -> Result<ExampleBundle> {
    let b = AxisProfile::from_fn(grid, |z| 2.0 + z.sin());
    let f = SurfaceProfile::unique_peak(grid);
    example_killing_t3(grid, &b, 1.0, 0.05, &f)
}

/// Default shear family: a = 2 + sin z, b = cos z.
pub fn default_family_t3(grid: Grid3) -> ExampleBundle {
    let a = AxisProfile::from_fn(grid, |z| 2.0 + z.sin());
    let b = AxisProfile::from_fn(grid, |z| z.cos());
    example_family_t3(grid, &a, &b)
}

/// Analytic reference fields for the sheared-metric family.
#[derive(Debug)]
pub struct ReferenceValues {
    /// g_eps(Y, Y) as a 3-d field.
    pub y_norm2: ScalarField,
    /// [d_zeta, X] = b' (dt + iota0 dp).
    pub commutator_dzeta_x: VectorField,
    /// d_zeta(p) = (1 + iota0^2) b b'.
    pub dzeta_p: ScalarField,
}

/// Evaluates the closed-form reference fields; KindError for any bundle
/// that is not the sheared-metric family.
pub fn reference_values(bundle: &ExampleBundle) -> Result<ReferenceValues> {
    let (b, f) = match &bundle.profiles {
        BundleProfiles::Killing { b, f } => (b, f),
        _ => {
            return Err(Error::Kind(format!(
                "reference values are defined for example-6.5 bundles, not {}",
                bundle.name()
            )))
        }
    };
    let grid = bundle.grid;
    let iota0 = bundle.params.iota0.expect("killing bundle has iota0");
    let eps = bundle.params.epsilon.expect("killing bundle has epsilon");
    let chi = iota0 + 1.0 / iota0;
    let dbf = b.deriv_field(grid);
    let bf = b.as_field(grid);

    let n = grid.n();
    let y_norm2 = ScalarField::from_values(
        grid,
        ndarray::Array3::from_shape_fn((n[0], n[1], n[2]), |(i, j, k)| {
            let db = dbf.at([i, j, k]);
            db * db * (1.0 + iota0 * iota0) * (1.0 - eps * chi * f.at(j, k))
        }),
    )?;
    let zero = ScalarField::constant(grid, 0.0);
    let commutator_dzeta_x = vector_from_scalars(&zero, &dbf, &dbf.scaled(iota0));
    let dzeta_p = bf.mul(&dbf).scaled(1.0 + iota0 * iota0);
    Ok(ReferenceValues {
        y_norm2,
        commutator_dzeta_x,
        dzeta_p,
    })
}
