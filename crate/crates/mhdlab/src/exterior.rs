//! Metric-intrinsic vector calculus on T^3: exterior derivative, wedge,
//! interior product, musical isomorphisms, volume forms, and the curl /
//! divergence / cross operators defined through the volume form,
//!
//!   i_{curl X} mu = d(i_X g),        i_{X x Y} g = i_Y i_X mu.
//!
//! curl is defined only through this volume-form inversion (never through
//! Christoffel symbols) so that an externally supplied mu different from
//! mu_g stays representable.

use crate::error::{Error, Result};
use crate::field::{KForm, MetricField, ScalarField, VectorField};
use crate::grid::Grid3;
use crate::linalg::{pointwise_solve3, Matrix3Field};
use ndarray::Array3;

/// Positively oriented volume form mu = m(x) dz^dt^dp with m > 0 everywhere.
/// `external` records whether mu was supplied independently of a metric.
#[derive(Debug, Clone)]
pub struct VolumeForm {
    grid: Grid3,
    density: Array3<f64>,
    external: bool,
}

impl VolumeForm {
    pub fn coordinate(grid: Grid3) -> Self {
        let n = grid.n();
        VolumeForm {
            grid,
            density: Array3::ones((n[0], n[1], n[2])),
            external: true,
        }
    }

    /// Externally supplied density; must be strictly positive.
    pub fn from_density(density: ScalarField) -> Result<Self> {
        if density.min() <= 0.0 {
            return Err(Error::Positivity(format!(
                "volume form density must be positive, min = {:.3e}",
                density.min()
            )));
        }
        Ok(VolumeForm {
            grid: density.grid(),
            density: density.values().clone(),
            external: true,
        })
    }

    pub fn grid(&self) -> Grid3 {
        self.grid
    }

    pub fn density(&self) -> &Array3<f64> {
        &self.density
    }

    pub fn density_field(&self) -> ScalarField {
        ScalarField::from_values(self.grid, self.density.clone()).expect("valid by construction")
    }

    pub fn is_external(&self) -> bool {
        self.external
    }

    pub fn as_kform(&self) -> KForm {
        KForm::from_components(self.grid, 3, vec![self.density.clone()])
            .expect("valid by construction")
    }

    /// Max-abs difference of densities.
    pub fn residual_against(&self, other: &VolumeForm) -> f64 {
        assert_eq!(
            self.density.dim(),
            other.density.dim(),
            "volume forms live on different grids"
        );
        let mut worst = 0.0_f64;
        for (a, b) in self.density.iter().zip(other.density.iter()) {
            worst = worst.max((a - b).abs());
        }
        worst
    }
}

/// Riemannian volume form sqrt(det g) dz^dt^dp.
pub fn volume_form(g: &MetricField) -> VolumeForm {
    let det = g.det_field();
    VolumeForm {
        grid: g.grid(),
        density: det.values().mapv(f64::sqrt),
        external: false,
    }
}

/// Exterior derivative; rejects degree-3 input.
pub fn exterior_derivative(w: &KForm) -> Result<KForm> {
    let grid = w.grid();
    let p = grid.period();
    let d = |a: &Array3<f64>, axis: usize| crate::spectral::derivative3(a, axis, p[axis]);
    match w.degree() {
        0 => {
            let f = w.comp(0);
            KForm::from_components(grid, 1, vec![d(f, 0), d(f, 1), d(f, 2)])
        }
        1 => {
            // (dz^dt, dz^dp, dt^dp)
            let zt = d(w.comp(1), 0) - d(w.comp(0), 1);
            let zp = d(w.comp(2), 0) - d(w.comp(0), 2);
            let tp = d(w.comp(2), 1) - d(w.comp(1), 2);
            KForm::from_components(grid, 2, vec![zt, zp, tp])
        }
        2 => {
            let top = d(w.comp(2), 0) - d(w.comp(1), 1) + d(w.comp(0), 2);
            KForm::from_components(grid, 3, vec![top])
        }
        _ => Err(Error::Degree(
            "exterior derivative of a 3-form on a 3-manifold".into(),
        )),
    }
}

/// d of a scalar field.
pub fn d_scalar(f: &ScalarField) -> KForm {
    KForm::from_components(
        f.grid(),
        1,
        vec![
            f.partial_derivative(0).values().clone(),
            f.partial_derivative(1).values().clone(),
            f.partial_derivative(2).values().clone(),
        ],
    )
    .expect("valid by construction")
}

/// Graded wedge product; degrees must sum to at most 3.
pub fn wedge(a: &KForm, b: &KForm) -> Result<KForm> {
    let grid = a.grid();
    let (ka, kb) = (a.degree(), b.degree());
    if ka as usize + kb as usize > 3 {
        return Err(Error::Degree(format!(
            "wedge of degrees {ka} and {kb} exceeds the manifold dimension"
        )));
    }
    match (ka, kb) {
        (0, _) => Ok(b.map_comps(|_, arr| arr * a.comp(0))),
        (_, 0) => Ok(a.map_comps(|_, arr| arr * b.comp(0))),
        (1, 1) => {
            let zt = a.comp(0) * b.comp(1) - a.comp(1) * b.comp(0);
            let zp = a.comp(0) * b.comp(2) - a.comp(2) * b.comp(0);
            let tp = a.comp(1) * b.comp(2) - a.comp(2) * b.comp(1);
            KForm::from_components(grid, 2, vec![zt, zp, tp])
        }
        (1, 2) => {
            let top = a.comp(0) * b.comp(2) - a.comp(1) * b.comp(1) + a.comp(2) * b.comp(0);
            KForm::from_components(grid, 3, vec![top])
        }
        // 2-forms commute with 1-forms
        (2, 1) => wedge(b, a),
        _ => unreachable!("degree sum checked above"),
    }
}

/// Interior product (contraction on the first slot); rejects 0-forms.
pub fn interior_product(x: &VectorField, w: &KForm) -> Result<KForm> {
    let grid = w.grid();
    match w.degree() {
        0 => Err(Error::Degree("interior product with a 0-form".into())),
        1 => {
            let f = w.comp(0) * x.comp(0) + w.comp(1) * x.comp(1) + w.comp(2) * x.comp(2);
            KForm::from_components(grid, 0, vec![f])
        }
        2 => {
            // w = w_zt dz^dt + w_zp dz^dp + w_tp dt^dp
            let cz = -(w.comp(0) * x.comp(1)) - w.comp(1) * x.comp(2);
            let ct = w.comp(0) * x.comp(0) - w.comp(2) * x.comp(2);
            let cp = w.comp(1) * x.comp(0) + w.comp(2) * x.comp(1);
            KForm::from_components(grid, 1, vec![cz, ct, cp])
        }
        3 => {
            let m = w.comp(0);
            let zt = m * x.comp(2);
            let zp = -(m * x.comp(1));
            let tp = m * x.comp(0);
            KForm::from_components(grid, 2, vec![zt, zp, tp])
        }
        _ => Err(Error::Degree("degree out of range".into())),
    }
}

/// i_X mu for a volume form.
pub fn interior_volume(x: &VectorField, mu: &VolumeForm) -> KForm {
    interior_product(x, &mu.as_kform()).expect("degree 3 accepts interior product")
}

/// Index lowering: the 1-form i_X g.
pub fn flat(g: &MetricField, x: &VectorField) -> KForm {
    let comps = (0..3)
        .map(|i| {
            let mut acc: Option<Array3<f64>> = None;
            for j in 0..3 {
                let slot = sym_slot(i, j);
                let term = g.comp(slot) * x.comp(j);
                acc = Some(match acc {
                    None => term,
                    Some(a) => a + term,
                });
            }
            acc.unwrap()
        })
        .collect();
    KForm::from_components(g.grid(), 1, comps).expect("valid by construction")
}

fn sym_slot(i: usize, j: usize) -> usize {
    match (i.min(j), i.max(j)) {
        (0, 0) => 0,
        (0, 1) => 1,
        (0, 2) => 2,
        (1, 1) => 3,
        (1, 2) => 4,
        (2, 2) => 5,
        _ => unreachable!(),
    }
}

/// Index raising: the vector field with i_V g = w.
pub fn sharp(g: &MetricField, w: &KForm) -> Result<VectorField> {
    if w.degree() != 1 {
        return Err(Error::Degree("sharp expects a 1-form".into()));
    }
    let mut comps: Vec<Array3<f64>> = Vec::with_capacity(9);
    for r in 0..3 {
        for c in 0..3 {
            comps.push(g.comp(sym_slot(r, c)).clone());
        }
    }
    let m = Matrix3Field::from_components(g.grid(), comps)?;
    let rhs = VectorField::from_components(
        g.grid(),
        [w.comp(0).clone(), w.comp(1).clone(), w.comp(2).clone()],
    )?;
    pointwise_solve3(&m, &rhs)
}

/// Unique W with i_W mu = d(i_X g).
pub fn curl(g: &MetricField, x: &VectorField, mu: &VolumeForm) -> Result<VectorField> {
    let alpha = flat(g, x);
    let da = exterior_derivative(&alpha)?;
    invert_interior_volume(&da, mu)
}

/// Unique V with i_V mu = w for a 2-form w.
pub fn invert_interior_volume(w: &KForm, mu: &VolumeForm) -> Result<VectorField> {
    if w.degree() != 2 {
        return Err(Error::Degree("expected a 2-form".into()));
    }
    let m = mu.density();
    // i_V mu components (zt, zp, tp) = m (V^p, -V^t, V^z)
    let vz = w.comp(2) / m;
    let vt = -(w.comp(1) / m);
    let vp = w.comp(0) / m;
    VectorField::from_components(w.grid(), [vz, vt, vp])
}

/// Scalar s with s mu = d(i_X mu), i.e. the divergence of X for mu.
pub fn divergence(mu: &VolumeForm, x: &VectorField) -> Result<ScalarField> {
    let ixmu = interior_volume(x, mu);
    let top = exterior_derivative(&ixmu)?;
    let s = top.comp(0) / mu.density();
    ScalarField::from_values(x.grid(), s)
}

/// Cross product through i_{X x Y} g = i_Y i_X mu.
pub fn cross(
    g: &MetricField,
    x: &VectorField,
    y: &VectorField,
    mu: &VolumeForm,
) -> Result<VectorField> {
    let ixmu = interior_volume(x, mu);
    let one = interior_product(y, &ixmu)?;
    sharp(g, &one)
}

/// Gradient: the vector field with i_{grad p} g = dp.
pub fn gradient(g: &MetricField, p: &ScalarField) -> Result<VectorField> {
    sharp(g, &d_scalar(p))
}

/// Directional derivative u(f) of a scalar field.
pub fn directional_derivative(u: &VectorField, f: &ScalarField) -> ScalarField {
    let df = d_scalar(f);
    let c = interior_product(u, &df).expect("1-form accepts interior product");
    ScalarField::from_values(f.grid(), c.comp(0).clone()).expect("valid by construction")
}

/// Lie derivative of a k-form along u via the Cartan formula
/// L_u w = i_u dw + d i_u w (with the degree-degenerate terms dropped).
pub fn lie_derivative_form(u: &VectorField, w: &KForm) -> Result<KForm> {
    match w.degree() {
        0 => {
            let s = directional_derivative(
                u,
                &ScalarField::from_values(w.grid(), w.comp(0).clone())?,
            );
            KForm::from_components(w.grid(), 0, vec![s.values().clone()])
        }
        3 => exterior_derivative(&interior_product(u, w)?),
        _ => {
            let a = interior_product(u, &exterior_derivative(w)?)?;
            let b = exterior_derivative(&interior_product(u, w)?)?;
            a.add(&b)
        }
    }
}
