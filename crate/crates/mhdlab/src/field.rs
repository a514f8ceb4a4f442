//! Field containers over a [`Grid3`]: scalars, (contravariant) vector fields,
//! differential forms, and symmetric metric tensors, all stored as node
//! arrays in axis order (zeta, theta, phi).

use crate::error::{Error, Result};
use crate::grid::Grid3;
use crate::spectral;
use ndarray::Array3;

/// Number of independent components of a k-form on a 3-manifold.
pub fn form_components(degree: u8) -> usize {
    match degree {
        0 | 3 => 1,
        1 | 2 => 3,
        _ => 0,
    }
}

/// Component order of the six independent entries of a symmetric 3x3 tensor:
/// (zz, zt, zp, tt, tp, pp) with z = zeta, t = theta, p = phi.
pub const SYM_INDEX: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

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

fn check_shape(grid: &Grid3, values: &Array3<f64>, what: &str) -> Result<()> {
    let n = grid.n();
    if values.dim() != (n[0], n[1], n[2]) {
        return Err(Error::Shape(format!(
            "{} has shape {:?}, grid expects {:?}",
            what,
            values.dim(),
            n
        )));
    }
    Ok(())
}

fn check_finite(values: &Array3<f64>, what: &str) -> Result<()> {
    if let Some((idx, v)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::Shape(format!(
            "{} has non-finite value {} at node {:?}",
            what, v, idx
        )));
    }
    Ok(())
}

fn max_abs_of(values: &Array3<f64>) -> f64 {
    values.iter().fold(0.0_f64, |m, &v| m.max(v.abs()))
}

// ---------------------------------------------------------------------------
// Scalar fields
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Grid3,
    values: Array3<f64>,
}

impl ScalarField {
    pub fn from_fn(grid: Grid3, f: impl Fn([f64; 3]) -> f64) -> Self {
        let n = grid.n();
        let values =
            Array3::from_shape_fn((n[0], n[1], n[2]), |(i, j, k)| f(grid.coords([i, j, k])));
        ScalarField { grid, values }
    }

    pub fn constant(grid: Grid3, c: f64) -> Self {
        let n = grid.n();
        ScalarField {
            grid,
            values: Array3::from_elem((n[0], n[1], n[2]), c),
        }
    }

    pub fn from_values(grid: Grid3, values: Array3<f64>) -> Result<Self> {
        check_shape(&grid, &values, "scalar field")?;
        check_finite(&values, "scalar field")?;
        Ok(ScalarField { grid, values })
    }

    pub fn grid(&self) -> Grid3 {
        self.grid
    }

    pub fn values(&self) -> &Array3<f64> {
        &self.values
    }

    pub fn at(&self, idx: [usize; 3]) -> f64 {
        self.values[(idx[0], idx[1], idx[2])]
    }

    /// Periodic spectral derivative along `axis`.
    pub fn partial_derivative(&self, axis: usize) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: spectral::derivative3(&self.values, axis, self.grid.period()[axis]),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.mapv(&f),
        }
    }

    pub fn zip(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        let mut values = self.values.clone();
        values.zip_mut_with(&other.values, |a, &b| *a = f(*a, b));
        ScalarField {
            grid: self.grid,
            values,
        }
    }

    pub fn add(&self, other: &ScalarField) -> ScalarField {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        self.zip(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &ScalarField) -> ScalarField {
        self.zip(other, |a, b| a * b)
    }

    pub fn scaled(&self, s: f64) -> ScalarField {
        self.map(|v| s * v)
    }

    pub fn max_abs(&self) -> f64 {
        max_abs_of(&self.values)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    /// Mean over all nodes (the normalized integral over T^3 for the
    /// coordinate volume form).
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.grid.node_count() as f64
    }
}

// ---------------------------------------------------------------------------
// Vector fields (contravariant components in the coordinate frame)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct VectorField {
    grid: Grid3,
    comps: [Array3<f64>; 3],
}

impl VectorField {
    pub fn from_fn(grid: Grid3, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let n = grid.n();
        let shape = (n[0], n[1], n[2]);
        let mut comps = [
            Array3::zeros(shape),
            Array3::zeros(shape),
            Array3::zeros(shape),
        ];
        for i in 0..n[0] {
            for j in 0..n[1] {
                for k in 0..n[2] {
                    let v = f(grid.coords([i, j, k]));
                    for (c, arr) in comps.iter_mut().enumerate() {
                        arr[(i, j, k)] = v[c];
                    }
                }
            }
        }
        VectorField { grid, comps }
    }

    pub fn zero(grid: Grid3) -> Self {
        Self::from_fn(grid, |_| [0.0; 3])
    }

    pub fn from_components(grid: Grid3, comps: [Array3<f64>; 3]) -> Result<Self> {
        for (c, arr) in comps.iter().enumerate() {
            check_shape(&grid, arr, &format!("vector component {c}"))?;
            check_finite(arr, &format!("vector component {c}"))?;
        }
        Ok(VectorField { grid, comps })
    }

    pub fn grid(&self) -> Grid3 {
        self.grid
    }

    pub fn comp(&self, c: usize) -> &Array3<f64> {
        &self.comps[c]
    }

    pub fn at(&self, idx: [usize; 3]) -> [f64; 3] {
        let t = (idx[0], idx[1], idx[2]);
        [self.comps[0][t], self.comps[1][t], self.comps[2][t]]
    }

    pub fn map_comps(&self, f: impl Fn(usize, &Array3<f64>) -> Array3<f64>) -> VectorField {
        VectorField {
            grid: self.grid,
            comps: [
                f(0, &self.comps[0]),
                f(1, &self.comps[1]),
                f(2, &self.comps[2]),
            ],
        }
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        self.map_comps(|c, a| a + &other.comps[c])
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        self.map_comps(|c, a| a - &other.comps[c])
    }

    pub fn scaled(&self, s: f64) -> VectorField {
        self.map_comps(|_, a| a.mapv(|v| s * v))
    }

    pub fn scaled_by(&self, s: &ScalarField) -> VectorField {
        self.map_comps(|_, a| a * s.values())
    }

    /// Max over nodes and components of the absolute component value.
    pub fn max_abs(&self) -> f64 {
        self.comps.iter().map(max_abs_of).fold(0.0, f64::max)
    }
}

// ---------------------------------------------------------------------------
// Differential forms
// ---------------------------------------------------------------------------

/// Differential k-form, k in 0..=3, components in the coordinate co-frame.
/// Degree 1 order: (dz, dt, dp). Degree 2 order, lexicographic:
/// (dz^dt, dz^dp, dt^dp). Degree 3: coefficient of dz^dt^dp.
#[derive(Debug, Clone)]
pub struct KForm {
    grid: Grid3,
    degree: u8,
    comps: Vec<Array3<f64>>,
}

impl KForm {
    pub fn zero(grid: Grid3, degree: u8) -> Result<Self> {
        if degree > 3 {
            return Err(Error::Degree(format!("degree {degree} out of range 0..=3")));
        }
        let n = grid.n();
        let comps = (0..form_components(degree))
            .map(|_| Array3::zeros((n[0], n[1], n[2])))
            .collect();
        Ok(KForm { grid, degree, comps })
    }

    pub fn from_components(grid: Grid3, degree: u8, comps: Vec<Array3<f64>>) -> Result<Self> {
        if degree > 3 {
            return Err(Error::Degree(format!("degree {degree} out of range 0..=3")));
        }
        if comps.len() != form_components(degree) {
            return Err(Error::Shape(format!(
                "degree-{} form needs {} component arrays, got {}",
                degree,
                form_components(degree),
                comps.len()
            )));
        }
        for (c, arr) in comps.iter().enumerate() {
            check_shape(&grid, arr, &format!("form component {c}"))?;
            check_finite(arr, &format!("form component {c}"))?;
        }
        Ok(KForm { grid, degree, comps })
    }

    /// 1-form from a coefficient function returning (dz, dt, dp) components.
    pub fn one_form_fn(grid: Grid3, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let v = VectorField::from_fn(grid, f);
        KForm {
            grid,
            degree: 1,
            comps: v.comps.to_vec(),
        }
    }

    pub fn grid(&self) -> Grid3 {
        self.grid
    }

    pub fn degree(&self) -> u8 {
        self.degree
    }

    pub fn comp(&self, c: usize) -> &Array3<f64> {
        &self.comps[c]
    }

    pub fn comps(&self) -> &[Array3<f64>] {
        &self.comps
    }

    pub fn comp_at(&self, c: usize, idx: [usize; 3]) -> f64 {
        self.comps[c][(idx[0], idx[1], idx[2])]
    }

    pub fn map_comps(&self, f: impl Fn(usize, &Array3<f64>) -> Array3<f64>) -> KForm {
        KForm {
            grid: self.grid,
            degree: self.degree,
            comps: self
                .comps
                .iter()
                .enumerate()
                .map(|(c, a)| f(c, a))
                .collect(),
        }
    }

    pub fn add(&self, other: &KForm) -> Result<KForm> {
        if self.degree != other.degree {
            return Err(Error::Degree("cannot add forms of different degree".into()));
        }
        Ok(self.map_comps(|c, a| a + &other.comps[c]))
    }

    pub fn sub(&self, other: &KForm) -> Result<KForm> {
        if self.degree != other.degree {
            return Err(Error::Degree(
                "cannot subtract forms of different degree".into(),
            ));
        }
        Ok(self.map_comps(|c, a| a - &other.comps[c]))
    }

    pub fn scaled(&self, s: f64) -> KForm {
        self.map_comps(|_, a| a.mapv(|v| s * v))
    }

    pub fn scaled_by(&self, s: &ScalarField) -> KForm {
        self.map_comps(|_, a| a * s.values())
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().map(max_abs_of).fold(0.0, f64::max)
    }
}

// ---------------------------------------------------------------------------
// Symmetric 2-tensors and metrics
// ---------------------------------------------------------------------------

/// Symmetric covariant 2-tensor field (not necessarily definite); stores the
/// six independent components in [`SYM_INDEX`] order.
#[derive(Debug, Clone)]
pub struct SymTensorField {
    grid: Grid3,
    comps: [Array3<f64>; 6],
}

impl SymTensorField {
    pub fn from_components(grid: Grid3, comps: [Array3<f64>; 6]) -> Self {
        for arr in &comps {
            debug_assert_eq!(arr.dim(), {
                let n = grid.n();
                (n[0], n[1], n[2])
            });
        }
        SymTensorField { grid, comps }
    }

    pub fn from_fn(grid: Grid3, f: impl Fn([f64; 3]) -> [f64; 6]) -> Self {
        let n = grid.n();
        let shape = (n[0], n[1], n[2]);
        let mut comps = [(); 6].map(|_| Array3::zeros(shape));
        for i in 0..n[0] {
            for j in 0..n[1] {
                for k in 0..n[2] {
                    let v = f(grid.coords([i, j, k]));
                    for (c, arr) in comps.iter_mut().enumerate() {
                        arr[(i, j, k)] = v[c];
                    }
                }
            }
        }
        SymTensorField { grid, comps }
    }

    pub fn grid(&self) -> Grid3 {
        self.grid
    }

    pub fn comp(&self, c: usize) -> &Array3<f64> {
        &self.comps[c]
    }

    /// Component (i, j) at a node.
    pub fn entry_at(&self, i: usize, j: usize, idx: [usize; 3]) -> f64 {
        self.comps[sym_slot(i, j)][(idx[0], idx[1], idx[2])]
    }

    pub fn at(&self, idx: [usize; 3]) -> [[f64; 3]; 3] {
        let mut m = [[0.0; 3]; 3];
        for (c, &(i, j)) in SYM_INDEX.iter().enumerate() {
            let v = self.comps[c][(idx[0], idx[1], idx[2])];
            m[i][j] = v;
            m[j][i] = v;
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().map(max_abs_of).fold(0.0, f64::max)
    }
}

/// Riemannian metric on the grid: symmetric and positive definite at every
/// node (checked on construction via the Sylvester criterion).
#[derive(Debug, Clone)]
pub struct MetricField {
    sym: SymTensorField,
}

impl MetricField {
    pub fn identity(grid: Grid3) -> Self {
        MetricField {
            sym: SymTensorField::from_fn(grid, |_| [1.0, 0.0, 0.0, 1.0, 0.0, 1.0]),
        }
    }

    /// Metric from a component function in [`SYM_INDEX`] order.
    pub fn from_fn(grid: Grid3, f: impl Fn([f64; 3]) -> [f64; 6]) -> Result<Self> {
        Self::from_sym(SymTensorField::from_fn(grid, f))
    }

    pub fn from_sym(sym: SymTensorField) -> Result<Self> {
        let g = MetricField { sym };
        g.check_positive_definite()?;
        Ok(g)
    }

    pub fn from_components(grid: Grid3, comps: [Array3<f64>; 6]) -> Result<Self> {
        for (c, arr) in comps.iter().enumerate() {
            check_shape(&grid, arr, &format!("metric component {c}"))?;
            check_finite(arr, &format!("metric component {c}"))?;
        }
        Self::from_sym(SymTensorField { grid, comps })
    }

    pub fn grid(&self) -> Grid3 {
        self.sym.grid
    }

    pub fn sym(&self) -> &SymTensorField {
        &self.sym
    }

    pub fn comp(&self, c: usize) -> &Array3<f64> {
        self.sym.comp(c)
    }

    pub fn at(&self, idx: [usize; 3]) -> [[f64; 3]; 3] {
        self.sym.at(idx)
    }

    /// Leading principal minors must all be positive at every node.
    pub fn check_positive_definite(&self) -> Result<()> {
        let n = self.grid().n();
        for i in 0..n[0] {
            for j in 0..n[1] {
                for k in 0..n[2] {
                    let m = self.sym.at([i, j, k]);
                    let m1 = m[0][0];
                    let m2 = m[0][0] * m[1][1] - m[0][1] * m[0][1];
                    let m3 = det3(&m);
                    if !(m1 > 0.0 && m2 > 0.0 && m3 > 0.0) {
                        return Err(Error::Positivity(format!(
                            "metric not positive definite at node [{i}, {j}, {k}] \
                             (minors {m1:.3e}, {m2:.3e}, {m3:.3e})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn det_field(&self) -> ScalarField {
        let n = self.grid().n();
        let values = Array3::from_shape_fn((n[0], n[1], n[2]), |(i, j, k)| {
            det3(&self.sym.at([i, j, k]))
        });
        ScalarField {
            grid: self.grid(),
            values,
        }
    }

    /// Pointwise inner product g(X, Y).
    pub fn inner(&self, x: &VectorField, y: &VectorField) -> ScalarField {
        let n = self.grid().n();
        let values = Array3::from_shape_fn((n[0], n[1], n[2]), |(i, j, k)| {
            let m = self.sym.at([i, j, k]);
            let a = x.at([i, j, k]);
            let b = y.at([i, j, k]);
            let mut s = 0.0;
            for r in 0..3 {
                for c in 0..3 {
                    s += m[r][c] * a[r] * b[c];
                }
            }
            s
        });
        ScalarField {
            grid: self.grid(),
            values,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.sym.max_abs()
    }
}

pub fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}
