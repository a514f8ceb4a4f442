//! mhdlab: a numerical laboratory for ideal MHD equilibria and adapted
//! metrics on the flat-topology 3-torus.
//!
//! All fields live on uniform periodic grids ([`Grid3`], axis order
//! zeta/theta/phi) and are differentiated spectrally, so every identity that
//! holds for resolved trigonometric data holds here to machine precision.
//! The pieces:
//!
//! * [`grid`], [`field`], [`spectral`], [`linalg`], [`archive`]: grids,
//!   field containers, Fourier differentiation, pointwise 3x3 solves, and
//!   the on-disk field-archive format.
//! * [`exterior`]: the metric-intrinsic calculus: d, wedge, interior
//!   product, flat/sharp, volume forms, and curl/div/cross defined through
//!   `i_curl X mu = d(i_X g)` and `i_{X x Y} g = i_Y i_X mu`.
//! * [`mhd`]: equilibrium residuals (convention `curl X x X + grad p = 0`,
//!   `div X = 0`), Beltrami proportionality factors, guided-flow validation,
//!   companion fields, and quasi-symmetry residuals.
//! * [`adapted`]: membership tests for metrics adapted to `(X, alpha, mu)`
//!   and the frame-based perturbation `g^rho` that stays inside that class.
//! * [`surface`] and [`chart`]: coordinate 2-torus slices, the commuting
//!   frame and closed co-frame on them, induced metrics, Gauss/Brioschi
//!   scalar curvature, weighted-harmonic residuals, and periodic charts
//!   built from the commuting flows.
//! * [`killing`]: Killing-equation residuals, symmetry reports, the
//!   N-functional on slices, and the unique-peak genericity certificate for
//!   symmetry breaking.
//! * [`bundles`]: constructors for the two built-in closed-form equilibrium
//!   families (`example-6.4`, `example-6.5`) and their reference values.
//! * [`report`], [`cli`]: JSON report schema and the batch front-end used
//!   by the `mhdlab` binary (subcommands `verify`, `perturb`, `certify`,
//!   `reproduce`).
//!
//! Runnable walkthroughs for each capability live in this crate's
//! `examples/` directory.

pub mod adapted;
pub mod archive;
pub mod bundles;
pub mod chart;
pub mod cli;
pub mod error;
pub mod exterior;
pub mod field;
pub mod grid;
pub mod killing;
pub mod linalg;
pub mod mhd;
pub mod report;
pub mod spectral;
pub mod surface;

pub use error::{Error, Result};
pub use field::{KForm, MetricField, ScalarField, SymTensorField, VectorField};
pub use grid::Grid3;
