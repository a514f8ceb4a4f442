//! Beltrami proportionality factors and quasi-symmetry residuals: a curl
//! eigenfield with unit factor, a sheared field that is not Beltrami, and
//! the three quasi-symmetry conditions for candidate symmetry fields.
//!
//!   cargo run --example beltrami_and_quasisymmetry

use mhdlab::bundles::default_killing_t3;
use mhdlab::exterior::volume_form;
use mhdlab::field::{MetricField, VectorField};
use mhdlab::grid::Grid3;
use mhdlab::mhd::{beltrami_factor, quasisymmetry_residual};

fn main() -> mhdlab::Result<()> {
    let grid = Grid3::cubic(32)?;
    let g = MetricField::identity(grid);
    let mu = volume_form(&g);

    // curl eigenfield: curl X = X
    let (a, b, c) = (1.0, 0.3, 0.2);
    let eigen = VectorField::from_fn(grid, |q| {
        [
            a * q[2].sin() + c * q[1].cos(),
            b * q[0].sin() + a * q[2].cos(),
            c * q[1].sin() + b * q[0].cos(),
        ]
    });
    let bf = beltrami_factor(&g, &eigen, &mu)?;
    println!(
        "curl eigenfield: lambda in [{:.12}, {:.12}], colinearity {:.2e}, d lambda(X) {:.2e}",
        bf.lambda.min(),
        bf.lambda.max(),
        bf.colinearity_residual,
        bf.first_integral_residual
    );

    // the sheared family with nonconstant profile is nowhere near Beltrami
    let bundle = default_killing_t3(grid)?;
    let bf = beltrami_factor(&bundle.g, &bundle.x, &bundle.mu)?;
    println!(
        "sheared family: colinearity residual {:.3} (pressure-driven, not Beltrami)",
        bf.colinearity_residual
    );

    // quasi-symmetry: the field itself is a symmetry when its coefficients
    // freeze, while z-translation fails on the nonconstant profile
    let qs_z = quasisymmetry_residual(
        &bundle.g,
        &bundle.x,
        &bundle.mu,
        &VectorField::from_fn(grid, |_| [1.0, 0.0, 0.0]),
    )?;
    println!(
        "z-translation quasi-symmetry residuals: |L_u alpha(X)| {:.3e}, |L_u i_X mu| {:.3e}, |L_u alpha| {:.3e}",
        qs_z.field_strength, qs_z.flux, qs_z.one_form
    );
    Ok(())
}
