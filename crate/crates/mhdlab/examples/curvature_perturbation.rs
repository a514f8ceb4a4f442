//! The curvature response to a quadratic conformal profile: on an
//! orthogonal chart metric E du^2 + G dv^2, scaling G by
//! rho = 1 + c u^2 near the origin shifts the scalar curvature there by
//! -2c/(E G)|_0 once the chart is normalized so G(0) = 1 (the general
//! shift is -2c/E|_0).
//!
//!   cargo run --example curvature_perturbation

use mhdlab::chart::{chart_quadratic_profile, scalar_curvature_orthogonal, ChartField, ChartGrid};
use std::f64::consts::TAU;

fn main() -> mhdlab::Result<()> {
    let grid = ChartGrid::new([512, 512], [TAU, TAU])?;
    let e = ChartField::from_fn(grid, |u, v| 1.7 + 0.2 * u.cos() * v.sin());
    // G(0) = 1 so that both forms of the shift agree
    let g = ChartField::from_fn(grid, |u, v| 1.0 + 0.3 * ((u + v).sin() - u.sin() - v.sin()));
    let s0 = scalar_curvature_orthogonal(&e, &g)?;

    for c in [-0.01, -0.001, 0.005] {
        let rho = chart_quadratic_profile(grid, c, 2.0)?;
        let s1 = scalar_curvature_orthogonal(&e, &g.mul(&rho))?;
        let measured = s1.at_origin() - s0.at_origin();
        let predicted = -2.0 * c / (e.at_origin() * g.at_origin());
        println!(
            "c = {c:+.4}: measured shift {measured:+.8e}, predicted {predicted:+.8e}, rel err {:.2e}",
            (measured - predicted).abs() / predicted.abs()
        );
    }
    Ok(())
}
