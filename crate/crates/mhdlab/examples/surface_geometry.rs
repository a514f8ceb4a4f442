//! Geometry on pressure level tori: the commuting frame with its closed
//! co-frame, the induced metric decomposition h = E omega^2 + G eta^2,
//! scalar curvature with the Gauss-Bonnet check, and the weighted-harmonic
//! residuals of the pulled-back field form.
//!
//!   cargo run --example surface_geometry

use mhdlab::bundles::default_killing_t3;
use mhdlab::grid::Grid3;
use mhdlab::surface::{
    extract_slice, gauss_bonnet_integral, induced_frame_metric, p_harmonic_check,
    scalar_curvature_2d,
};

fn main() -> mhdlab::Result<()> {
    let grid = Grid3::cubic(32)?;
    let bundle = default_killing_t3(grid)?;
    let gf = bundle.guided_flow(None)?;

    for zeta0 in [0.0, 0.4, 3.5] {
        let s = extract_slice(&bundle.g, &bundle.p, zeta0, 1e-8)?;
        let frame = induced_frame_metric(&s, &gf, &bundle.g)?;
        let sc = scalar_curvature_2d(&s)?;
        let (s_min, s_max) = sc
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let (closed, co) = p_harmonic_check(&s, &bundle.g, &bundle.x, &bundle.p)?;
        println!(
            "slice z = {:.4} (p = {:.4}):\n  \
             frame residuals: duality {:.1e}, d(co-frame) {:.1e}, h-reconstruction {:.1e}\n  \
             scalar curvature in [{s_min:+.3e}, {s_max:+.3e}], total {:.1e}\n  \
             field form: d omega {:.1e}, delta(P omega) {:.1e}",
            s.zeta0(),
            s.level(),
            frame.duality_residual,
            frame.closure_omega.max(frame.closure_eta),
            frame.reconstruction_residual,
            gauss_bonnet_integral(&s)?,
            closed,
            co,
        );
    }
    Ok(())
}
