//! Perturb a metric inside its adapted class with a bump profile and watch
//! the equilibrium survive: i_X g and mu_g are pinned, so the same (X, p)
//! solves the equilibrium equations for every profile.
//!
//!   cargo run --example perturb_adapted_metric

use mhdlab::adapted::{bump_profile, is_adapted, perturb_metric};
use mhdlab::bundles::default_family_t3;
use mhdlab::exterior::volume_form;
use mhdlab::grid::Grid3;
use mhdlab::mhd::mhd_residual;

fn main() -> mhdlab::Result<()> {
    let grid = Grid3::cubic(32)?;
    let bundle = default_family_t3(grid);
    let mu = volume_form(&bundle.g);

    for amplitude in [0.2, 0.5, -0.4] {
        // support near z = 0 where |dp| = |2 cos z| stays bounded below
        let profile = bump_profile(grid, [0.0, 2.0, 4.0], 0.7, amplitude)?;
        let perturbed = perturb_metric(&bundle.g, &bundle.x, &bundle.p, &profile, &mu)?;

        let mut moved = 0.0_f64;
        for c in 0..6 {
            for (a, b) in perturbed.comp(c).iter().zip(bundle.g.comp(c).iter()) {
                moved = moved.max((a - b).abs());
            }
        }
        let ad = is_adapted(&perturbed, &bundle.x, &bundle.alpha, &mu, 1e-10)?;
        let eq = mhd_residual(&perturbed, &bundle.x, &bundle.p, None)?;
        println!(
            "amplitude {amplitude:+.2}: metric moved by {moved:.3e}, \
             adapted = {} (alpha {:.2e}, volume {:.2e}), equilibrium = {} (momentum {:.2e})",
            ad.verdict, ad.alpha_residual, ad.volume_residual, eq.verdict, eq.momentum_max
        );
        assert!(ad.verdict && eq.verdict);
    }
    Ok(())
}
