//! Build the two closed-form equilibrium families and check the
//! equilibrium, guided-flow, and adaptedness residuals on each.
//!
//!   cargo run --example verify_equilibrium

use mhdlab::adapted::is_adapted;
use mhdlab::bundles::{default_family_t3, default_killing_t3};
use mhdlab::grid::Grid3;
use mhdlab::mhd::mhd_residual;
use mhdlab::report::ReportSet;

fn main() -> mhdlab::Result<()> {
    let grid = Grid3::cubic(32)?;
    let mut reports = ReportSet::default();

    for bundle in [
        default_family_t3(grid),
        default_killing_t3(grid)?,
    ] {
        let name = bundle.name();
        let eq = mhd_residual(&bundle.g, &bundle.x, &bundle.p, None)?;
        reports.push(eq.to_report(&format!("{name}/equilibrium")));

        let gf = bundle.guided_flow(None)?;
        reports.push(gf.report().to_report(&format!("{name}/guided-flow")));

        let ad = is_adapted(&bundle.g, &bundle.x, &bundle.alpha, &bundle.mu, 1e-10)?;
        reports.push(ad.to_report(&format!("{name}/adaptedness")));

        let y = gf.companion()?;
        println!(
            "{name}: companion field vs closed form, max deviation {:.3e}",
            y.sub(&bundle.y_closed_form).max_abs()
        );
    }

    reports.print_table();
    assert!(reports.verdict());
    Ok(())
}
