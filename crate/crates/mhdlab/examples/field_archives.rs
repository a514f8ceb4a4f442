//! Write an equilibrium bundle to a field archive, read it back, and verify
//! it from disk the same way the CLI does.
//!
//!   cargo run --example field_archives

use mhdlab::archive::{field_io_read, field_io_write};
use mhdlab::bundles::default_killing_t3;
use mhdlab::cli::{cmd_verify, VerifyConfig};
use mhdlab::grid::Grid3;

fn main() -> mhdlab::Result<()> {
    let dir = std::env::temp_dir().join("mhdlab-archive-demo");
    let bundle = default_killing_t3(Grid3::cubic(16)?)?;
    bundle.write_archive(&dir)?;
    println!("wrote archive to {}", dir.display());

    let back = field_io_read(&dir)?;
    println!(
        "entries: {:?}",
        back.entries.keys().collect::<Vec<_>>()
    );

    // round trip is bit-exact
    let twice = dir.join("copy");
    field_io_write(&twice, &back)?;
    let again = field_io_read(&twice)?;
    let a = back.metric("g")?;
    let b = again.metric("g")?;
    for c in 0..6 {
        for (x, y) in a.comp(c).iter().zip(b.comp(c).iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
    println!("round trip bit-exact");

    let ok = cmd_verify(&VerifyConfig {
        input: dir.clone(),
        out: None,
        tol_residual: 1e-8,
        tol_adapted: 1e-10,
    })?;
    println!("verification verdict: {ok}");
    Ok(())
}
