//! Thin command-line front-end over [`mhdlab::cli`].
//!
//! Exit codes: 0 success, 1 quantitative failure, 2 input/parameter error,
//! 3 numerical degeneracy. Set MHDLAB_THREADS to cap worker threads.

use clap::{Args, Parser, Subcommand};
use mhdlab::cli::{
    cmd_certify, cmd_perturb, cmd_reproduce, cmd_verify, CertifyConfig, PerturbConfig,
    VerifyConfig, DEFAULT_GRID, DEFAULT_RADIUS, DEFAULT_TOL_ADAPTED, DEFAULT_TOL_RESIDUAL,
    THREADS_ENV,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "mhdlab", version, about = "Equilibrium residuals, adapted-metric perturbations, and symmetry-breaking certificates on the 3-torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct TolArgs {
    /// Tolerance for equilibrium / guided-flow residuals.
    #[arg(long, default_value_t = DEFAULT_TOL_RESIDUAL)]
    tol_residual: f64,

    /// Tolerance for adaptedness residuals.
    #[arg(long, default_value_t = DEFAULT_TOL_ADAPTED)]
    tol_adapted: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check equilibrium, guided-flow, and adaptedness residuals of a field
    /// archive (entries: g, X, p; alpha and mu are derived when absent).
    Verify {
        /// Field archive directory.
        #[arg(long)]
        input: PathBuf,

        /// Directory for report.json (printed to stdout regardless).
        #[arg(long)]
        out: Option<PathBuf>,

        #[command(flatten)]
        tols: TolArgs,
    },

    /// Perturb the metric inside the adapted class with a bump profile and
    /// write the new archive plus before/after reports.
    Perturb {
        #[arg(long)]
        input: PathBuf,

        #[arg(long)]
        out: PathBuf,

        /// Bump center "zeta,theta,phi".
        #[arg(long, value_parser = parse_triple)]
        center: [f64; 3],

        #[arg(long)]
        radius: f64,

        #[arg(long)]
        amplitude: f64,

        /// Slice coordinate for the curvature report (defaults to the most
        /// regular slice).
        #[arg(long)]
        slice: Option<f64>,

        #[command(flatten)]
        tols: TolArgs,
    },

    /// Certify symmetry breaking through the unique-peak test of the
    /// companion-field norm on a pressure level torus.
    Certify {
        /// Field archive directory (alternative to --example).
        #[arg(long)]
        input: Option<PathBuf>,

        /// Built-in family name: example-6.4 or example-6.5.
        #[arg(long)]
        example: Option<String>,

        /// Nodes per axis when building a built-in example.
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,

        /// Slice coordinate zeta0 (required).
        #[arg(long)]
        slice: f64,

        /// Exclusion-disk radius for the peak test.
        #[arg(long, default_value_t = DEFAULT_RADIUS)]
        radius: f64,

        /// Minimum peak gap (absolute); defaults to 1e-6 of the value range.
        #[arg(long)]
        gap: Option<f64>,

        /// Output directory for certificate.json and n_functional.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Re-run every closed-form comparison for a built-in example family.
    Reproduce {
        /// example-6.4 or example-6.5
        name: String,

        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
    },
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated reals, got '{s}'"));
    }
    let mut out = [0.0; 3];
    for (i, p) in parts.iter().enumerate() {
        out[i] = p
            .trim()
            .parse::<f64>()
            .map_err(|e| format!("bad coordinate '{p}': {e}"))?;
    }
    Ok(out)
}

fn configure_threads() {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        } else {
            eprintln!("ignoring {THREADS_ENV}={v}: not a thread count");
        }
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Verify { input, out, tols } => cmd_verify(&VerifyConfig {
            input,
            out,
            tol_residual: tols.tol_residual,
            tol_adapted: tols.tol_adapted,
        }),
        Command::Perturb {
            input,
            out,
            center,
            radius,
            amplitude,
            slice,
            tols,
        } => cmd_perturb(&PerturbConfig {
            input,
            out,
            center,
            radius,
            amplitude,
            slice,
            tol_residual: tols.tol_residual,
            tol_adapted: tols.tol_adapted,
        }),
        Command::Certify {
            input,
            example,
            grid,
            slice,
            radius,
            gap,
            out,
        } => cmd_certify(&CertifyConfig {
            input,
            example,
            grid,
            slice,
            radius,
            gap,
            out,
        }),
        Command::Reproduce { name, grid } => cmd_reproduce(&name, grid),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
