//! `invdpp`: reproducible experiments on invariant determinantal point
//! processes. Every command writes `<command>.csv` and
//! `<command>.manifest.json` into `--out-dir`.

mod commands;
mod config;
mod output;

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use config::{Flags, Settings};
use output::{csv_path, write_manifest, Manifest};

#[derive(Parser)]
#[command(name = "invdpp", version, about = "Invariant determinantal point process experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw samples and write their points
    Sample(Flags),
    /// Tabulate the kernel on a grid and check intensity, envelope and invariance
    VerifyKernels(Flags),
    /// Exact rational checks of the composition-sum identities
    CumulantIdentities(Flags),
    /// Trace-formula variances of linear statistics
    Variance(Flags),
    /// Sample, center and test linear statistics for normality
    Clt(Flags),
    /// The variance-bound constant α(ρ) over a ρ grid
    Alpha(Flags),
    /// Local analytic projection and covariance residuals over a ρ grid
    Llap(Flags),
}

type Runner = fn(&Settings, &Path) -> Result<commands::Outcome, String>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, flags, run): (&str, Flags, Runner) = match cli.command {
        Command::Sample(f) => ("sample", f, commands::sample),
        Command::VerifyKernels(f) => ("verify-kernels", f, commands::verify_kernels),
        Command::CumulantIdentities(f) => ("cumulant-identities", f, commands::cumulant_identities),
        Command::Variance(f) => ("variance", f, commands::variance),
        Command::Clt(f) => ("clt", f, commands::clt),
        Command::Alpha(f) => ("alpha", f, commands::alpha_cmd),
        Command::Llap(f) => ("llap", f, commands::llap),
    };
    match execute(name, &flags, run) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("invdpp {name}: {e}");
            ExitCode::from(2)
        }
    }
}

fn execute(name: &str, flags: &Flags, run: Runner) -> Result<bool, String> {
    let settings = Settings::resolve(flags)?;
    if let Some(j) = settings.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global().map_err(|e| e.to_string())?;
    }
    std::fs::create_dir_all(&settings.out_dir).map_err(|e| format!("{}: {e}", settings.out_dir.display()))?;
    let csv = csv_path(&settings.out_dir, name);
    let start = Instant::now();
    let outcome = run(&settings, &csv)?;
    let all_pass = outcome.checks.iter().all(|c| c.pass);
    let manifest = Manifest {
        command: name,
        version: env!("CARGO_PKG_VERSION"),
        config: &settings,
        seed: settings.seed,
        truncation_ranks: &outcome.ranks,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        csv: csv.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
        rows: outcome.rows,
        checks: &outcome.checks,
        all_pass,
    };
    let path = write_manifest(&settings.out_dir, name, &manifest)?;
    for c in &outcome.checks {
        if c.pass {
            println!("ok    {}: {}", c.name, c.detail);
        } else {
            eprintln!("FAIL  {}: {}", c.name, c.detail);
        }
    }
    println!("wrote {} ({} rows) and {}", csv.display(), outcome.rows, path.display());
    Ok(all_pass)
}
