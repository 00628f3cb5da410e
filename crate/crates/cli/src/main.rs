use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use volterra_core::lab::config::{LabConfig, Scenario};
use volterra_core::lab::scenarios::{run_scenario, RunSettings};

/// Run one experiment scenario, write `<scenario>-<timestamp>.csv` plus a
/// TOML sidecar, and exit nonzero if any check fails.
#[derive(Parser)]
#[command(name = "volterra-lab", version)]
struct Cli {
    /// TOML file with per-scenario tables; missing keys take defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Power-iteration tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Linear symbols: section norm against the H2 norm.
    LinearNorm,
    /// Pairwise coprime supports: section norm against the H2 norm.
    CoprimeNorm,
    /// Product-test quotients for the zeta primitive as J grows.
    ZetaGrowth,
    /// Truncated multiplier norms for the lambda symbols.
    LambdaThreshold,
    /// Gal-type lower bounds at lambda = 3/2.
    GalLower,
    /// Homogeneous supports against the w2 and wm statistics.
    HomogWeights,
    /// General weight statistic.
    GeneralWeight,
    /// Column lower bound and Schatten partial sums.
    Schatten,
    /// Smooth-kernel quotients and the double-sum cross-check.
    SmoothKernel,
    /// Mean oscillation profiles across truncations.
    Bmo,
    /// Monte Carlo Carleson integral against |g|^2/4.
    Carleson,
    /// The sigma-weighted quarter identity.
    QuarterIdentity,
    /// Dyadic multiplier comparison on random pairs.
    Sandwich,
}

impl From<Command> for Scenario {
    fn from(c: Command) -> Self {
        match c {
            Command::LinearNorm => Scenario::LinearNorm,
            Command::CoprimeNorm => Scenario::CoprimeNorm,
            Command::ZetaGrowth => Scenario::ZetaGrowth,
            Command::LambdaThreshold => Scenario::LambdaThreshold,
            Command::GalLower => Scenario::GalLower,
            Command::HomogWeights => Scenario::HomogWeights,
            Command::GeneralWeight => Scenario::GeneralWeight,
            Command::Schatten => Scenario::Schatten,
            Command::SmoothKernel => Scenario::SmoothKernel,
            Command::Bmo => Scenario::Bmo,
            Command::Carleson => Scenario::Carleson,
            Command::QuarterIdentity => Scenario::QuarterIdentity,
            Command::Sandwich => Scenario::Sandwich,
        }
    }
}

fn run(cli: Cli) -> Result<bool, Box<dyn std::error::Error>> {
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global()?;
    }
    let config = match &cli.config {
        Some(path) => LabConfig::load(path)?,
        None => LabConfig::default(),
    };
    let scenario = Scenario::from(cli.command);
    let settings = RunSettings::resolve(&config, cli.seed, cli.tol);
    let report = run_scenario(scenario, &config, &settings)?;
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH)?.as_secs().to_string();
    let (csv, sidecar) = report.write_files(&cli.out, &timestamp, &config.scenario_table(scenario)?)?;
    println!("{scenario}: {} rows -> {}", report.len(), csv.display());
    println!("sidecar -> {}", sidecar.display());
    for check in &report.checks {
        println!("{} {}: {}", if check.passed { "PASS" } else { "FAIL" }, check.name, check.detail);
    }
    Ok(report.all_passed())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
