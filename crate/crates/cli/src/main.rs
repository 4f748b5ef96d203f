use clap::{Parser, Subcommand};
use gyrsim_cli::config::{load_file, resolve, FileConfig, Overrides};
use gyrsim_cli::{commands, CliError};
use std::path::PathBuf;
use std::process::ExitCode;

/// Simulator front end for spatio-temporally modulated two-resonator
/// chains: spectra, effective couplings, parameter-space maps, exceptional
/// contours, gyration search, time-domain cross-checks, and trace
/// calibration.
#[derive(Parser, Debug)]
#[command(name = "gyrsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output path (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads (default: GYRSIM_THREADS or all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Truncation: an integer order, or `auto[:tol]`.
    #[arg(long, global = true)]
    truncation: Option<String>,

    /// Bundled device preset (`table-s1`).
    #[arg(long = "seed-params", global = true)]
    seed_params: Option<String>,

    /// Common modulation strength for both sites (MHz).
    #[arg(long, global = true)]
    beta: Option<f64>,

    /// Site-1 modulation strength (MHz).
    #[arg(long, global = true)]
    beta1: Option<f64>,

    /// Site-2 modulation strength (MHz).
    #[arg(long, global = true)]
    beta2: Option<f64>,

    /// Modulation frequency (MHz).
    #[arg(long = "omega-m", global = true)]
    omega_m: Option<f64>,

    /// Differential modulation phase (degrees).
    #[arg(long = "phi-deg", global = true)]
    phi_deg: Option<f64>,

    /// Output format for single-record commands: `kv` or `csv`.
    #[arg(long, global = true)]
    format: Option<String>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Scattering matrix over a frequency grid.
    Spectrum,
    /// Effective Hatano-Nelson couplings at the center frequency.
    Hn,
    /// First-order analytic coupling modification factors.
    Alpha,
    /// Coupling map over the (omega_m, phi) plane.
    Map,
    /// Exceptional-point contours of the couplings.
    Contour,
    /// Critical modulation strength where the exceptional rings meet.
    CriticalBeta,
    /// Pure-gyration phases at fixed modulation frequency.
    Gyration,
    /// Contrast sweep over the differential phase.
    Isolation,
    /// Time-domain integration cross-check.
    Oracle,
    /// Trace de-embedding and phase-offset estimation.
    Calibrate,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => load_file(path)?,
        None => FileConfig::default(),
    };
    let overrides = Overrides {
        seed_params: cli.seed_params.clone(),
        truncation: cli.truncation.clone(),
        beta: cli.beta,
        beta1: cli.beta1,
        beta2: cli.beta2,
        omega_m: cli.omega_m,
        phi_deg: cli.phi_deg,
        out: cli.out.clone(),
        format: cli.format.clone(),
    };
    let resolved = resolve(file, &overrides)?;

    let threads = cli
        .threads
        .or_else(|| std::env::var("GYRSIM_THREADS").ok().and_then(|v| v.parse().ok()));
    let pool = {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            if n == 0 {
                return Err(CliError::Config("--threads: must be at least 1".into()));
            }
            builder = builder.num_threads(n);
        }
        builder
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?
    };

    let document = pool.install(|| match cli.command {
        Command::Spectrum => commands::cmd_spectrum(&resolved),
        Command::Hn => commands::cmd_hn(&resolved),
        Command::Alpha => commands::cmd_alpha(&resolved),
        Command::Map => commands::cmd_map(&resolved),
        Command::Contour => commands::cmd_contour(&resolved),
        Command::CriticalBeta => commands::cmd_critical_beta(&resolved),
        Command::Gyration => commands::cmd_gyration(&resolved),
        Command::Isolation => commands::cmd_isolation(&resolved),
        Command::Oracle => commands::cmd_oracle(&resolved),
        Command::Calibrate => commands::cmd_calibrate(&resolved),
    })?;

    match &resolved.output_path {
        Some(path) => std::fs::write(path, document)
            .map_err(|e| CliError::Io(format!("cannot write `{}`: {e}", path.display()))),
        None => {
            print!("{document}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
