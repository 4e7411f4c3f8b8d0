use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use udep_cli::config::THREADS_ENV;
use udep_cli::{run_experiment, CliError, RawConfig};

#[derive(Parser)]
#[command(
    name = "udep",
    version,
    about = "U-statistics of dependent sequences: Monte-Carlo experiments"
)]
#[command(
    after_help = "Config files hold flat `key = value` lines; `#` starts a comment.\n\
Outputs: <out>/trajectories.csv, <out>/summary.csv, <out>/manifest.txt.\n\
The worker count comes from `threads`, overridden by the UDEP_THREADS environment variable.\n\
Exit codes: 0 success, 1 config error, 2 runtime error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file (flags override its keys).
    Run {
        config: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// rate_theorem1: normalized degenerate part at dyadic n.
    Rate(Flags),
    /// lil_theorem2: LIL-normalized T_n with plug-in long-run variance.
    Lil(Flags),
    /// hl_bahadur: Hodges-Lehmann remainder, fluctuation or CLT statistic.
    Hl(Flags),
    /// spectrum: Nyström eigenvalues of h2.
    Spectrum(Flags),
    /// moment_scan: E[Q_n^2] growth exponent.
    Moments(Flags),
    /// covariance_decay: |E h2 h2| against the index gap.
    Cov(Flags),
    /// variance_ratio: Var T_n over the variance of the linear part.
    Ratio(Flags),
    /// dyadic_max: block maxima of the chaining differences.
    Dyadic(Flags),
}

#[derive(Args, Default)]
struct Flags {
    /// Kernel: gini, cvm, hl_indicator(t) [required except for hl]
    #[arg(long)]
    kernel: Option<String>,
    /// Model: iid_uniform, iid_normal, ar1(phi[,sd]), ma(m[;w0,...]), doubling[(depth)] [default: iid_uniform]
    #[arg(long)]
    model: Option<String>,
    /// Largest sample size [default: 16384]
    #[arg(long = "n-max")]
    n_max: Option<usize>,
    /// Smallest checkpoint [default: 64 for moments, else 16]
    #[arg(long = "n-min")]
    n_min: Option<usize>,
    /// Monte-Carlo replicates [default: 100]
    #[arg(long)]
    reps: Option<usize>,
    /// Base seed [default: 1]
    #[arg(long)]
    seed: Option<u64>,
    /// Bartlett bandwidth for the long-run variance [default: floor(n^(1/3))]
    #[arg(long)]
    bandwidth: Option<usize>,
    /// Nyström grid for spectrum, fluctuation grid for hl [default: 512, 41 for hl]
    #[arg(long)]
    grid: Option<usize>,
    /// hl statistic: remainder, fluctuation, clt [default: remainder]
    #[arg(long)]
    statistic: Option<String>,
    /// Largest lag m for cov [default: 10]
    #[arg(long = "m-max")]
    m_max: Option<usize>,
    /// Gap between the two pairs for cov [default: m]
    #[arg(long)]
    gap: Option<usize>,
    /// Output directory [default: udep-out]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads [default: available parallelism; env UDEP_THREADS wins]
    #[arg(long)]
    threads: Option<usize>,
}

impl Flags {
    fn apply(self, raw: &mut RawConfig) -> Result<(), CliError> {
        let pairs: [(&str, Option<String>); 13] = [
            ("kernel", self.kernel),
            ("model", self.model),
            ("n_max", self.n_max.map(|v| v.to_string())),
            ("n_min", self.n_min.map(|v| v.to_string())),
            ("replicates", self.reps.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("bandwidth", self.bandwidth.map(|v| v.to_string())),
            ("grid", self.grid.map(|v| v.to_string())),
            ("statistic", self.statistic),
            ("m_max", self.m_max.map(|v| v.to_string())),
            ("gap", self.gap.map(|v| v.to_string())),
            ("out", self.out.map(|v| v.display().to_string())),
            ("threads", self.threads.map(|v| v.to_string())),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                raw.set(k, v)?;
            }
        }
        Ok(())
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let (mut raw, flags, experiment) = match cli.command {
        Command::Run { config, flags } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", config.display())))?;
            (RawConfig::parse(&text)?, flags, None)
        }
        Command::Rate(f) => (RawConfig::default(), f, Some("rate_theorem1")),
        Command::Lil(f) => (RawConfig::default(), f, Some("lil_theorem2")),
        Command::Hl(f) => (RawConfig::default(), f, Some("hl_bahadur")),
        Command::Spectrum(f) => (RawConfig::default(), f, Some("spectrum")),
        Command::Moments(f) => (RawConfig::default(), f, Some("moment_scan")),
        Command::Cov(f) => (RawConfig::default(), f, Some("covariance_decay")),
        Command::Ratio(f) => (RawConfig::default(), f, Some("variance_ratio")),
        Command::Dyadic(f) => (RawConfig::default(), f, Some("dyadic_max")),
    };
    if let Some(e) = experiment {
        raw.set("experiment", e)?;
    }
    flags.apply(&mut raw)?;
    let env = std::env::var(THREADS_ENV).ok();
    let cfg = raw.validate(env.as_deref())?;
    let paths = run_experiment(&cfg)?;
    for p in paths {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("udep: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
