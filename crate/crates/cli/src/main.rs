//! Command-line front end for the experiment harness.
//!
//! Each subcommand maps onto one experiment; flags fill the experiment
//! config. With `--out DIR` the run writes its CSV files there; without
//! it, the summary CSV goes to stdout. Exit codes: 0 on success, 2 when
//! the config fails validation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mdsf_core::lab::{
    self, ExperimentConfig, ExperimentKind, ExperimentResult, LabError, ProcessKind,
};

#[derive(Parser)]
#[command(
    name = "mdsf",
    version,
    about = "Monte Carlo laboratory for minimal directed spanning forests and their limit laws"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProcessArg {
    Binomial,
    Poisson,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Planar sample size: point count (binomial) or intensity (poisson)
    #[arg(long, default_value_t = 10_000)]
    n: u64,
    /// Arrival-sequence length for one-dimensional experiments
    #[arg(long, default_value_t = 1_000)]
    m: u64,
    /// Monte Carlo replicates
    #[arg(long, default_value_t = 100)]
    reps: u64,
    /// Edge-weight exponent
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Cone axis angle, anticlockwise from vertical
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2)]
    theta: f64,
    /// Cone opening angle: in (0, pi], or 2*pi for the full disc
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2)]
    phi: f64,
    /// Adjoin the origin as a root vertex
    #[arg(long)]
    rooted: bool,
    /// Point process driving planar experiments
    #[arg(long, value_enum, default_value_t = ProcessArg::Binomial)]
    process: ProcessArg,
    /// Strip exponent for boundary and coupling regions, in (1/2, 2/3)
    #[arg(long, default_value_t = 0.58)]
    sigma: f64,
    /// Interior-region exponent, in (0, 1/2)
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    /// Base seed; replicate r draws from stream r
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Gaussian kernel bandwidth for density estimates
    #[arg(long, default_value_t = 0.0025)]
    bandwidth: f64,
    /// Output directory for CSV files (summary to stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Scaled total weight against its law-of-large-numbers limit
    Lln(CommonArgs),
    /// Centred total-weight fluctuations
    TotalLaw(CommonArgs),
    /// Centred weight of the boundary margin
    Boundary(CommonArgs),
    /// Scaled centred weight of the interior region, with normality diagnostics
    CltRegion(CommonArgs),
    /// Pathwise gap between the strip forest and its linear-forest shadow
    Coupling(CommonArgs),
    /// Density study of the centred linear-tree weight
    DltDensity(CommonArgs),
    /// Dickman limit sampled two independent ways
    Dickman(CommonArgs),
    /// Closed-form reference values
    Analytic {
        #[command(subcommand)]
        sub: AnalyticCommand,
    },
}

#[derive(Subcommand)]
enum AnalyticCommand {
    /// Emit the closed-form moment table as CSV
    Table(CommonArgs),
}

impl CommonArgs {
    fn config(&self, kind: ExperimentKind) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(kind);
        cfg.n = self.n;
        cfg.m = self.m;
        cfg.reps = self.reps;
        cfg.alpha = self.alpha;
        cfg.theta = self.theta;
        cfg.phi = self.phi;
        cfg.rooted = self.rooted;
        cfg.process = match self.process {
            ProcessArg::Binomial => ProcessKind::Binomial,
            ProcessArg::Poisson => ProcessKind::Poisson,
        };
        cfg.sigma = self.sigma;
        cfg.epsilon = self.epsilon;
        cfg.base_seed = self.seed;
        cfg.kde_bandwidth = self.bandwidth;
        cfg.out = self.out.clone();
        cfg
    }

    fn install_pool(&self) -> Result<(), String> {
        if let Some(jobs) = self.jobs {
            if jobs == 0 {
                return Err("--jobs must be at least 1".into());
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build_global()
                .map_err(|e| e.to_string())?;
        }
        Ok(())
    }
}

const EXIT_CONFIG: u8 = 2;

fn deliver(result: &ExperimentResult) -> Result<(), LabError> {
    match &result.config.out {
        Some(dir) => lab::emit(result, dir),
        None => {
            print!("{}", lab::summary_csv(result));
            Ok(())
        }
    }
}

fn run_experiment(args: &CommonArgs, kind: ExperimentKind) -> ExitCode {
    if let Err(msg) = args.install_pool() {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_CONFIG);
    }
    let cfg = args.config(kind);
    let outcome = lab::run(&cfg).and_then(|result| deliver(&result));
    finish(outcome)
}

fn run_analytic_table(args: &CommonArgs) -> ExitCode {
    let cfg = args.config(ExperimentKind::AnalyticTable);
    let outcome = (|| -> Result<(), LabError> {
        match &cfg.out {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                let mut buf = Vec::new();
                lab::write_analytic_table(&mut buf, &cfg)?;
                std::fs::write(dir.join("table.csv"), buf)?;
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                lab::write_analytic_table(&mut stdout, &cfg)?;
            }
        }
        Ok(())
    })();
    finish(outcome)
}

fn finish(outcome: Result<(), LabError>) -> ExitCode {
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err @ (LabError::Config(_) | LabError::EmptyInput)) => {
            eprintln!("error: {err}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Lln(a) => run_experiment(a, ExperimentKind::Lln),
        Command::TotalLaw(a) => run_experiment(a, ExperimentKind::TotalLaw),
        Command::Boundary(a) => run_experiment(a, ExperimentKind::Boundary),
        Command::CltRegion(a) => run_experiment(a, ExperimentKind::CltRegion),
        Command::Coupling(a) => run_experiment(a, ExperimentKind::Coupling),
        Command::DltDensity(a) => run_experiment(a, ExperimentKind::DltDensity),
        Command::Dickman(a) => run_experiment(a, ExperimentKind::Dickman),
        Command::Analytic {
            sub: AnalyticCommand::Table(a),
        } => run_analytic_table(a),
    }
}
