use bct_cure::cli::{
    cmd_bootstrap, cmd_fit, cmd_km, cmd_mc_study, cmd_residuals, cmd_simulate, CliContext,
};
use bct_cure::config::RunConfig;
use bct_cure::Error;
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Box-Cox transformation cure rate model: simulation, SQH fitting,
/// Monte-Carlo studies, bootstrap standard errors and residual diagnostics.
#[derive(Parser)]
#[command(name = "bct-cure", version, about)]
struct Args {
    #[command(subcommand)]
    command: Command,

    /// Run configuration file (TOML-style sections).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, default_value = ".", global = true)]
    out: PathBuf,

    /// Worker threads for replications/resamples (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a censored dataset from the configured scenario.
    Simulate,
    /// Fit the BCT cure model to a dataset.
    Fit {
        #[arg(long)]
        data: PathBuf,
    },
    /// Run a Monte-Carlo bias/RMSE study (with optional sensitivity sweeps).
    McStudy,
    /// Nonparametric bootstrap standard errors for a dataset.
    Bootstrap {
        #[arg(long)]
        data: PathBuf,
    },
    /// Randomized quantile residuals and KS normality test.
    Residuals {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        theta: PathBuf,
    },
    /// Kaplan-Meier curves per covariate group.
    Km {
        #[arg(long)]
        data: PathBuf,
    },
}

/// Exit codes: 0 success, 2 config error, 3 data error, 4 non-convergence,
/// 5 internal stall.
fn exit_code(error: &Error) -> u8 {
    match error {
        Error::Config(_) => 2,
        Error::Data(_)
        | Error::Io { .. }
        | Error::Domain(_)
        | Error::DegenerateData(_)
        | Error::EvaluationFailure(_) => 3,
        Error::NoConvergence(_) | Error::AllReplicationsFailed(_) => 4,
        Error::Stall { .. } => 5,
    }
}

fn run(args: Args) -> Result<u8, Error> {
    let config = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let ctx = CliContext::new(config, args.seed, args.out.clone(), args.workers);

    match args.command {
        Command::Simulate => {
            let (_, summary) = cmd_simulate(&ctx)?;
            print!("{summary}");
            Ok(0)
        }
        Command::Fit { data } => {
            let report = cmd_fit(&ctx, &data)?;
            let mut out = Vec::new();
            report.write_key_value(&mut out).expect("in-memory write");
            print!("{}", String::from_utf8_lossy(&out));
            Ok(if report.converged { 0 } else { 4 })
        }
        Command::McStudy => {
            let reports = cmd_mc_study(&ctx)?;
            for (label, report) in &reports {
                println!("=== {label} ===");
                let mut out = Vec::new();
                report.write_table(&mut out).expect("in-memory write");
                print!("{}", String::from_utf8_lossy(&out));
            }
            Ok(0)
        }
        Command::Bootstrap { data } => {
            let summary = cmd_bootstrap(&ctx, &data)?;
            let mut out = Vec::new();
            summary.write_key_value(&mut out).expect("in-memory write");
            print!("{}", String::from_utf8_lossy(&out));
            Ok(0)
        }
        Command::Residuals { data, theta } => {
            let (statistic, p_value) = cmd_residuals(&ctx, &data, &theta)?;
            println!("ks_statistic = {statistic}");
            println!("ks_p_value = {p_value}");
            Ok(0)
        }
        Command::Km { data } => {
            for path in cmd_km(&ctx, &data)? {
                println!("wrote {}", path.display());
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(code) => ExitCode::from(code),
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(exit_code(&error))
        }
    }
}
