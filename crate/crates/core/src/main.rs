use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use scl::experiments::{list_experiments, run, ExperimentConfig, ExperimentReport};
use scl::Error;

/// Seeded experiments for drift-controlled Brownian motion in R^n and on S^n.
#[derive(Parser)]
#[command(name = "scl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
        /// Directory for <experiment>.json and <experiment>.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the experiments.
    List,
    /// Print a saved report.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn exit_for(e: &Error) -> ExitCode {
    match e {
        Error::UnknownExperiment(_)
        | Error::InvalidConfig(_)
        | Error::InvalidArgument(_)
        | Error::InvalidGrid(_)
        | Error::DimensionMismatch { .. } => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn summary(report: &ExperimentReport) {
    for c in &report.checks {
        eprintln!(
            "{} {:<55} value={:<12.6e} oracle={:<12.6e} tol={:.2e}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.oracle,
            c.tol
        );
    }
    eprintln!(
        "{}: {}/{} checks passed in {:.1}s",
        report.config.experiment,
        report.checks.iter().filter(|c| c.pass).count(),
        report.checks.len(),
        report.wallclock_seconds
    );
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::List => {
            for e in list_experiments() {
                println!(
                    "{:<18} {:<13} {}: {}",
                    e.name, e.module, e.section, e.description
                );
            }
            return ExitCode::SUCCESS;
        }
        Command::Run {
            config,
            seed,
            paths,
            steps,
            out,
        } => ExperimentConfig::from_file(&config).and_then(|mut cfg| {
            cfg.seed = seed.or(cfg.seed);
            cfg.paths = paths.or(cfg.paths);
            cfg.steps = steps.or(cfg.steps);
            let report = run(&cfg)?;
            summary(&report);
            match out {
                Some(dir) => {
                    let (json, csv) = report.write(&dir)?;
                    eprintln!("wrote {} and {}", json.display(), csv.display());
                }
                None => println!("{}", report.to_json()?),
            }
            Ok(report.passed())
        }),
        Command::Report { input, format } => std::fs::read_to_string(&input)
            .map_err(Error::from)
            .and_then(|text| ExperimentReport::from_json(&text))
            .and_then(|report| {
                if !report.consistent() {
                    return Err(Error::InvalidArgument(
                        "stored pass flags disagree with the stored values".into(),
                    ));
                }
                match format {
                    Format::Json => println!("{}", report.to_json()?),
                    Format::Csv => print!("{}", report.to_csv()?),
                }
                Ok(report.passed())
            }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            exit_for(&e)
        }
    }
}
