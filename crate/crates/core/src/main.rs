use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crowdvet::harness::{run_experiment, ExperimentConfig, ExperimentKind, Table1Row};
use crowdvet::trust::{rounds_bound_baseline, rounds_bound_theorem1};
use crowdvet::Error;

#[derive(Parser, Debug)]
#[command(name = "crowdvet", version, about = "Sybil-resilient trust, estimation and flocking experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML experiment config
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides every trial count in the config
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Output directory for CSV files
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Exit with status 2 if any acceptance threshold fails
    #[arg(long, global = true)]
    check: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Empirical round counts on complete graphs
    Table1 {
        /// Restrict to these team sizes
        #[arg(long, num_args = 1..)]
        l: Vec<usize>,
    },
    /// Mean rounds-to-success against observation quality
    RoundsVsEps,
    /// Rounds and success against τ, and τ of random geometric graphs
    TauStudy,
    /// Perceived against actual algebraic connectivity
    Connectivity,
    /// Target agreement with and without trust filtering
    Wmsr,
    /// Hacked-team target tracking with and without trust filtering
    Flock,
    /// Trusted flooding of adjacency rows on a fixture
    FramDemo {
        #[arg(long)]
        fixture: Option<String>,
        /// Noisy channel instead of a perfect one
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Print closed-form round bounds
    Bound {
        #[arg(long)]
        l: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long, allow_hyphen_values = true)]
        tau: i64,
        #[arg(long)]
        dl: usize,
        #[arg(long)]
        delta: f64,
    },
}

fn load(common: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if common.trials.is_some() {
        cfg.trials = common.trials;
    }
    if let Some(o) = &common.out {
        cfg.out = o.clone();
    }
    if common.threads.is_some() {
        cfg.threads = common.threads;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool, Error> {
    let mut cfg = load(&cli.common)?;
    let kind = match cli.command {
        Command::Bound { l, n, eps, tau, dl, delta } => {
            println!("theorem1 {}", rounds_bound_theorem1(l, n, eps, tau, dl, delta)?);
            println!("baseline {}", rounds_bound_baseline(delta, eps)?);
            return Ok(true);
        }
        Command::Table1 { l } => {
            if !l.is_empty() {
                let known = cfg.table1.rows.clone();
                cfg.table1.rows = l
                    .into_iter()
                    .map(|l| {
                        known.iter().copied().find(|r| r.l == l).unwrap_or(Table1Row {
                            l,
                            trials: if l <= 10 { 1000 } else { 100 },
                        })
                    })
                    .collect();
            }
            ExperimentKind::Table1
        }
        Command::RoundsVsEps => ExperimentKind::RoundsVsEps,
        Command::TauStudy => ExperimentKind::TauStudy,
        Command::Connectivity => ExperimentKind::Connectivity,
        Command::Wmsr => ExperimentKind::Wmsr,
        Command::Flock => ExperimentKind::Flock,
        Command::FramDemo { fixture, eps } => {
            if let Some(f) = fixture {
                cfg.fram.fixture = f;
            }
            if eps.is_some() {
                cfg.fram.epsilon = eps;
            }
            ExperimentKind::FramDemo
        }
    };
    let report = run_experiment(kind, &cfg)?;
    report.write_to(&cfg.out)?;
    for line in &report.summary {
        println!("{line}");
    }
    for c in &report.checks {
        println!("{c}");
    }
    Ok(!cli.common.check || report.passed())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
