use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use datasplit::harness::{self, DecompRow, Profile, RunConfig};
use datasplit::{OutlierTransfer, ScenarioKind, StepwiseStart, Strategy};

/// Simulation experiments comparing full-data and split-data predictive
/// model building.
#[derive(Parser)]
#[command(name = "datasplit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the factorial experiment and write one CSV row per cell and strategy.
    Run(RunArgs),
    /// Decompose each strategy's score into best, selection, estimation and reuse parts.
    Decompose(RunArgs),
    /// Print FD-minus-split differences from a results CSV.
    Report {
        #[arg(long = "in", value_name = "CSV")]
        input: PathBuf,
    },
    /// Print the cell ids of a scenario's design.
    ListCells {
        #[arg(long, value_delimiter = ',')]
        scenario: Vec<ScenarioKind>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Scenario(s) to run; all four when omitted.
    #[arg(long, value_delimiter = ',')]
    scenario: Vec<ScenarioKind>,
    /// Keep only cells whose id contains this text.
    #[arg(long)]
    cell: Option<String>,
    /// Size preset for replications and evaluation draws.
    #[arg(long, default_value_t = Profile::Full)]
    profile: Profile,
    #[arg(long)]
    nrep: Option<usize>,
    #[arg(long)]
    neval: Option<usize>,
    /// Size of the large sample used as unlimited data.
    #[arg(long)]
    ninf: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: DATASPLIT_WORKERS, then all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    strategies: Vec<Strategy>,
    /// Score Box-Cox predictions on the transformed scale.
    #[arg(long)]
    no_jacobian: bool,
    #[arg(long, value_name = "full|null")]
    stepwise_start: Option<StepwiseStart>,
    #[arg(long, value_name = "cases|reapply")]
    outlier_transfer: Option<OutlierTransfer>,
    /// Replications whose fresh samples feed the pooled estimation cost.
    #[arg(long)]
    pooled: Option<usize>,
}

impl RunArgs {
    fn config(&self, decompose: bool) -> RunConfig {
        let mut c = RunConfig::profile(self.profile);
        if !self.scenario.is_empty() {
            c.scenarios = self.scenario.clone();
        }
        c.cell_filter = self.cell.clone();
        c.n_rep = self.nrep.unwrap_or(c.n_rep);
        c.n_eval = self.neval.unwrap_or(c.n_eval);
        c.n_inf = self.ninf.unwrap_or(c.n_inf);
        c.master_seed = self.seed.unwrap_or(c.master_seed);
        c.workers = self.workers;
        c.pooled_cap = self.pooled.unwrap_or(c.pooled_cap);
        if !self.strategies.is_empty() {
            c.strategies = self.strategies.clone();
        }
        if decompose {
            c.decompose = std::mem::take(&mut c.strategies);
        }
        c.options.jacobian = !self.no_jacobian;
        if let Some(s) = self.stepwise_start {
            c.options.stepwise_start = s;
        }
        if let Some(t) = self.outlier_transfer {
            c.options.outlier_transfer = t;
        }
        c
    }
}

const EXIT_CONFIG: u8 = 2;
const EXIT_UNRELIABLE: u8 = 3;

fn open_out(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn execute(args: &RunArgs, decompose: bool) -> anyhow::Result<ExitCode> {
    let config = args.config(decompose);
    if let Err(e) = config.validate().and_then(|_| config.worker_count()) {
        eprintln!("error: {e}");
        return Ok(ExitCode::from(EXIT_CONFIG));
    }
    if config.cells().is_empty() {
        eprintln!("error: no cells match the filters");
        return Ok(ExitCode::from(EXIT_CONFIG));
    }
    let outcomes = harness::run(&config)?;
    let out = open_out(args.out.as_deref())?;
    if decompose {
        let rows: Vec<DecompRow> = outcomes
            .iter()
            .flat_map(|o| o.decompositions.iter().map(|d| DecompRow::new(&o.cell, d)))
            .collect();
        harness::write_decompositions(out, &rows)?;
    } else {
        let rows: Vec<_> = outcomes.iter().flat_map(|o| o.rows.iter().cloned()).collect();
        harness::write_results(out, &rows)?;
    }
    let unreliable: Vec<&str> = outcomes
        .iter()
        .filter(|o| o.unreliable)
        .map(|o| o.cell.cell_id.as_str())
        .collect();
    if unreliable.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for id in &unreliable {
            eprintln!("warning: unreliable cell {id}");
        }
        Ok(ExitCode::from(EXIT_UNRELIABLE))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => execute(a, false),
        Command::Decompose(a) => execute(a, true),
        Command::Report { input } => File::open(input)
            .with_context(|| format!("cannot open {}", input.display()))
            .and_then(|f| Ok(harness::read_results(f)?))
            .map(|rows| {
                print!("{}", harness::report_differences(&rows));
                ExitCode::SUCCESS
            }),
        Command::ListCells { scenario } => {
            let kinds = if scenario.is_empty() {
                ScenarioKind::ALL.to_vec()
            } else {
                scenario.clone()
            };
            let mut out = io::stdout().lock();
            for c in kinds.into_iter().flat_map(harness::enumerate_cells) {
                if writeln!(out, "{}", c.cell_id).is_err() {
                    break;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::FAILURE
    })
}
