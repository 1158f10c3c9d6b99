use std::path::PathBuf;
use std::process::ExitCode;

use brp_cli::{cmd_compare, cmd_run, cmd_sweep, cmd_verify, CliError, Settings};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "brp", version, about = "Online balanced repartitioning harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm against one source and print a JSON report.
    Run(SpecArgs),
    /// Run with every invariant checked after every step.
    Verify(SpecArgs),
    /// Run a grid of cells and print CSV. k, l, alpha, seed, alg and source take comma lists.
    Sweep(SpecArgs),
    /// Run several algorithms on the same source and print their reports.
    Compare(SpecArgs),
}

#[derive(Args)]
struct SpecArgs {
    /// crep, greedy, threshold or null.
    #[arg(long)]
    alg: Option<String>,
    /// random_pairs, planted_partition, k2_phase, theorem2, ring, paging or trace.
    #[arg(long)]
    source: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    l: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    /// Greedy's threshold factor, or the threshold algorithm's swap count.
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    /// dp, static or none.
    #[arg(long)]
    oracle: Option<String>,
    #[arg(long)]
    trace: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl SpecArgs {
    fn settings(&self) -> Result<Settings, CliError> {
        let mut settings = match &self.config {
            Some(path) => Settings::load(path)?,
            None => Settings::default(),
        };
        let out = self.out.as_ref().map(|p| p.display().to_string());
        let flags = [
            ("alg", &self.alg),
            ("source", &self.source),
            ("n", &self.n),
            ("k", &self.k),
            ("l", &self.l),
            ("alpha", &self.alpha),
            ("delta", &self.delta),
            ("lambda", &self.lambda),
            ("seed", &self.seed),
            ("steps", &self.steps),
            ("oracle", &self.oracle),
            ("trace", &self.trace),
            ("out", &out),
        ];
        let mut overrides = Settings::default();
        for (key, value) in flags {
            if let Some(value) = value {
                overrides.set(key, value)?;
            }
        }
        settings.overlay(&overrides);
        Ok(settings)
    }
}

fn emit(out: Option<&str>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{path}: {e}"))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// `Ok(true)` when every checked invariant held.
fn dispatch(command: Command) -> Result<bool, CliError> {
    match command {
        Command::Run(args) => {
            let spec = args.settings()?.spec()?;
            let outcome = cmd_run(&spec)?;
            match &spec.out {
                Some(path) => println!("report written to {}", path.display()),
                None => print!("{}", outcome.report.to_json()),
            }
            Ok(outcome.report.invariants_hold)
        }
        Command::Verify(args) => {
            let spec = args.settings()?.spec()?;
            let outcome = cmd_verify(&spec)?;
            print!("{}", outcome.render());
            Ok(outcome.passed())
        }
        Command::Sweep(args) => {
            let settings = args.settings()?;
            let outcome = cmd_sweep(&settings)?;
            emit(settings.get("out"), &outcome.to_csv()?)?;
            Ok(outcome.invariants_hold)
        }
        Command::Compare(args) => {
            let settings = args.settings()?;
            let reports = cmd_compare(&settings)?;
            let json = serde_json::to_string_pretty(&reports).expect("reports serialize") + "\n";
            emit(settings.get("out"), &json)?;
            Ok(reports.iter().all(|r| r.invariants_hold))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("brp: {e}");
            ExitCode::from(2)
        }
    }
}
