use clap::{Parser, Subcommand};
use nshyd_core::scenario::{run, Mode, Scenario};
use nshyd_core::Error;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Quasistatic hydraulic actuator models: force-map sweeps and arm simulations.
#[derive(Parser)]
#[command(name = "nshyd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the velocity-force map over a grid and write CSV.
    Sweep {
        scenario: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a time-stepping simulation and write CSV.
    Simulate {
        scenario: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check a scenario file without running it.
    Validate { scenario: PathBuf },
}

const EXIT_INVALID: u8 = 2;
const EXIT_SOLVER: u8 = 3;

fn load(path: &Path, mode: Option<Mode>) -> Result<Scenario, ExitCode> {
    let sc = Scenario::from_path(path).map_err(|e| report(&e))?;
    if let Some(m) = mode {
        if sc.mode != m {
            eprintln!("error: {} has mode {:?}, not {:?}", path.display(), sc.mode, m);
            return Err(ExitCode::from(EXIT_INVALID));
        }
    }
    Ok(sc)
}

fn report(e: &Error) -> ExitCode {
    match e {
        Error::Scenario(issues) => {
            eprintln!("error: invalid scenario");
            for i in issues {
                eprintln!("  {i}");
            }
            ExitCode::from(EXIT_INVALID)
        }
        e => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_SOLVER)
        }
    }
}

fn execute(path: &Path, mode: Mode, output: Option<&Path>) -> Result<(), ExitCode> {
    let sc = load(path, Some(mode))?;
    let table = run(&sc).map_err(|e| report(&e))?;
    let written = match output {
        Some(out) => std::fs::File::create(out).and_then(|f| table.write_csv(std::io::BufWriter::new(f))),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            table.write_csv(&mut lock).and_then(|_| lock.flush())
        }
    };
    written.map_err(|e| {
        eprintln!("error: writing output: {e}");
        ExitCode::from(EXIT_INVALID)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sweep { scenario, output } => execute(scenario, Mode::Sweep, output.as_deref()),
        Command::Simulate { scenario, output } => execute(scenario, Mode::Simulate, output.as_deref()),
        Command::Validate { scenario } => load(scenario, None).map(|sc| {
            println!("ok: {:?} scenario, columns {}", sc.mode, sc.all_columns().join(","));
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
