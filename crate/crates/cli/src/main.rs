use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use slotlab::Error;
use slotlab_cli::commands::{self, Command};
use slotlab_cli::output::write_run;
use slotlab_cli::presets;
use slotlab_cli::scenario::{OutputConfig, Scenario};

const DEFAULT_OUT: &str = "slotlab-out";

#[derive(Parser)]
#[command(name = "slotlab", version, about = "Coarse-grained phase-space measurement experiments")]
struct Cli {
    /// Scenario file (TOML).
    #[arg(long, global = true, env = "SLOTLAB_SCENARIO", conflicts_with = "builtin")]
    scenario: Option<PathBuf>,
    /// Built-in scenario: micro, macro, harmonic, quartic, cloud-chamber.
    #[arg(long, global = true, env = "SLOTLAB_BUILTIN")]
    builtin: Option<String>,
    /// Overrides the scenario seed.
    #[arg(long, global = true, env = "SLOTLAB_SEED")]
    seed: Option<u64>,
    /// Output directory (default: the scenario's, else ./slotlab-out).
    #[arg(long, global = true, env = "SLOTLAB_OUT")]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "SLOTLAB_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Projectivity, completeness and commutator checks of the slot operators.
    PovmCheck,
    /// Quantum and classical slot distributions at the output times.
    Evolve,
    /// Total-variation series between quantum and classical distributions.
    Compare,
    /// Ehrenfest-time estimates and the physical comparison table.
    Ehrenfest,
    /// Repeated-measurement trajectories and their classical agreement.
    Trajectory,
    /// Trajectory agreement over a grid of slot sides and intervals.
    Sweep,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::PovmCheck => Command::PovmCheck,
            Sub::Evolve => Command::Evolve,
            Sub::Compare => Command::Compare,
            Sub::Ehrenfest => Command::Ehrenfest,
            Sub::Trajectory => Command::Trajectory,
            Sub::Sweep => Command::Sweep,
        }
    }
}

fn load(cli: &Cli) -> slotlab::Result<Scenario> {
    let mut s = match (&cli.scenario, &cli.builtin) {
        (Some(path), _) => Scenario::from_file(path)?,
        (None, Some(name)) => presets::builtin(name)?,
        (None, None) => {
            return Err(Error::Config { field: "scenario".into(), reason: "give --scenario <file> or --builtin <name>".into() })
        }
    };
    if let Some(seed) = cli.seed {
        s.seed = seed;
    }
    if let Some(dir) = &cli.out {
        s.output = Some(OutputConfig { dir: dir.clone() });
    }
    Ok(s)
}

fn hint(e: &Error) -> &'static str {
    match e {
        Error::Stability { .. } | Error::Cfl { .. } => "reduce the time step",
        Error::BoundaryReached { .. } | Error::Escaped { .. } => "enlarge the grid or shorten the run",
        Error::Underresolved(_) => "refine the grid or the quadrature",
        _ => "check the scenario parameters",
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("SLOTLAB_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let cmd = Command::from(cli.command);
    let result = load(&cli).and_then(|s| {
        let out = commands::run(cmd, &s)?;
        let dir = s.output.as_ref().map(|o| o.dir.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        write_run(&dir, cmd.name(), &s, &out)?;
        Ok(out)
    });
    match result {
        Ok(out) => {
            for line in &out.summary {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) if e.is_numerical() => {
            eprintln!("error: {e}\nhint: {}", hint(&e));
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
