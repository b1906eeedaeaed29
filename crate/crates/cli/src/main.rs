use clap::Parser;
use edq_cli::error::{self, CliError};
use edq_cli::output::Provenance;
use edq_cli::scenario::{self, Command};
use edq_cli::commands;
use std::path::PathBuf;
use std::process::ExitCode;

/// Diffusion approximations, simulation and staffing for overloaded
/// many-server queues with abandonment.
#[derive(Debug, Parser)]
#[command(name = "edq", version)]
struct Args {
    /// Subcommand to run; the scenario file must hold the matching payload.
    #[arg(value_enum)]
    command: Command,
    /// Scenario JSON file.
    scenario: PathBuf,
    /// Output directory (overrides the scenario's `output`). Without one the
    /// main table goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for every random component (overrides the scenario's `seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the parallel core.
    #[arg(long, env = "EDQ_THREADS")]
    threads: Option<usize>,
    /// Validate the scenario and print the resolved configuration without
    /// computing anything.
    #[arg(long)]
    dry_run: bool,
}

fn run(args: Args) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.scenario)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", args.scenario.display())))?;
    let mut sc = scenario::parse(&text)?;
    let seed = args.seed.or(sc.seed).unwrap_or(0);
    sc.resolve_seed(seed);
    if let Some(out) = &args.out {
        sc.output = Some(out.clone());
    }
    sc.validate(args.command)?;
    let prov = Provenance::new(args.command.name(), &sc);

    if args.dry_run {
        let mut s = serde_json::to_string_pretty(&prov).map_err(error::computation)?;
        s.push('\n');
        print!("{s}");
        return Ok(());
    }

    if let Some(t) = args.threads {
        if t == 0 {
            return Err(CliError::Validation("--threads must be positive".into()));
        }
        #[cfg(feature = "parallel")]
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(error::computation)?;
    }

    let outputs = commands::run(args.command, &sc, &prov)?;
    outputs.write(sc.output.as_deref(), &prov)?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("edq: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
