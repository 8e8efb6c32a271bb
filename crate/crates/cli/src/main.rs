use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use genusflow_cli::presets::{self, PRESETS};
use genusflow_cli::report::to_json;
use genusflow_cli::{run, ArtifactKind, CliError, Command, Overrides, Scenario};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "genusflow",
    version,
    about = "Flows on genus-p surfaces: synthesis, Poincaré maps, orbits, attractors"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the field and audit side matching and cusp vanishing
    Synth(Common),
    /// Integrate one trajectory
    Integrate(Common),
    /// Iterate the Poincaré map from the seeds
    Poincare(Common),
    /// Find periodic orbits and classify their multipliers
    Orbit(Common),
    /// Estimate the attracting set on a grid
    Attractor(Common),
    /// Locate equilibria and check the index sum
    Index(Common),
    /// Check that the field points inward on the check curves
    Check(Common),
    /// Built-in scenarios
    Preset {
        #[command(subcommand)]
        action: PresetCmd,
    },
}

#[derive(Subcommand)]
enum PresetCmd {
    /// List preset names
    List,
    /// Print the scenario a preset expands to
    Show { name: String },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Svg,
    Json,
}

#[derive(Args)]
struct Common {
    /// Scenario TOML file
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Grid size NX,NY for attractor and index
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    /// Map iterations for poincare and attractor
    #[arg(long)]
    iters: Option<usize>,
    /// Start or seed point X,Y, replacing the scenario's seeds
    #[arg(long, value_parser = parse_seed, allow_hyphen_values = true)]
    seed: Option<(f64, f64)>,
    /// Orbit type A,B: deck power and number of periods
    #[arg(long, value_parser = parse_ab, allow_hyphen_values = true)]
    ab: Option<(i64, u32)>,
    /// Only write this kind of artifact (report.json is always written)
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn pair<A: std::str::FromStr, B: std::str::FromStr>(s: &str, what: &str) -> Result<(A, B), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected {what}"))?;
    match (a.trim().parse(), b.trim().parse()) {
        (Ok(a), Ok(b)) => Ok((a, b)),
        _ => Err(format!("expected {what}, got '{s}'")),
    }
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    pair(s, "NX,NY")
}

fn parse_seed(s: &str) -> Result<(f64, f64), String> {
    pair(s, "x,y")
}

fn parse_ab(s: &str) -> Result<(i64, u32), String> {
    pair(s, "a,b")
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let mut tmp =
        tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating a file in {}", dir.display()))?;
    std::io::Write::write_all(&mut tmp, bytes).with_context(|| format!("writing {name}"))?;
    tmp.persist(dir.join(name)).with_context(|| format!("saving {name}"))?;
    Ok(())
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("GENUSFLOW_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| CliError::input(format!("GENUSFLOW_THREADS must be a positive integer, got '{v}'")))?;
        if n == 0 {
            return Err(CliError::input("GENUSFLOW_THREADS must be at least 1").into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("starting worker threads")?;
    }
    Ok(())
}

/// Returns the exit code for a completed analysis: 0 or 1.
fn execute(cmd: Command, args: &Common) -> Result<u8> {
    let started = Instant::now();
    let sc = Scenario::load(&args.scenario)?;
    let ov = Overrides { grid: args.grid, iters: args.iters, seed: args.seed, ab: args.ab };
    let outcome = run(cmd, &sc, &ov)?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    for a in &outcome.artifacts {
        let keep = match args.format {
            None => true,
            Some(Format::Csv) => a.kind == ArtifactKind::Csv,
            Some(Format::Svg) => a.kind == ArtifactKind::Svg,
            Some(Format::Json) => false,
        };
        if keep {
            write_atomic(&args.out, a.name, &a.bytes)?;
        }
    }
    let report = json!({
        "command": {
            "name": cmd.name(),
            "overrides": ov.echo(),
        },
        "scenario_sha256": sc.hash,
        "status": if outcome.failure.is_some() { "fail" } else { "pass" },
        "failure": outcome.failure,
        "results": outcome.results,
    });
    write_atomic(&args.out, "report.json", &to_json(&report))?;
    eprintln!("{} finished in {:.3} s", cmd.name(), started.elapsed().as_secs_f64());
    match &outcome.failure {
        Some(msg) => {
            eprintln!("analysis failed: {msg}");
            Ok(1)
        }
        None => Ok(0),
    }
}

fn dispatch(cli: Cli) -> Result<u8> {
    configure_threads()?;
    let (cmd, args) = match cli.command {
        Cmd::Synth(a) => (Command::Synth, a),
        Cmd::Integrate(a) => (Command::Integrate, a),
        Cmd::Poincare(a) => (Command::Poincare, a),
        Cmd::Orbit(a) => (Command::Orbit, a),
        Cmd::Attractor(a) => (Command::Attractor, a),
        Cmd::Index(a) => (Command::Index, a),
        Cmd::Check(a) => (Command::Check, a),
        Cmd::Preset { action: PresetCmd::List } => {
            for p in PRESETS {
                println!("{:<20} {}", p.name, p.summary);
            }
            return Ok(0);
        }
        Cmd::Preset { action: PresetCmd::Show { name } } => {
            let table = presets::expand(&name, &toml::Table::new())?;
            print!("{}", toml::to_string(&table).context("rendering preset")?);
            return Ok(0);
        }
    };
    execute(cmd, &args)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let code = e.downcast_ref::<CliError>().map_or(1, CliError::exit_code);
            eprintln!("error: {e:#}");
            ExitCode::from(code as u8)
        }
    }
}
