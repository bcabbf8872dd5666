use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rkur_cli::output::Table;
use rkur_cli::{run, CliError, ExperimentConfig, ExperimentKind, Result};

#[derive(Parser)]
#[command(name = "rkur", version, about = "Response-kinetic uncertainty experiments on Lindblad models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Efficiency versus γ/Ω in the resonant zero-temperature case.
    Sweep(Common),
    /// Bound terms over uniformly sampled two-level parameters.
    Sample(Common),
    /// Bound terms at one parameter point.
    Single(Common),
    /// Trajectory ensemble statistics against counting statistics.
    Trajectories(Common),
    /// Fisher-information rate against the tilted-eigenvalue oracle.
    Crosscheck(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV; stdout when neither this nor the config names one.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    draws: Option<usize>,
    /// Worker threads; all cores by default.
    #[arg(long)]
    threads: Option<usize>,
}

impl Command {
    fn split(self) -> (ExperimentKind, Common) {
        match self {
            Command::Sweep(c) => (ExperimentKind::Sweep, c),
            Command::Sample(c) => (ExperimentKind::Sample, c),
            Command::Single(c) => (ExperimentKind::Single, c),
            Command::Trajectories(c) => (ExperimentKind::Trajectories, c),
            Command::Crosscheck(c) => (ExperimentKind::Crosscheck, c),
        }
    }
}

fn load(kind: ExperimentKind, args: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
            ExperimentConfig::from_json(&text)?
        }
        None => ExperimentConfig::new(kind),
    };
    if cfg.kind != kind {
        return Err(CliError::Config {
            field: "kind".into(),
            message: format!("config is `{}` but the subcommand is `{kind}`", cfg.kind),
        });
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(draws) = args.draws {
        cfg.draws = Some(draws);
        if let Some(t) = cfg.trajectories.as_mut() {
            t.count = draws;
        } else if kind == ExperimentKind::Trajectories {
            cfg.trajectories = Some(rkur_cli::config::TrajectorySpec { count: draws, ..Default::default() });
        }
    }
    if args.out.is_some() {
        cfg.output = args.out.clone();
    }
    Ok(cfg)
}

fn write_table(table: &Table, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|source| CliError::Io { path: p.to_path_buf(), source })?;
            let mut w = BufWriter::new(file);
            table.write(&mut w)?;
            w.flush().map_err(|source| CliError::Io { path: p.to_path_buf(), source })
        }
        None => table.write(std::io::stdout().lock()),
    }
}

fn execute(cli: Cli) -> Result<bool> {
    let (kind, args) = cli.command.split();
    let cfg = load(kind, &args)?;
    let out = run(&cfg, args.threads)?;
    write_table(&out.table, cfg.output.as_deref())?;
    if let (Some(events), Some(path)) = (&out.events, cfg.trajectories.as_ref().and_then(|t| t.events_out.as_deref())) {
        write_table(events, Some(path))?;
    }
    Ok(out.passed)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("rkur: run completed but its check failed; see the summary footer");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("rkur: {e}");
            ExitCode::FAILURE
        }
    }
}
