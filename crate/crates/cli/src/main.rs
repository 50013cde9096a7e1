use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use calabi_cli::error::{write_file, EXIT_IO, EXIT_OK, EXIT_USAGE};
use calabi_cli::{analyze, config, plot, run, SnapshotFile};
use calabi_core::{flow, legendre};
use clap::{Parser, Subcommand, ValueEnum};

/// Calabi flow experiments on flat complex tori.
#[derive(Parser)]
#[command(name = "calabi", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    ToKahler,
    ToSymplectic,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the flow for a JSON config and write CSV, snapshots and a manifest.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print curvature and energy functionals of a snapshot as JSON.
    Analyze {
        snapshot: PathBuf,
        /// Random segments for the M-condition estimate.
        #[arg(long, default_value_t = 32)]
        m_segments: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Rescale a snapshot around its curvature maximum so that |Rm| = 1 there.
    Blowup {
        snapshot: PathBuf,
        /// Output file (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Legendre-transform a snapshot.
    Legendre {
        snapshot: PathBuf,
        #[arg(long, value_enum)]
        direction: Direction,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plot CSV columns against t as SVG.
    Plot {
        csv: PathBuf,
        /// Comma-separated column names.
        #[arg(long, value_delimiter = ',', required = true)]
        cols: Vec<String>,
        /// Logarithmic y axis.
        #[arg(long)]
        log: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Writes a line to stdout; a closed pipe (e.g. `| head`) is not an error.
fn say(text: &str) -> Result<()> {
    match writeln!(io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn emit(snap: &SnapshotFile, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => snap.write(path)?,
        None => say(&snap.to_json())?,
    }
    Ok(())
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run { config, out } => {
            let cfg = config::parse_config(&config)?;
            let outcome = run::run_to_dir(&cfg, &out)
                .with_context(|| format!("run of {} failed", config.display()))?;
            say(&format!(
                "{}: t = {:?}, {} steps, Ca = {:?}",
                outcome.termination.as_str(),
                outcome.final_t,
                outcome.accepted_steps,
                outcome.final_ca
            ))?;
        }
        Command::Analyze {
            snapshot,
            m_segments,
            seed,
        } => {
            let u = SnapshotFile::read(&snapshot)?.to_potential()?;
            let report = analyze::analyze(&u, m_segments, seed)?;
            say(&serde_json::to_string_pretty(&report)?)?;
        }
        Command::Blowup { snapshot, out } => {
            let snap = SnapshotFile::read(&snapshot)?;
            let u = snap.to_potential()?;
            let b = flow::blowup_potential(&u).context("blow-up failed")?;
            eprintln!(
                "lam = {:?} at {:?}; time dilation {:?}",
                b.lam, b.center, b.time_dilation
            );
            emit(&SnapshotFile::from_potential(snap.t, &b.potential), out.as_deref())?;
        }
        Command::Legendre {
            snapshot,
            direction,
            out,
        } => {
            let snap = SnapshotFile::read(&snapshot)?;
            let result = match direction {
                Direction::ToKahler => SnapshotFile::from_kahler(snap.t, &legendre::to_kahler(&snap.to_potential()?)?),
                Direction::ToSymplectic => {
                    SnapshotFile::from_potential(snap.t, &legendre::to_symplectic(&snap.to_kahler()?)?)
                }
            };
            emit(&result, out.as_deref())?;
        }
        Command::Plot { csv, cols, log, out } => {
            let text = std::fs::read_to_string(&csv)
                .map_err(|source| calabi_cli::Error::Read { path: csv.clone(), source })?;
            let table = plot::Table::parse(&text)?;
            let svg = plot::render_svg(&table, &cols, log)?;
            write_file(&out, &svg)?;
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<calabi_cli::Error>() {
            return e.exit_code();
        }
        if let Some(e) = cause.downcast_ref::<calabi_core::Error>() {
            return calabi_cli::Error::Numerical(e.clone()).exit_code();
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return EXIT_IO;
        }
    }
    EXIT_USAGE
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            return ExitCode::from(code as u8);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
