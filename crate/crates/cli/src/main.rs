use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use stochlab_cli::config::Source;
use stochlab_cli::experiments::{find, template, REGISTRY};
use stochlab_cli::output::{resolve_out_dir, RunContext, RunManifest};
use stochlab_cli::plot::plot_data;

const EXIT_FLAGGED: u8 = 2;

#[derive(Parser)]
#[command(
    name = "stochlab",
    version,
    about = "Run stochastic-dynamics experiments from config files"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML or JSON config.
    Run {
        #[arg(long, short)]
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; defaults to the config's `output`, then
        /// `$STOCHLAB_OUT/<experiment>`, then `runs/<experiment>`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for Monte Carlo loops (all cores by default).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List the available experiments.
    List,
    /// Print a config with every default spelled out.
    Template { experiment: String },
    /// Flatten a run's CSV outputs into one tidy table.
    PlotData {
        run_dir: PathBuf,
        /// Write here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(config: &Path, seed: Option<u64>, out: Option<&Path>, threads: Option<usize>) -> Result<ExitCode> {
    if let Some(n) = threads {
        anyhow::ensure!(n > 0, "--threads must be positive");
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let source = Source::read(config)?;
    let name = source.experiment_name()?;
    let entry = find(&name).ok_or_else(|| stochlab_cli::config::ConfigError::UnknownExperiment {
        path: source.path.clone(),
        name: name.clone(),
    })?;
    let prepared = entry.prepare(&source, seed)?;
    let dir = resolve_out_dir(out, prepared.output.as_deref(), prepared.experiment);
    let manifest = RunManifest::start(prepared.experiment, prepared.resolved.clone(), prepared.seed);
    let mut ctx = RunContext::new(prepared.seed);
    prepared
        .run(&mut ctx)
        .with_context(|| format!("experiment '{name}' failed"))?;
    let manifest = ctx.commit(&dir, manifest)?;
    println!("{name}: {} -> {}", manifest.status, dir.display());
    for o in &manifest.outputs {
        println!("  {} ({} bytes)", o.file, o.bytes);
    }
    for f in &manifest.flags {
        eprintln!("flag: {f}");
    }
    Ok(if manifest.flags.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FLAGGED)
    })
}

/// Writes to stdout; a closed pipe (`| head`) is not an error.
fn write_stdout(text: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn list() {
    let width = REGISTRY.iter().map(|e| e.name.len()).max().unwrap_or(0);
    for e in REGISTRY {
        let crit = e.criterion.map_or(String::new(), |c| format!(" [criterion {c}]"));
        println!("{:width$}  {}{crit}", e.name, e.about);
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            seed,
            out,
            threads,
        } => run(&config, seed, out.as_deref(), threads),
        Command::List => {
            list();
            Ok(ExitCode::SUCCESS)
        }
        Command::Template { experiment } => match template(&experiment) {
            Some(t) => write_stdout(&t).map(|()| ExitCode::SUCCESS),
            None => Err(anyhow::anyhow!(
                "unknown experiment '{experiment}' (see `stochlab list`)"
            )),
        },
        Command::PlotData { run_dir, out } => plot_data(&run_dir).and_then(|csv| {
            match out {
                Some(p) => std::fs::write(&p, csv).with_context(|| format!("writing {}", p.display()))?,
                None => write_stdout(&csv)?,
            }
            Ok(ExitCode::SUCCESS)
        }),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
