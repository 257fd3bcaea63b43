//! `qlink`: run protocols, sweeps and p_e optimizations from TOML configs and
//! write CSV/JSON results with a provenance manifest.

mod config;
mod report;

use std::path::PathBuf;

use anyhow::{bail, Result};
use chrono::Utc;
use clap::{Args, Parser, Subcommand, ValueEnum};
use qlink::{list_presets, optimize_pe, run_metrics, run_sweep, Objective, PePolicy};

use config::{emit, emit_config, load_config, Loaded};
use report::{render, timestamp, write_manifest, write_output, Format, Row, RunManifest};

#[derive(Parser)]
#[command(name = "qlink", version, about = "Monte Carlo simulator for transducer-linked remote entanglement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one protocol configuration.
    Run(RunArgs),
    /// Run every point of the config's `[sweep]` section.
    Sweep(RunArgs),
    /// Find the p_e that maximizes fidelity or ebit rate.
    OptimizePe {
        #[command(flatten)]
        args: RunArgs,
        #[arg(long, value_enum, default_value_t = ObjectiveArg::Fidelity)]
        objective: ObjectiveArg,
        /// Grid points per pass (at least 11); defaults to the config's `pe_grid`.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// List the built-in scenario and device presets.
    Presets {
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Print the fully resolved configuration as TOML.
    Config {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output file; a `<out>.manifest.json` is written next to it. Without
    /// it, rows go to stdout and no manifest is written.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's `trials`.
    #[arg(long)]
    trials: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Fidelity,
    Rate,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Fidelity => Objective::Fidelity,
            ObjectiveArg::Rate => Objective::Rate,
        }
    }
}

fn set_threads(threads: Option<usize>) -> Result<()> {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        bail!("--threads must be at least 1");
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    #[cfg(not(feature = "parallel"))]
    if n > 1 {
        eprintln!("warning: built without the `parallel` feature; running on one thread");
    }
    Ok(())
}

fn prepare(args: &RunArgs) -> Result<Loaded> {
    set_threads(args.threads)?;
    let mut loaded = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        loaded.set_seed(seed);
    }
    if let Some(trials) = args.trials {
        loaded.set_trials(trials);
    }
    loaded.sweep_spec().validate()?;
    Ok(loaded)
}

fn finish(args: &RunArgs, command: &str, loaded: &Loaded, rows: &[Row], started: chrono::DateTime<Utc>) -> Result<()> {
    let bytes = render(rows, args.format)?;
    let digest = write_output(args.out.as_deref(), &bytes)?;
    if let (Some(out), Some(digest)) = (&args.out, digest) {
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            master_seed: loaded.config.master_seed,
            threads: args.threads,
            config_toml: emit(loaded)?,
            started_at: timestamp(started),
            finished_at: timestamp(Utc::now()),
            outputs: vec![digest],
        };
        let path = write_manifest(out, &manifest)?;
        eprintln!("wrote {} rows to {} ({})", rows.len(), out.display(), path.display());
    }
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let started = Utc::now();
    let loaded = prepare(args)?;
    if loaded.sweep.is_some() {
        bail!("{} describes a sweep; use `qlink sweep`", args.config.display());
    }
    let mut cfg = loaded.config.clone();
    let metrics = match loaded.pe_policy {
        PePolicy::Fixed => run_metrics(&cfg)?,
        policy => {
            let objective = if policy == PePolicy::MaxFidelity { Objective::Fidelity } else { Objective::Rate };
            let best = optimize_pe(&cfg, objective, loaded.pe_grid)?;
            cfg.attempt.p_e = best.p_e;
            best.metrics
        }
    };
    finish(args, "run", &loaded, &[Row::new(&cfg, &metrics)], started)
}

fn cmd_sweep(args: &RunArgs) -> Result<()> {
    let started = Utc::now();
    let loaded = prepare(args)?;
    let rows: Vec<Row> = run_sweep(&loaded.sweep_spec())?
        .iter()
        .map(|r| Row::new(&r.config, &r.metrics))
        .collect();
    finish(args, "sweep", &loaded, &rows, started)
}

fn cmd_optimize_pe(args: &RunArgs, objective: ObjectiveArg, grid: Option<usize>) -> Result<()> {
    let started = Utc::now();
    let loaded = prepare(args)?;
    let grid = grid.unwrap_or(loaded.pe_grid);
    let best = optimize_pe(&loaded.config, objective.into(), grid)?;
    let mut cfg = loaded.config.clone();
    cfg.attempt.p_e = best.p_e;
    let fid = best.metrics.fidelity_mean.map_or("none".into(), |f| format!("{f:.6}"));
    eprintln!(
        "p_e_opt = {:.6}  fidelity = {fid}  ebit_rate_hz = {:.6e}  ({} candidates)",
        best.p_e,
        best.metrics.ebit_rate,
        best.evaluated.len()
    );
    let row = Row::new(&cfg, &best.metrics);
    if args.out.is_none() {
        eprintln!("{}", emit_config(&cfg)?.trim_end());
    }
    finish(args, "optimize-pe", &loaded, &[row], started)
}

fn cmd_presets(format: Option<Format>) -> Result<()> {
    let presets = list_presets();
    match format {
        Some(Format::Json) => println!("{}", serde_json::to_string_pretty(&presets)?),
        Some(Format::Csv) => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            w.write_record(["name", "kind", "eta", "n_add", "attempt_rate_hz", "t1_s", "t2phi_s", "description"])?;
            for p in &presets {
                let kind = serde_json::to_value(p.kind)?;
                w.write_record([
                    p.name.to_string(),
                    kind.as_str().unwrap_or_default().to_string(),
                    p.eta.to_string(),
                    p.n_add.to_string(),
                    p.attempt_rate.to_string(),
                    p.t1.to_string(),
                    p.t2phi.to_string(),
                    p.description.to_string(),
                ])?;
            }
            w.flush()?;
        }
        None => {
            println!("{:<22} {:>9} {:>7} {:>10} {:>8}  description", "name", "eta", "n_add", "rate_hz", "t1_s");
            for p in &presets {
                println!(
                    "{:<22} {:>9.3e} {:>7} {:>10.3e} {:>8}  {}",
                    p.name, p.eta, p.n_add, p.attempt_rate, p.t1, p.description
                );
            }
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::OptimizePe { args, objective, grid } => cmd_optimize_pe(&args, objective, grid),
        Command::Presets { format } => cmd_presets(format),
        Command::Config { config } => {
            print!("{}", emit(&load_config(&config)?)?);
            Ok(())
        }
    }
}
