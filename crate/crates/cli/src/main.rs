use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use diffbench::bench::{
    diff_demo, emit_plots, plan_cells, run_matrix_into, validate_config, ConfigError, DatasetEntry, ExperimentConfig,
    PlotKind, ReportBundle,
};
use diffbench::datasets::DatasetSpec;
use diffbench::diffmethods::DiffMethod;

const WORKERS_ENV: &str = "DIFFBENCH_WORKERS";

#[derive(Parser)]
#[command(name = "diffbench", version, about = "Numerical differentiation benchmark for equation discovery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every cell of an experiment config.
    Run {
        config: PathBuf,
        /// Worker threads; falls back to DIFFBENCH_WORKERS, then the CPU count.
        #[arg(long)]
        workers: Option<usize>,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Regenerate figures and tables from a results directory.
    Plot {
        dir: PathBuf,
        /// coeff_boxplot, shd_error_scatter or error_table; all when omitted.
        #[arg(long = "kind")]
        kinds: Vec<String>,
        /// Where to write; defaults to the results directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config and report every problem found.
    Validate { config: PathBuf },
    /// Differentiate one dataset with one method and show errors and the
    /// discovered equation.
    DiffDemo {
        dataset: String,
        method: String,
        /// Noise level in percent.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn workers(flag: Option<usize>) -> anyhow::Result<usize> {
    if let Some(w) = flag {
        return Ok(w.max(1));
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(|w| w.max(1))
            .with_context(|| format!("{WORKERS_ENV} must be a positive integer, got `{v}`")),
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

fn load(path: &Path) -> Result<ExperimentConfig, ExitCode> {
    validate_config(path).map_err(|e| {
        match &e {
            ConfigError::Invalid(diags) => {
                eprintln!("{}: {e}", path.display());
                for d in diags {
                    eprintln!("  {d}");
                }
            }
            ConfigError::Io { .. } => eprintln!("{e}"),
        }
        ExitCode::from(1)
    })
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run { config, workers: w, output } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return Ok(code),
            };
            let dir = output.unwrap_or_else(|| cfg.output_dir.clone());
            let n = workers(w)?;
            log::info!("running {} cells on {n} worker(s)", plan_cells(&cfg).len());
            let manifest = run_matrix_into(&cfg, &dir, n).context("run failed")?;
            let failed: Vec<_> = manifest.failures().collect();
            println!(
                "{} cells, {} failed; results in {}",
                manifest.cells.len(),
                failed.len(),
                dir.display()
            );
            for f in &failed {
                eprintln!("  {}: {}", f.cell.key(), f.error.as_deref().unwrap_or("unknown error"));
            }
            Ok(if failed.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Command::Plot { dir, kinds, out } => {
            let bundle = ReportBundle::load(&dir).with_context(|| format!("reading reports from {}", dir.display()))?;
            let kinds: Vec<PlotKind> = if kinds.is_empty() {
                PlotKind::ALL.to_vec()
            } else {
                kinds.iter().map(|k| k.parse()).collect::<Result<_, _>>()?
            };
            let out = out.unwrap_or(dir);
            for kind in kinds {
                for f in emit_plots(&bundle, kind, &out)? {
                    println!("{}", out.join(f).display());
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { config } => match load(&config) {
            Ok(cfg) => {
                println!(
                    "{}: ok ({} datasets, {} methods, {} noise levels, {} repeats, {} cells)",
                    config.display(),
                    cfg.datasets.len(),
                    cfg.methods.len(),
                    cfg.noise.len(),
                    cfg.repeats,
                    plan_cells(&cfg).len()
                );
                Ok(ExitCode::SUCCESS)
            }
            Err(code) => Ok(code),
        },
        Command::DiffDemo {
            dataset,
            method,
            noise,
            seed,
        } => {
            let spec = DatasetSpec::from_key(&dataset)?;
            let method = method.parse::<DiffMethod>()?.default_spec();
            let cfg = ExperimentConfig::minimal(spec.clone());
            let entry: &DatasetEntry = &cfg.datasets[0];
            let demo = diff_demo(entry, &method, noise, seed, &cfg)?;
            let r = &demo.report;
            println!("dataset {}  method {}  noise {}%  seed {seed}", spec.kind.display_name(), method, r.cell.noise);
            println!("{:<10} {:>14} {:>14}", "derivative", "mse_full", "mse_interior");
            for (label, e) in &r.diff_errors.entries {
                println!("{label:<10} {:>14.6e} {:>14.6e}", e.mse_full, e.mse_interior);
            }
            println!("interior strip: {} nodes", r.diff_errors.strip);
            for (eq, shd) in r.equations.iter().zip(&r.shd) {
                println!("equation (SHD {shd}): {}", eq.canonical_text());
            }
            let truth: Vec<String> = demo
                .truth
                .terms
                .iter()
                .map(|(t, c)| format!("{c:+} {}", demo.truth.label(t)))
                .collect();
            println!("truth: {} = 0", truth.join(" "));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
