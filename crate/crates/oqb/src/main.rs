use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use oqb::commands::{cmd_eval, cmd_simulate, cmd_sweep, cmd_train, render_figure};
use oqb::config::{RunConfig, StaticControl};
use oqb::plot::plot_files;
use oqb::{Error, Result};

#[derive(Parser)]
#[command(
    name = "oqb",
    version,
    about = "Open quantum battery simulator and RL charging controller"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One episode with fixed (kappa, eta).
    Simulate(RunArgs),
    /// Train the recurrent DDPG controller.
    Train(RunArgs),
    /// Noise-free rollouts of a trained policy.
    Eval(RunArgs),
    /// Policy rollouts over a temperature grid.
    Sweep(RunArgs),
    /// Render CSV outputs as SVG.
    Plot(PlotArgs),
}

/// Flags override the values loaded from `--config`.
#[derive(Args)]
struct RunArgs {
    /// Run configuration JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Reservoir spectral width.
    #[arg(long)]
    lambda: Option<f64>,
    /// System-reservoir coupling strength.
    #[arg(long)]
    gamma0: Option<f64>,
    /// Detuning.
    #[arg(long)]
    delta: Option<f64>,
    /// Temperature; a comma-separated list sets the eval/sweep grid.
    #[arg(long, value_delimiter = ',')]
    temp: Vec<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    dt_ctrl: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    updates: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    /// Worker threads (also capped by OQB_THREADS).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct PlotArgs {
    /// CSV files sharing one schema.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Output SVG file, or a directory to place `<first input>_<column>.svg` in.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Column on the vertical axis (heatmap value for sweeps).
    #[arg(long)]
    y: Option<String>,
    #[arg(long)]
    title: Option<String>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.lambda {
            c.point.lambda = v;
        }
        if let Some(v) = self.gamma0 {
            c.point.gamma0 = v;
        }
        if let Some(v) = self.delta {
            c.point.delta = v;
        }
        if let Some(&first) = self.temp.first() {
            c.point.temperature = first;
            c.temperatures = self.temp.clone();
        }
        match (self.kappa, self.eta, c.control) {
            (None, None, _) => {}
            (Some(kappa), Some(eta), _) => c.control = Some(StaticControl { kappa, eta }),
            (k, e, Some(prev)) => {
                c.control = Some(StaticControl {
                    kappa: k.unwrap_or(prev.kappa),
                    eta: e.unwrap_or(prev.eta),
                })
            }
            (_, _, None) => {
                return Err(Error::Config(
                    "--kappa and --eta must be given together".into(),
                ))
            }
        }
        if let Some(v) = self.t_end {
            c.env.t_end = v;
        }
        if let Some(v) = self.dt_ctrl {
            c.env.dt_ctrl = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = &self.checkpoint {
            c.checkpoint = Some(v.clone());
        }
        if let Some(v) = &self.out {
            c.out = Some(v.clone());
        }
        if let Some(v) = self.updates {
            c.train.n_updates = v;
        }
        if let Some(v) = self.batch {
            c.train.batch = v;
        }
        if let Some(v) = self.workers {
            c.workers = Some(v);
        }
        Ok(c)
    }
}

fn report_figure(config: &RunConfig, inputs: &[PathBuf]) -> Result<()> {
    if let Some(path) = render_figure(config, inputs)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => {
            let config = args.resolve()?;
            let rows = cmd_simulate(&config)?;
            let path = config.out_dir().join("trajectory.csv");
            println!("wrote {} ({} rows)", path.display(), rows.len());
            report_figure(&config, &[path])
        }
        Command::Train(args) => {
            let config = args.resolve()?;
            let summary = cmd_train(&config)?;
            println!(
                "trained {} updates ({} episodes, {} dropped); wrote {}",
                summary.trainer.update_count(),
                summary.trainer.episodes_generated(),
                summary.failed_episodes,
                summary.checkpoint.display()
            );
            report_figure(&config, &[config.out_dir().join("metrics.csv")])
        }
        Command::Eval(args) => {
            let config = args.resolve()?;
            let outputs = cmd_eval(&config)?;
            for o in &outputs {
                println!("wrote {}", o.path.display());
            }
            let paths: Vec<PathBuf> = outputs.into_iter().map(|o| o.path).collect();
            report_figure(&config, &paths)
        }
        Command::Sweep(args) => {
            let config = args.resolve()?;
            let rows = cmd_sweep(&config)?;
            let path = config.out_dir().join("sweep.csv");
            println!("wrote {} ({} rows)", path.display(), rows.len());
            report_figure(&config, &[path])
        }
        Command::Plot(args) => {
            let first = &args.inputs[0];
            let out = match &args.out {
                Some(p) if p.extension().is_some_and(|e| e == "svg") => p.clone(),
                dir => {
                    let stem = first
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_default();
                    let column = args.y.clone().unwrap_or_else(|| "plot".into());
                    dir.clone()
                        .unwrap_or_else(|| PathBuf::from("."))
                        .join(format!("{stem}_{column}.svg"))
                }
            };
            let path = plot_files(&args.inputs, args.y.as_deref(), args.title.as_deref(), &out)?;
            println!("wrote {}", path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
