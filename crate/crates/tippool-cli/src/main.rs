//! Command-line harness: analytic curves, simulation sweeps, model/simulation
//! comparisons and a quarantine pipeline walkthrough.
//!
//! Parameters come from defaults, then an optional config file, then flags
//! (flags win). See `tippool --help` and the `config` module for the schema.

use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand};

use tippool::config::{parse_classes, parse_fractions, Overrides};
use tippool::experiment::{self, describe_event};
use tippool::{ExperimentConfig, Mode};

#[derive(Parser, Debug)]
#[command(
    name = "tippool",
    about = "Tip pool size prediction and simulation for DAGs with delay classes",
    version
)]
struct Cli {
    /// Config file (flat `key = value` lines); flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Total arrival rate in messages per second.
    #[arg(long, global = true)]
    rate: Option<f64>,

    /// Short-class (network and processing) delay h in seconds.
    #[arg(long, global = true)]
    base_delay: Option<f64>,

    /// Extra value-message delay d_Q in seconds.
    #[arg(long, global = true)]
    quarantine: Option<f64>,

    /// Number of parents k referenced per message.
    #[arg(long, global = true)]
    parents: Option<u32>,

    /// Value fraction p for single-point runs.
    #[arg(long, global = true)]
    value_fraction: Option<f64>,

    /// Sweep points: a comma list (`0,0.5,1`) or a range (`0:1:0.1`).
    #[arg(long, global = true)]
    fractions: Option<String>,

    /// General model override: `delay:parents:fraction` triples,
    /// comma-separated (analytic and simulate modes only).
    #[arg(long, global = true)]
    classes: Option<String>,

    /// Message arrivals per simulation run.
    #[arg(long, global = true)]
    arrivals: Option<u64>,

    /// Base seed; sweep points derive their own seeds from it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Fraction of simulated time discarded as warm-up.
    #[arg(long, global = true)]
    warmup: Option<f64>,

    /// Adapt the parent count per message instead of keeping it fixed.
    #[arg(long, global = true)]
    adaptive: bool,

    /// Parent count ceiling for the adaptive controller.
    #[arg(long, global = true)]
    k_max: Option<u32>,

    /// Output directory for report.csv, summary.json and chart.svg.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Skip the SVG chart.
    #[arg(long, global = true)]
    no_svg: bool,

    #[command(subcommand)]
    mode: Option<ModeCommand>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum ModeCommand {
    /// Solve the model over the sweep fractions; no simulation.
    Analytic,
    /// One simulation run at --value-fraction.
    Simulate,
    /// One simulation per sweep fraction.
    Sweep,
    /// Sweep plus a model-agreement summary.
    Compare,
    /// Walk scripted transactions through the quarantine pipeline.
    QuarantineDemo,
}

impl From<ModeCommand> for Mode {
    fn from(cmd: ModeCommand) -> Self {
        match cmd {
            ModeCommand::Analytic => Mode::Analytic,
            ModeCommand::Simulate => Mode::Simulate,
            ModeCommand::Sweep => Mode::Sweep,
            ModeCommand::Compare => Mode::Compare,
            ModeCommand::QuarantineDemo => Mode::QuarantineDemo,
        }
    }
}

fn overrides_from(cli: &Cli) -> anyhow::Result<Overrides> {
    Ok(Overrides {
        mode: cli.mode.map(Mode::from),
        rate: cli.rate,
        base_delay: cli.base_delay,
        quarantine: cli.quarantine,
        parents: cli.parents,
        value_fraction: cli.value_fraction,
        fractions: cli
            .fractions
            .as_deref()
            .map(|v| parse_fractions("fractions", v))
            .transpose()?,
        classes: cli
            .classes
            .as_deref()
            .map(|v| parse_classes("classes", v))
            .transpose()?,
        arrivals: cli.arrivals,
        seed: cli.seed,
        warmup: cli.warmup,
        adaptive: cli.adaptive.then_some(true),
        k_max: cli.k_max,
        out_dir: cli.out_dir.clone(),
        svg: cli.no_svg.then_some(false),
    })
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let overrides = overrides_from(&cli)?;
    let config = ExperimentConfig::load(cli.config.as_deref(), &overrides)
        .context("invalid configuration")?;
    let (artifacts, written) = experiment::run(&config).context("run failed")?;

    if config.mode == Mode::QuarantineDemo {
        println!("quarantine walkthrough (d_Q = {} s):", config.quarantine);
        for event in &artifacts.transcript {
            println!("  {}", describe_event(event));
        }
    } else {
        println!(
            "{:>5}  {:>12}  {:>12}  {:>12}  {:>6}  {:>9}",
            "p", "L_analytic", "L_sim_mean", "L_sim_std", "k", "rel_err"
        );
        for row in &artifacts.report.rows {
            println!(
                "{:>5.2}  {:>12.3}  {:>12}  {:>12}  {:>6}  {:>9}",
                row.p,
                row.l_analytic,
                row.l_sim_mean
                    .map(|v| format!("{v:.3}"))
                    .unwrap_or_else(|| "-".into()),
                row.l_sim_stddev
                    .map(|v| format!("{v:.3}"))
                    .unwrap_or_else(|| "-".into()),
                row.k_used,
                row.rel_error
                    .map(|v| format!("{:.2}%", v * 100.0))
                    .unwrap_or_else(|| "-".into()),
            );
        }
        if config.mode == Mode::Compare {
            let aggregates = tippool::report::Aggregates::from_report(&artifacts.report);
            match (aggregates.max_rel_error, aggregates.mean_rel_error) {
                (Some(max), Some(mean)) => println!(
                    "model agreement over {} points: max rel error {:.2}%, mean {:.2}%",
                    aggregates.points,
                    max * 100.0,
                    mean * 100.0
                ),
                _ => println!("no simulated points to compare"),
            }
        }
    }
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}
