//! The experiment harness behind the CLI: dispatches a validated
//! [`ExperimentConfig`] to the model, the simulator or the quarantine demo
//! and renders the output files.
//!
//! In adaptive runs the analytic column is solved at the parent count the
//! controller converged to for that point, so `rel_error` stays meaningful.

use std::path::PathBuf;

use thiserror::Error;

use crate::chart::{self, Curve, Scatter};
use crate::config::{ConfigError, ExperimentConfig, Mode};
use crate::controller::{AdaptiveParentPolicy, ControllerConfig, ControllerError};
use crate::model::{
    l_minus, l_plus, solve_pool_size, solve_pool_size_two_class, ModelError, TwoClassParams,
};
use crate::quarantine::{
    LikedWinsResolver, Opinion, PipelineEvent, QuarantineError, QuarantinePipeline, TxId,
};
use crate::report::{Aggregates, Summary, SweepReport, SweepRow};
use crate::sim::{self, SimConfig, SimError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error(transparent)]
    Quarantine(#[from] QuarantineError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

pub const REPORT_CSV: &str = "report.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const CHART_SVG: &str = "chart.svg";

/// Everything a run produces, rendered but not yet written.
#[derive(Debug)]
pub struct RunArtifacts {
    pub report: SweepReport,
    pub transcript: Vec<PipelineEvent>,
    pub csv: Option<String>,
    pub json: String,
    pub svg: Option<String>,
}

/// Builds all artifacts for the configured mode without touching the
/// filesystem.
pub fn build(config: &ExperimentConfig) -> Result<RunArtifacts, ExperimentError> {
    config.validate()?;
    let (report, transcript) = match config.mode {
        Mode::Analytic => (analytic_report(config)?, Vec::new()),
        Mode::Simulate => (simulate_report(config)?, Vec::new()),
        Mode::Sweep | Mode::Compare => (sweep_report(config)?, Vec::new()),
        Mode::QuarantineDemo => (SweepReport::new(Vec::new()), quarantine_demo(config)?),
    };
    let csv = match config.mode {
        Mode::QuarantineDemo => None,
        _ => Some(report.to_csv()),
    };
    let svg = if config.svg && config.mode != Mode::QuarantineDemo {
        Some(render_chart(config, &report)?)
    } else {
        None
    };
    let summary = Summary {
        config,
        aggregates: Aggregates::from_report(&report),
        rows: &report.rows,
        transcript: if transcript.is_empty() {
            None
        } else {
            Some(&transcript)
        },
    };
    let json = summary.to_json();
    Ok(RunArtifacts {
        report,
        transcript,
        csv,
        json,
        svg,
    })
}

/// Builds the artifacts and writes them under `config.out_dir`. Returns the
/// artifacts and the written paths.
pub fn run(config: &ExperimentConfig) -> Result<(RunArtifacts, Vec<PathBuf>), ExperimentError> {
    let artifacts = build(config)?;
    let dir = &config.out_dir;
    std::fs::create_dir_all(dir).map_err(|source| ExperimentError::Io {
        path: dir.clone(),
        source,
    })?;
    let mut written = Vec::new();
    let mut write = |name: &str, contents: &str| -> Result<(), ExperimentError> {
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|source| ExperimentError::Io {
            path: path.clone(),
            source,
        })?;
        written.push(path);
        Ok(())
    };
    if let Some(csv) = &artifacts.csv {
        write(REPORT_CSV, csv)?;
    }
    write(SUMMARY_JSON, &artifacts.json)?;
    if let Some(svg) = &artifacts.svg {
        write(CHART_SVG, svg)?;
    }
    Ok((artifacts, written))
}

fn two_class_at(config: &ExperimentConfig, p: f64) -> Result<TwoClassParams, ExperimentError> {
    Ok(TwoClassParams::new(
        config.rate,
        config.base_delay,
        config.quarantine,
        config.parents,
        p,
    )?)
}

fn analytic_row(config: &ExperimentConfig, p: f64, k: u32) -> Result<SweepRow, ExperimentError> {
    let params = TwoClassParams::new(config.rate, config.base_delay, config.quarantine, k, p)?;
    Ok(SweepRow::analytic(
        p,
        solve_pool_size_two_class(&params)?,
        l_minus(&params),
        l_plus(&params),
        k,
    ))
}

fn analytic_report(config: &ExperimentConfig) -> Result<SweepReport, ExperimentError> {
    if config.classes.is_some() {
        return Ok(SweepReport::new(vec![general_model_row(config, None)?]));
    }
    let rows = config
        .fractions
        .iter()
        .map(|&p| analytic_row(config, p, config.parents))
        .collect::<Result<_, _>>()?;
    Ok(SweepReport::new(rows))
}

/// Row for a general n-class run: `p` is the combined fraction of the
/// delayed classes (everything beyond the first); the two-class
/// linearization columns stay empty, and `k_used` is 0 when the classes
/// disagree on their parent count.
fn general_model_row(
    config: &ExperimentConfig,
    simulated: Option<(f64, f64)>,
) -> Result<SweepRow, ExperimentError> {
    let params = config.model_params()?;
    let p: f64 = params.classes().iter().skip(1).map(|c| c.fraction()).sum();
    let first_k = params.classes()[0].parent_count();
    let k_used = if params.classes().iter().all(|c| c.parent_count() == first_k) {
        first_k
    } else {
        0
    };
    let mut row = SweepRow {
        p,
        l_analytic: solve_pool_size(&params)?,
        l_minus: None,
        l_plus: None,
        l_sim_mean: None,
        l_sim_stddev: None,
        k_used,
        rel_error: None,
    };
    if let Some((mean, stddev)) = simulated {
        row = row.with_simulation(mean, stddev);
    }
    Ok(row)
}

fn simulate_report(config: &ExperimentConfig) -> Result<SweepReport, ExperimentError> {
    let params = config.model_params()?;
    let mut sim_config = SimConfig::new(params, config.arrivals, config.seed);
    sim_config.warmup_fraction = config.warmup;
    if config.classes.is_some() {
        let result = sim::run_simulation(&sim_config)?;
        let row = general_model_row(
            config,
            Some((result.mean_pool_size, result.pool_size_stddev)),
        )?;
        return Ok(SweepReport::new(vec![row]));
    }
    let p = config.value_fraction;
    let (result, k_used) = if config.adaptive {
        let controller = ControllerConfig::new(config.base_delay, config.quarantine, config.k_max)?;
        let mut policy = AdaptiveParentPolicy::with_default_window(controller);
        let result = sim::run_simulation_with_policy(&sim_config, &mut policy)?;
        (result, policy.dominant_k())
    } else {
        (sim::run_simulation(&sim_config)?, config.parents)
    };
    let row = analytic_row(config, p, k_used)?
        .with_simulation(result.mean_pool_size, result.pool_size_stddev);
    Ok(SweepReport::new(vec![row]))
}

fn sweep_report(config: &ExperimentConfig) -> Result<SweepReport, ExperimentError> {
    let base_params = two_class_at(config, 0.0)?.to_model_params();
    let mut base = SimConfig::new(base_params, config.arrivals, config.seed);
    base.warmup_fraction = config.warmup;
    let mut rows = Vec::with_capacity(config.fractions.len());
    if config.adaptive {
        let controller = ControllerConfig::new(config.base_delay, config.quarantine, config.k_max)?;
        let runs = sim::sweep_with_policy(&base, &config.fractions, |_| {
            AdaptiveParentPolicy::with_default_window(controller)
        })?;
        for (p, result, policy) in runs {
            let k_used = policy.dominant_k();
            rows.push(
                analytic_row(config, p, k_used)?
                    .with_simulation(result.mean_pool_size, result.pool_size_stddev),
            );
        }
    } else {
        for (p, result) in sim::sweep(&base, &config.fractions)? {
            rows.push(
                analytic_row(config, p, config.parents)?
                    .with_simulation(result.mean_pool_size, result.pool_size_stddev),
            );
        }
    }
    Ok(SweepReport::new(rows))
}

fn render_chart(
    config: &ExperimentConfig,
    report: &SweepReport,
) -> Result<String, ExperimentError> {
    let mut curves = Vec::new();
    let mut scatters = Vec::new();
    if config.classes.is_none() {
        let p_hi = config
            .fractions
            .iter()
            .cloned()
            .fold(0.0, f64::max)
            .max(0.01);
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 * p_hi / 100.0).collect();
        if config.adaptive {
            // Dashed fixed-k curves as references behind the adaptive points.
            let mut reference: Vec<u32> = vec![2, 4, config.k_max];
            reference.dedup();
            for (i, k) in reference
                .into_iter()
                .filter(|&k| k <= config.k_max)
                .enumerate()
            {
                curves.push(Curve {
                    label: format!("model, fixed k={k}"),
                    color: chart::PALETTE[(i + 2) % chart::PALETTE.len()],
                    dashed: true,
                    points: solve_curve(config, k, &grid)?,
                });
            }
        } else {
            curves.push(Curve {
                label: format!("model, k={}", config.parents),
                color: chart::PALETTE[0],
                dashed: false,
                points: solve_curve(config, config.parents, &grid)?,
            });
        }
    }
    let simulated: Vec<(f64, f64, f64)> = report
        .rows
        .iter()
        .filter_map(|r| {
            r.l_sim_mean
                .map(|m| (r.p, m, r.l_sim_stddev.unwrap_or(0.0)))
        })
        .collect();
    if !simulated.is_empty() {
        scatters.push(Scatter {
            label: if config.adaptive {
                "simulated, adaptive k".into()
            } else {
                "simulated".into()
            },
            color: chart::PALETTE[1],
            points: simulated,
        });
    }
    let title = format!(
        "Tip pool size vs value fraction (rate {}, h {}, d_Q {})",
        config.rate, config.base_delay, config.quarantine
    );
    Ok(chart::render(
        &title,
        "value fraction p",
        "tip pool size L",
        &curves,
        &scatters,
    ))
}

fn solve_curve(
    config: &ExperimentConfig,
    k: u32,
    grid: &[f64],
) -> Result<Vec<(f64, f64)>, ExperimentError> {
    grid.iter()
        .map(|&p| {
            let params =
                TwoClassParams::new(config.rate, config.base_delay, config.quarantine, k, p)?;
            Ok((p, solve_pool_size_two_class(&params)?))
        })
        .collect()
}

/// Scripted quarantine walkthrough: a lone transaction, a conflict landing
/// after the opinion window (resolver admits the first spender), and a
/// conflict inside the opinion window (both rejected).
fn quarantine_demo(config: &ExperimentConfig) -> Result<Vec<PipelineEvent>, ExperimentError> {
    let d_q = config.quarantine;
    let mut pipeline = QuarantinePipeline::new(d_q)?;
    let resolver = LikedWinsResolver;
    let mut arrivals = vec![
        (TxId(1), crate::quarantine::ConflictKey(1), 0.0),
        (TxId(2), crate::quarantine::ConflictKey(2), 0.0),
        (TxId(4), crate::quarantine::ConflictKey(3), 0.0),
        (TxId(5), crate::quarantine::ConflictKey(3), 0.25 * d_q),
        (TxId(3), crate::quarantine::ConflictKey(2), 0.75 * d_q),
    ];
    arrivals.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)));
    let mut events = Vec::new();
    for (tx, key, t) in arrivals {
        events.extend(pipeline.advance_before(t, &resolver));
        let entry = pipeline.on_arrival(tx, key, t)?;
        events.push(PipelineEvent::Arrived {
            tx,
            key,
            at: t,
            opinion: entry.opinion(),
        });
    }
    events.extend(pipeline.drain(&resolver));
    Ok(events)
}

/// Human-readable transcript line for one demo event.
pub fn describe_event(event: &PipelineEvent) -> String {
    match *event {
        PipelineEvent::Arrived {
            tx,
            key,
            at,
            opinion,
        } => {
            let note = match opinion {
                Opinion::Disliked => "disliked on arrival (output already spent)",
                _ => "opinion unknown",
            };
            format!(
                "t={at:<8.3} tx{} arrives spending output {}; {note}",
                tx.0, key.0
            )
        }
        PipelineEvent::OpinionSet { tx, at, opinion } => {
            let what = match opinion {
                Opinion::Liked => "liked (no conflict inside the half-window)",
                Opinion::Disliked => "disliked (conflict inside the half-window)",
                Opinion::Unknown => "unknown",
            };
            format!("t={at:<8.3} tx{} opinion: {what}", tx.0)
        }
        PipelineEvent::AdmittedDirect { tx, at } => {
            format!(
                "t={at:<8.3} tx{} admitted to the tip pool (never contested)",
                tx.0
            )
        }
        PipelineEvent::AdmittedByResolver { tx, at } => {
            format!("t={at:<8.3} tx{} admitted by the conflict resolver", tx.0)
        }
        PipelineEvent::Rejected { tx, at } => {
            format!("t={at:<8.3} tx{} rejected", tx.0)
        }
    }
}
