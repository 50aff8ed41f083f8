//! Report emission: the sweep CSV and the JSON summary.
//!
//! Output is rendered to strings with deterministic formatting (shortest
//! round-trip floats), so identical runs produce byte-identical files.

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::quarantine::PipelineEvent;

/// Fixed CSV header; column order is part of the output contract.
pub const CSV_HEADER: &str = "p,L_analytic,L_minus,L_plus,L_sim_mean,L_sim_stddev,k_used,rel_error";

/// One sweep point. Simulation columns are absent in analytic runs and the
/// linearization columns are absent for general n-class models.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub p: f64,
    pub l_analytic: f64,
    pub l_minus: Option<f64>,
    pub l_plus: Option<f64>,
    pub l_sim_mean: Option<f64>,
    pub l_sim_stddev: Option<f64>,
    pub k_used: u32,
    /// `|L_sim_mean - L_analytic| / L_analytic`.
    pub rel_error: Option<f64>,
}

impl SweepRow {
    pub fn analytic(p: f64, l_analytic: f64, l_minus: f64, l_plus: f64, k_used: u32) -> Self {
        Self {
            p,
            l_analytic,
            l_minus: Some(l_minus),
            l_plus: Some(l_plus),
            l_sim_mean: None,
            l_sim_stddev: None,
            k_used,
            rel_error: None,
        }
    }

    pub fn with_simulation(mut self, mean: f64, stddev: f64) -> Self {
        self.l_sim_mean = Some(mean);
        self.l_sim_stddev = Some(stddev);
        self.rel_error = Some((mean - self.l_analytic).abs() / self.l_analytic);
        self
    }
}

/// Full result set of one harness run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn new(rows: Vec<SweepRow>) -> Self {
        Self { rows }
    }

    pub fn max_rel_error(&self) -> Option<f64> {
        self.rows
            .iter()
            .filter_map(|r| r.rel_error)
            .fold(None, |acc, e| {
                Some(match acc {
                    Some(m) if m >= e => m,
                    _ => e,
                })
            })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                row.p,
                row.l_analytic,
                opt(row.l_minus),
                opt(row.l_plus),
                opt(row.l_sim_mean),
                opt(row.l_sim_stddev),
                row.k_used,
                opt(row.rel_error),
            ));
        }
        out
    }
}

fn opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

/// Aggregate statistics echoed into the JSON summary.
#[derive(Debug, Clone, Serialize)]
pub struct Aggregates {
    pub points: usize,
    pub max_rel_error: Option<f64>,
    pub mean_rel_error: Option<f64>,
}

impl Aggregates {
    pub fn from_report(report: &SweepReport) -> Self {
        let errors: Vec<f64> = report.rows.iter().filter_map(|r| r.rel_error).collect();
        let mean = if errors.is_empty() {
            None
        } else {
            Some(errors.iter().sum::<f64>() / errors.len() as f64)
        };
        Self {
            points: report.rows.len(),
            max_rel_error: report.max_rel_error(),
            mean_rel_error: mean,
        }
    }
}

/// JSON summary: the effective config (every parameter after defaulting),
/// the rows, and aggregates, so a run is reconstructible from its output.
#[derive(Debug, Serialize)]
pub struct Summary<'a> {
    pub config: &'a ExperimentConfig,
    pub aggregates: Aggregates,
    pub rows: &'a [SweepRow],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transcript: Option<&'a [PipelineEvent]>,
}

impl<'a> Summary<'a> {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("summary serializes");
        text.push('\n');
        text
    }
}
