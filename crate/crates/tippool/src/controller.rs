//! Adaptive parent-number control.
//!
//! A node measures the moving-average fraction of long-delay (value)
//! messages and picks the smallest parent count `k` whose critical fraction
//! `p_star(k)` exceeds the measured average, capped at `k_max`. Below the
//! critical fraction the pool size stays near the short-delay level
//! `k lambda h / (k-1)`, so raising `k` just enough keeps the pool small.

use std::collections::{BTreeMap, VecDeque};

use thiserror::Error;

use crate::model::p_star;
use crate::sim::ParentCountPolicy;

#[derive(Debug, Error)]
pub enum ControllerError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("observation at {got} is before an earlier observation at {last}")]
    DecreasingTime { got: f64, last: f64 },
}

/// Timing parameters of the control loop.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ControllerConfig {
    base_delay: f64,
    quarantine: f64,
    k_max: u32,
}

impl ControllerConfig {
    pub fn new(base_delay: f64, quarantine: f64, k_max: u32) -> Result<Self, ControllerError> {
        if !base_delay.is_finite() || base_delay <= 0.0 {
            return Err(ControllerError::InvalidParameter(format!(
                "base_delay must be finite and > 0, got {base_delay}"
            )));
        }
        if !quarantine.is_finite() || quarantine < 0.0 {
            return Err(ControllerError::InvalidParameter(format!(
                "quarantine must be finite and >= 0, got {quarantine}"
            )));
        }
        if k_max < 2 {
            return Err(ControllerError::InvalidParameter(format!(
                "k_max must be >= 2, got {k_max}"
            )));
        }
        Ok(Self {
            base_delay,
            quarantine,
            k_max,
        })
    }

    pub fn base_delay(&self) -> f64 {
        self.base_delay
    }

    pub fn quarantine(&self) -> f64 {
        self.quarantine
    }

    pub fn k_max(&self) -> u32 {
        self.k_max
    }

    /// Default moving-average window: ten end-to-end value-message delays,
    /// long enough to smooth Poisson noise and short enough to track regime
    /// shifts.
    pub fn default_window(&self) -> f64 {
        10.0 * (self.base_delay + self.quarantine)
    }
}

/// Moving average of the fraction of value messages over a sliding time
/// window.
#[derive(Debug, Clone)]
pub struct FractionEstimator {
    window: f64,
    samples: VecDeque<(f64, bool)>,
    value_count: usize,
    last_time: f64,
}

impl FractionEstimator {
    pub fn new(window: f64) -> Result<Self, ControllerError> {
        if !window.is_finite() || window <= 0.0 {
            return Err(ControllerError::InvalidParameter(format!(
                "window must be finite and > 0, got {window}"
            )));
        }
        Ok(Self {
            window,
            samples: VecDeque::new(),
            value_count: 0,
            last_time: f64::NEG_INFINITY,
        })
    }

    /// Records one observed message. Class 0 is the short-delay (data)
    /// class; anything else counts as a value message. Samples older than
    /// `t - window` fall out of the estimate.
    pub fn observe(&mut self, class_index: usize, t: f64) -> Result<(), ControllerError> {
        if t < self.last_time {
            return Err(ControllerError::DecreasingTime {
                got: t,
                last: self.last_time,
            });
        }
        self.last_time = t;
        let is_value = class_index != 0;
        self.samples.push_back((t, is_value));
        if is_value {
            self.value_count += 1;
        }
        while let Some(&(oldest, was_value)) = self.samples.front() {
            if oldest > t - self.window {
                break;
            }
            self.samples.pop_front();
            if was_value {
                self.value_count -= 1;
            }
        }
        Ok(())
    }

    /// Fraction of value messages currently in the window; 0 when empty.
    pub fn estimate(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.value_count as f64 / self.samples.len() as f64
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// The parent-number rule: starting from `k = 2`, increment while
/// `p_star(k) < p_bar` and `k < k_max`.
///
/// Monotone non-decreasing in `p_bar`; returns 2 when `p_bar` is below
/// `p_star(2)` and `k_max` when `p_bar` is at or above `p_star(k_max)`.
pub fn adaptive_k(p_bar: f64, config: &ControllerConfig) -> u32 {
    debug_assert!((0.0..=1.0).contains(&p_bar), "p_bar out of range: {p_bar}");
    let mut k = 2;
    while p_star(config.base_delay, config.quarantine, k) < p_bar && k < config.k_max {
        k += 1;
    }
    k
}

/// Per-issue simulator hook: observes every issued message and consults
/// [`adaptive_k`] before each parent selection.
#[derive(Debug)]
pub struct AdaptiveParentPolicy {
    estimator: FractionEstimator,
    config: ControllerConfig,
    k_counts: BTreeMap<u32, u64>,
}

impl AdaptiveParentPolicy {
    pub fn new(config: ControllerConfig, window: f64) -> Result<Self, ControllerError> {
        Ok(Self {
            estimator: FractionEstimator::new(window)?,
            config,
            k_counts: BTreeMap::new(),
        })
    }

    pub fn with_default_window(config: ControllerConfig) -> Self {
        Self::new(config, config.default_window()).expect("default window is positive")
    }

    /// How often each parent count was chosen.
    pub fn k_counts(&self) -> &BTreeMap<u32, u64> {
        &self.k_counts
    }

    /// The most frequently chosen parent count; 2 before any issue.
    pub fn dominant_k(&self) -> u32 {
        self.k_counts
            .iter()
            .max_by_key(|(_, &count)| count)
            .map(|(&k, _)| k)
            .unwrap_or(2)
    }
}

impl ParentCountPolicy for AdaptiveParentPolicy {
    fn parent_count(&mut self, class_index: usize, issue_time: f64, _class_k: u32) -> u32 {
        self.estimator
            .observe(class_index, issue_time)
            .expect("simulation event times are non-decreasing");
        let k = adaptive_k(self.estimator.estimate(), &self.config);
        *self.k_counts.entry(k).or_insert(0) += 1;
        k
    }
}
