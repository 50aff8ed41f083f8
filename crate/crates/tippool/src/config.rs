//! Experiment configuration: a flat `key = value` document, overridable by
//! command-line flags (flags win).
//!
//! Schema (all keys optional; defaults reproduce the canonical setup of
//! rate 200 msg/s, base delay 0.1 s, quarantine 4.0 s, two parents):
//!
//! ```text
//! mode           = analytic | simulate | sweep | compare | quarantine-demo
//! rate           = <f64, msg/s>          # total arrival rate
//! base_delay     = <f64, s>              # short-class delay h
//! quarantine     = <f64, s>              # extra value-message delay d_Q
//! parents        = <u32 >= 2>            # parent count k
//! value_fraction = <f64 in [0,1]>        # p for single-point runs
//! fractions      = 0,0.1,0.5  or  0:1:0.1  # sweep points (list or lo:hi:step)
//! classes        = d:k:p,d:k:p,...       # general n-class model override
//! arrivals       = <u64 >= 1>
//! seed           = <u64>
//! warmup         = <f64 in [0,1)>
//! adaptive       = true | false
//! k_max          = <u32 >= 2>
//! out_dir        = <path>
//! svg            = true | false
//! ```
//!
//! `#` starts a comment; blank lines are skipped; unknown keys are errors.

use std::path::PathBuf;

use thiserror::Error;

use crate::model::{DelayClass, ModelError, ModelParams, TwoClassParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}`: {message}")]
    InvalidValue { key: String, message: String },
    #[error("key `{key}`: {message}")]
    Invariant { key: String, message: String },
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// What the harness should do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Analytic,
    Simulate,
    Sweep,
    Compare,
    QuarantineDemo,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Analytic => "analytic",
            Mode::Simulate => "simulate",
            Mode::Sweep => "sweep",
            Mode::Compare => "compare",
            Mode::QuarantineDemo => "quarantine-demo",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "analytic" => Ok(Mode::Analytic),
            "simulate" => Ok(Mode::Simulate),
            "sweep" => Ok(Mode::Sweep),
            "compare" => Ok(Mode::Compare),
            "quarantine-demo" => Ok(Mode::QuarantineDemo),
            other => Err(format!(
                "`{other}` is not a mode (expected analytic, simulate, sweep, compare or quarantine-demo)"
            )),
        }
    }
}

/// Fully resolved experiment parameters.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub rate: f64,
    pub base_delay: f64,
    pub quarantine: f64,
    pub parents: u32,
    pub value_fraction: f64,
    pub fractions: Vec<f64>,
    /// General n-class override as (delay, parents, fraction) triples; when
    /// set, analytic and simulate runs use this model instead of the
    /// two-class keys.
    pub classes: Option<Vec<(f64, u32, f64)>>,
    pub arrivals: u64,
    pub seed: u64,
    pub warmup: f64,
    pub adaptive: bool,
    pub k_max: u32,
    pub out_dir: PathBuf,
    pub svg: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Analytic,
            rate: 200.0,
            base_delay: 0.1,
            quarantine: 4.0,
            parents: 2,
            value_fraction: 0.0,
            fractions: (0..=10).map(|i| i as f64 / 10.0).collect(),
            classes: None,
            arrivals: 1_000_000,
            seed: 42,
            warmup: 0.2,
            adaptive: false,
            k_max: 8,
            out_dir: PathBuf::from("out"),
            svg: true,
        }
    }
}

/// Flag-level overrides; `None` leaves the config value in place.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub rate: Option<f64>,
    pub base_delay: Option<f64>,
    pub quarantine: Option<f64>,
    pub parents: Option<u32>,
    pub value_fraction: Option<f64>,
    pub fractions: Option<Vec<f64>>,
    pub classes: Option<Vec<(f64, u32, f64)>>,
    pub arrivals: Option<u64>,
    pub seed: Option<u64>,
    pub warmup: Option<f64>,
    pub adaptive: Option<bool>,
    pub k_max: Option<u32>,
    pub out_dir: Option<PathBuf>,
    pub svg: Option<bool>,
}

impl ExperimentConfig {
    /// Defaults, then the optional config file, then flag overrides;
    /// validates the merged result.
    pub fn load(
        path: Option<&std::path::Path>,
        overrides: &Overrides,
    ) -> Result<Self, ConfigError> {
        let mut config = Self::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            config.apply_document(&text)?;
        }
        config.apply_overrides(overrides);
        config.validate()?;
        Ok(config)
    }

    /// Parses and validates a config document against the defaults.
    pub fn from_document(text: &str) -> Result<Self, ConfigError> {
        let mut config = Self::default();
        config.apply_document(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn apply_document(&mut self, text: &str) -> Result<(), ConfigError> {
        for (number, raw) in text.lines().enumerate() {
            let line = number + 1;
            let stripped = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let stripped = stripped.trim();
            if stripped.is_empty() {
                continue;
            }
            let (key, value) = stripped.split_once('=').ok_or_else(|| ConfigError::Parse {
                line,
                message: format!("expected `key = value`, got `{stripped}`"),
            })?;
            self.apply_key(key.trim(), value.trim())?;
        }
        Ok(())
    }

    fn apply_key(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "mode" => {
                self.mode = value.parse().map_err(|message| ConfigError::InvalidValue {
                    key: key.into(),
                    message,
                })?
            }
            "rate" => self.rate = parse_f64(key, value)?,
            "base_delay" => self.base_delay = parse_f64(key, value)?,
            "quarantine" => self.quarantine = parse_f64(key, value)?,
            "parents" => self.parents = parse_int(key, value)?,
            "value_fraction" => self.value_fraction = parse_f64(key, value)?,
            "fractions" => self.fractions = parse_fractions(key, value)?,
            "classes" => self.classes = Some(parse_classes(key, value)?),
            "arrivals" => self.arrivals = parse_int(key, value)?,
            "seed" => self.seed = parse_int(key, value)?,
            "warmup" => self.warmup = parse_f64(key, value)?,
            "adaptive" => self.adaptive = parse_bool(key, value)?,
            "k_max" => self.k_max = parse_int(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "svg" => self.svg = parse_bool(key, value)?,
            other => return Err(ConfigError::UnknownKey(other.into())),
        }
        Ok(())
    }

    pub fn apply_overrides(&mut self, o: &Overrides) {
        macro_rules! take {
            ($($field:ident),* $(,)?) => {
                $(if let Some(v) = o.$field.clone() { self.$field = v; })*
            };
        }
        take!(
            mode,
            rate,
            base_delay,
            quarantine,
            parents,
            value_fraction,
            fractions,
            arrivals,
            seed,
            warmup,
            adaptive,
            k_max,
            out_dir,
            svg,
        );
        if let Some(classes) = o.classes.clone() {
            self.classes = Some(classes);
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        // The model constructors own the numeric invariants; their message
        // is surfaced under the offending key.
        self.two_class_params()?;
        for (i, &p) in self.fractions.iter().enumerate() {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(ConfigError::Invariant {
                    key: format!("fractions[{i}]"),
                    message: format!("{p} is outside [0, 1]"),
                });
            }
        }
        if self.arrivals < 1 {
            return Err(ConfigError::Invariant {
                key: "arrivals".into(),
                message: "must be >= 1".into(),
            });
        }
        if !self.warmup.is_finite() || !(0.0..1.0).contains(&self.warmup) {
            return Err(ConfigError::Invariant {
                key: "warmup".into(),
                message: format!("{} is outside [0, 1)", self.warmup),
            });
        }
        if self.k_max < 2 {
            return Err(ConfigError::Invariant {
                key: "k_max".into(),
                message: format!("{} is below the minimum of 2", self.k_max),
            });
        }
        if let Some(classes) = &self.classes {
            self.build_class_params(classes)?;
            if matches!(self.mode, Mode::Sweep | Mode::Compare) {
                return Err(ConfigError::Invariant {
                    key: "classes".into(),
                    message: "sweep and compare use the two-class keys; unset `classes`".into(),
                });
            }
        }
        Ok(())
    }

    /// The two-class model described by the scalar keys.
    pub fn two_class_params(&self) -> Result<TwoClassParams, ConfigError> {
        TwoClassParams::new(
            self.rate,
            self.base_delay,
            self.quarantine,
            self.parents,
            self.value_fraction,
        )
        .map_err(|e| invariant_from_model("parameters", e))
    }

    /// The model the analytic/simulate modes operate on: the `classes`
    /// override when present, the two-class keys otherwise.
    pub fn model_params(&self) -> Result<ModelParams, ConfigError> {
        match &self.classes {
            Some(classes) => self.build_class_params(classes),
            None => Ok(self.two_class_params()?.to_model_params()),
        }
    }

    fn build_class_params(&self, classes: &[(f64, u32, f64)]) -> Result<ModelParams, ConfigError> {
        let built: Vec<DelayClass> = classes
            .iter()
            .map(|&(d, k, p)| DelayClass::new(d, k, p))
            .collect::<Result<_, _>>()
            .map_err(|e| invariant_from_model("classes", e))?;
        ModelParams::new(self.rate, built).map_err(|e| invariant_from_model("classes", e))
    }
}

fn invariant_from_model(key: &str, e: ModelError) -> ConfigError {
    ConfigError::Invariant {
        key: key.into(),
        message: e.to_string(),
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    value.parse::<f64>().map_err(|_| ConfigError::InvalidValue {
        key: key.into(),
        message: format!("`{value}` is not a number"),
    })
}

fn parse_int<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse::<T>().map_err(|_| ConfigError::InvalidValue {
        key: key.into(),
        message: format!("`{value}` is not a valid non-negative integer"),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(ConfigError::InvalidValue {
            key: key.into(),
            message: format!("`{value}` is not `true` or `false`"),
        }),
    }
}

/// Either a comma-separated list (`0,0.25,0.5`) or an inclusive range with
/// step (`0:1:0.1`).
pub fn parse_fractions(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    let parts: Vec<&str> = value.split(':').collect();
    if parts.len() == 3 {
        let lo = parse_f64(key, parts[0].trim())?;
        let hi = parse_f64(key, parts[1].trim())?;
        let step = parse_f64(key, parts[2].trim())?;
        if !step.is_finite() || step <= 0.0 || !lo.is_finite() || !hi.is_finite() || hi < lo {
            return Err(ConfigError::InvalidValue {
                key: key.into(),
                message: format!("`{value}` is not a valid lo:hi:step range"),
            });
        }
        let steps = ((hi - lo) / step + 1e-9).floor();
        if steps >= 10_000.0 {
            return Err(ConfigError::InvalidValue {
                key: key.into(),
                message: format!("range `{value}` expands past the 10000-point limit"),
            });
        }
        let count = steps as usize + 1;
        return Ok((0..count).map(|i| lo + i as f64 * step).collect());
    }
    value
        .split(',')
        .map(|part| parse_f64(key, part.trim()))
        .collect()
}

/// `delay:parents:fraction` triples separated by commas.
pub fn parse_classes(key: &str, value: &str) -> Result<Vec<(f64, u32, f64)>, ConfigError> {
    value
        .split(',')
        .map(|entry| {
            let fields: Vec<&str> = entry.split(':').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(ConfigError::InvalidValue {
                    key: key.into(),
                    message: format!("`{entry}` is not a delay:parents:fraction triple"),
                });
            }
            Ok((
                parse_f64(key, fields[0])?,
                parse_int(key, fields[1])?,
                parse_f64(key, fields[2])?,
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_canonical_defaults() {
        let config = ExperimentConfig::from_document("").unwrap();
        assert_eq!(config, ExperimentConfig::default());
        assert_eq!(config.rate, 200.0);
        assert_eq!(config.base_delay, 0.1);
        assert_eq!(config.quarantine, 4.0);
        assert_eq!(config.parents, 2);
        assert_eq!(config.arrivals, 1_000_000);
        assert_eq!(config.seed, 42);
        assert_eq!(config.warmup, 0.2);
        assert_eq!(config.fractions.len(), 11);
    }

    #[test]
    fn parses_a_full_document() {
        let text = "\n# comment\nmode = sweep\nrate = 150.5\nbase_delay=0.2\n\
                    quarantine = 2 # inline comment\nparents = 4\nfractions = 0,0.5,1\n\
                    arrivals = 1000\nseed = 7\nwarmup = 0.1\nadaptive = true\nk_max = 6\n\
                    out_dir = results\nsvg = false\n";
        let config = ExperimentConfig::from_document(text).unwrap();
        assert_eq!(config.mode, Mode::Sweep);
        assert_eq!(config.rate, 150.5);
        assert_eq!(config.base_delay, 0.2);
        assert_eq!(config.quarantine, 2.0);
        assert_eq!(config.parents, 4);
        assert_eq!(config.fractions, vec![0.0, 0.5, 1.0]);
        assert_eq!(config.arrivals, 1000);
        assert_eq!(config.seed, 7);
        assert!(config.adaptive);
        assert_eq!(config.k_max, 6);
        assert_eq!(config.out_dir, PathBuf::from("results"));
        assert!(!config.svg);
    }

    #[test]
    fn range_fractions_expand_inclusively() {
        let fractions = parse_fractions("fractions", "0:1:0.1").unwrap();
        assert_eq!(fractions.len(), 11);
        assert_eq!(fractions[0], 0.0);
        assert!((fractions[10] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_fraction_names_the_offender() {
        let err = ExperimentConfig::from_document("fractions = 0.5,1.5").unwrap_err();
        let message = err.to_string();
        assert!(
            message.contains("fractions[1]"),
            "unexpected message: {message}"
        );
        assert!(message.contains("1.5"), "unexpected message: {message}");
    }

    #[test]
    fn parent_count_below_two_is_rejected() {
        let err = ExperimentConfig::from_document("parents = 1").unwrap_err();
        assert!(
            err.to_string().contains("parent_count"),
            "unexpected: {err}"
        );
    }

    #[test]
    fn unknown_keys_and_malformed_lines_fail() {
        assert!(matches!(
            ExperimentConfig::from_document("bogus = 1"),
            Err(ConfigError::UnknownKey(k)) if k == "bogus"
        ));
        assert!(matches!(
            ExperimentConfig::from_document("rate 200"),
            Err(ConfigError::Parse { line: 1, .. })
        ));
        assert!(ExperimentConfig::from_document("rate = fast").is_err());
    }

    #[test]
    fn classes_key_builds_a_general_model() {
        let config = ExperimentConfig::from_document("classes = 0.1:2:0.5, 4.1:2:0.5").unwrap();
        let params = config.model_params().unwrap();
        assert_eq!(params.classes().len(), 2);
        assert_eq!(params.classes()[1].delay(), 4.1);
    }

    #[test]
    fn classes_key_is_incompatible_with_sweeps() {
        let err = ExperimentConfig::from_document("mode = sweep\nclasses = 0.1:2:0.5, 4.1:2:0.5")
            .unwrap_err();
        assert!(err.to_string().contains("two-class"), "unexpected: {err}");
    }

    #[test]
    fn overrides_win_over_the_document() {
        let mut config = ExperimentConfig::from_document("rate = 100\nseed = 1").unwrap();
        let overrides = Overrides {
            rate: Some(300.0),
            mode: Some(Mode::Compare),
            ..Default::default()
        };
        config.apply_overrides(&overrides);
        assert_eq!(config.rate, 300.0);
        assert_eq!(config.seed, 1);
        assert_eq!(config.mode, Mode::Compare);
    }

    #[test]
    fn warmup_and_arrivals_invariants() {
        assert!(ExperimentConfig::from_document("warmup = 1.0").is_err());
        assert!(ExperimentConfig::from_document("arrivals = 0").is_err());
        assert!(ExperimentConfig::from_document("k_max = 1").is_err());
    }
}
