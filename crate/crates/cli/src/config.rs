//! JSON run configuration with errors pointing at the offending line.

use crate::error::{io_err, CliError, CliResult};
use rotor_annulus::params::{validate_params, Violation};
use rotor_annulus::{Integrals, Mode, PhysicalParams};
use serde::Deserialize;
use std::path::{Path, PathBuf};

/// Experiment named by an optional top-level `"mode"` key. When present it
/// must agree with the verb on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    SingleRotor,
    DoubleRotor,
    TwoParticle,
    Oracle,
    Classify,
    Sweep,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mode: Option<RunMode>,
    #[serde(default)]
    pub params: Option<PhysicalParams>,
    #[serde(default)]
    pub integrals: Option<Integrals>,
    #[serde(default)]
    pub initial: InitialState,
    /// Map iterations or oracle events.
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub samples: Option<usize>,
    /// Histogram resolution of the torus uniformity statistic.
    #[serde(default)]
    pub bins: Option<usize>,
    /// Number to classify when no parameters are given.
    #[serde(default)]
    pub value: Option<f64>,
    /// Continued-fraction depth.
    #[serde(default)]
    pub depth: Option<usize>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

/// Explicit initial condition. Missing coordinates are drawn from the seeded
/// generator in the order they are listed for each system.
#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    /// Velocity coordinate on the circle.
    pub s: Option<f64>,
    /// Outer impact position in turns.
    pub phi: Option<f64>,
    /// Phase of the second particle.
    pub t: Option<f64>,
    /// Polar angle (radians) where the second particle last left the inner wall.
    pub theta2: Option<f64>,
    /// Single rotor: velocity split at the outer wall and rotor speed.
    pub vt: Option<f64>,
    pub vn: Option<f64>,
    pub omega: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Values(Vec<f64>),
    Range { start: f64, stop: f64, count: usize },
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Axis::Values(v) => v.clone(),
            Axis::Range { start, stop, count } => match count {
                0 => Vec::new(),
                1 => vec![*start],
                n => (0..*n)
                    .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
                    .collect(),
            },
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Axis::Values(v) => v.len(),
            Axis::Range { count, .. } => *count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Grid over `(η₁, η₂, F/E)`. A missing axis holds the value from
/// `params` or `integrals`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub eta1: Option<Axis>,
    #[serde(default)]
    pub eta2: Option<Axis>,
    #[serde(default)]
    pub lambda: Option<Axis>,
    /// Longest base-map period searched for in each cell.
    #[serde(default)]
    pub max_period: Option<usize>,
}

/// A parsed configuration together with its source text, kept so that
/// semantic errors can name a line.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub path: PathBuf,
    source: String,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let source = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::parse(&source, path)
    }

    pub fn parse(source: &str, path: &Path) -> CliResult<Self> {
        let config = serde_json::from_str(source).map_err(|e| {
            let msg = e.to_string();
            let suffix = format!(" at line {} column {}", e.line(), e.column());
            let msg = msg.strip_suffix(&suffix).unwrap_or(&msg);
            CliError::Config(format!(
                "{}:{}:{}: {msg}",
                path.display(),
                e.line(),
                e.column()
            ))
        })?;
        Ok(Self {
            config,
            path: path.to_path_buf(),
            source: source.to_string(),
        })
    }

    /// Line of the first occurrence of `"key":`, or 1.
    pub fn line_of(&self, key: &str) -> usize {
        let needle = format!("\"{key}\"");
        for (i, line) in self.source.lines().enumerate() {
            if let Some(pos) = line.find(&needle) {
                if line[pos + needle.len()..].trim_start().starts_with(':') {
                    return i + 1;
                }
            }
        }
        1
    }

    pub fn error_at(&self, key: &str, msg: impl std::fmt::Display) -> CliError {
        CliError::Config(format!(
            "{}:{}: {msg}",
            self.path.display(),
            self.line_of(key)
        ))
    }

    pub fn check_mode(&self, allowed: &[RunMode], verb: &str) -> CliResult<()> {
        match self.config.mode {
            Some(m) if !allowed.contains(&m) => Err(self.error_at(
                "mode",
                format!("mode {m:?} does not match the `{verb}` command"),
            )),
            _ => Ok(()),
        }
    }

    pub fn params(&self) -> CliResult<PhysicalParams> {
        self.config
            .params
            .ok_or_else(|| self.error_at("params", "missing `params` section"))
    }

    pub fn integrals(&self) -> CliResult<Integrals> {
        self.config
            .integrals
            .ok_or_else(|| self.error_at("integrals", "missing `integrals` section"))
    }

    /// Parameters of the required mode, validated against the integrals.
    pub fn validated(&self, mode: Mode) -> CliResult<(PhysicalParams, Integrals)> {
        let p = self.params()?;
        if p.mode != mode {
            return Err(self.error_at(
                "params",
                format!("params.mode must be {mode:?}, got {:?}", p.mode),
            ));
        }
        let ints = self.integrals()?;
        self.check_params(&p, &ints)?;
        Ok((p, ints))
    }

    pub fn check_params(&self, p: &PhysicalParams, ints: &Integrals) -> CliResult<()> {
        let report = validate_params(p, ints);
        for w in &report.warnings {
            log::warn!("{w}");
        }
        match report.violations.first() {
            None => Ok(()),
            Some(v) => {
                let msgs: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
                Err(self.error_at(violation_section(v), msgs.join("; ")))
            }
        }
    }
}

/// Config section a violation refers to.
fn violation_section(v: &Violation) -> &'static str {
    match v {
        Violation::RadiusOutOfRange { .. } | Violation::NonPositiveInertia { .. } => "params",
        Violation::MissingField { field } | Violation::UnexpectedField { field }
            if field.starts_with("eta") =>
        {
            "params"
        }
        _ => "integrals",
    }
}
