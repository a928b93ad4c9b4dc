//! Scenario files: everything needed to reproduce a run.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use idl_core::criteria::Theorem;
use idl_core::history::HistoryRule;
use idl_core::integrator::{Integrator, RunConfig, DEFAULT_SAFETY};
use idl_core::operator::{OperatorSpec, PowerNonlinearity, SpectralOperator, SystemState};
use idl_core::schedule::{validate_schedule, DampingSchedule, FeedbackMode, ScheduleRule};
use idl_core::sequence::SequenceSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LabError, LabResult};

fn default_true() -> bool {
    true
}

fn default_one() -> usize {
    1
}

fn default_safety() -> f64 {
    DEFAULT_SAFETY
}

/// `f(u) = −|u|^p u`, switched on or off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearitySpec {
    #[serde(default = "default_true")]
    pub enabled: bool,
    pub p: f64,
}

/// A schedule given by a generator rule, expanded to `pairs` interval pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub rule: ScheduleRule,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSpec {
    pub dt: f64,
    /// Defaults to the schedule horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default = "default_one")]
    pub stride: usize,
    #[serde(default = "default_one")]
    pub history_divisions: usize,
    #[serde(default)]
    pub history: HistoryRule,
    #[serde(default = "default_safety")]
    pub safety: f64,
    /// Trapezoid panels per history slot in the delay integral.
    #[serde(default = "default_one")]
    pub energy_refine: usize,
}

/// Initial position and velocity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum InitialData {
    Modal {
        position: Vec<f64>,
        velocity: Vec<f64>,
    },
    /// `u₀ = amplitude·φ_k`, `u₁ = velocity·φ_k` (k counted from 1).
    Mode {
        k: usize,
        amplitude: f64,
        #[serde(default)]
        velocity: f64,
    },
    /// Triangle of height `amplitude` with its apex at `apex·L`, at rest.
    Plucked {
        amplitude: f64,
        apex: f64,
    },
}

/// Constants and overrides for the stability criteria.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriteriaSpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub theorems: Vec<Theorem>,
    /// Embedding constant of `W` (and `W̃`) into `H`; 1 for `L²` restrictions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observability_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<SequenceSpec>,
    /// Replaces the sequences derived from the schedule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub even_length: Option<SequenceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<SequenceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<SequenceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub odd_product: Option<SequenceSpec>,
    /// Trials of the empirical observability estimate used when `d` is missing.
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Relative slack for bound comparisons in reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slack: Option<f64>,
}

fn default_trials() -> usize {
    16
}

impl Default for CriteriaSpec {
    fn default() -> Self {
        Self {
            theorems: Vec::new(),
            embedding_c: None,
            c1: None,
            c3: None,
            observability_c: None,
            d: None,
            even_length: None,
            lower: None,
            upper: None,
            odd_product: None,
            trials: default_trials(),
            slack: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default = "default_true")]
    pub csv: bool,
    #[serde(default = "default_true")]
    pub json: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: None,
            csv: true,
            json: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub operator: OperatorSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonlinearity: Option<NonlinearitySpec>,
    /// Switch times and records are filled from `generator` when present.
    pub schedule: DampingSchedule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSpec>,
    pub integrator: IntegratorSpec,
    pub initial: InitialData,
    #[serde(default)]
    pub criteria: CriteriaSpec,
    #[serde(default)]
    pub outputs: OutputSpec,
    #[serde(default)]
    pub seed: u64,
}

/// A validated scenario with its operator and expanded schedule.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub scenario: Scenario,
    pub operator: SpectralOperator,
    pub schedule: DampingSchedule,
    pub nonlinearity: Option<PowerNonlinearity>,
    pub initial: SystemState,
    pub config: RunConfig,
    pub hash: String,
}

impl Scenario {
    /// Parses JSON text; errors carry the line and column.
    pub fn from_json(text: &str, path: &Path) -> LabResult<Scenario> {
        serde_json::from_str(text).map_err(|e| LabError::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// SHA-256 of every field that affects numerics (name and outputs excluded).
    pub fn hash(&self) -> String {
        let mut numerics = self.clone();
        numerics.name.clear();
        numerics.outputs = OutputSpec::default();
        let bytes = serde_json::to_vec(&numerics).expect("scenario serializes");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// The schedule with the generator expanded.
    pub fn expanded_schedule(&self) -> LabResult<DampingSchedule> {
        let mut schedule = self.schedule.clone();
        if let Some(generator) = &self.generator {
            let (times, even, odd) = generator.rule.expand(generator.pairs)?;
            schedule.switch_times = times;
            schedule.even_intervals = even;
            schedule.odd_intervals = odd;
            schedule.rule = Some(generator.rule.clone());
        }
        Ok(schedule)
    }

    /// Builds everything needed to run, collecting every problem found.
    pub fn resolve(&self) -> LabResult<Resolved> {
        let mut problems = Vec::new();
        let operator = SpectralOperator::build(&self.operator)?;
        let schedule = self.expanded_schedule()?;
        problems.extend(
            validate_schedule(&schedule)
                .into_iter()
                .map(|v| format!("{} [{}]", describe(&v), v.inequality())),
        );

        let nonlinearity = match self.nonlinearity {
            Some(NonlinearitySpec { enabled: true, p }) => Some(PowerNonlinearity::new(p)?),
            _ => None,
        };
        let spec = &self.integrator;
        let horizon = spec.horizon.unwrap_or(schedule.horizon());
        let dt = spec.dt;
        if !(dt > 0.0) || !dt.is_finite() {
            problems.push(format!("dt must be positive, got {dt}"));
        } else {
            if horizon > schedule.horizon() * (1.0 + 1e-12) {
                problems.push(format!(
                    "horizon {horizon} exceeds the schedule horizon {}",
                    schedule.horizon()
                ));
            }
            if !divides(dt, horizon) {
                problems.push(format!("dt {dt} does not divide the horizon {horizon}"));
            }
            for (pos, w) in schedule.switch_times.windows(2).enumerate() {
                if !divides(dt, w[1] - w[0]) {
                    problems.push(format!(
                        "dt {dt} does not divide T_{} = {}",
                        schedule.index_of(pos),
                        w[1] - w[0]
                    ));
                }
            }
            if schedule.mode == FeedbackMode::Delayed && schedule.tau > 0.0 {
                if spec.history_divisions == 0 {
                    problems.push("history_divisions must be at least 1".into());
                } else {
                    let spacing = schedule.tau / spec.history_divisions as f64;
                    if !divides(dt, spacing) {
                        problems.push(format!("dt {dt} does not divide tau/M = {spacing}"));
                    }
                }
            }
            if let Err(e) = Integrator::new(&operator, &schedule, nonlinearity, dt, spec.safety) {
                problems.push(e.to_string());
            }
        }
        if spec.stride == 0 {
            problems.push("stride must be at least 1".into());
        }
        let initial = match initial_state(&self.initial, &operator) {
            Ok(s) => Some(s),
            Err(e) => {
                problems.push(e);
                None
            }
        };
        if !problems.is_empty() {
            return Err(LabError::Validation(problems));
        }
        let config = RunConfig {
            dt,
            horizon,
            stride: spec.stride,
            history_divisions: spec.history_divisions,
            history: spec.history.clone(),
            safety: spec.safety,
        };
        Ok(Resolved {
            scenario: self.clone(),
            operator,
            schedule,
            nonlinearity,
            initial: initial.expect("checked above"),
            config,
            hash: self.hash(),
        })
    }
}

fn describe(v: &idl_core::schedule::Violation) -> String {
    let json = serde_json::to_string(v).unwrap_or_default();
    match v.interval() {
        Some(n) => format!("interval {n}: {json}"),
        None => json,
    }
}

/// True when `span` is an integer multiple of `dt` (relative 1e-9).
pub fn divides(dt: f64, span: f64) -> bool {
    let k = (span / dt).round();
    k >= 1.0 && (k * dt - span).abs() <= 1e-9 * span.abs().max(dt)
}

fn initial_state(data: &InitialData, op: &SpectralOperator) -> Result<SystemState, String> {
    let n = op.mode_count();
    match data {
        InitialData::Modal { position, velocity } => {
            if position.len() != n || velocity.len() != n {
                return Err(format!(
                    "initial data has {} / {} components, the operator has {n} modes",
                    position.len(),
                    velocity.len()
                ));
            }
            Ok(SystemState::new(0.0, position.clone(), velocity.clone()))
        }
        InitialData::Mode { k, amplitude, velocity } => {
            if *k == 0 || *k > n {
                return Err(format!("initial mode {k} is outside 1..={n}"));
            }
            let mut s = SystemState::zero(n);
            s.position[k - 1] = *amplitude;
            s.velocity[k - 1] = *velocity;
            Ok(s)
        }
        InitialData::Plucked { amplitude, apex } => {
            let length = op
                .geometry()
                .map(|g| g.length)
                .ok_or("plucked initial data needs a 1-D geometry")?;
            if !(*apex > 0.0 && *apex < 1.0) {
                return Err(format!("apex must lie in (0, 1), got {apex}"));
            }
            let c = apex * length;
            let position = (1..=n)
                .map(|k| {
                    let kk = k as f64 * PI;
                    let integral =
                        2.0 * amplitude * length * length * (kk * c / length).sin() / (kk * kk * c * (length - c));
                    (2.0 / length).sqrt() * integral
                })
                .collect();
            Ok(SystemState::new(0.0, position, vec![0.0; n]))
        }
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: &Path) -> LabResult<Resolved> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(format!("reading {}", path.display()), e))?;
    Scenario::from_json(&text, path)?.resolve()
}
