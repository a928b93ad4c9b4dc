//! The `simulate`, `check`, `verify` and `sweep` verbs.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use idl_core::criteria::observability::{estimate_observability_constant, ObservabilityConfig, ObservabilityEstimate};
use idl_core::criteria::{check_theorem, CriteriaInputs, Theorem, TheoremCheck};
use idl_core::energy::{fit_log_growth_rate, interval_report, record_trace, EnergyTrace, ReportInputs, DEFAULT_SLACK};
use idl_core::integrator::Trajectory;
use idl_core::schedule::{DampingSchedule, FeedbackMode, IntervalBounds};
use idl_core::sequence::SequenceSpec;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{LabError, LabResult};
use crate::output::{write_report_json, write_text, write_trace_csv};
use crate::report::{StabilityReport, Status};
use crate::scenario::{Resolved, Scenario};

/// Fraction of the run used to fit growth rates.
pub const GROWTH_FIT_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Default)]
pub struct Options {
    /// Output directory; falls back to the scenario's, then `idl-out`.
    pub out_dir: Option<PathBuf>,
    /// Theorems to check; empty means the scenario's list (or the default
    /// for its mode and geometry in `check`).
    pub theorems: Vec<Theorem>,
}

#[derive(Debug, Clone)]
pub struct CommandOutcome {
    pub status: Status,
    pub files: Vec<PathBuf>,
    pub report: Option<StabilityReport>,
}

/// Directory for a resolved scenario's artifacts: `<out>/<name>-<hash12>`.
pub fn artifact_dir(resolved: &Resolved, options: &Options) -> PathBuf {
    let base = options
        .out_dir
        .clone()
        .or_else(|| resolved.scenario.outputs.dir.clone())
        .unwrap_or_else(|| PathBuf::from("idl-out"));
    base.join(format!("{}-{}", resolved.scenario.name, &resolved.hash[..12]))
}

/// Runs the scenario and records its energy trace.
pub fn run_scenario(resolved: &Resolved) -> LabResult<(Trajectory, EnergyTrace)> {
    let (mut traj, mut trace) = record_trace(
        &resolved.operator,
        &resolved.schedule,
        resolved.nonlinearity,
        &resolved.initial,
        &resolved.config,
        resolved.scenario.integrator.energy_refine,
    )?;
    traj.scenario_hash = Some(resolved.hash.clone());
    trace.scenario_hash = Some(resolved.hash.clone());
    Ok((traj, trace))
}

pub fn simulate(resolved: &Resolved, options: &Options) -> LabResult<CommandOutcome> {
    let (_, trace) = run_scenario(resolved)?;
    let mut files = Vec::new();
    if resolved.scenario.outputs.csv {
        let path = artifact_dir(resolved, options).join("trace.csv");
        write_trace_csv(&trace, &path)?;
        files.push(path);
    }
    Ok(CommandOutcome {
        status: Status::Success,
        files,
        report: None,
    })
}

/// Default theorem for a schedule's mode and geometry.
pub fn default_theorem(schedule: &DampingSchedule) -> Theorem {
    match (schedule.mode, schedule.geometry.is_distributed()) {
        (FeedbackMode::Negative, _) => Theorem::Posneg,
        (FeedbackMode::Delayed, false) => Theorem::Stab2Cris5,
        (FeedbackMode::Delayed, true) => match schedule.g {
            Some(g) if !g.is_linear() => Theorem::FirstGenerale,
            _ => Theorem::First,
        },
    }
}

/// Sequences indexed by the pair number: from the generator rule when there
/// is one, otherwise the finite data of the interval records.
pub fn criteria_inputs(resolved: &Resolved) -> CriteriaInputs {
    let schedule = &resolved.schedule;
    let spec = &resolved.scenario.criteria;
    let mut inputs = match &schedule.rule {
        Some(rule) => CriteriaInputs {
            even_length: rule.even_length.clone(),
            lower: rule.b1_lower.clone(),
            upper: rule.b1_upper.clone(),
            odd_product: rule.odd_product(),
            ..CriteriaInputs::constant(0.0, 0.0, 0.0, 0.0)
        },
        None => recorded_sequences(schedule),
    };
    if let Some(s) = &spec.even_length {
        inputs.even_length = s.clone();
    }
    if let Some(s) = &spec.lower {
        inputs.lower = s.clone();
    }
    if let Some(s) = &spec.upper {
        inputs.upper = s.clone();
    }
    if let Some(s) = &spec.odd_product {
        inputs.odd_product = s.clone();
    }
    inputs.lambda1 = Some(resolved.operator.poincare_lambda1());
    inputs.embedding_c = Some(spec.embedding_c.unwrap_or(1.0));
    inputs.c1 = Some(spec.c1.unwrap_or(1.0));
    inputs.c3 = Some(spec.c3.unwrap_or(1.0));
    inputs.observability_c = spec.observability_c;
    inputs.d = spec.d.clone();
    inputs.feedback = schedule.g;
    inputs
}

fn recorded_sequences(schedule: &DampingSchedule) -> CriteriaInputs {
    let mut even_length = Vec::new();
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut odd_product = Vec::new();
    let table = schedule.interval_table();
    for row in &table {
        let IntervalBounds::Even { lower: m, upper: mm } = row.bounds else {
            continue;
        };
        let Some(next) = table.iter().find(|r| r.n == row.n + 1) else {
            continue;
        };
        let IntervalBounds::Odd { upper: m_odd } = next.bounds else {
            continue;
        };
        even_length.push(row.length);
        lower.push(m);
        upper.push(mm);
        odd_product.push(m_odd * next.length);
    }
    CriteriaInputs {
        even_length: SequenceSpec::Explicit(even_length),
        lower: SequenceSpec::Explicit(lower),
        upper: SequenceSpec::Explicit(upper),
        odd_product: SequenceSpec::Explicit(odd_product),
        ..CriteriaInputs::constant(0.0, 0.0, 0.0, 0.0)
    }
}

fn needs_d(theorem: Theorem) -> bool {
    matches!(theorem, Theorem::Stab2Cris5 | Theorem::Posneg)
}

/// Empirical `d` on the first even interval of the schedule.
pub fn estimate_d(resolved: &Resolved) -> LabResult<ObservabilityEstimate> {
    let first_even = if resolved.schedule.first_index == 0 { 0 } else { 2 };
    let config = ObservabilityConfig {
        safety: resolved.config.safety,
        ..ObservabilityConfig::new(
            first_even,
            resolved.scenario.criteria.trials.max(1),
            resolved.scenario.seed,
            resolved.config.dt,
        )
    };
    Ok(estimate_observability_constant(
        &resolved.operator,
        &resolved.schedule,
        resolved.nonlinearity,
        &config,
    )?)
}

/// Runs the requested theorem checks, estimating `d` when needed.
pub fn run_criteria(
    resolved: &Resolved,
    theorems: &[Theorem],
) -> LabResult<(Vec<TheoremCheck>, Option<ObservabilityEstimate>)> {
    let mut inputs = criteria_inputs(resolved);
    let mut estimate = None;
    if inputs.d.is_none() && theorems.iter().copied().any(needs_d) {
        let est = estimate_d(resolved)?;
        match est.d {
            Some(d) => inputs.d = Some(SequenceSpec::Constant(d)),
            None => {
                return Err(LabError::Usage(format!(
                    "interval {} loses no energy in any trial: no observability constant exists",
                    est.interval
                )))
            }
        }
        estimate = Some(est);
    }
    let checks = theorems
        .iter()
        .map(|&t| check_theorem(t, &inputs))
        .collect::<idl_core::Result<Vec<_>>>()?;
    Ok((checks, estimate))
}

fn requested(resolved: &Resolved, options: &Options) -> Vec<Theorem> {
    if !options.theorems.is_empty() {
        options.theorems.clone()
    } else {
        resolved.scenario.criteria.theorems.clone()
    }
}

fn emit(
    resolved: &Resolved,
    options: &Options,
    report: StabilityReport,
    trace: Option<&EnergyTrace>,
) -> LabResult<CommandOutcome> {
    let dir = artifact_dir(resolved, options);
    let mut files = Vec::new();
    if let (Some(trace), true) = (trace, resolved.scenario.outputs.csv) {
        let path = dir.join("trace.csv");
        write_trace_csv(trace, &path)?;
        files.push(path);
    }
    if resolved.scenario.outputs.json {
        let path = dir.join("report.json");
        write_report_json(&report, &path)?;
        files.push(path);
    }
    Ok(CommandOutcome {
        status: report.status(),
        files,
        report: Some(report),
    })
}

pub fn check(resolved: &Resolved, options: &Options) -> LabResult<CommandOutcome> {
    let mut theorems = requested(resolved, options);
    if theorems.is_empty() {
        theorems.push(default_theorem(&resolved.schedule));
    }
    let (checks, estimate) = run_criteria(resolved, &theorems)?;
    let mut report = StabilityReport::new(&resolved.scenario.name, &resolved.hash, "check", None, checks);
    report.observability = estimate;
    emit(resolved, options, report, None)
}

/// Report inputs for the per-interval comparison.
pub fn report_inputs(resolved: &Resolved) -> ReportInputs {
    let spec = &resolved.scenario.criteria;
    let pairs = resolved.schedule.interval_count() / 2 + 1;
    ReportInputs {
        lambda1: resolved.operator.poincare_lambda1(),
        embedding_c: spec.embedding_c.unwrap_or(1.0),
        d: spec.d.as_ref().map(|d| (0..pairs).map_while(|n| d.value(n)).collect()),
        slack: spec.slack.unwrap_or(DEFAULT_SLACK),
    }
}

/// Simulation plus the per-interval report and any requested criteria.
pub fn verify_report(resolved: &Resolved, theorems: &[Theorem]) -> LabResult<(EnergyTrace, StabilityReport)> {
    let (_, trace) = run_scenario(resolved)?;
    let intervals = interval_report(&trace, &resolved.schedule, &report_inputs(resolved))?;
    let (checks, estimate) = if theorems.is_empty() {
        (Vec::new(), None)
    } else {
        run_criteria(resolved, theorems)?
    };
    let mut report = StabilityReport::new(
        &resolved.scenario.name,
        &resolved.hash,
        "verify",
        Some(intervals),
        checks,
    );
    report.observability = estimate;
    report.growth_rate = fit_log_growth_rate(&trace, GROWTH_FIT_FRACTION);
    Ok((trace, report))
}

pub fn verify(resolved: &Resolved, options: &Options) -> LabResult<CommandOutcome> {
    let (trace, report) = verify_report(resolved, &requested(resolved, options))?;
    emit(resolved, options, report, Some(&trace))
}

/// `<param>=<start>:<stop>:<steps>` with a dotted path into the scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub param: String,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl FromStr for SweepSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || format!("expected <param>=<start>:<stop>:<steps>, got `{s}`");
        let (param, range) = s.split_once('=').ok_or_else(err)?;
        let parts: Vec<&str> = range.split(':').collect();
        let [start, stop, steps] = parts.as_slice() else {
            return Err(err());
        };
        let spec = SweepSpec {
            param: param.trim().to_string(),
            start: start.trim().parse().map_err(|_| err())?,
            stop: stop.trim().parse().map_err(|_| err())?,
            steps: steps.trim().parse().map_err(|_| err())?,
        };
        if spec.param.is_empty() || spec.steps == 0 {
            return Err(err());
        }
        Ok(spec)
    }
}

impl SweepSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let h = (self.stop - self.start) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.stop
                } else {
                    self.start + i as f64 * h
                }
            })
            .collect()
    }
}

/// Sets the number at a dotted path (`integrator.dt`, `generator.rule.b2_upper.constant`,
/// `schedule.switch_times.1`). The leaf may be new; its parent must exist.
pub fn set_path(root: &mut Value, path: &str, value: f64) -> Result<(), String> {
    let keys: Vec<&str> = path.split('.').collect();
    let (leaf, parents) = keys.split_last().ok_or("empty parameter path")?;
    let mut node = root;
    for key in parents {
        node = match node {
            Value::Object(map) => map.get_mut(*key),
            Value::Array(items) => key.parse::<usize>().ok().and_then(|i| items.get_mut(i)),
            _ => None,
        }
        .ok_or_else(|| format!("parameter path `{path}` not found at `{key}`"))?;
    }
    let number = serde_json::Number::from_f64(value).ok_or("sweep value must be finite")?;
    match node {
        Value::Object(map) => {
            map.insert(leaf.to_string(), Value::Number(number));
        }
        Value::Array(items) => {
            let slot = leaf
                .parse::<usize>()
                .ok()
                .and_then(|i| items.get_mut(i))
                .ok_or_else(|| format!("parameter path `{path}` not found at `{leaf}`"))?;
            *slot = Value::Number(number);
        }
        _ => return Err(format!("parameter path `{path}` does not end in an object or array")),
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub index: usize,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario_hash: Option<String>,
    pub exit_code: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepIndex {
    pub schema: String,
    pub scenario: String,
    pub sweep: SweepSpec,
    pub points: Vec<SweepPoint>,
}

fn sweep_point(
    base: &Value,
    name: &str,
    spec: &SweepSpec,
    index: usize,
    value: f64,
    options: &Options,
) -> (SweepPoint, Status) {
    let attempt = || -> LabResult<(Resolved, CommandOutcome)> {
        let mut json = base.clone();
        set_path(&mut json, &spec.param, value).map_err(LabError::Usage)?;
        let mut scenario: Scenario = serde_json::from_value(json).map_err(|e| LabError::Usage(e.to_string()))?;
        scenario.name = format!("{name}-{}", spec.param.replace('.', "_"));
        let resolved = scenario.resolve()?;
        let outcome = verify(&resolved, options)?;
        Ok((resolved, outcome))
    };
    match attempt() {
        Ok((resolved, outcome)) => (
            SweepPoint {
                index,
                value,
                scenario_hash: Some(resolved.hash),
                exit_code: outcome.status.code(),
                report: outcome.files.iter().find(|p| p.ends_with("report.json")).cloned(),
                error: None,
            },
            outcome.status,
        ),
        Err(e) => (
            SweepPoint {
                index,
                value,
                scenario_hash: None,
                exit_code: Status::Failure.code(),
                report: None,
                error: Some(e.to_string()),
            },
            Status::Failure,
        ),
    }
}

/// Verifies the scenario at every grid value (in parallel) and writes an
/// index of the per-point reports.
pub fn sweep(scenario: &Scenario, spec: &SweepSpec, options: &Options) -> LabResult<CommandOutcome> {
    let base = serde_json::to_value(scenario).expect("scenario serializes");
    let results: Vec<(SweepPoint, Status)> = spec
        .values()
        .into_par_iter()
        .enumerate()
        .map(|(i, v)| sweep_point(&base, &scenario.name, spec, i, v, options))
        .collect();
    let status = results.iter().fold(Status::Success, |acc, (_, s)| acc.worst(*s));
    let mut files: Vec<PathBuf> = results.iter().filter_map(|(p, _)| p.report.clone()).collect();
    let index = SweepIndex {
        schema: crate::report::SCHEMA.to_string(),
        scenario: scenario.name.clone(),
        sweep: spec.clone(),
        points: results.into_iter().map(|(p, _)| p).collect(),
    };
    let out = options
        .out_dir
        .clone()
        .or_else(|| scenario.outputs.dir.clone())
        .unwrap_or_else(|| PathBuf::from("idl-out"));
    let path = out.join(format!(
        "sweep-{}-{}-{}.json",
        scenario.name,
        spec.param.replace('.', "_"),
        &scenario.hash()[..12]
    ));
    let mut text = serde_json::to_string_pretty(&index).expect("index serializes");
    text.push('\n');
    write_text(&path, &text)?;
    files.push(path);
    Ok(CommandOutcome {
        status,
        files,
        report: None,
    })
}

/// Reads a sweep index written by [`sweep`].
pub fn read_sweep_index(path: &Path) -> LabResult<SweepIndex> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(format!("reading {}", path.display()), e))?;
    serde_json::from_str(&text).map_err(|e| LabError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}
