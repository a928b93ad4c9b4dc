//! Standard energy `E_S`, delay-augmented energy `E`, energy traces and
//! per-interval decay/growth reports.

use serde::{Deserialize, Serialize};

use crate::criteria::constants::{c_tilde, d_hat};
use crate::error::{Error, Result};
use crate::history::{HistoryBuffer, Side};
use crate::integrator::{run_with_observer, RunConfig, Trajectory};
use crate::operator::{dot, PowerNonlinearity, RegionOperator, SpectralOperator, SystemState};
use crate::schedule::{DampingSchedule, FeedbackMode, IntervalBounds, Parity};

/// Relative slack applied when comparing observed quantities with bounds.
pub const DEFAULT_SLACK: f64 = 1e-6;

/// Tolerance factor (times `E_S(0)`) for sample-to-sample monotonicity.
pub const MONOTONE_TOL: f64 = 1e-10;

/// `E_S = ½(‖u‖_V² + ‖u_t‖_H²) − 𝓕(u)`.
pub fn energy_standard(
    op: &SpectralOperator,
    state: &SystemState,
    nonlinearity: Option<PowerNonlinearity>,
) -> Result<f64> {
    op.check_dim(&state.position)?;
    op.check_dim(&state.velocity)?;
    let kinetic = dot(&state.velocity, &state.velocity);
    let potential: f64 = op
        .eigenvalues()
        .iter()
        .zip(&state.position)
        .map(|(l, a)| l * a * a)
        .sum();
    let functional = match nonlinearity {
        Some(nl) => crate::operator::eval_nonlinearity(op, state, nl.p)?.functional,
        None => 0.0,
    };
    Ok(0.5 * (potential + kinetic) - functional)
}

/// `E` together with its parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayedEnergy {
    pub e: f64,
    pub e_s: f64,
    pub delay_integral: f64,
}

/// `E = E_S + ½∫_{t−τ}^{t} |b2(s+τ)| ‖u_t(s)‖²_{W̃} ds` (builds its own model;
/// use [`EnergyModel`] for repeated evaluation).
pub fn energy_delayed(
    op: &SpectralOperator,
    state: &SystemState,
    history: Option<&HistoryBuffer>,
    schedule: &DampingSchedule,
    nonlinearity: Option<PowerNonlinearity>,
) -> Result<DelayedEnergy> {
    EnergyModel::new(op, schedule, nonlinearity)?.delayed(state, history)
}

/// Energy evaluator bound to an operator and a schedule.
pub struct EnergyModel<'a> {
    op: &'a SpectralOperator,
    schedule: &'a DampingSchedule,
    nonlinearity: Option<PowerNonlinearity>,
    damping: RegionOperator,
    feedback: RegionOperator,
    /// trapezoid nodes per history slot spacing
    refine: usize,
}

impl<'a> EnergyModel<'a> {
    pub fn new(
        op: &'a SpectralOperator,
        schedule: &'a DampingSchedule,
        nonlinearity: Option<PowerNonlinearity>,
    ) -> Result<Self> {
        Ok(Self {
            op,
            schedule,
            nonlinearity,
            damping: op.region_operator(&schedule.geometry.damping_region())?,
            feedback: op.region_operator(&schedule.geometry.feedback_region())?,
            refine: 1,
        })
    }

    /// Subdivides each history slot spacing into `refine` trapezoid panels.
    pub fn with_refine(mut self, refine: usize) -> Self {
        self.refine = refine.max(1);
        self
    }

    fn has_delay_term(&self) -> bool {
        self.schedule.mode == FeedbackMode::Delayed && self.schedule.tau > 0.0
    }

    pub fn standard(&self, state: &SystemState) -> Result<f64> {
        energy_standard(self.op, state, self.nonlinearity)
    }

    /// Delay integral `½∫_{t−τ}^{t} |b2(s+τ)| vᵀK̃v ds` at the state's time.
    ///
    /// Nodes are the history slot times (each spacing split into `refine`
    /// panels), the window ends and the points where `s + τ` crosses a switch
    /// time, so that each panel sees a continuous coefficient. Between the
    /// newest slot and `t` the state's own velocity closes the last panel.
    pub fn delay_integral(&self, history: &HistoryBuffer, state: &SystemState) -> Result<f64> {
        if !self.has_delay_term() {
            return Ok(0.0);
        }
        let t = state.time;
        let tau = self.schedule.tau;
        let spacing = history.spacing();
        let tol = 1e-9 * spacing;
        let lo = t - tau;
        let (newest, newest_v) = history.newest();
        let (have_start, have_end) = (history.coverage_start(), newest);
        if have_start > lo + tol || newest > t + tol || t - newest >= spacing - tol {
            return Err(Error::HistoryGap {
                start: lo,
                end: t,
                have_start,
                have_end,
            });
        }
        let hi = newest.min(t);

        let mut nodes = vec![lo, hi];
        let fine = spacing / self.refine as f64;
        for slot_time in history.times() {
            for j in 0..self.refine {
                let s = slot_time - j as f64 * fine;
                if s > lo + tol && s < hi - tol {
                    nodes.push(s);
                }
            }
        }
        for &tn in &self.schedule.switch_times {
            let s = tn - tau;
            if s > lo + tol && s < hi - tol {
                nodes.push(s);
            }
        }
        nodes.sort_by(f64::total_cmp);
        nodes.dedup_by(|a, b| (*a - *b).abs() <= tol);

        let coefficient = |a: f64, b: f64| -> Option<(f64, f64)> {
            let pos = self.schedule.position_at(0.5 * (a + b) + tau).ok()?;
            let ca = self.schedule.b2_on(pos, a + tau).abs();
            let cb = self.schedule.b2_on(pos, b + tau).abs();
            (ca != 0.0 || cb != 0.0).then_some((ca, cb))
        };
        let mut v = vec![0.0; self.op.mode_count()];
        let mut q = |s: f64, side: Side| -> Result<f64> {
            history.lookup_into(s, side, &mut v)?;
            Ok(self.feedback.quad_form(&v))
        };
        let mut total = 0.0;
        for w in nodes.windows(2) {
            let (a, b) = (w[0], w[1]);
            if let Some((ca, cb)) = coefficient(a, b) {
                total += 0.5 * (b - a) * (ca * q(a, Side::Right)? + cb * q(b, Side::Left)?);
            }
        }
        if t - hi > tol {
            if let Some((ca, cb)) = coefficient(hi, t) {
                total += 0.5
                    * (t - hi)
                    * (ca * self.feedback.quad_form(newest_v) + cb * self.feedback.quad_form(&state.velocity));
            }
        }
        Ok(0.5 * total)
    }

    /// `E`, `E_S` and the delay integral at the state's time.
    pub fn delayed(&self, state: &SystemState, history: Option<&HistoryBuffer>) -> Result<DelayedEnergy> {
        let e_s = self.standard(state)?;
        let delay_integral = match history {
            Some(h) if self.has_delay_term() => self.delay_integral(h, state)?,
            None if self.has_delay_term() => {
                return Err(Error::HistoryGap {
                    start: state.time - self.schedule.tau,
                    end: state.time,
                    have_start: f64::NAN,
                    have_end: f64::NAN,
                })
            }
            _ => 0.0,
        };
        Ok(DelayedEnergy {
            e: e_s + delay_integral,
            e_s,
            delay_integral,
        })
    }

    /// Instantaneous `−E_S′` contributed by the feedbacks at the state's time
    /// (for conservative `f`): `b1⟨g(v), v⟩_W`, plus `b2⟨v(t−τ), v⟩_{W̃}` in
    /// delayed mode or `−b3‖v‖²_{W̃}` in negative mode.
    pub fn dissipation_rate(&self, state: &SystemState, history: Option<&HistoryBuffer>, pos: usize) -> Result<f64> {
        let t = state.time;
        let v = &state.velocity;
        let mut rate = 0.0;
        let b1 = self.schedule.b1_on(pos, t);
        if b1 != 0.0 {
            rate += b1
                * match self.schedule.g {
                    Some(g) if !g.is_linear() => match self.damping.grid() {
                        Some(grid) => {
                            let mut vals = vec![0.0; grid.len()];
                            grid.synthesize(v, &mut vals);
                            vals.iter().zip(grid.weights()).map(|(x, w)| w * g.eval(*x) * x).sum()
                        }
                        None => v.iter().map(|x| g.eval(*x) * x).sum(),
                    },
                    Some(g) => g.lower() * self.damping.quad_form(v),
                    None => self.damping.quad_form(v),
                };
        }
        let b2 = self.schedule.b2_on(pos, t);
        if b2 != 0.0 {
            match self.schedule.mode {
                FeedbackMode::Negative => rate -= b2 * self.feedback.quad_form(v),
                FeedbackMode::Delayed if self.schedule.tau > 0.0 => {
                    let h = history.ok_or(Error::HistoryGap {
                        start: t - self.schedule.tau,
                        end: t - self.schedule.tau,
                        have_start: f64::NAN,
                        have_end: f64::NAN,
                    })?;
                    let w = h.lookup(t - self.schedule.tau)?;
                    let mut kv = vec![0.0; v.len()];
                    self.feedback.apply_add(v, 1.0, &mut kv);
                    rate += b2 * dot(&w, &kv);
                }
                FeedbackMode::Delayed => rate += b2 * self.feedback.quad_form(v),
            }
        }
        Ok(rate)
    }
}

/// One sample of an energy trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub t: f64,
    pub e_s: f64,
    pub e: f64,
    pub delay_integral: f64,
    pub interval_index: usize,
    pub parity: Parity,
    pub b1: f64,
    pub b2: f64,
    /// `−E_S′` from the feedbacks at `t`
    pub dissipation_rate: f64,
}

/// Time series of energies, with a sample at every switch time.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub rows: Vec<EnergyRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario_hash: Option<String>,
}

impl EnergyTrace {
    /// Row at time `t` (within `1e-9` relative).
    pub fn row_at(&self, t: f64) -> Option<&EnergyRow> {
        let tol = 1e-9 * t.abs().max(1.0);
        let i = self.rows.partition_point(|r| r.t < t - tol);
        self.rows.get(i).filter(|r| (r.t - t).abs() <= tol)
    }

    /// Rows with `a ≤ t ≤ b`.
    pub fn rows_between(&self, a: f64, b: f64) -> &[EnergyRow] {
        let tol = 1e-9 * a.abs().max(b.abs()).max(1.0);
        let i = self.rows.partition_point(|r| r.t < a - tol);
        let j = self.rows.partition_point(|r| r.t <= b + tol);
        &self.rows[i..j.max(i)]
    }

    /// `∫_a^b −E_S′ dt` by nonuniform composite Simpson on the recorded rate.
    pub fn dissipation_integral(&self, a: f64, b: f64) -> f64 {
        let rows = self.rows_between(a, b);
        let x: Vec<f64> = rows.iter().map(|r| r.t).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.dissipation_rate).collect();
        simpson_nonuniform(&x, &y)
    }
}

/// Composite Simpson for possibly unequal spacing; an odd trailing panel is
/// integrated with the quadratic through the last three points.
pub fn simpson_nonuniform(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    if n == 2 {
        return 0.5 * (x[1] - x[0]) * (y[0] + y[1]);
    }
    let mut total = 0.0;
    let mut i = 0;
    while i + 2 < n {
        let h0 = x[i + 1] - x[i];
        let h1 = x[i + 2] - x[i + 1];
        let s = h0 + h1;
        total += s / 6.0 * ((2.0 - h1 / h0) * y[i] + s * s / (h0 * h1) * y[i + 1] + (2.0 - h0 / h1) * y[i + 2]);
        i += 2;
    }
    if i + 1 < n {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        let alpha = (2.0 * h1 * h1 + 3.0 * h0 * h1) / (6.0 * (h0 + h1));
        let beta = (h1 * h1 + 3.0 * h0 * h1) / (6.0 * h0);
        let gamma = -h1 * h1 * h1 / (6.0 * h0 * (h0 + h1));
        total += alpha * y[i + 1] + beta * y[i] + gamma * y[i - 1];
    }
    total
}

/// Simulates and records an energy trace: every `stride`-th step plus
/// every switch time that falls on the step grid.
pub fn record_trace(
    op: &SpectralOperator,
    schedule: &DampingSchedule,
    nonlinearity: Option<PowerNonlinearity>,
    initial: &SystemState,
    config: &RunConfig,
    refine: usize,
) -> Result<(Trajectory, EnergyTrace)> {
    let model = EnergyModel::new(op, schedule, nonlinearity)?.with_refine(refine);
    let stride = config.stride.max(1);
    let dt = config.dt;
    let switch_steps: Vec<usize> = schedule
        .switch_times
        .iter()
        .filter_map(|&tn| {
            let k = ((tn - initial.time) / dt).round();
            (k >= 0.0 && (k * dt - (tn - initial.time)).abs() <= 1e-9 * tn.abs().max(1.0)).then_some(k as usize)
        })
        .collect();
    let last = schedule.interval_count().saturating_sub(1);
    let mut rows = Vec::new();
    let trajectory = run_with_observer(op, schedule, nonlinearity, initial, config, |k, state, history| {
        if k % stride != 0 && switch_steps.binary_search(&k).is_err() {
            return Ok(());
        }
        let pos = schedule.position_at(state.time).unwrap_or(last);
        let energy = model.delayed(state, history)?;
        let n = schedule.index_of(pos);
        rows.push(EnergyRow {
            t: state.time,
            e_s: energy.e_s,
            e: energy.e,
            delay_integral: energy.delay_integral,
            interval_index: n,
            parity: Parity::of(n),
            b1: schedule.b1_on(pos, state.time),
            b2: schedule.b2_on(pos, state.time),
            dissipation_rate: model.dissipation_rate(state, history, pos)?,
        });
        Ok(())
    })?;
    Ok((
        trajectory,
        EnergyTrace {
            rows,
            scenario_hash: None,
        },
    ))
}

/// Least-squares slope of `ln E_S` against `t` over the final `fraction`
/// of the trace's time span.
pub fn fit_log_growth_rate(trace: &EnergyTrace, fraction: f64) -> Option<f64> {
    let (first, last) = (trace.rows.first()?.t, trace.rows.last()?.t);
    let cut = last - fraction.clamp(0.0, 1.0) * (last - first);
    let pts: Vec<(f64, f64)> = trace
        .rows
        .iter()
        .filter(|r| r.t >= cut && r.e_s > 0.0)
        .map(|r| (r.t, r.e_s.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}

/// Constants needed to evaluate the per-interval bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportInputs {
    /// Poincaré constant `λ₁`.
    pub lambda1: f64,
    /// Embedding constant `C` (1 for distributed feedback).
    pub embedding_c: f64,
    /// Observability constants `d_n` per even interval (localized damping).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<f64>>,
    pub slack: f64,
}

impl ReportInputs {
    pub fn new(lambda1: f64) -> Self {
        Self {
            lambda1,
            embedding_c: 1.0,
            d: None,
            slack: DEFAULT_SLACK,
        }
    }
}

/// Observed contraction on an even interval against its bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvenRow {
    pub n: usize,
    pub start: f64,
    pub end: f64,
    pub e_s_start: f64,
    pub e_s_end: f64,
    pub observed_ratio: f64,
    /// `None` when no bound is available (localized damping without `d_n`).
    pub bound: Option<f64>,
    pub ok: Option<bool>,
}

/// Observed growth of `E` on an odd interval against `exp(2 C M T)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OddRow {
    pub n: usize,
    pub start: f64,
    pub end: f64,
    pub e_start: f64,
    pub e_end: f64,
    pub observed_growth: f64,
    pub bound: f64,
    pub ok: bool,
}

/// Kinds of sample-level violations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyViolationKind {
    /// `E_S` increased on an undelayed damping interval.
    EvenIncrease,
    /// `E(t) > exp(2CM(t − t_{2n+1})) E(t_{2n+1})` on a delay interval.
    GrowthExceeded,
    /// `E_S` decreased on a negative-damping interval.
    NegativeDecrease,
    /// Endpoint contraction or growth above its bound.
    EndpointBound,
    /// `E < E_S` (negative delay integral).
    DelayIntegralNegative,
}

impl EnergyViolationKind {
    pub fn inequality(self) -> &'static str {
        match self {
            EnergyViolationKind::EvenIncrease => "E_S(t + dt) <= E_S(t) on I_{2n}",
            EnergyViolationKind::GrowthExceeded => "E(t) <= exp(2 C M_{2n+1} (t - t_{2n+1})) E(t_{2n+1}) on I_{2n+1}",
            EnergyViolationKind::NegativeDecrease => "E_S(t + dt) >= E_S(t) on I_{2n+1}",
            EnergyViolationKind::EndpointBound => "observed ratio <= theoretical bound",
            EnergyViolationKind::DelayIntegralNegative => "E >= E_S",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyViolation {
    pub n: usize,
    pub t: f64,
    pub kind: EnergyViolationKind,
    pub observed: f64,
    pub bound: f64,
}

/// Per-interval observed factors, bounds and violations.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IntervalReport {
    pub even: Vec<EvenRow>,
    pub odd: Vec<OddRow>,
    pub violations: Vec<EnergyViolation>,
}

impl IntervalReport {
    pub fn all_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Contraction bound of an even interval, or `None` when unavailable.
fn even_bound(schedule: &DampingSchedule, n: usize, length: f64, inputs: &ReportInputs) -> Result<Option<f64>> {
    let Some(IntervalBounds::Even { lower, upper }) = schedule.bounds_of(n) else {
        return Ok(Some(1.0));
    };
    if lower == 0.0 && upper == 0.0 {
        return Ok(Some(1.0));
    }
    if schedule.geometry.is_distributed() {
        let (a, b) = schedule.g.map_or((1.0, 1.0), |g| (g.lower(), g.upper()));
        return c_tilde(length, lower * a, upper * b, inputs.lambda1, 0.0).map(Some);
    }
    match inputs.d.as_ref().and_then(|d| d.get(n / 2)) {
        Some(&d) => d_hat(d).map(Some),
        None => Ok(None),
    }
}

/// Compares the trace with the per-interval estimates. Only intervals whose
/// endpoints both lie inside the trace are reported.
pub fn interval_report(
    trace: &EnergyTrace,
    schedule: &DampingSchedule,
    inputs: &ReportInputs,
) -> Result<IntervalReport> {
    let mut report = IntervalReport::default();
    let (Some(first), Some(last)) = (trace.rows.first(), trace.rows.last()) else {
        return Ok(report);
    };
    let span_tol = 1e-9 * last.t.abs().max(1.0);
    let e_s0 = first.e_s;
    let c = inputs.embedding_c;
    let slack = 1.0 + inputs.slack;

    for pos in 0..schedule.interval_count() {
        let n = schedule.index_of(pos);
        let (start, end) = schedule.interval_bounds(pos);
        if start < first.t - span_tol || end > last.t + span_tol {
            continue;
        }
        let row_start = trace.row_at(start).ok_or(Error::MissingEndpointSample { t: start })?;
        let row_end = trace.row_at(end).ok_or(Error::MissingEndpointSample { t: end })?;
        let rows = trace.rows_between(start, end);
        let length = end - start;
        match Parity::of(n) {
            Parity::Even => {
                let observed = if row_start.e_s > 0.0 {
                    row_end.e_s / row_start.e_s
                } else {
                    0.0
                };
                let bound = even_bound(schedule, n, length, inputs)?;
                let ok = bound.map(|b| observed <= b * slack);
                if ok == Some(false) {
                    report.violations.push(EnergyViolation {
                        n,
                        t: end,
                        kind: EnergyViolationKind::EndpointBound,
                        observed,
                        bound: bound.unwrap_or(f64::NAN),
                    });
                }
                report.even.push(EvenRow {
                    n,
                    start,
                    end,
                    e_s_start: row_start.e_s,
                    e_s_end: row_end.e_s,
                    observed_ratio: observed,
                    bound,
                    ok,
                });
                let tol = MONOTONE_TOL * e_s0;
                for w in rows.windows(2) {
                    if w[1].e_s > w[0].e_s + tol {
                        report.violations.push(EnergyViolation {
                            n,
                            t: w[1].t,
                            kind: EnergyViolationKind::EvenIncrease,
                            observed: w[1].e_s,
                            bound: w[0].e_s + tol,
                        });
                        break;
                    }
                }
            }
            Parity::Odd => {
                let m = match schedule.bounds_of(n) {
                    Some(IntervalBounds::Odd { upper }) => upper,
                    _ => 0.0,
                };
                let e_of: fn(&EnergyRow) -> f64 = match schedule.mode {
                    FeedbackMode::Delayed => |r| r.e,
                    FeedbackMode::Negative => |r| r.e_s,
                };
                let e_start = e_of(row_start);
                let e_end = e_of(row_end);
                let observed = if e_start > 0.0 { e_end / e_start } else { 0.0 };
                let bound = (2.0 * c * m * length).exp();
                let ok = observed <= bound * slack;
                if !ok {
                    report.violations.push(EnergyViolation {
                        n,
                        t: end,
                        kind: EnergyViolationKind::EndpointBound,
                        observed,
                        bound,
                    });
                }
                report.odd.push(OddRow {
                    n,
                    start,
                    end,
                    e_start,
                    e_end,
                    observed_growth: observed,
                    bound,
                    ok,
                });
                for r in rows {
                    let b = (2.0 * c * m * (r.t - start)).exp() * e_start * slack;
                    if e_of(r) > b {
                        report.violations.push(EnergyViolation {
                            n,
                            t: r.t,
                            kind: EnergyViolationKind::GrowthExceeded,
                            observed: e_of(r),
                            bound: b,
                        });
                        break;
                    }
                }
                if schedule.mode == FeedbackMode::Negative {
                    let tol = MONOTONE_TOL * e_s0;
                    for w in rows.windows(2) {
                        if w[1].e_s < w[0].e_s - tol {
                            report.violations.push(EnergyViolation {
                                n,
                                t: w[1].t,
                                kind: EnergyViolationKind::NegativeDecrease,
                                observed: w[1].e_s,
                                bound: w[0].e_s - tol,
                            });
                            break;
                        }
                    }
                }
            }
        }
    }
    if let Some(r) = trace.rows.iter().find(|r| r.delay_integral < 0.0) {
        report.violations.push(EnergyViolation {
            n: r.interval_index,
            t: r.t,
            kind: EnergyViolationKind::DelayIntegralNegative,
            observed: r.e,
            bound: r.e_s,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::{init_history, HistoryRule};
    use crate::schedule::{EvenRecord, OddRecord};

    #[test]
    fn standard_energy_examples() {
        let op = SpectralOperator::custom(vec![1.0]).unwrap();
        let s = SystemState::new(0.0, vec![1.0], vec![0.0]);
        assert_eq!(energy_standard(&op, &s, None).unwrap(), 0.5);
        assert_eq!(energy_standard(&op, &SystemState::zero(1), None).unwrap(), 0.0);

        let op = SpectralOperator::dirichlet(1, 1.0).unwrap();
        let e = energy_standard(&op, &s, Some(PowerNonlinearity::new(2.0).unwrap())).unwrap();
        let expected = 0.5 * std::f64::consts::PI.powi(2) + 0.375;
        assert!((e - expected).abs() < 1e-12);
        assert!((e - 5.30980).abs() < 1e-5);
    }

    #[test]
    fn constant_history_integral() {
        let op = SpectralOperator::custom(vec![1.0]).unwrap();
        let mut schedule = DampingSchedule::new(vec![0.0, 5.0])
            .with_delay(0.5)
            .with_odd(vec![OddRecord::constant(1.0)]);
        schedule.first_index = 1;
        let h = init_history(&HistoryRule::Constant(vec![1.0]), 1, 0.5, 4).unwrap();
        let state = SystemState::new(0.0, vec![1.0], vec![0.0]);
        let e = energy_delayed(&op, &state, Some(&h), &schedule, None).unwrap();
        assert!((e.e_s - 0.5).abs() < 1e-15);
        assert!((e.delay_integral - 0.25).abs() < 1e-15);
        assert!((e.e - 0.75).abs() < 1e-15);
    }

    #[test]
    fn no_shifted_support_means_no_integral() {
        let op = SpectralOperator::custom(vec![1.0]).unwrap();
        let schedule = DampingSchedule::new(vec![0.0, 10.0, 11.0])
            .with_delay(0.5)
            .with_even(vec![EvenRecord::constant(1.0)])
            .with_odd(vec![OddRecord::constant(1.0)]);
        let h = init_history(&HistoryRule::Constant(vec![1.0]), 1, 0.5, 4).unwrap();
        let state = SystemState::new(0.0, vec![1.0], vec![0.0]);
        let e = energy_delayed(&op, &state, Some(&h), &schedule, None).unwrap();
        assert_eq!(e.delay_integral, 0.0);
        assert_eq!(e.e, e.e_s);
    }

    #[test]
    fn history_must_cover_window() {
        let op = SpectralOperator::custom(vec![1.0]).unwrap();
        let mut schedule = DampingSchedule::new(vec![0.0, 5.0])
            .with_delay(0.5)
            .with_odd(vec![OddRecord::constant(1.0)]);
        schedule.first_index = 1;
        let h = init_history(&HistoryRule::Zero, 1, 0.5, 4).unwrap();
        let state = SystemState::new(1.0, vec![1.0], vec![0.0]);
        assert!(matches!(
            energy_delayed(&op, &state, Some(&h), &schedule, None),
            Err(Error::HistoryGap { .. })
        ));
    }

    #[test]
    fn simpson_exactness() {
        let x = [0.0, 0.1, 0.35, 0.4, 0.9, 1.0];
        let y: Vec<f64> = x.iter().map(|t| 1.0 + t - 2.0 * t * t).collect();
        let exact = 1.0 + 0.5 - 2.0 / 3.0;
        assert!((simpson_nonuniform(&x, &y) - exact).abs() < 1e-14);
        assert!((simpson_nonuniform(&x[..5], &y[..5]) - (0.9 + 0.405 - 0.486)).abs() < 1e-14);
        let u: Vec<f64> = (0..=6).map(|i| i as f64 / 6.0).collect();
        let c: Vec<f64> = u.iter().map(|t| t * t * t).collect();
        assert!((simpson_nonuniform(&u, &c) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn growth_rate_fit() {
        let rows = (0..100)
            .map(|i| {
                let t = i as f64 * 0.1;
                EnergyRow {
                    t,
                    e_s: (0.3 * t).exp(),
                    e: (0.3 * t).exp(),
                    delay_integral: 0.0,
                    interval_index: 0,
                    parity: Parity::Even,
                    b1: 0.0,
                    b2: 0.0,
                    dissipation_rate: 0.0,
                }
            })
            .collect();
        let trace = EnergyTrace {
            rows,
            scenario_hash: None,
        };
        assert!((fit_log_growth_rate(&trace, 0.5).unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn report_bounds() {
        let op = SpectralOperator::custom(vec![1.0]).unwrap();
        let schedule = DampingSchedule::periodic(1.0, 0.5, 2)
            .with_delay(0.5)
            .with_even(vec![EvenRecord::constant(1.0); 2])
            .with_odd(vec![OddRecord::constant(0.0); 2]);
        let cfg = RunConfig::new(1e-3, 3.0)
            .with_stride(10)
            .with_history(HistoryRule::Zero, 5);
        let (_, trace) = record_trace(
            &op,
            &schedule,
            None,
            &SystemState::new(0.0, vec![1.0], vec![0.0]),
            &cfg,
            1,
        )
        .unwrap();
        let report = interval_report(&trace, &schedule, &ReportInputs::new(1.0)).unwrap();
        assert_eq!(report.even.len(), 2);
        assert_eq!(report.odd.len(), 2);
        let b = report.even[0].bound.unwrap();
        assert!((b - 1995.0 / 2011.0).abs() < 1e-15);
        assert!(report.even.iter().all(|r| r.ok == Some(true)));
        assert!(report.odd.iter().all(|r| r.bound == 1.0 && r.ok));
        assert!(report.all_ok(), "{:?}", report.violations);
    }
}
