//! Intermittent switching structure: switch times, per-interval coefficient
//! records with their bounds, delay, damping geometry and sign mode.
//!
//! Intervals are half-open, `I_n = [t_n, t_{n+1})`. Even `n` carries the
//! undelayed damping `b1`; odd `n` carries the delayed (or negative) feedback
//! `b2`. A schedule may start at an odd index (`first_index = 1`) for setups
//! where the delayed feedback acts from the initial time.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{FeedbackG, Region};
use crate::sequence::SequenceSpec;

/// Points sampled per interval when checking coefficient bounds.
pub const BOUND_SAMPLES: usize = 1000;

const BOUND_TOL: f64 = 1e-12;

/// A scalar coefficient function of time.
#[derive(Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coefficient {
    Constant(f64),
    /// `offset + amplitude · sin(omega · t + phase)`
    Sinusoid {
        offset: f64,
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Piecewise linear interpolation, held constant outside the nodes.
    Table {
        times: Vec<f64>,
        values: Vec<f64>,
    },
    /// An arbitrary callable; not serializable.
    #[serde(skip)]
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Coefficient {
    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Coefficient::Custom(Arc::new(f))
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Sinusoid {
                offset,
                amplitude,
                omega,
                phase,
            } => offset + amplitude * (omega * t + phase).sin(),
            Coefficient::Table { times, values } => table_lookup(times, values, t),
            Coefficient::Custom(f) => f(t),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Coefficient::Constant(_))
    }

    fn check(&self) -> Result<()> {
        match self {
            Coefficient::Table { times, values } => {
                if times.is_empty() || times.len() != values.len() {
                    return Err(Error::InvalidSchedule(format!(
                        "coefficient table needs matching nonempty times/values, got {} and {}",
                        times.len(),
                        values.len()
                    )));
                }
                if times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidSchedule("coefficient table times must increase".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

fn table_lookup(times: &[f64], values: &[f64], t: f64) -> f64 {
    if times.is_empty() {
        return 0.0;
    }
    if t <= times[0] {
        return values[0];
    }
    let last = times.len() - 1;
    if t >= times[last] {
        return values[last];
    }
    let j = times.partition_point(|&x| x <= t) - 1;
    let s = (t - times[j]) / (times[j + 1] - times[j]);
    values[j] + s * (values[j + 1] - values[j])
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            Coefficient::Sinusoid {
                offset,
                amplitude,
                omega,
                phase,
            } => f
                .debug_struct("Sinusoid")
                .field("offset", offset)
                .field("amplitude", amplitude)
                .field("omega", omega)
                .field("phase", phase)
                .finish(),
            Coefficient::Table { times, values } => f
                .debug_struct("Table")
                .field("times", times)
                .field("values", values)
                .finish(),
            Coefficient::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl PartialEq for Coefficient {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Coefficient::Constant(a), Coefficient::Constant(b)) => a == b,
            (
                Coefficient::Sinusoid {
                    offset: a,
                    amplitude: b,
                    omega: c,
                    phase: d,
                },
                Coefficient::Sinusoid {
                    offset: e,
                    amplitude: f,
                    omega: g,
                    phase: h,
                },
            ) => a == e && b == f && c == g && d == h,
            (Coefficient::Table { times, values }, Coefficient::Table { times: t2, values: v2 }) => {
                times == t2 && values == v2
            }
            (Coefficient::Custom(a), Coefficient::Custom(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

/// Whether the odd-interval feedback is delayed (`+b2·v(t−τ)`) or
/// anti-damping (`−b3·v(t)`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackMode {
    #[default]
    Delayed,
    Negative,
}

/// Where the two feedbacks act.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DampingGeometry {
    #[default]
    Distributed,
    Localized {
        omega: Region,
        omega_tilde: Region,
    },
}

impl DampingGeometry {
    /// Region of the undelayed damping `b1`.
    pub fn damping_region(&self) -> Region {
        match self {
            DampingGeometry::Distributed => Region::Distributed,
            DampingGeometry::Localized { omega, .. } => *omega,
        }
    }

    /// Region of the delayed or negative feedback.
    pub fn feedback_region(&self) -> Region {
        match self {
            DampingGeometry::Distributed => Region::Distributed,
            DampingGeometry::Localized { omega_tilde, .. } => *omega_tilde,
        }
    }

    pub fn is_distributed(&self) -> bool {
        matches!(self, DampingGeometry::Distributed)
    }
}

/// Bounds `m_{2n} ≤ b1(t) ≤ M_{2n}` on an even interval. Without an explicit
/// coefficient, `b1 ≡ lower`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvenRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b1: Option<Coefficient>,
    pub lower: f64,
    pub upper: f64,
}

impl EvenRecord {
    pub fn constant(value: f64) -> Self {
        Self {
            b1: None,
            lower: value,
            upper: value,
        }
    }
}

/// Bound `|b2(t)| ≤ M_{2n+1}` on an odd interval. Without an explicit
/// coefficient, `b2 ≡ upper`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OddRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b2: Option<Coefficient>,
    pub upper: f64,
}

impl OddRecord {
    pub fn constant(value: f64) -> Self {
        Self { b2: None, upper: value }
    }
}

/// Parity of an interval index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(n: usize) -> Parity {
        if n.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        }
    }
}

/// Generator for an (in principle infinite) schedule, expanded to a finite
/// number of interval pairs. Sequences are indexed by the pair number `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRule {
    pub even_length: SequenceSpec,
    pub odd_length: SequenceSpec,
    pub b1_lower: SequenceSpec,
    pub b1_upper: SequenceSpec,
    pub b2_upper: SequenceSpec,
}

impl ScheduleRule {
    /// Constant lengths and levels.
    pub fn periodic(even_length: f64, odd_length: f64, b1: f64, b2: f64) -> Self {
        Self {
            even_length: SequenceSpec::Constant(even_length),
            odd_length: SequenceSpec::Constant(odd_length),
            b1_lower: SequenceSpec::Constant(b1),
            b1_upper: SequenceSpec::Constant(b1),
            b2_upper: SequenceSpec::Constant(b2),
        }
    }

    /// `M_{2n+1} T_{2n+1}` as a sequence.
    pub fn odd_product(&self) -> SequenceSpec {
        SequenceSpec::Product(vec![self.b2_upper.clone(), self.odd_length.clone()])
    }

    fn term(seq: &SequenceSpec, n: usize, what: &str) -> Result<f64> {
        seq.value(n)
            .ok_or_else(|| Error::InvalidSchedule(format!("{what} sequence undefined at n = {n}")))
    }

    /// Switch times and records for `pairs` interval pairs.
    pub fn expand(&self, pairs: usize) -> Result<(Vec<f64>, Vec<EvenRecord>, Vec<OddRecord>)> {
        for s in [
            &self.even_length,
            &self.odd_length,
            &self.b1_lower,
            &self.b1_upper,
            &self.b2_upper,
        ] {
            s.validate()?;
        }
        let mut times = Vec::with_capacity(2 * pairs + 1);
        let mut even = Vec::with_capacity(pairs);
        let mut odd = Vec::with_capacity(pairs);
        let mut t = 0.0;
        times.push(t);
        for n in 0..pairs {
            t += Self::term(&self.even_length, n, "even length")?;
            times.push(t);
            t += Self::term(&self.odd_length, n, "odd length")?;
            times.push(t);
            let lower = Self::term(&self.b1_lower, n, "b1 lower")?;
            let upper = Self::term(&self.b1_upper, n, "b1 upper")?;
            if lower != 0.0 || upper != 0.0 {
                even.push(EvenRecord { b1: None, lower, upper });
            } else {
                even.push(EvenRecord {
                    b1: Some(Coefficient::Constant(0.0)),
                    lower: 0.0,
                    upper: 0.0,
                });
            }
            odd.push(OddRecord::constant(Self::term(&self.b2_upper, n, "b2 upper")?));
        }
        Ok((times, even, odd))
    }
}

/// The complete switching structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DampingSchedule {
    pub switch_times: Vec<f64>,
    /// Index `n` of the first interval `[t_0, t_1)`: 0 or 1.
    #[serde(default)]
    pub first_index: usize,
    #[serde(default)]
    pub tau: f64,
    #[serde(default)]
    pub mode: FeedbackMode,
    #[serde(default)]
    pub geometry: DampingGeometry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<FeedbackG>,
    /// Records for even intervals, `even_intervals[k]` ↔ `n = 2k`.
    #[serde(default)]
    pub even_intervals: Vec<EvenRecord>,
    /// Records for odd intervals, `odd_intervals[k]` ↔ `n = 2k + 1`.
    #[serde(default)]
    pub odd_intervals: Vec<OddRecord>,
    /// Optional global `b1(t)` overriding the per-record coefficients.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b1: Option<Coefficient>,
    /// Optional global `b2(t)` overriding the per-record coefficients.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b2: Option<Coefficient>,
    /// The generator, when the schedule was expanded from one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<ScheduleRule>,
}

/// Values returned by [`DampingSchedule::coefficients_at`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coefficients {
    pub b1: f64,
    pub b2: f64,
    pub interval_index: usize,
    pub parity: Parity,
}

/// Bounds attached to an interval in [`DampingSchedule::interval_table`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IntervalBounds {
    Even { lower: f64, upper: f64 },
    Odd { upper: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalRow {
    pub n: usize,
    pub start: f64,
    pub length: f64,
    pub parity: Parity,
    pub bounds: IntervalBounds,
}

/// A violated structural assumption. Violations are data, not errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    EmptySchedule,
    StartNotZero {
        t0: f64,
    },
    InvalidFirstIndex {
        first_index: usize,
    },
    NonIncreasingSwitchTimes {
        n: usize,
    },
    NegativeDelay {
        tau: f64,
    },
    InvalidCoefficient {
        message: String,
    },
    LengthViolation {
        n: usize,
        length: f64,
        tau: f64,
    },
    SupportOverlap {
        n: usize,
        coefficient: String,
        t: f64,
        value: f64,
    },
    MissingBounds {
        n: usize,
        t: f64,
        value: f64,
    },
    LowerBoundNotPositive {
        n: usize,
        lower: f64,
    },
    BoundOrder {
        n: usize,
        lower: f64,
        upper: f64,
    },
    BelowLowerBound {
        n: usize,
        t: f64,
        value: f64,
        lower: f64,
    },
    AboveUpperBound {
        n: usize,
        t: f64,
        value: f64,
        upper: f64,
    },
    InvalidRegion {
        start: f64,
        end: f64,
    },
    RegionNotContained,
}

impl Violation {
    /// Interval index the violation refers to, if any.
    pub fn interval(&self) -> Option<usize> {
        match self {
            Violation::NonIncreasingSwitchTimes { n }
            | Violation::LengthViolation { n, .. }
            | Violation::SupportOverlap { n, .. }
            | Violation::MissingBounds { n, .. }
            | Violation::LowerBoundNotPositive { n, .. }
            | Violation::BoundOrder { n, .. }
            | Violation::BelowLowerBound { n, .. }
            | Violation::AboveUpperBound { n, .. } => Some(*n),
            _ => None,
        }
    }

    /// The inequality that fails.
    pub fn inequality(&self) -> &'static str {
        match self {
            Violation::EmptySchedule => "at least one interval",
            Violation::StartNotZero { .. } => "t_0 = 0",
            Violation::InvalidFirstIndex { .. } => "first_index in {0, 1}",
            Violation::NonIncreasingSwitchTimes { .. } => "t_n < t_{n+1}",
            Violation::NegativeDelay { .. } => "tau >= 0",
            Violation::InvalidCoefficient { .. } => "well-formed coefficient",
            Violation::LengthViolation { .. } => "tau <= T_{2n}",
            Violation::SupportOverlap { .. } => "b1 = 0 on I_{2n+1} and b2 = 0 on I_{2n}",
            Violation::MissingBounds { .. } => "nonzero coefficient needs a bound record",
            Violation::LowerBoundNotPositive { .. } => "0 < m_{2n}",
            Violation::BoundOrder { .. } => "m_{2n} <= M_{2n}, M_{2n+1} >= 0",
            Violation::BelowLowerBound { .. } => "m_{2n} <= b1(t)",
            Violation::AboveUpperBound { .. } => "b1(t) <= M_{2n}, |b2(t)| <= M_{2n+1}",
            Violation::InvalidRegion { .. } => "0 <= a < b",
            Violation::RegionNotContained => "omega_tilde within omega (delayed mode)",
        }
    }
}

impl DampingSchedule {
    /// A schedule with the given switch times and no feedback.
    pub fn new(switch_times: Vec<f64>) -> Self {
        Self {
            switch_times,
            first_index: 0,
            tau: 0.0,
            mode: FeedbackMode::Delayed,
            geometry: DampingGeometry::Distributed,
            g: None,
            even_intervals: Vec::new(),
            odd_intervals: Vec::new(),
            b1: None,
            b2: None,
            rule: None,
        }
    }

    /// Alternating intervals of fixed lengths, `pairs` pairs, no feedback.
    pub fn periodic(even_length: f64, odd_length: f64, pairs: usize) -> Self {
        let mut times = Vec::with_capacity(2 * pairs + 1);
        times.push(0.0);
        for k in 0..pairs {
            let base = k as f64 * (even_length + odd_length);
            times.push(base + even_length);
            times.push(base + even_length + odd_length);
        }
        Self::new(times)
    }

    /// Expands a generator rule to `pairs` interval pairs.
    pub fn from_rule(rule: ScheduleRule, pairs: usize) -> Result<Self> {
        let (times, even, odd) = rule.expand(pairs)?;
        let mut s = Self::new(times);
        s.even_intervals = even;
        s.odd_intervals = odd;
        s.rule = Some(rule);
        Ok(s)
    }

    pub fn with_delay(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_mode(mut self, mode: FeedbackMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_geometry(mut self, geometry: DampingGeometry) -> Self {
        self.geometry = geometry;
        self
    }

    pub fn with_feedback(mut self, g: FeedbackG) -> Self {
        self.g = Some(g);
        self
    }

    pub fn with_even(mut self, records: Vec<EvenRecord>) -> Self {
        self.even_intervals = records;
        self
    }

    pub fn with_odd(mut self, records: Vec<OddRecord>) -> Self {
        self.odd_intervals = records;
        self
    }

    /// Number of intervals.
    pub fn interval_count(&self) -> usize {
        self.switch_times.len().saturating_sub(1)
    }

    /// `t_{2K}`, the end of the last interval.
    pub fn horizon(&self) -> f64 {
        self.switch_times.last().copied().unwrap_or(0.0)
    }

    /// Schedule index `n` of the interval at list position `pos`.
    pub fn index_of(&self, pos: usize) -> usize {
        self.first_index + pos
    }

    /// `[t_n, t_{n+1})` for the interval at list position `pos`.
    pub fn interval_bounds(&self, pos: usize) -> (f64, f64) {
        (self.switch_times[pos], self.switch_times[pos + 1])
    }

    /// List position of the interval containing `t` (half-open convention).
    pub fn position_at(&self, t: f64) -> Result<usize> {
        let (start, end) = (self.switch_times.first().copied().unwrap_or(0.0), self.horizon());
        if self.switch_times.len() < 2 || !(t >= start && t < end) {
            return Err(Error::OutOfHorizon { t, start, end });
        }
        Ok(self.switch_times.partition_point(|&x| x <= t) - 1)
    }

    /// `b1` on the interval at `pos`, evaluated at `t` (no range check).
    pub fn b1_on(&self, pos: usize, t: f64) -> f64 {
        if let Some(c) = &self.b1 {
            return c.eval(t);
        }
        let n = self.index_of(pos);
        if n % 2 == 1 {
            return 0.0;
        }
        match self.even_intervals.get(n / 2) {
            Some(r) => r.b1.as_ref().map_or(r.lower, |c| c.eval(t)),
            None => 0.0,
        }
    }

    /// `b2` (delayed mode) or `b3` (negative mode) on the interval at `pos`.
    pub fn b2_on(&self, pos: usize, t: f64) -> f64 {
        if let Some(c) = &self.b2 {
            return c.eval(t);
        }
        let n = self.index_of(pos);
        if n.is_multiple_of(2) {
            return 0.0;
        }
        match self.odd_intervals.get(n / 2) {
            Some(r) => r.b2.as_ref().map_or(r.upper, |c| c.eval(t)),
            None => 0.0,
        }
    }

    /// `b2(t)` with the half-open lookup, zero outside `[t_0, t_{2K})`.
    pub fn b2_at(&self, t: f64) -> f64 {
        self.position_at(t).map_or(0.0, |pos| self.b2_on(pos, t))
    }

    /// Piecewise coefficient lookup.
    pub fn coefficients_at(&self, t: f64) -> Result<Coefficients> {
        let pos = self.position_at(t)?;
        let n = self.index_of(pos);
        Ok(Coefficients {
            b1: self.b1_on(pos, t),
            b2: self.b2_on(pos, t),
            interval_index: n,
            parity: Parity::of(n),
        })
    }

    /// Bound record of interval `n`, if present.
    pub fn bounds_of(&self, n: usize) -> Option<IntervalBounds> {
        if n.is_multiple_of(2) {
            self.even_intervals.get(n / 2).map(|r| IntervalBounds::Even {
                lower: r.lower,
                upper: r.upper,
            })
        } else {
            self.odd_intervals
                .get(n / 2)
                .map(|r| IntervalBounds::Odd { upper: r.upper })
        }
    }

    /// One row per interval that carries a bound record.
    pub fn interval_table(&self) -> Vec<IntervalRow> {
        (0..self.interval_count())
            .filter_map(|pos| {
                let n = self.index_of(pos);
                let (start, end) = self.interval_bounds(pos);
                self.bounds_of(n).map(|bounds| IntervalRow {
                    n,
                    start,
                    length: end - start,
                    parity: Parity::of(n),
                    bounds,
                })
            })
            .collect()
    }

    /// Reports every violated structural assumption.
    pub fn validate(&self) -> Vec<Violation> {
        validate_schedule(self)
    }
}

/// Reports every violated structural assumption; empty means valid.
pub fn validate_schedule(s: &DampingSchedule) -> Vec<Violation> {
    let mut out = Vec::new();
    if s.switch_times.len() < 2 {
        out.push(Violation::EmptySchedule);
        return out;
    }
    if s.switch_times[0] != 0.0 {
        out.push(Violation::StartNotZero { t0: s.switch_times[0] });
    }
    if s.first_index > 1 {
        out.push(Violation::InvalidFirstIndex {
            first_index: s.first_index,
        });
    }
    let mut ordered = true;
    for (pos, w) in s.switch_times.windows(2).enumerate() {
        if !(w[1] > w[0]) || !w[1].is_finite() {
            out.push(Violation::NonIncreasingSwitchTimes { n: s.index_of(pos) });
            ordered = false;
        }
    }
    if !(s.tau >= 0.0) || !s.tau.is_finite() {
        out.push(Violation::NegativeDelay { tau: s.tau });
    }
    let coefficients =
        s.b1.iter()
            .chain(s.b2.iter())
            .chain(s.even_intervals.iter().filter_map(|r| r.b1.as_ref()))
            .chain(s.odd_intervals.iter().filter_map(|r| r.b2.as_ref()));
    for c in coefficients {
        if let Err(e) = c.check() {
            out.push(Violation::InvalidCoefficient { message: e.to_string() });
        }
    }
    validate_geometry(s, &mut out);
    if !ordered {
        return out;
    }

    for pos in 0..s.interval_count() {
        let n = s.index_of(pos);
        let (start, end) = s.interval_bounds(pos);
        let length = end - start;
        let even = n.is_multiple_of(2);
        if even && s.mode == FeedbackMode::Delayed && s.tau > length * (1.0 + BOUND_TOL) {
            out.push(Violation::LengthViolation { n, length, tau: s.tau });
        }
        let record = s.bounds_of(n);
        match record {
            Some(IntervalBounds::Even { lower, upper }) => {
                if !(lower > 0.0) && (lower != 0.0 || upper != 0.0) {
                    out.push(Violation::LowerBoundNotPositive { n, lower });
                }
                if lower > upper {
                    out.push(Violation::BoundOrder { n, lower, upper });
                }
            }
            Some(IntervalBounds::Odd { upper }) if !(upper >= 0.0) => {
                out.push(Violation::BoundOrder { n, lower: 0.0, upper });
            }
            _ => {}
        }
        let mut overlap = false;
        let mut missing = false;
        let mut below = false;
        let mut above = false;
        for j in 0..BOUND_SAMPLES {
            let t = start + length * j as f64 / BOUND_SAMPLES as f64;
            let (active, idle, idle_name) = if even {
                (s.b1_on(pos, t), s.b2_on(pos, t), "b2")
            } else {
                (s.b2_on(pos, t), s.b1_on(pos, t), "b1")
            };
            if idle != 0.0 && !overlap {
                overlap = true;
                out.push(Violation::SupportOverlap {
                    n,
                    coefficient: idle_name.into(),
                    t,
                    value: idle,
                });
            }
            match record {
                None if active != 0.0 && !missing => {
                    missing = true;
                    out.push(Violation::MissingBounds { n, t, value: active });
                }
                Some(IntervalBounds::Even { lower, upper }) => {
                    let tol = BOUND_TOL * upper.abs().max(1.0);
                    if active < lower - tol && !below {
                        below = true;
                        out.push(Violation::BelowLowerBound {
                            n,
                            t,
                            value: active,
                            lower,
                        });
                    }
                    if active > upper + tol && !above {
                        above = true;
                        out.push(Violation::AboveUpperBound {
                            n,
                            t,
                            value: active,
                            upper,
                        });
                    }
                }
                Some(IntervalBounds::Odd { upper }) => {
                    let tol = BOUND_TOL * upper.abs().max(1.0);
                    if active.abs() > upper + tol && !above {
                        above = true;
                        out.push(Violation::AboveUpperBound {
                            n,
                            t,
                            value: active,
                            upper,
                        });
                    }
                }
                _ => {}
            }
        }
    }
    out
}

fn validate_geometry(s: &DampingSchedule, out: &mut Vec<Violation>) {
    let DampingGeometry::Localized { omega, omega_tilde } = &s.geometry else {
        return;
    };
    let mut ok = true;
    for r in [omega, omega_tilde] {
        if let Region::Interval { start, end } = r {
            if !(*start >= 0.0 && start < end) || !end.is_finite() {
                out.push(Violation::InvalidRegion {
                    start: *start,
                    end: *end,
                });
                ok = false;
            }
        }
    }
    if ok && s.mode == FeedbackMode::Delayed && !omega_tilde.within(omega) {
        out.push(Violation::RegionNotContained);
    }
}
