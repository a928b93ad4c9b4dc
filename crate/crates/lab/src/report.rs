//! The JSON stability report.

use idl_core::criteria::observability::ObservabilityEstimate;
use idl_core::criteria::{Theorem, TheoremCheck};
use idl_core::energy::{EnergyViolation, EvenRow, IntervalReport, OddRow};
use serde::{Deserialize, Serialize};

/// Schema identifier embedded in every report.
pub const SCHEMA: &str = "idl-report-v1";

/// Process exit status contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Success,
    Inconclusive,
    Violation,
    Failure,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::Failure => 1,
            Status::Violation => 2,
            Status::Inconclusive => 3,
        }
    }

    /// The more severe of two statuses (failure > violation > inconclusive > success).
    pub fn worst(self, other: Status) -> Status {
        self.max(other)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Some requested theorem establishes asymptotic stability.
    Stable,
    /// No bound violated and no theorem requested.
    Consistent,
    /// No requested theorem concludes.
    Inconclusive,
    /// The trajectory violates an energy estimate.
    Violation,
}

impl Verdict {
    pub fn status(self) -> Status {
        match self {
            Verdict::Violation => Status::Violation,
            Verdict::Inconclusive => Status::Inconclusive,
            Verdict::Stable | Verdict::Consistent => Status::Success,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub verdict: Verdict,
    pub exit_code: i32,
    pub concluded_by: Vec<Theorem>,
}

/// A violated estimate, citing its interval and inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportViolation {
    pub interval: usize,
    pub inequality: String,
    pub kind: idl_core::energy::EnergyViolationKind,
    pub t: f64,
    pub observed: f64,
    pub bound: f64,
}

impl From<&EnergyViolation> for ReportViolation {
    fn from(v: &EnergyViolation) -> Self {
        Self {
            interval: v.n,
            inequality: v.kind.inequality().to_string(),
            kind: v.kind,
            t: v.t,
            observed: v.observed,
            bound: v.bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalTable {
    pub even: Vec<EvenRow>,
    pub odd: Vec<OddRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub schema: String,
    pub scenario: String,
    pub scenario_hash: String,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervals: Option<IntervalTable>,
    pub criteria: Vec<TheoremCheck>,
    /// Empirical observability estimate used for `d_n`, when one was needed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observability: Option<ObservabilityEstimate>,
    /// Least-squares slope of `ln E_S` over the final half of the run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth_rate: Option<f64>,
    pub summary: Summary,
    pub violations: Vec<ReportViolation>,
}

impl StabilityReport {
    pub fn new(
        scenario: &str,
        hash: &str,
        command: &str,
        intervals: Option<IntervalReport>,
        criteria: Vec<TheoremCheck>,
    ) -> Self {
        let violations: Vec<ReportViolation> = intervals
            .as_ref()
            .map(|r| r.violations.iter().map(ReportViolation::from).collect())
            .unwrap_or_default();
        let concluded_by: Vec<Theorem> = criteria.iter().filter(|c| c.concluded).map(|c| c.theorem).collect();
        let verdict = if !violations.is_empty() {
            Verdict::Violation
        } else if criteria.is_empty() {
            Verdict::Consistent
        } else if concluded_by.is_empty() {
            Verdict::Inconclusive
        } else {
            Verdict::Stable
        };
        Self {
            schema: SCHEMA.to_string(),
            scenario: scenario.to_string(),
            scenario_hash: hash.to_string(),
            command: command.to_string(),
            intervals: intervals.map(|r| IntervalTable {
                even: r.even,
                odd: r.odd,
            }),
            criteria,
            observability: None,
            growth_rate: None,
            summary: Summary {
                verdict,
                exit_code: verdict.status().code(),
                concluded_by,
            },
            violations,
        }
    }

    pub fn status(&self) -> Status {
        self.summary.verdict.status()
    }
}
