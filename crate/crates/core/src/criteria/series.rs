//! Deciding whether `Σ s_n = −∞`.
//!
//! Closed-form families are classified exactly from their leading tail;
//! anything else falls back to partial sums, which only ever conclude
//! divergence when the sums decrease monotonically past `−10⁶`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::sequence::{Limit, SequenceSpec, Tail};

/// Partial sums are reported at these term counts.
pub const CHECKPOINTS: [usize; 4] = [100, 1_000, 10_000, 100_000];

/// Threshold the heuristic partial sums must pass to conclude divergence.
pub const HEURISTIC_FLOOR: f64 = -1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    DivergesToMinusInfinity,
    ConvergesOrBoundedBelow,
    Inconclusive,
}

/// Which rule produced a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    ExactTail,
    PartialSums,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartialSum {
    pub n: usize,
    pub sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub rule: Rule,
    pub rationale: String,
    pub partial_sums: Vec<PartialSum>,
}

impl Verdict {
    pub fn diverges(&self) -> bool {
        self.outcome == Outcome::DivergesToMinusInfinity
    }
}

/// Compensated partial sums of `term(0..)` at the checkpoints (or at the
/// last available term for finite data).
pub fn partial_sums<F>(mut term: F, len: Option<usize>) -> Result<Vec<PartialSum>>
where
    F: FnMut(usize) -> Result<Option<f64>>,
{
    let limit = len.map_or(CHECKPOINTS[3], |l| l.min(CHECKPOINTS[3]));
    let mut out = Vec::new();
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for n in 0..limit {
        let Some(x) = term(n)? else { break };
        let t = sum + x;
        comp += if sum.abs() >= x.abs() {
            (sum - t) + x
        } else {
            (x - t) + sum
        };
        sum = t;
        let count = n + 1;
        if CHECKPOINTS.contains(&count) || count == limit {
            out.push(PartialSum {
                n: count,
                sum: sum + comp,
            });
        }
    }
    out.dedup_by_key(|p| p.n);
    Ok(out)
}

fn describe(tail: &Tail) -> String {
    match tail {
        Tail::Zero => "terms vanish identically".into(),
        Tail::Lead(m) if m.ratio == 1.0 && m.exponent == 0.0 => format!("terms -> {:.6e}", m.coef),
        Tail::Lead(m) if m.ratio == 1.0 => format!("terms ~ {:.6e} n^{}", m.coef, m.exponent),
        Tail::Lead(m) => format!("terms ~ {:.6e} {}^n n^{}", m.coef, m.ratio, m.exponent),
        Tail::Logarithmic(c) => format!("terms ~ {c:.6e} ln n"),
        Tail::Unknown => "tail undetermined".into(),
    }
}

/// Exact classification of a known tail, if possible.
pub fn classify_tail(tail: &Tail) -> Option<(Outcome, String)> {
    let outcome = match tail {
        Tail::Unknown => return None,
        Tail::Zero => Outcome::ConvergesOrBoundedBelow,
        Tail::Logarithmic(c) if *c < 0.0 => Outcome::DivergesToMinusInfinity,
        Tail::Logarithmic(_) => Outcome::ConvergesOrBoundedBelow,
        Tail::Lead(m) => match m.limit() {
            Limit::Zero if m.coef < 0.0 && !m.summable() => Outcome::DivergesToMinusInfinity,
            Limit::Zero => Outcome::ConvergesOrBoundedBelow,
            _ if m.coef < 0.0 => Outcome::DivergesToMinusInfinity,
            _ => Outcome::ConvergesOrBoundedBelow,
        },
    };
    let why = match outcome {
        Outcome::DivergesToMinusInfinity => "eventually negative and not summable",
        _ => "eventually positive or absolutely summable",
    };
    Some((outcome, format!("exact tail: {}; {why}", describe(tail))))
}

/// Partial-sum heuristic.
pub fn heuristic(sums: &[PartialSum]) -> (Outcome, String) {
    let monotone = sums.windows(2).all(|w| w[1].sum < w[0].sum);
    match sums.last() {
        Some(last) if monotone && last.sum < HEURISTIC_FLOOR => (
            Outcome::DivergesToMinusInfinity,
            format!("partial sums decrease monotonically to {:.6e}", last.sum),
        ),
        Some(last) => (
            Outcome::Inconclusive,
            format!(
                "partial sums reach {:.6e} after {} terms; no closed-form tail",
                last.sum, last.n
            ),
        ),
        None => (Outcome::Inconclusive, "no terms".into()),
    }
}

/// Assembles a verdict from a tail and a numeric term generator.
pub fn verdict_from<F>(tail: Tail, term: F, len: Option<usize>) -> Result<Verdict>
where
    F: FnMut(usize) -> Result<Option<f64>>,
{
    let sums = partial_sums(term, len)?;
    let (outcome, rule, rationale) = match classify_tail(&tail) {
        Some((o, r)) if len.is_none() => (o, Rule::ExactTail, r),
        _ => {
            let (o, r) = heuristic(&sums);
            (o, Rule::PartialSums, r)
        }
    };
    Ok(Verdict {
        outcome,
        rule,
        rationale,
        partial_sums: sums,
    })
}

/// Decides whether `Σ terms = −∞`.
pub fn series_verdict(terms: &SequenceSpec) -> Result<Verdict> {
    terms.validate()?;
    verdict_from(terms.tail(), |n| Ok(terms.value(n)), terms.len())
}
