//! Series conditions of the stability theorems.
//!
//! Each theorem reduces to `Σ [k·x_n + ln z_n] = −∞` with
//! `x_n = M_{2n+1}T_{2n+1}` and a per-theorem contraction term `z_n`:
//!
//! | theorem          | k      | z_n              |
//! |------------------|--------|------------------|
//! | `first`          | 2      | `c̃_n`            |
//! | `first_generale` | 2      | `c̃_n` under i′)  |
//! | `stab2cris5`     | 2C     | `d̂_n + C x_n`    |
//! | `linear`         | 2C     | `ĉ_n + C x_n`    |
//! | `posneg`         | 2C₃    | `d̂_n`            |
//! | `posneg_linear`  | 2C₃    | `ĉ_n` (with C₁)  |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::constants::{c_hat_linear, d_hat, observability_ratio_f64};
use super::series::{verdict_from, Outcome, Verdict};
use crate::error::{Error, Result};
use crate::operator::FeedbackG;
use crate::sequence::{Limit, SequenceSpec, Tail};

/// Number of leading terms reported in a theorem check.
pub const TERM_TRACE_LEN: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    First,
    FirstGenerale,
    #[serde(rename = "stab2cris5")]
    Stab2Cris5,
    Linear,
    Posneg,
    PosnegLinear,
}

impl Theorem {
    pub const ALL: [Theorem; 6] = [
        Theorem::First,
        Theorem::FirstGenerale,
        Theorem::Stab2Cris5,
        Theorem::Linear,
        Theorem::Posneg,
        Theorem::PosnegLinear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Theorem::First => "first",
            Theorem::FirstGenerale => "first_generale",
            Theorem::Stab2Cris5 => "stab2cris5",
            Theorem::Linear => "linear",
            Theorem::Posneg => "posneg",
            Theorem::PosnegLinear => "posneg_linear",
        }
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Theorem {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Theorem::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let names: Vec<_> = Theorem::ALL.iter().map(|t| t.name()).collect();
                format!("unknown theorem `{s}` (expected one of {})", names.join(", "))
            })
    }
}

/// Sequences (indexed by the pair number n) and constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriteriaInputs {
    /// `T_{2n}`
    pub even_length: SequenceSpec,
    /// `m_{2n}`
    pub lower: SequenceSpec,
    /// `M_{2n}`
    pub upper: SequenceSpec,
    /// `M_{2n+1} T_{2n+1}`
    pub odd_product: SequenceSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda1: Option<f64>,
    /// Embedding constant `C` of `W` into `H`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding_c: Option<f64>,
    /// Embedding constant `C₁` of `W₁` into `H` (positive–negative mode).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    /// Embedding constant `C₃` of `W₃` into `H` (positive–negative mode).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c3: Option<f64>,
    /// Observability constant `c` of the linear inequality.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observability_c: Option<f64>,
    /// Observability constants `d_n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<SequenceSpec>,
    /// Feedback `g` whose slopes scale `m_{2n}` and `M_{2n}` under i′).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback: Option<FeedbackG>,
}

impl CriteriaInputs {
    /// Constant-in-n parameters.
    pub fn constant(even_length: f64, lower: f64, upper: f64, odd_product: f64) -> Self {
        Self {
            even_length: SequenceSpec::Constant(even_length),
            lower: SequenceSpec::Constant(lower),
            upper: SequenceSpec::Constant(upper),
            odd_product: SequenceSpec::Constant(odd_product),
            lambda1: None,
            embedding_c: None,
            c1: None,
            c3: None,
            observability_c: None,
            d: None,
            feedback: None,
        }
    }
}

/// The sufficient pair of easier conditions, when the theorem has one:
/// `Σ M_{2n+1}T_{2n+1} < ∞` together with a divergence condition on the
/// damped intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplifiedPair {
    pub odd_summable: Option<bool>,
    pub damping_divergent: Option<bool>,
    pub implies_stability: bool,
    pub divergence_condition: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremCheck {
    pub theorem: Theorem,
    pub verdict: Verdict,
    /// Leading terms of the series.
    pub terms: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simplified: Option<SimplifiedPair>,
    /// True when the series condition is established, i.e. stability follows.
    pub concluded: bool,
}

fn need(theorem: Theorem, name: &'static str, v: Option<f64>) -> Result<f64> {
    v.ok_or(Error::MissingConstant {
        theorem: theorem_static(theorem),
        name,
    })
}

fn theorem_static(t: Theorem) -> &'static str {
    t.name()
}

fn at(seq: &SequenceSpec, n: usize) -> Option<f64> {
    seq.value(n)
}

/// How a theorem's term `k·x + ln z` is assembled.
struct Shape {
    /// coefficient k of x_n
    weight: f64,
    /// tail of z_n and of z_n − 1
    z: Tail,
    y: Tail,
}

type TermFn<'a> = Box<dyn Fn(usize) -> Result<Option<f64>> + 'a>;

/// Tail of `q_n = (T³/30) / (4/(λ₁m) + 3T²/(32m) + MT²/(16λ₁))` with the
/// bounds scaled by `sa` and `sb`.
fn observability_ratio_tail(inputs: &CriteriaInputs, sa: f64, sb: f64, lambda1: f64) -> Tail {
    let tt = inputs.even_length.tail();
    let tm = inputs.lower.tail().scale(sa);
    let tmm = inputs.upper.tail().scale(sb);
    let t2 = tt * tt;
    let inner = Tail::constant(4.0 / lambda1) * tm.recip()
        + Tail::constant(3.0 / 32.0) * t2 * tm.recip()
        + (tmm * t2).scale(1.0 / (16.0 * lambda1));
    (t2 * tt).scale(1.0 / 30.0) * inner.recip()
}

/// Tail of `P_n = 1 + 4C²T²M²`.
fn penalty_tail(inputs: &CriteriaInputs, embed: f64) -> Tail {
    let tt = inputs.even_length.tail();
    let tmm = inputs.upper.tail();
    Tail::one() + (tt * tt * tmm * tmm).scale(4.0 * embed * embed)
}

fn min_len(seqs: &[&SequenceSpec]) -> Option<usize> {
    seqs.iter().filter_map(|s| s.len()).min()
}

/// Runs the series condition of `which`.
pub fn check_theorem(which: Theorem, inputs: &CriteriaInputs) -> Result<TheoremCheck> {
    for s in [&inputs.even_length, &inputs.lower, &inputs.upper, &inputs.odd_product] {
        s.validate()?;
    }
    if let Some(d) = &inputs.d {
        d.validate()?;
    }
    let x = &inputs.odd_product;
    let tx = x.tail();
    let one = Tail::one();

    let (shape, term, len): (Shape, TermFn, Option<usize>) = match which {
        Theorem::First | Theorem::FirstGenerale => {
            let lambda1 = need(which, "lambda1", inputs.lambda1)?;
            let (sa, sb) = if which == Theorem::FirstGenerale {
                let g = inputs.feedback.ok_or(Error::MissingConstant {
                    theorem: theorem_static(which),
                    name: "feedback",
                })?;
                (g.lower(), g.upper())
            } else {
                (1.0, 1.0)
            };
            let q = observability_ratio_tail(inputs, sa, sb, lambda1);
            let inv = (one + q).recip();
            let shape = Shape {
                weight: 2.0,
                z: inv + tx,
                y: -(q * inv) + tx,
            };
            let (l, m, mm) = (&inputs.even_length, &inputs.lower, &inputs.upper);
            let term = move |n: usize| -> Result<Option<f64>> {
                let (Some(t), Some(m), Some(mm), Some(xn)) = (at(l, n), at(m, n), at(mm, n), at(x, n)) else {
                    return Ok(None);
                };
                if xn < 0.0 {
                    return Err(Error::NonPositive {
                        name: "M_{2n+1} T_{2n+1} (must be >= 0)",
                        value: xn,
                    });
                }
                let q = observability_ratio_f64(t, m * sa, mm * sb, lambda1)?;
                Ok(Some(2.0 * xn + (xn - q / (1.0 + q)).ln_1p()))
            };
            (shape, Box::new(term), min_len(&[l, m, mm, x]))
        }
        Theorem::Stab2Cris5 | Theorem::Posneg => {
            let (weight_c, name) = if which == Theorem::Stab2Cris5 {
                (need(which, "C", inputs.embedding_c)?, "C")
            } else {
                (need(which, "C3", inputs.c3)?, "C3")
            };
            if weight_c.is_nan() || weight_c <= 0.0 {
                return Err(Error::NonPositive { name, value: weight_c });
            }
            let d = inputs.d.as_ref().ok_or(Error::MissingConstant {
                theorem: theorem_static(which),
                name: "d",
            })?;
            let td = d.tail();
            let inv = (td + one).recip();
            let additive = which == Theorem::Stab2Cris5;
            let cx = if additive { tx.scale(weight_c) } else { Tail::Zero };
            let shape = Shape {
                weight: 2.0 * weight_c,
                z: td * inv + cx,
                y: -inv + cx,
            };
            let term = move |n: usize| -> Result<Option<f64>> {
                let (Some(dn), Some(xn)) = (at(d, n), at(x, n)) else {
                    return Ok(None);
                };
                let dh = d_hat(dn)?;
                let extra = if additive { weight_c * xn } else { 0.0 };
                Ok(Some(2.0 * weight_c * xn + (extra - (1.0 - dh)).ln_1p()))
            };
            (shape, Box::new(term), min_len(&[d, x]))
        }
        Theorem::Linear | Theorem::PosnegLinear => {
            let c = need(which, "c", inputs.observability_c)?;
            let (weight_c, embed) = if which == Theorem::Linear {
                let cc = need(which, "C", inputs.embedding_c)?;
                (cc, cc)
            } else {
                (need(which, "C3", inputs.c3)?, need(which, "C1", inputs.c1)?)
            };
            let additive = which == Theorem::Linear;
            let tm = inputs.lower.tail();
            let p = penalty_tail(inputs, embed);
            let two_cp = p.scale(2.0 * c);
            let inv = (tm + two_cp).recip();
            let cx = if additive { tx.scale(weight_c) } else { Tail::Zero };
            let shape = Shape {
                weight: 2.0 * weight_c,
                z: two_cp * inv + cx,
                y: -(tm * inv) + cx,
            };
            let (l, m, mm) = (&inputs.even_length, &inputs.lower, &inputs.upper);
            let term = move |n: usize| -> Result<Option<f64>> {
                let (Some(t), Some(m), Some(mm), Some(xn)) = (at(l, n), at(m, n), at(mm, n), at(x, n)) else {
                    return Ok(None);
                };
                let ch = c_hat_linear(c, embed, t, mm, m)?;
                let extra = if additive { weight_c * xn } else { 0.0 };
                Ok(Some(2.0 * weight_c * xn + (extra - (1.0 - ch)).ln_1p()))
            };
            (shape, Box::new(term), min_len(&[l, m, mm, x]))
        }
    };

    let term_tail = tx.scale(shape.weight) + Tail::ln_with_offset(shape.z, shape.y);
    let terms = (0..TERM_TRACE_LEN)
        .map_while(|n| term(n).transpose())
        .collect::<Result<Vec<f64>>>()?;
    let verdict = verdict_from(term_tail, &term, len)?;
    let simplified = simplified_pair(which, inputs)?;
    let concluded = verdict.outcome == Outcome::DivergesToMinusInfinity;
    Ok(TheoremCheck {
        theorem: which,
        verdict,
        terms,
        simplified,
        concluded,
    })
}

/// Eventually-nonnegative series divergence (`Σ s_n = +∞`) from a tail.
fn diverges_positive(t: &Tail) -> Option<bool> {
    match t {
        Tail::Zero => Some(false),
        Tail::Lead(m) if m.coef > 0.0 => Some(!matches!(m.limit(), Limit::Zero) || !m.summable()),
        Tail::Logarithmic(c) if *c > 0.0 => Some(true),
        _ => None,
    }
}

fn summable_nonnegative(t: &Tail) -> Option<bool> {
    match t {
        Tail::Zero => Some(true),
        Tail::Lead(m) if m.coef > 0.0 => Some(m.summable()),
        Tail::Logarithmic(c) if *c > 0.0 => Some(false),
        _ => None,
    }
}

fn simplified_pair(which: Theorem, inputs: &CriteriaInputs) -> Result<Option<SimplifiedPair>> {
    let odd_summable = summable_nonnegative(&inputs.odd_product.tail());
    let one = Tail::one();
    let (damping_divergent, condition) = match which {
        Theorem::First | Theorem::FirstGenerale => {
            let lambda1 = need(which, "lambda1", inputs.lambda1)?;
            let (sa, sb) = match (which, inputs.feedback) {
                (Theorem::FirstGenerale, Some(g)) => (g.lower(), g.upper()),
                _ => (1.0, 1.0),
            };
            let q = observability_ratio_tail(inputs, sa, sb, lambda1);
            let ln_term = Tail::ln_with_offset(one + q, q);
            (diverges_positive(&ln_term), "sum ln(1 + q_n) = +infinity")
        }
        Theorem::Linear | Theorem::PosnegLinear => {
            let embed = if which == Theorem::Linear {
                need(which, "C", inputs.embedding_c)?
            } else {
                need(which, "C1", inputs.c1)?
            };
            let tm = inputs.lower.tail();
            let p = penalty_tail(inputs, embed);
            let r = tm * p.recip();
            (
                diverges_positive(&r),
                "sum m_2n / (1 + 4 C^2 T_2n^2 M_2n^2) = +infinity",
            )
        }
        _ => return Ok(None),
    };
    Ok(Some(SimplifiedPair {
        odd_summable,
        damping_divergent,
        implies_stability: odd_summable == Some(true) && damping_divergent == Some(true),
        divergence_condition: condition.into(),
    }))
}
