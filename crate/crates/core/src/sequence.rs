//! Sequences indexed by the interval-pair number `n = 0, 1, 2, …`.
//!
//! Besides pointwise evaluation, every closed-form family exposes its
//! leading tail behaviour `c · rⁿ · n^e`, which is what the series
//! classifier and the theorem checks reason about.

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A sequence family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceSpec {
    /// `c`
    Constant(f64),
    /// `scale · (n + shift)^(−exponent)`
    PowerLaw {
        scale: f64,
        exponent: f64,
        #[serde(default = "default_shift")]
        shift: f64,
    },
    /// `scale · ratioⁿ`, `ratio > 0`
    Geometric { scale: f64, ratio: f64 },
    /// Finitely many values; undefined past the end.
    Explicit(Vec<f64>),
    /// Termwise sum.
    Sum(Vec<SequenceSpec>),
    /// Termwise product.
    Product(Vec<SequenceSpec>),
    /// Termwise absolute value.
    Abs(Box<SequenceSpec>),
    /// `ln(1 + s_n)`
    LogOnePlus(Box<SequenceSpec>),
}

fn default_shift() -> f64 {
    1.0
}

/// `coef · ratioⁿ · n^exponent`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monomial {
    pub coef: f64,
    pub ratio: f64,
    pub exponent: f64,
}

impl Monomial {
    pub fn constant(c: f64) -> Self {
        Self {
            coef: c,
            ratio: 1.0,
            exponent: 0.0,
        }
    }

    /// Growth order comparison, ignoring the coefficient.
    pub fn order_cmp(&self, other: &Monomial) -> Ordering {
        self.ratio
            .total_cmp(&other.ratio)
            .then(self.exponent.total_cmp(&other.exponent))
    }

    pub fn powi(self, k: i32) -> Monomial {
        Monomial {
            coef: self.coef.powi(k),
            ratio: self.ratio.powi(k),
            exponent: self.exponent * k as f64,
        }
    }

    pub fn scale(self, s: f64) -> Monomial {
        Monomial {
            coef: self.coef * s,
            ..self
        }
    }

    /// Limit behaviour as n → ∞.
    pub fn limit(&self) -> Limit {
        if self.coef == 0.0 {
            return Limit::Zero;
        }
        match self.ratio.partial_cmp(&1.0) {
            Some(Ordering::Less) => Limit::Zero,
            Some(Ordering::Greater) => Limit::Infinite,
            _ => match self.exponent.partial_cmp(&0.0) {
                Some(Ordering::Less) => Limit::Zero,
                Some(Ordering::Greater) => Limit::Infinite,
                _ => Limit::Finite(self.coef),
            },
        }
    }

    /// True when `Σ |coef rⁿ n^e|` converges.
    pub fn summable(&self) -> bool {
        self.coef == 0.0 || self.ratio < 1.0 || (self.ratio == 1.0 && self.exponent < -1.0)
    }
}

/// Limit of a monomial tail (`Infinite` carries the sign of the coefficient).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Limit {
    Zero,
    Finite(f64),
    Infinite,
}

/// Leading tail behaviour of a sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail {
    /// Identically zero from some index on.
    Zero,
    /// `s_n ~ monomial`
    Lead(Monomial),
    /// `s_n ~ coef · ln n`
    Logarithmic(f64),
    /// Not determined by the closed form (explicit data, cancellation).
    Unknown,
}

impl Tail {
    fn from_monomial(m: Monomial) -> Tail {
        if m.coef == 0.0 {
            Tail::Zero
        } else {
            Tail::Lead(m)
        }
    }
}

impl SequenceSpec {
    pub fn constant(c: f64) -> Self {
        SequenceSpec::Constant(c)
    }

    pub fn power_law(scale: f64, exponent: f64) -> Self {
        SequenceSpec::PowerLaw {
            scale,
            exponent,
            shift: 1.0,
        }
    }

    /// Checks family-valid parameter ranges.
    pub fn validate(&self) -> Result<()> {
        let finite = |name: &'static str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::NonFinite { name, value: v })
            }
        };
        match self {
            SequenceSpec::Constant(c) => finite("constant", *c),
            SequenceSpec::PowerLaw { scale, exponent, shift } => {
                finite("power-law scale", *scale)?;
                finite("power-law exponent", *exponent)?;
                if !(*shift > 0.0) || !shift.is_finite() {
                    return Err(Error::UnsupportedFamily(format!(
                        "power-law shift must be positive, got {shift}"
                    )));
                }
                Ok(())
            }
            SequenceSpec::Geometric { scale, ratio } => {
                finite("geometric scale", *scale)?;
                if !(*ratio > 0.0) || !ratio.is_finite() {
                    return Err(Error::UnsupportedFamily(format!(
                        "geometric ratio must be positive, got {ratio}"
                    )));
                }
                Ok(())
            }
            SequenceSpec::Explicit(v) => v.iter().try_for_each(|x| finite("explicit term", *x)),
            SequenceSpec::Sum(parts) | SequenceSpec::Product(parts) => {
                if parts.is_empty() {
                    return Err(Error::UnsupportedFamily("empty composite".into()));
                }
                parts.iter().try_for_each(SequenceSpec::validate)
            }
            SequenceSpec::Abs(inner) => inner.validate(),
            SequenceSpec::LogOnePlus(inner) => inner.validate(),
        }
    }

    /// The n-th term, or `None` past the end of explicit data.
    pub fn value(&self, n: usize) -> Option<f64> {
        let x = n as f64;
        match self {
            SequenceSpec::Constant(c) => Some(*c),
            SequenceSpec::PowerLaw { scale, exponent, shift } => Some(scale * (x + shift).powf(-exponent)),
            SequenceSpec::Geometric { scale, ratio } => Some(scale * ratio.powf(x)),
            SequenceSpec::Explicit(v) => v.get(n).copied(),
            SequenceSpec::Sum(parts) => parts.iter().map(|p| p.value(n)).sum(),
            SequenceSpec::Product(parts) => parts.iter().map(|p| p.value(n)).product(),
            SequenceSpec::Abs(inner) => inner.value(n).map(f64::abs),
            SequenceSpec::LogOnePlus(inner) => inner.value(n).map(f64::ln_1p),
        }
    }

    /// Number of defined terms (`None` = infinite).
    pub fn len(&self) -> Option<usize> {
        match self {
            SequenceSpec::Explicit(v) => Some(v.len()),
            SequenceSpec::Sum(parts) | SequenceSpec::Product(parts) => parts.iter().filter_map(SequenceSpec::len).min(),
            SequenceSpec::Abs(inner) | SequenceSpec::LogOnePlus(inner) => inner.len(),
            _ => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    pub fn abs(&self) -> SequenceSpec {
        match self {
            SequenceSpec::Constant(c) => SequenceSpec::Constant(c.abs()),
            SequenceSpec::PowerLaw { scale, exponent, shift } => SequenceSpec::PowerLaw {
                scale: scale.abs(),
                exponent: *exponent,
                shift: *shift,
            },
            SequenceSpec::Geometric { scale, ratio } => SequenceSpec::Geometric {
                scale: scale.abs(),
                ratio: *ratio,
            },
            SequenceSpec::Explicit(v) => SequenceSpec::Explicit(v.iter().map(|x| x.abs()).collect()),
            other => SequenceSpec::Abs(Box::new(other.clone())),
        }
    }

    /// Leading tail behaviour.
    pub fn tail(&self) -> Tail {
        match self {
            SequenceSpec::Constant(c) => Tail::from_monomial(Monomial::constant(*c)),
            SequenceSpec::PowerLaw { scale, exponent, .. } => Tail::from_monomial(Monomial {
                coef: *scale,
                ratio: 1.0,
                exponent: -exponent,
            }),
            SequenceSpec::Geometric { scale, ratio } => Tail::from_monomial(Monomial {
                coef: *scale,
                ratio: *ratio,
                exponent: 0.0,
            }),
            SequenceSpec::Explicit(_) => Tail::Unknown,
            SequenceSpec::Abs(inner) => match inner.tail() {
                Tail::Lead(m) => Tail::Lead(Monomial {
                    coef: m.coef.abs(),
                    ..m
                }),
                Tail::Logarithmic(c) => Tail::Logarithmic(c.abs()),
                t => t,
            },
            SequenceSpec::LogOnePlus(inner) => match inner.tail() {
                Tail::Zero => Tail::Zero,
                Tail::Unknown => Tail::Unknown,
                // ln(1 + c ln n) is unbounded but slower than any logarithm.
                Tail::Logarithmic(c) if c > 0.0 => Tail::Logarithmic(f64::MIN_POSITIVE),
                Tail::Logarithmic(_) => Tail::Unknown,
                Tail::Lead(m) => match m.limit() {
                    Limit::Zero => Tail::Lead(m),
                    Limit::Finite(c) if c > -1.0 => Tail::from_monomial(Monomial::constant(c.ln_1p())),
                    Limit::Infinite if m.coef > 0.0 && m.ratio == 1.0 => Tail::Logarithmic(m.exponent),
                    Limit::Infinite if m.coef > 0.0 => Tail::Lead(Monomial {
                        coef: m.ratio.ln(),
                        ratio: 1.0,
                        exponent: 1.0,
                    }),
                    _ => Tail::Unknown,
                },
            },
            SequenceSpec::Sum(parts) => sum_tail(parts),
            SequenceSpec::Product(parts) => parts
                .iter()
                .fold(Tail::Lead(Monomial::constant(1.0)), |acc, p| acc.mul(p.tail())),
        }
    }
}

impl Tail {
    pub fn one() -> Tail {
        Tail::Lead(Monomial::constant(1.0))
    }

    pub fn constant(c: f64) -> Tail {
        Tail::from_monomial(Monomial::constant(c))
    }

    pub fn scale(self, s: f64) -> Tail {
        match self {
            Tail::Lead(m) => Tail::from_monomial(m.scale(s)),
            Tail::Logarithmic(c) if s != 0.0 => Tail::Logarithmic(c * s),
            Tail::Logarithmic(_) => Tail::Zero,
            t => t,
        }
    }

    /// Limit as n → ∞, when determined.
    pub fn limit(&self) -> Option<Limit> {
        match self {
            Tail::Zero => Some(Limit::Zero),
            Tail::Lead(m) => Some(m.limit()),
            Tail::Logarithmic(_) => Some(Limit::Infinite),
            Tail::Unknown => None,
        }
    }

    /// Sign of the eventual terms (0 for identically zero tails).
    pub fn sign(&self) -> Option<f64> {
        match self {
            Tail::Zero => Some(0.0),
            Tail::Lead(m) => Some(m.coef.signum()),
            Tail::Logarithmic(c) => Some(c.signum()),
            Tail::Unknown => None,
        }
    }

    pub fn recip(self) -> Tail {
        match self {
            Tail::Lead(m) => Tail::Lead(Monomial::constant(1.0).div(m)),
            _ => Tail::Unknown,
        }
    }

    /// Tail of `ln z_n` for a positive sequence `z`, with `y = z − 1`
    /// supplied separately so that the `z → 1` case keeps its leading order.
    pub fn ln_with_offset(z: Tail, y: Tail) -> Tail {
        match z {
            Tail::Lead(m) if m.coef > 0.0 => match m.limit() {
                Limit::Finite(c) if (c - 1.0).abs() > 1e-12 => Tail::constant(c.ln()),
                Limit::Finite(_) => match y.limit() {
                    Some(Limit::Zero) => y,
                    _ => Tail::Unknown,
                },
                _ if m.ratio != 1.0 => Tail::Lead(Monomial {
                    coef: m.ratio.ln(),
                    ratio: 1.0,
                    exponent: 1.0,
                }),
                _ => Tail::Logarithmic(m.exponent),
            },
            Tail::Logarithmic(c) if c > 0.0 => Tail::Logarithmic(f64::MIN_POSITIVE),
            _ => Tail::Unknown,
        }
    }
}

/// Leading tail of a termwise sum. Monomials of equal order are combined;
/// if the dominant group cancels, the tail is only known when every member
/// is the same closed-form atom (identical cancellation).
fn sum_tail(parts: &[SequenceSpec]) -> Tail {
    struct Member {
        mono: Monomial,
        shift: Option<f64>,
    }
    let mut members = Vec::new();
    let mut log_coef: Option<f64> = None;
    for p in parts {
        let shift = match p {
            SequenceSpec::PowerLaw { shift, .. } => Some(*shift),
            SequenceSpec::Constant(_) | SequenceSpec::Geometric { .. } => Some(1.0),
            _ => None,
        };
        match p.tail() {
            Tail::Zero => {}
            Tail::Unknown => return Tail::Unknown,
            Tail::Logarithmic(c) => *log_coef.get_or_insert(0.0) += c,
            Tail::Lead(mono) => members.push(Member { mono, shift }),
        }
    }
    members.sort_by(|a, b| b.mono.order_cmp(&a.mono));
    let mut i = 0;
    while i < members.len() {
        let mut j = i;
        while j < members.len() && members[j].mono.order_cmp(&members[i].mono) == Ordering::Equal {
            j += 1;
        }
        let group = &members[i..j];
        let lead = group[0].mono;
        // A logarithm dominates bounded monomials and is dominated by growing ones.
        if let Some(c) = log_coef {
            if !matches!(lead.limit(), Limit::Infinite) {
                return if c == 0.0 { Tail::Unknown } else { Tail::Logarithmic(c) };
            }
        }
        let total: f64 = group.iter().map(|m| m.mono.coef).sum();
        let scale = group.iter().map(|m| m.mono.coef.abs()).fold(0.0, f64::max);
        if total.abs() > 1e-13 * scale {
            return Tail::Lead(Monomial { coef: total, ..lead });
        }
        let same_atom = group.iter().all(|m| m.shift.is_some() && m.shift == group[0].shift);
        if !same_atom {
            return Tail::Unknown;
        }
        i = j;
    }
    match log_coef {
        Some(c) if c != 0.0 => Tail::Logarithmic(c),
        Some(_) => Tail::Unknown,
        None => Tail::Zero,
    }
}

impl Mul for Monomial {
    type Output = Monomial;

    fn mul(self, o: Monomial) -> Monomial {
        Monomial {
            coef: self.coef * o.coef,
            ratio: self.ratio * o.ratio,
            exponent: self.exponent + o.exponent,
        }
    }
}

impl Div for Monomial {
    type Output = Monomial;

    fn div(self, o: Monomial) -> Monomial {
        Monomial {
            coef: self.coef / o.coef,
            ratio: self.ratio / o.ratio,
            exponent: self.exponent - o.exponent,
        }
    }
}

impl Add for Tail {
    type Output = Tail;

    /// Leading tail of a sum; equal-order cancellation is undetermined.
    fn add(self, other: Tail) -> Tail {
        match (self, other) {
            (Tail::Unknown, _) | (_, Tail::Unknown) => Tail::Unknown,
            (Tail::Zero, t) | (t, Tail::Zero) => t,
            (Tail::Logarithmic(a), Tail::Logarithmic(b)) => {
                let s = a + b;
                if s.abs() > 1e-13 * a.abs().max(b.abs()) {
                    Tail::Logarithmic(s)
                } else {
                    Tail::Unknown
                }
            }
            (Tail::Logarithmic(c), Tail::Lead(m)) | (Tail::Lead(m), Tail::Logarithmic(c)) => {
                if m.limit() == Limit::Infinite {
                    Tail::Lead(m)
                } else {
                    Tail::Logarithmic(c)
                }
            }
            (Tail::Lead(a), Tail::Lead(b)) => match a.order_cmp(&b) {
                Ordering::Greater => Tail::Lead(a),
                Ordering::Less => Tail::Lead(b),
                Ordering::Equal => {
                    let s = a.coef + b.coef;
                    if s.abs() > 1e-13 * a.coef.abs().max(b.coef.abs()) {
                        Tail::Lead(Monomial { coef: s, ..a })
                    } else {
                        Tail::Unknown
                    }
                }
            },
        }
    }
}

impl Mul for Tail {
    type Output = Tail;

    fn mul(self, other: Tail) -> Tail {
        match (self, other) {
            (Tail::Zero, _) | (_, Tail::Zero) => Tail::Zero,
            (Tail::Unknown, _) | (_, Tail::Unknown) => Tail::Unknown,
            (Tail::Lead(a), Tail::Lead(b)) => Tail::from_monomial(a.mul(b)),
            (Tail::Logarithmic(c), Tail::Lead(m)) | (Tail::Lead(m), Tail::Logarithmic(c))
                if m.ratio == 1.0 && m.exponent == 0.0 =>
            {
                Tail::Logarithmic(c * m.coef)
            }
            _ => Tail::Unknown,
        }
    }
}

impl Neg for Tail {
    type Output = Tail;

    fn neg(self) -> Tail {
        self.scale(-1.0)
    }
}
