//! Closed-form contraction constants, in floating point and in exact
//! rational arithmetic.
//!
//! - `c̃ = 1/(1 + (T³/30)/(4/(λ₁m) + 3T²/(32m) + MT²/(16λ₁))) + M_{2n+1}T_{2n+1}`
//! - `ĉ = 2c(1 + 4C²T²M²)/(m + 2c(1 + 4C²T²M²))`
//! - `d̂ = d/(d + 1)`

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, ToPrimitive};

use crate::error::{Error, Result};

fn k<T: FromPrimitive>(n: i64) -> T {
    T::from_i64(n).expect("small integers are representable")
}

fn positive<T: Num + PartialOrd + ToPrimitive>(name: &'static str, v: &T) -> Result<()> {
    if *v > T::zero() {
        Ok(())
    } else {
        Err(Error::NonPositive {
            name,
            value: v.to_f64().unwrap_or(f64::NAN),
        })
    }
}

fn finite(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { name, value: v })
    }
}

/// `q = (T³/30) / (4/(λ₁m) + 3T²/(32m) + MT²/(16λ₁))`, so that the
/// delay-free part of `c̃` is `1/(1 + q)`.
fn observability_ratio<T>(t: &T, m: &T, upper: &T, lambda1: &T) -> Result<T>
where
    T: Clone + Num + PartialOrd + FromPrimitive + ToPrimitive,
{
    positive("T_2n", t)?;
    positive("m_2n", m)?;
    positive("M_2n", upper)?;
    positive("lambda_1", lambda1)?;
    if m > upper {
        return Err(Error::BoundOrder {
            lower: m.to_f64().unwrap_or(f64::NAN),
            upper: upper.to_f64().unwrap_or(f64::NAN),
        });
    }
    let t2 = t.clone() * t.clone();
    let t3 = t2.clone() * t.clone();
    let inner = k::<T>(4) / (lambda1.clone() * m.clone())
        + k::<T>(3) * t2.clone() / (k::<T>(32) * m.clone())
        + upper.clone() * t2 / (k::<T>(16) * lambda1.clone());
    Ok(t3 / (k::<T>(30) * inner))
}

fn c_tilde_generic<T>(t: &T, m: &T, upper: &T, lambda1: &T, odd: &T) -> Result<T>
where
    T: Clone + Num + PartialOrd + FromPrimitive + ToPrimitive,
{
    if *odd < T::zero() {
        return Err(Error::NonPositive {
            name: "M_{2n+1} T_{2n+1} (must be >= 0)",
            value: odd.to_f64().unwrap_or(f64::NAN),
        });
    }
    let q = observability_ratio(t, m, upper, lambda1)?;
    Ok(T::one() / (T::one() + q) + odd.clone())
}

fn c_hat_generic<T>(c: &T, embed: &T, t: &T, upper: &T, m: &T) -> Result<T>
where
    T: Clone + Num + PartialOrd + FromPrimitive + ToPrimitive,
{
    positive("c", c)?;
    positive("C", embed)?;
    positive("T_2n", t)?;
    positive("M_2n", upper)?;
    positive("m_2n", m)?;
    let p =
        T::one() + k::<T>(4) * embed.clone() * embed.clone() * t.clone() * t.clone() * upper.clone() * upper.clone();
    let num = k::<T>(2) * c.clone() * p;
    Ok(num.clone() / (m.clone() + num))
}

fn d_hat_generic<T>(d: &T) -> Result<T>
where
    T: Clone + Num + PartialOrd + FromPrimitive + ToPrimitive,
{
    positive("d_n", d)?;
    Ok(d.clone() / (d.clone() + T::one()))
}

/// Delay-free part `1/(1 + q)` of `c̃` and the ratio `q` itself.
pub fn observability_ratio_f64(t: f64, m: f64, upper: f64, lambda1: f64) -> Result<f64> {
    for (name, v) in [("T_2n", t), ("m_2n", m), ("M_2n", upper), ("lambda_1", lambda1)] {
        finite(name, v)?;
    }
    observability_ratio(&t, &m, &upper, &lambda1)
}

/// `c̃(T_{2n}, m_{2n}, M_{2n}, λ₁, M_{2n+1}T_{2n+1})`.
pub fn c_tilde(t: f64, m: f64, upper: f64, lambda1: f64, odd_product: f64) -> Result<f64> {
    finite("M_{2n+1} T_{2n+1}", odd_product)?;
    observability_ratio_f64(t, m, upper, lambda1)?;
    c_tilde_generic(&t, &m, &upper, &lambda1, &odd_product)
}

/// `ĉ(c, C, T_{2n}, M_{2n}, m_{2n})`.
pub fn c_hat_linear(c: f64, embed: f64, t: f64, upper: f64, m: f64) -> Result<f64> {
    for (name, v) in [("c", c), ("C", embed), ("T_2n", t), ("M_2n", upper), ("m_2n", m)] {
        finite(name, v)?;
    }
    c_hat_generic(&c, &embed, &t, &upper, &m)
}

/// `d̂ = d/(d + 1)`.
pub fn d_hat(d: f64) -> Result<f64> {
    finite("d_n", d)?;
    d_hat_generic(&d)
}

/// Exact rational `c̃`.
pub fn c_tilde_exact(
    t: &BigRational,
    m: &BigRational,
    upper: &BigRational,
    lambda1: &BigRational,
    odd_product: &BigRational,
) -> Result<BigRational> {
    c_tilde_generic(t, m, upper, lambda1, odd_product)
}

/// Exact rational `ĉ`.
pub fn c_hat_linear_exact(
    c: &BigRational,
    embed: &BigRational,
    t: &BigRational,
    upper: &BigRational,
    m: &BigRational,
) -> Result<BigRational> {
    c_hat_generic(c, embed, t, upper, m)
}

/// Exact rational `d̂`.
pub fn d_hat_exact(d: &BigRational) -> Result<BigRational> {
    d_hat_generic(d)
}

/// `p/q` as a rational.
pub fn ratio(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// Exact value of a finite `f64`.
pub fn rational_from_f64(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spot_values() {
        let one = ratio(1, 1);
        let c = c_tilde_exact(&one, &one, &one, &one, &ratio(0, 1)).unwrap();
        assert_eq!(c, ratio(1995, 2011));
        let c = c_tilde_exact(&one, &one, &one, &one, &ratio(1, 10)).unwrap();
        assert_eq!(c, ratio(1995, 2011) + ratio(1, 10));
        assert_eq!(c_hat_linear_exact(&one, &one, &one, &one, &one).unwrap(), ratio(10, 11));
        assert_eq!(
            c_hat_linear_exact(&one, &one, &ratio(2, 1), &one, &ratio(2, 1)).unwrap(),
            ratio(17, 18)
        );
        assert_eq!(d_hat_exact(&one).unwrap(), ratio(1, 2));
        assert_eq!(d_hat_exact(&ratio(9, 1)).unwrap(), ratio(9, 10));
        assert!((c_tilde(1.0, 1.0, 1.0, 1.0, 0.1).unwrap() - 1.092044).abs() < 1e-6);
    }

    #[test]
    fn limits_and_ranges() {
        let near_zero = c_tilde(1e-6, 1.0, 1.0, 1.0, 0.2).unwrap();
        assert!((near_zero - 1.2).abs() < 1e-12);
        assert!(c_hat_linear(1.0, 1.0, 1.0, 1.0, 1e12).unwrap() < 1e-11);
        let d = d_hat(1e6).unwrap();
        assert!(d < 1.0 && d > 0.999998);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            c_tilde(1.0, 2.0, 1.0, 1.0, 0.0),
            Err(Error::BoundOrder { .. })
        ));
        assert!(matches!(
            c_tilde(0.0, 1.0, 1.0, 1.0, 0.0),
            Err(Error::NonPositive { .. })
        ));
        assert!(matches!(
            c_tilde(1.0, 1.0, 1.0, 1.0, -0.1),
            Err(Error::NonPositive { .. })
        ));
        assert!(matches!(
            c_hat_linear(1.0, 0.0, 1.0, 1.0, 1.0),
            Err(Error::NonPositive { .. })
        ));
        assert!(matches!(d_hat(0.0), Err(Error::NonPositive { .. })));
        assert!(matches!(d_hat(f64::NAN), Err(Error::NonFinite { .. })));
    }
}
