//! Coefficient domain shared by series, eigenvalues and Gram entries: exact
//! rationals, or complex floats at an explicit MPFR precision. Mixing the two
//! promotes to complex; the reverse conversion never happens implicitly.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rug::{Complex, Float};
use serde_json::Value;

use crate::error::{Error, Result};

pub const DEFAULT_PRECISION: u32 = 128;

#[derive(Clone, Debug)]
pub enum Scalar {
    Exact(BigRational),
    Approx(Complex),
}

/// `z^n` by repeated squaring; the library power goes through `exp(n log z)`,
/// which is an order of magnitude slower for the small exponents used here.
pub(crate) fn complex_powi(z: &Complex, n: i32) -> Complex {
    let prec = z.prec();
    let mut result = Complex::with_val(prec, 1);
    let mut base = z.clone();
    let mut e = n.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            result *= &base;
        }
        e >>= 1;
        if e > 0 {
            base.square_mut();
        }
    }
    if n < 0 {
        result.recip_mut();
    }
    result
}

pub(crate) fn rational_to_float(r: &BigRational, prec: u32) -> Float {
    let num = rug::Integer::from_str_radix(&r.numer().to_str_radix(16), 16).expect("hex integer");
    let den = rug::Integer::from_str_radix(&r.denom().to_str_radix(16), 16).expect("hex integer");
    Float::with_val(prec, rug::Rational::from((num, den)))
}

/// Parses `"p"`, `"p/q"` or a finite decimal such as `"-1.25e3"` exactly.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if frac_part.contains(['+', '-']) || int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let digits = if digits == "-" || digits == "+" { format!("{digits}0") } else { digits };
    let n: BigInt = digits.parse().ok()?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    Some(if scale >= 0 {
        BigRational::from_integer(n * ten.pow(scale as u32))
    } else {
        BigRational::new(n, ten.pow((-scale) as u32))
    })
}

pub(crate) fn format_float(x: &Float, digits: usize) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    x.to_string_radix(10, Some(digits))
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar::Exact(BigRational::zero())
    }

    pub fn one() -> Self {
        Scalar::Exact(BigRational::one())
    }

    pub fn from_integer(v: i64) -> Self {
        Scalar::Exact(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Scalar::Exact(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            Scalar::Exact(r) => Some(r),
            Scalar::Approx(_) => None,
        }
    }

    pub fn precision(&self) -> Option<u32> {
        match self {
            Scalar::Exact(_) => None,
            Scalar::Approx(c) => Some(c.prec().0),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(r) => r.is_zero(),
            Scalar::Approx(c) => c.real().is_zero() && c.imag().is_zero(),
        }
    }

    pub fn to_complex(&self, prec: u32) -> Complex {
        match self {
            Scalar::Exact(r) => Complex::with_val(prec, (rational_to_float(r, prec), 0)),
            Scalar::Approx(c) => Complex::with_val(prec, c),
        }
    }

    pub fn conj(&self) -> Self {
        match self {
            Scalar::Exact(r) => Scalar::Exact(r.clone()),
            Scalar::Approx(c) => Scalar::Approx(c.clone().conj()),
        }
    }

    /// `|x|^2`, exact when `x` is.
    pub fn abs_sq(&self) -> Self {
        match self {
            Scalar::Exact(r) => Scalar::Exact(r * r),
            Scalar::Approx(c) => {
                let n = c.clone().norm();
                Scalar::Approx(n)
            }
        }
    }

    pub fn abs_f64(&self) -> f64 {
        match self {
            Scalar::Exact(r) => r.abs().to_f64().unwrap_or(f64::INFINITY),
            Scalar::Approx(c) => c.clone().abs().real().to_f64(),
        }
    }

    pub fn re_f64(&self) -> f64 {
        match self {
            Scalar::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Scalar::Approx(c) => c.real().to_f64(),
        }
    }

    pub fn im_f64(&self) -> f64 {
        match self {
            Scalar::Exact(_) => 0.0,
            Scalar::Approx(c) => c.imag().to_f64(),
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        match self {
            Scalar::Exact(r) => Scalar::Exact(num_traits::pow(r.clone(), e as usize)),
            Scalar::Approx(c) => Scalar::Approx(complex_powi(c, e as i32)),
        }
    }

    /// Scalar with imaginary part zero (exactly, or within `tol` in the complex case).
    pub fn is_real(&self, tol: f64) -> bool {
        match self {
            Scalar::Exact(_) => true,
            Scalar::Approx(c) => c.imag().to_f64().abs() <= tol,
        }
    }

    /// `Some(true)` / `Some(false)` for exact values, `None` for approximations.
    pub fn exact_eq(&self, other: &Self) -> Option<bool> {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Some(a == b),
            _ => None,
        }
    }

    /// Equality, exact when both sides are exact, otherwise within
    /// `ulps` units in the last place relative to the larger magnitude.
    pub fn close_to(&self, other: &Self, ulps: u32) -> bool {
        if let Some(eq) = self.exact_eq(other) {
            return eq;
        }
        let prec = self.precision().or(other.precision()).unwrap_or(53);
        let diff = (self - other).abs_f64();
        let scale = self.abs_f64().max(other.abs_f64());
        diff <= ulps as f64 * 2f64.powi(1 - prec as i32) * scale
    }

    pub fn to_json(&self, digits: usize) -> Value {
        match self {
            Scalar::Exact(r) => Value::String(r.to_string()),
            Scalar::Approx(c) => Value::Array(vec![
                Value::String(format_float(c.real(), digits)),
                Value::String(format_float(c.imag(), digits)),
            ]),
        }
    }

    /// Inverse of [`Scalar::to_json`]; `[re, im]` pairs with an exactly zero
    /// imaginary part are kept exact because decimal strings are rationals.
    pub fn from_json(v: &Value, prec: u32, path: &str) -> Result<Self> {
        let schema = |message: String| Error::Schema { path: path.to_string(), message };
        let exact = |v: &Value| -> Option<BigRational> {
            match v {
                Value::String(s) => parse_rational(s),
                Value::Number(n) => parse_rational(&n.to_string()),
                _ => None,
            }
        };
        match v {
            Value::Array(parts) if parts.len() == 2 => {
                let re = exact(&parts[0]).ok_or_else(|| schema(format!("bad real part {}", parts[0])))?;
                let im = exact(&parts[1]).ok_or_else(|| schema(format!("bad imaginary part {}", parts[1])))?;
                if im.is_zero() {
                    Ok(Scalar::Exact(re))
                } else {
                    Ok(Scalar::Approx(Complex::with_val(
                        prec,
                        (rational_to_float(&re, prec), rational_to_float(&im, prec)),
                    )))
                }
            }
            Value::String(_) | Value::Number(_) => exact(v)
                .map(Scalar::Exact)
                .ok_or_else(|| schema(format!("expected a rational, got {v}"))),
            _ => Err(schema(format!("expected a rational string or [re, im], got {v}"))),
        }
    }

    fn promote(a: &Scalar, b: &Scalar) -> (Complex, Complex) {
        let prec = a.precision().max(b.precision()).unwrap_or(crate::scalar::DEFAULT_PRECISION);
        (a.to_complex(prec), b.to_complex(prec))
    }
}

impl From<BigRational> for Scalar {
    fn from(r: BigRational) -> Self {
        Scalar::Exact(r)
    }
}

impl From<Complex> for Scalar {
    fn from(c: Complex) -> Self {
        Scalar::Approx(c)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                match (self, rhs) {
                    (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a $op b),
                    _ => {
                        let (a, b) = Scalar::promote(self, rhs);
                        Scalar::Approx(a $op b)
                    }
                }
            }
        }
        impl $trait<Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                (&self).$method(&rhs)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);
binop!(Div, div, /);

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(-r),
            Scalar::Approx(c) => Scalar::Approx(-c.clone()),
        }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(r) => write!(f, "{r}"),
            Scalar::Approx(c) => write!(
                f,
                "{} + {}i",
                format_float(c.real(), 12),
                format_float(c.imag(), 12)
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::ops::Pow;

    #[test]
    fn decimal_parsing_is_exact() {
        assert_eq!(parse_rational("-24").unwrap(), BigRational::from_integer((-24).into()));
        assert_eq!(parse_rational("3/2").unwrap(), BigRational::new(3.into(), 2.into()));
        assert_eq!(parse_rational("0.125").unwrap(), BigRational::new(1.into(), 8.into()));
        assert_eq!(parse_rational("-1.5e2").unwrap(), BigRational::from_integer((-150).into()));
        assert_eq!(parse_rational("2.5E-1").unwrap(), BigRational::new(1.into(), 4.into()));
        assert!(parse_rational("abc").is_none());
        assert!(parse_rational("1/0").is_none());
    }

    #[test]
    fn mixed_arithmetic_promotes() {
        let a = Scalar::ratio(1, 3);
        let b = Scalar::Approx(Complex::with_val(64, (0, 1)));
        let c = &a * &b;
        assert!(!c.is_exact());
        assert!((c.im_f64() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!((&a + &a).as_exact().unwrap(), &BigRational::new(2.into(), 3.into()));
    }

    #[test]
    fn json_round_trip() {
        let v = Scalar::ratio(-7, 4);
        assert_eq!(Scalar::from_json(&v.to_json(30), 128, "x").unwrap().exact_eq(&v), Some(true));
        let pair = serde_json::json!(["0.5", "-1.25"]);
        let s = Scalar::from_json(&pair, 128, "x").unwrap();
        assert_eq!(s.re_f64(), 0.5);
        assert_eq!(s.im_f64(), -1.25);
        let real_pair = serde_json::json!(["-24", "0"]);
        assert!(Scalar::from_json(&real_pair, 128, "x").unwrap().is_exact());
        assert!(Scalar::from_json(&serde_json::json!(true), 128, "x").is_err());
    }

    #[test]
    fn closeness_in_ulps() {
        let a = Scalar::Approx(Complex::with_val(128, (1.0, 0.0)));
        let tiny = Float::with_val(128, 2).pow(-127i32);
        let b = Scalar::Approx(Complex::with_val(128, (1 + tiny, 0)));
        assert!(a.close_to(&b, 4));
        let c = Scalar::Approx(Complex::with_val(128, (Float::with_val(128, 1) + Float::with_val(128, 1e-20), 0.0)));
        assert!(!a.close_to(&c, 4));
    }
}
