//! Truncated q-expansions of cusp forms: shift operators, the Hecke operator
//! `T(p)` on coefficients, eta products, and certified pointwise evaluation.
//!
//! Coefficients are stored for indices `1..=T`; the constant term of a cusp
//! form is zero and is never stored.

use std::fmt;
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rug::float::Constant;
use rug::{Complex, Float};

use crate::arith::{self, DirichletCharacter};
use crate::error::{precondition, Error, Result};
use crate::modgroup;
use crate::scalar::{complex_powi, rational_to_float, Scalar};
use crate::special::ln_upper_gamma;

/// Default truncation for the built-in forms.
pub const DEFAULT_TRUNCATION: usize = 10_000;

/// Weight `k`, stored as `2k` so that half-integral weights are exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Weight {
    twice: u32,
}

impl Weight {
    pub fn integral(k: u32) -> Self {
        Weight { twice: 2 * k }
    }

    /// Weight `kappa + 1/2`.
    pub fn half_integral(kappa: u32) -> Self {
        Weight { twice: 2 * kappa + 1 }
    }

    pub fn as_integral(self) -> Option<u32> {
        (self.twice % 2 == 0).then_some(self.twice / 2)
    }

    pub fn as_f64(self) -> f64 {
        self.twice as f64 / 2.0
    }

    pub fn twice(self) -> u32 {
        self.twice
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.as_integral() {
            Some(k) => write!(f, "{k}"),
            None => write!(f, "{}/2", self.twice),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Coefficients {
    Exact(Vec<BigRational>),
    Approx(Vec<Complex>),
}

impl Coefficients {
    fn len(&self) -> usize {
        match self {
            Coefficients::Exact(v) => v.len(),
            Coefficients::Approx(v) => v.len(),
        }
    }

    fn is_zero_at(&self, i: usize) -> bool {
        match self {
            Coefficients::Exact(v) => v[i].is_zero(),
            Coefficients::Approx(v) => v[i].real().is_zero() && v[i].imag().is_zero(),
        }
    }

    fn abs_f64(&self, i: usize) -> f64 {
        match self {
            Coefficients::Exact(v) => v[i].abs().to_f64().unwrap_or(f64::INFINITY),
            Coefficients::Approx(v) => v[i].clone().abs().real().to_f64(),
        }
    }
}

/// Result of a certified evaluation: `|f(z) - value| <= tail_bound` up to
/// floating-point rounding.
#[derive(Clone, Debug)]
pub struct EvalCertificate {
    pub value: Complex,
    pub tail_bound: f64,
    pub terms_used: u64,
}

type FloatCache = Arc<Mutex<Vec<(u32, Arc<Vec<Complex>>)>>>;

#[derive(Clone)]
pub struct QSeries {
    coeffs: Coefficients,
    weight: Weight,
    level: u64,
    character: DirichletCharacter,
    growth: f64,
    /// gcd of the indices carrying nonzero coefficients (0 for the zero series).
    stride: usize,
    float_cache: FloatCache,
}

impl fmt::Debug for QSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QSeries")
            .field("weight", &self.weight)
            .field("level", &self.level)
            .field("character", &self.character.to_string())
            .field("truncation", &self.truncation())
            .field("growth", &self.growth)
            .finish()
    }
}

fn support_gcd(c: &Coefficients) -> usize {
    (0..c.len())
        .filter(|&i| !c.is_zero_at(i))
        .fold(0usize, |g, i| g.gcd(&(i + 1)))
}

impl QSeries {
    fn build(
        coeffs: Coefficients,
        weight: Weight,
        level: u64,
        character: DirichletCharacter,
        growth: f64,
    ) -> Self {
        let stride = support_gcd(&coeffs);
        QSeries {
            coeffs,
            weight,
            level,
            character,
            growth,
            stride,
            float_cache: Arc::new(Mutex::new(Vec::new())),
        }
    }

    fn checked_character(level: u64, character: DirichletCharacter) -> Result<DirichletCharacter> {
        if level == 0 {
            return precondition("level must be positive");
        }
        if character.modulus() == level {
            Ok(character)
        } else {
            character.induce(level)
        }
    }

    /// Exact series with coefficients `a(1), ..., a(T)`; the growth constant is
    /// twice the largest ratio `|a(n)| / (σ0(n) n^{(k-1)/2})` observed.
    pub fn exact(
        coeffs: Vec<BigRational>,
        weight: Weight,
        level: u64,
        character: DirichletCharacter,
    ) -> Result<Self> {
        let character = Self::checked_character(level, character)?;
        let mut s = Self::build(Coefficients::Exact(coeffs), weight, level, character, 0.0);
        s.growth = 2.0 * s.measured_growth_constant();
        Ok(s)
    }

    pub fn approx(
        coeffs: Vec<Complex>,
        weight: Weight,
        level: u64,
        character: DirichletCharacter,
    ) -> Result<Self> {
        let character = Self::checked_character(level, character)?;
        let mut s = Self::build(Coefficients::Approx(coeffs), weight, level, character, 0.0);
        s.growth = 2.0 * s.measured_growth_constant();
        Ok(s)
    }

    pub fn zero(truncation: usize, weight: Weight, level: u64, character: DirichletCharacter) -> Result<Self> {
        Self::exact(vec![BigRational::zero(); truncation], weight, level, character)
    }

    /// Replaces the growth constant. It must dominate every stored coefficient.
    pub fn with_growth_constant(mut self, c: f64) -> Result<Self> {
        let measured = self.measured_growth_constant();
        if !(c >= measured * (1.0 - 1e-12)) {
            return precondition(format!(
                "growth constant {c} is below the measured value {measured}"
            ));
        }
        self.growth = c;
        Ok(self)
    }

    pub fn truncation(&self) -> usize {
        self.coeffs.len()
    }

    pub fn weight(&self) -> Weight {
        self.weight
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn character(&self) -> &DirichletCharacter {
        &self.character
    }

    pub fn growth_constant(&self) -> f64 {
        self.growth
    }

    pub fn coefficients(&self) -> &Coefficients {
        &self.coeffs
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.coeffs, Coefficients::Exact(_))
    }

    /// Coefficient `a(n)`; `None` for `n = 0` or beyond the truncation.
    pub fn coeff(&self, n: usize) -> Option<Scalar> {
        if n == 0 || n > self.truncation() {
            return None;
        }
        Some(match &self.coeffs {
            Coefficients::Exact(v) => Scalar::Exact(v[n - 1].clone()),
            Coefficients::Approx(v) => Scalar::Approx(v[n - 1].clone()),
        })
    }

    pub fn exact_coeff(&self, n: usize) -> Option<&BigRational> {
        match &self.coeffs {
            Coefficients::Exact(v) if n >= 1 && n <= v.len() => Some(&v[n - 1]),
            _ => None,
        }
    }

    /// Largest `|a(n)| / (σ0(n) n^{(k-1)/2})` over the stored coefficients.
    pub fn measured_growth_constant(&self) -> f64 {
        let t = self.truncation();
        if t == 0 {
            return 0.0;
        }
        let sigma = arith::sigma0_table(t);
        let half = (self.weight.as_f64() - 1.0) / 2.0;
        (1..=t)
            .filter(|&n| !self.coeffs.is_zero_at(n - 1))
            .map(|n| self.coeffs.abs_f64(n - 1) / (sigma[n] as f64 * (n as f64).powf(half)))
            .fold(0.0, f64::max)
    }

    /// Same coefficients cut down to the first `t` indices.
    pub fn truncate(&self, t: usize) -> QSeries {
        let t = t.min(self.truncation());
        let coeffs = match &self.coeffs {
            Coefficients::Exact(v) => Coefficients::Exact(v[..t].to_vec()),
            Coefficients::Approx(v) => Coefficients::Approx(v[..t].to_vec()),
        };
        Self::build(coeffs, self.weight, self.level, self.character.clone(), self.growth)
    }

    /// Converts to the complex domain at `prec` bits (one-way).
    pub fn to_approx(&self, prec: u32) -> QSeries {
        let coeffs = Coefficients::Approx(self.float_coefficients(prec).as_ref().clone());
        Self::build(coeffs, self.weight, self.level, self.character.clone(), self.growth)
    }

    /// `f | V_ell`: `z -> f(ell z)`.
    pub fn apply_v(&self, ell: u64) -> Result<QSeries> {
        if ell == 0 {
            return precondition("V_ell needs ell >= 1");
        }
        let ell = ell as usize;
        let t = self.truncation() * ell;
        let coeffs = match &self.coeffs {
            Coefficients::Exact(v) => {
                let mut out = vec![BigRational::zero(); t];
                for (i, c) in v.iter().enumerate() {
                    out[(i + 1) * ell - 1] = c.clone();
                }
                Coefficients::Exact(out)
            }
            Coefficients::Approx(v) => {
                let prec = v.first().map_or(53, |c| c.prec().0);
                let mut out = vec![Complex::new(prec); t];
                for (i, c) in v.iter().enumerate() {
                    out[(i + 1) * ell - 1] = c.clone();
                }
                Coefficients::Approx(out)
            }
        };
        let level = self.level * ell as u64;
        let character = self.character.induce(level)?;
        Ok(Self::build(coeffs, self.weight, level, character, self.growth))
    }

    /// `Σ a(n m) q^n`.
    pub fn apply_u(&self, m: u64) -> Result<QSeries> {
        if m == 0 {
            return precondition("U_m needs m >= 1");
        }
        let mu = m as usize;
        let t = self.truncation() / mu;
        let coeffs = match &self.coeffs {
            Coefficients::Exact(v) => Coefficients::Exact((1..=t).map(|n| v[n * mu - 1].clone()).collect()),
            Coefficients::Approx(v) => Coefficients::Approx((1..=t).map(|n| v[n * mu - 1].clone()).collect()),
        };
        let level = self.level.lcm(&m);
        let character = self.character.induce(level)?;
        let factor = arith::sigma0(m)? as f64 * (m as f64).powf(((self.weight.as_f64() - 1.0) / 2.0).max(0.0));
        Ok(Self::build(coeffs, self.weight, level, character, self.growth * factor))
    }

    /// Coefficient action of `T(p)`:
    /// `a(pn) + χ(p) p^{k-1} a(n/p)`, the second term only when `p | n`.
    pub fn hecke_tp(&self, p: u64, prec: u32) -> Result<QSeries> {
        if !arith::is_prime(p) {
            return precondition(format!("T(p) needs a prime, got {p}"));
        }
        let Some(k) = self.weight.as_integral() else {
            return precondition("T(p) on coefficients is only defined here for integral weight");
        };
        let pu = p as usize;
        let t = self.truncation() / pu;
        let chi_p = self.character.value(p as i64);
        let pk1 = arith::rational_pow(p, k as i64 - 1);
        let coeffs = match (&self.coeffs, chi_p.as_integer()) {
            (Coefficients::Exact(v), Some(chi)) => {
                let factor = pk1 * BigInt::from(chi);
                let out = (1..=t)
                    .map(|n| {
                        let mut c = v[n * pu - 1].clone();
                        if n % pu == 0 && !factor.is_zero() {
                            c += &factor * &v[n / pu - 1];
                        }
                        c
                    })
                    .collect();
                Coefficients::Exact(out)
            }
            _ => {
                let src = self.float_coefficients(prec);
                let factor = chi_p.to_complex(prec) * rational_to_float(&pk1, prec);
                let out = (1..=t)
                    .map(|n| {
                        let mut c = src[n * pu - 1].clone();
                        if n % pu == 0 {
                            c += &factor * &src[n / pu - 1];
                        }
                        c
                    })
                    .collect();
                Coefficients::Approx(out)
            }
        };
        let growth = 3.0 * self.growth * (p as f64).powf((k as f64 - 1.0) / 2.0);
        Ok(Self::build(coeffs, self.weight, self.level, self.character.clone(), growth))
    }

    /// Linear combination `Σ c_i f_i` of series sharing weight; the result is
    /// truncated to the shortest input and lives at the lcm of the levels.
    pub fn linear_combination(terms: &[(Scalar, &QSeries)], prec: u32) -> Result<QSeries> {
        let Some((_, first)) = terms.first() else {
            return precondition("empty linear combination");
        };
        let t = terms.iter().map(|(_, s)| s.truncation()).min().unwrap_or(0);
        let level = terms.iter().fold(1u64, |l, (_, s)| l.lcm(&s.level));
        if terms.iter().any(|(_, s)| s.weight != first.weight) {
            return precondition("linear combination of series with different weights");
        }
        let character = first.character.induce(level.lcm(&first.character.modulus()))?;
        let growth = terms.iter().map(|(c, s)| c.abs_f64() * s.growth).sum();
        let all_exact = terms.iter().all(|(c, s)| c.is_exact() && s.is_exact());
        let coeffs = if all_exact {
            let mut out = vec![BigRational::zero(); t];
            for (c, s) in terms {
                let c = c.as_exact().expect("exact");
                if let Coefficients::Exact(v) = &s.coeffs {
                    for (o, a) in out.iter_mut().zip(v) {
                        *o += c * a;
                    }
                }
            }
            Coefficients::Exact(out)
        } else {
            let mut out = vec![Complex::new(prec); t];
            for (c, s) in terms {
                let c = c.to_complex(prec);
                let src = s.float_coefficients(prec);
                for (o, a) in out.iter_mut().zip(src.iter()) {
                    *o += &c * a;
                }
            }
            Coefficients::Approx(out)
        };
        let character = if character.modulus() == level { character } else { character.induce(level)? };
        Ok(Self::build(coeffs, first.weight, level, character, growth))
    }

    /// Coefficients as complex numbers at `prec` bits, cached per precision.
    pub fn float_coefficients(&self, prec: u32) -> Arc<Vec<Complex>> {
        let mut cache = self.float_cache.lock().expect("float cache poisoned");
        if let Some((_, v)) = cache.iter().find(|(p, _)| *p == prec) {
            return Arc::clone(v);
        }
        let v: Vec<Complex> = match &self.coeffs {
            Coefficients::Exact(v) => v
                .iter()
                .map(|r| {
                    if r.is_zero() {
                        Complex::new(prec)
                    } else {
                        Complex::with_val(prec, (rational_to_float(r, prec), 0))
                    }
                })
                .collect(),
            Coefficients::Approx(v) => v.iter().map(|c| Complex::with_val(prec, c)).collect(),
        };
        let v = Arc::new(v);
        cache.push((prec, Arc::clone(&v)));
        v
    }

    /// Certified bound on `Σ_{n > terms} |a(n)| e^{-2π n y}` from
    /// `|a(n)| <= C σ0(n) n^{(k-1)/2} <= 2C n^{k/2}`:
    /// `2C Γ(k/2 + 1, 2π y T) / (2π y)^{k/2 + 1}`, valid once the summand decreases.
    pub fn tail_bound(&self, y: f64, terms: u64) -> f64 {
        tail_bound(self.growth, self.weight.as_f64(), y, terms)
    }

    /// Smallest number of terms whose certified tail at height `y` is below `eps`.
    pub fn required_terms(&self, y: f64, eps: f64) -> u64 {
        required_terms(self.growth, self.weight.as_f64(), y, eps)
    }

    /// `Σ_{n <= T'} a(n) e^{2πinz}` with `T'` minimal for a tail below `eps`.
    pub fn evaluate(&self, z: &Complex, eps: f64, prec: u32) -> Result<EvalCertificate> {
        let y = z.imag().to_f64();
        if !(y > 0.0) {
            return Err(Error::Domain { im: y });
        }
        if self.stride == 0 || self.growth == 0.0 {
            return Ok(EvalCertificate { value: Complex::new(prec), tail_bound: 0.0, terms_used: 1 });
        }
        let needed = self.required_terms(y, eps);
        if needed > self.truncation() as u64 {
            return Err(Error::TruncationInsufficient {
                required: needed,
                available: self.truncation() as u64,
                im: y,
            });
        }
        let coeffs = self.float_coefficients(prec);
        let value = horner(&coeffs, self.stride, needed as usize, z, prec);
        Ok(EvalCertificate { value, tail_bound: self.tail_bound(y, needed), terms_used: needed })
    }

    /// Evaluation that first moves `z` up by an element of `Γ0(level)`, using
    /// `f(z) = conj(χ(d)) (cz + d)^{-k} f(δz)`. Integral weight only; half-integral
    /// series are evaluated directly.
    pub fn evaluate_modular(&self, z: &Complex, eps: f64, prec: u32) -> Result<EvalCertificate> {
        let Some(k) = self.weight.as_integral() else {
            return self.evaluate(z, eps, prec);
        };
        let (delta, w) = modgroup::reduce_gamma0(z, self.level, prec)?;
        if delta.is_identity() {
            return self.evaluate(z, eps, prec);
        }
        let j = delta.automorphy(z);
        let jabs = j.clone().abs().real().to_f64();
        let scale = jabs.powi(k as i32);
        let inner = self.evaluate(&w, eps * scale, prec)?;
        let chi = self.character.value(delta.d).conj().to_complex(prec);
        let factor = chi / complex_powi(&j, k as i32);
        Ok(EvalCertificate {
            value: inner.value * factor,
            tail_bound: inner.tail_bound / scale,
            terms_used: inner.terms_used,
        })
    }

    /// Product `∏ η(scale·z)^{exponent}` through `q^T`, via Euler's pentagonal
    /// number expansion of `∏ (1 - q^n)`.
    pub fn eta_product(spec: &[(u64, i64)], truncation: usize) -> Result<QSeries> {
        let (weight, leading, level, character) = eta_product_data(spec)?;
        let t = truncation;
        let body_len = (t + 1).saturating_sub(leading as usize);
        let body = eta_body(spec, body_len);
        let mut coeffs = vec![BigRational::zero(); t];
        for (i, c) in body.into_iter().enumerate() {
            let n = i + leading as usize;
            if n >= 1 && n <= t {
                coeffs[n - 1] = BigRational::from_integer(c);
            }
        }
        Self::exact(coeffs, Weight::integral(weight), level, character)
    }
}

fn horner(coeffs: &[Complex], stride: usize, terms: usize, z: &Complex, prec: u32) -> Complex {
    let count = terms / stride;
    if count == 0 {
        return Complex::new(prec);
    }
    let two_pi_i = Complex::with_val(prec, (0, Float::with_val(prec, Constant::Pi) * 2u32));
    let q = Complex::with_val(prec, &two_pi_i * z);
    let q = (q * stride as u32).exp();
    let mut acc = Complex::with_val(prec, &coeffs[count * stride - 1]);
    for j in (1..count).rev() {
        acc *= &q;
        acc += &coeffs[j * stride - 1];
    }
    acc *= &q;
    acc
}

pub(crate) fn tail_bound(growth: f64, k: f64, y: f64, terms: u64) -> f64 {
    if growth == 0.0 {
        return 0.0;
    }
    let s = k / 2.0 + 1.0;
    let a = 2.0 * std::f64::consts::PI * y;
    let ln = (2.0 * growth).ln() + ln_upper_gamma(s, a * terms as f64) - s * a.ln();
    ln.exp()
}

pub(crate) fn required_terms(growth: f64, k: f64, y: f64, eps: f64) -> u64 {
    if growth == 0.0 {
        return 1;
    }
    let a = 2.0 * std::f64::consts::PI * y;
    // t^{k/2} e^{-a t} decreases for t > k / (2a)
    let floor = ((k / (2.0 * a)).ceil() as u64).max(1);
    let bound = |t: u64| tail_bound(growth, k, y, t);
    if bound(floor) < eps {
        return floor;
    }
    let mut hi = floor.max(2);
    while bound(hi) >= eps {
        if hi > u64::MAX / 4 {
            return u64::MAX;
        }
        hi *= 2;
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if bound(mid) < eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// `(weight, leading q-power, level, character)` of an eta quotient.
fn eta_product_data(spec: &[(u64, i64)]) -> Result<(u32, u64, u64, DirichletCharacter)> {
    if spec.is_empty() || spec.iter().any(|&(s, _)| s == 0) {
        return precondition("eta product needs nonempty positive scales");
    }
    let exp_sum: i64 = spec.iter().map(|&(_, e)| e).sum();
    if exp_sum <= 0 || exp_sum % 2 != 0 {
        return precondition(format!("eta product weight {exp_sum}/2 is not a positive integer"));
    }
    let order: i64 = spec.iter().map(|&(s, e)| s as i64 * e).sum();
    if order <= 0 || order % 24 != 0 {
        return precondition(format!("eta product leading power {order}/24 is not a positive integer"));
    }
    let weight = (exp_sum / 2) as u32;
    // Level: least multiple L of lcm(scales) with L·Σ e/s ≡ 0 (mod 24).
    let base = spec.iter().fold(1u64, |l, &(s, _)| l.lcm(&s));
    let num: i64 = spec.iter().map(|&(s, e)| e * (base / s) as i64).sum();
    let mut level = base;
    while (level as i64 / base as i64 * num).rem_euclid(24) != 0 {
        level += base;
    }
    // Character a -> ((-1)^k ∏ s^e / a), read off the squarefree kernel.
    let mut kernel: i64 = if weight % 2 == 1 { -1 } else { 1 };
    for &(s, e) in spec {
        if e.rem_euclid(2) == 1 {
            for (p, v) in arith::factorize(s)?.iter() {
                if v % 2 == 1 {
                    kernel *= *p as i64;
                }
            }
        }
    }
    let mut sign = kernel.signum();
    let mut abs = kernel.unsigned_abs();
    for p in arith::prime_divisors(abs) {
        while abs % (p * p) == 0 {
            abs /= p * p;
        }
    }
    if abs == 0 {
        sign = 1;
        abs = 1;
    }
    let sqf = sign * abs as i64;
    let disc = if sqf.rem_euclid(4) == 1 { sqf } else { 4 * sqf };
    let character = if disc == 1 {
        DirichletCharacter::trivial(level)
    } else if level % disc.unsigned_abs() == 0 {
        DirichletCharacter::kronecker(disc, level)?
    } else {
        return precondition(format!(
            "eta product character ({disc}/·) is not defined modulo level {level}"
        ));
    };
    Ok((weight, (order / 24) as u64, level, character))
}

/// Generalized pentagonal exponents `m(3m-1)/2` with signs `(-1)^m`, up to `limit`.
fn pentagonal_terms(limit: usize) -> Vec<(usize, i8)> {
    let mut out = vec![(0usize, 1i8)];
    for m in 1i64.. {
        let a = (m * (3 * m - 1) / 2) as usize;
        if a > limit {
            break;
        }
        let sign = if m % 2 == 0 { 1 } else { -1 };
        out.push((a, sign));
        let b = (m * (3 * m + 1) / 2) as usize;
        if b <= limit {
            out.push((b, sign));
        }
    }
    out
}

/// Coefficients of `∏ (q^s; q^s)_∞^e` through index `len - 1`.
fn eta_body(spec: &[(u64, i64)], len: usize) -> Vec<BigInt> {
    if len == 0 {
        return Vec::new();
    }
    match eta_body_i128(spec, len) {
        Some(v) => v.into_iter().map(BigInt::from).collect(),
        None => eta_body_generic::<BigInt>(spec, len),
    }
}

fn eta_body_i128(spec: &[(u64, i64)], len: usize) -> Option<Vec<i128>> {
    let pent = pentagonal_terms(len);
    let mut acc = vec![0i128; len];
    acc[0] = 1;
    for &(s, e) in spec {
        let s = s as usize;
        for _ in 0..e.unsigned_abs() {
            let terms: Vec<(usize, i8)> = pent
                .iter()
                .filter(|&&(a, _)| a * s < len)
                .map(|&(a, sg)| (a * s, sg))
                .collect();
            if e > 0 {
                for n in (0..len).rev() {
                    let mut v = 0i128;
                    for &(a, sg) in &terms {
                        if a > n {
                            break;
                        }
                        let term = acc[n - a];
                        v = if sg > 0 { v.checked_add(term)? } else { v.checked_sub(term)? };
                    }
                    acc[n] = v;
                }
            } else {
                // divide by the pentagonal series (constant term 1)
                for n in 0..len {
                    let mut v = acc[n];
                    for &(a, sg) in terms.iter().skip(1) {
                        if a > n {
                            break;
                        }
                        let term = acc[n - a];
                        v = if sg > 0 { v.checked_sub(term)? } else { v.checked_add(term)? };
                    }
                    acc[n] = v;
                }
            }
        }
    }
    Some(acc)
}

fn eta_body_generic<T>(spec: &[(u64, i64)], len: usize) -> Vec<T>
where
    T: Clone + Zero + One + for<'a> std::ops::AddAssign<&'a T> + for<'a> std::ops::SubAssign<&'a T>,
{
    let pent = pentagonal_terms(len);
    let mut acc = vec![T::zero(); len];
    acc[0] = T::one();
    for &(s, e) in spec {
        let s = s as usize;
        for _ in 0..e.unsigned_abs() {
            let terms: Vec<(usize, i8)> = pent
                .iter()
                .filter(|&&(a, _)| a * s < len)
                .map(|&(a, sg)| (a * s, sg))
                .collect();
            if e > 0 {
                for n in (0..len).rev() {
                    let mut v = T::zero();
                    for &(a, sg) in &terms {
                        if a > n {
                            break;
                        }
                        if sg > 0 {
                            v += &acc[n - a];
                        } else {
                            v -= &acc[n - a];
                        }
                    }
                    acc[n] = v;
                }
            } else {
                for n in 0..len {
                    let mut v = acc[n].clone();
                    for &(a, sg) in terms.iter().skip(1) {
                        if a > n {
                            break;
                        }
                        if sg > 0 {
                            v -= &acc[n - a];
                        } else {
                            v += &acc[n - a];
                        }
                    }
                    acc[n] = v;
                }
            }
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int(v: i64) -> BigRational {
        BigRational::from_integer(v.into())
    }

    fn delta(t: usize) -> QSeries {
        QSeries::eta_product(&[(1, 24)], t).unwrap()
    }

    /// Dense polynomial multiplication of truncated products, independent of
    /// the pentagonal expansion.
    fn naive_eta(spec: &[(u64, i64)], t: usize) -> Vec<i64> {
        let mut acc = vec![0i64; t + 1];
        acc[0] = 1;
        for &(s, e) in spec {
            assert!(e > 0);
            for _ in 0..e {
                for n in 1..=t {
                    let step = n * s as usize;
                    if step > t {
                        break;
                    }
                    for i in (step..=t).rev() {
                        acc[i] -= acc[i - step];
                    }
                }
            }
        }
        acc
    }

    #[test]
    fn delta_expansion() {
        let d = delta(7);
        let expect = [1, -24, 252, -1472, 4830, -6048, -16744];
        for (n, &e) in expect.iter().enumerate() {
            assert_eq!(d.exact_coeff(n + 1).unwrap(), &int(e));
        }
        assert_eq!(d.level(), 1);
        assert_eq!(d.weight(), Weight::integral(12));
        assert!(d.character().is_trivial());
    }

    #[test]
    fn eta_matches_naive_products() {
        for spec in [vec![(1u64, 24i64)], vec![(1, 2), (11, 2)], vec![(1, 8), (2, 8)], vec![(1, 4), (5, 4)]] {
            let t = 60;
            let lead: i64 = spec.iter().map(|&(s, e)| s as i64 * e).sum::<i64>() / 24;
            let series = QSeries::eta_product(&spec, t).unwrap();
            let naive = naive_eta(&spec, t);
            for n in 1..=t {
                let expect = if n as i64 >= lead { naive[n - lead as usize] } else { 0 };
                assert_eq!(series.exact_coeff(n).unwrap(), &int(expect), "{spec:?} at {n}");
            }
        }
    }

    #[test]
    fn level_eleven_form() {
        let f = QSeries::eta_product(&[(1, 2), (11, 2)], 7).unwrap();
        let expect = [1, -2, -1, 2, 1, 2, -2];
        for (n, &e) in expect.iter().enumerate() {
            assert_eq!(f.exact_coeff(n + 1).unwrap(), &int(e));
        }
        assert_eq!(f.level(), 11);
        assert!(f.character().is_trivial());
    }

    #[test]
    fn eta_quotient_with_negative_exponent_uses_division() {
        // η(2z)^16 / η(z)^8 = q (∏(1-q^{2n})^16 / (1-q^n)^8), weight 4, level 2
        let spec = [(2u64, 16i64), (1, -8)];
        let f = QSeries::eta_product(&spec, 30).unwrap();
        assert_eq!(f.weight(), Weight::integral(4));
        assert_eq!(f.level(), 2);
        // cross-check: multiply back by η(z)^8 and compare with η(2z)^16
        let num = naive_eta(&[(2, 16)], 30);
        let den = naive_eta(&[(1, 8)], 30);
        for n in 0..29usize {
            let mut s = BigRational::zero();
            for i in 0..=n {
                s += f.exact_coeff(i + 1).unwrap() * int(den[n - i]);
            }
            assert_eq!(s, int(num[n]));
        }
    }

    #[test]
    fn v2_of_delta_starts_at_q2() {
        let d2 = QSeries::eta_product(&[(2, 24)], 10).unwrap();
        assert!(d2.exact_coeff(1).unwrap().is_zero());
        assert_eq!(d2.exact_coeff(2).unwrap(), &int(1));
        assert_eq!(d2.exact_coeff(4).unwrap(), &int(-24));
    }

    #[test]
    fn eta_rejects_bad_specs() {
        assert!(QSeries::eta_product(&[(1, 3)], 10).is_err());
        assert!(QSeries::eta_product(&[(1, 2)], 10).is_err());
        assert!(QSeries::eta_product(&[], 10).is_err());
    }

    #[test]
    fn shift_operators() {
        let d = delta(40);
        let v1 = d.apply_v(1).unwrap();
        assert_eq!(v1.exact_coeff(5), d.exact_coeff(5));
        let v2 = d.apply_v(2).unwrap();
        assert_eq!(v2.exact_coeff(2).unwrap(), &int(1));
        assert_eq!(v2.exact_coeff(4).unwrap(), &int(-24));
        assert!(v2.exact_coeff(3).unwrap().is_zero());
        assert_eq!(v2.level(), 2);
        let back = v2.apply_u(2).unwrap();
        for n in 1..=40 {
            assert_eq!(back.exact_coeff(n), d.exact_coeff(n));
        }
        let s = QSeries::exact(
            vec![int(1), int(0), int(5)],
            Weight::integral(2),
            1,
            DirichletCharacter::trivial(1),
        )
        .unwrap();
        let u3 = s.apply_u(3).unwrap();
        assert_eq!(u3.truncation(), 1);
        assert_eq!(u3.exact_coeff(1).unwrap(), &int(5));
        let u1 = s.apply_u(1).unwrap();
        assert_eq!(u1.truncation(), 3);
    }

    #[test]
    fn hecke_t2_on_eta_forms() {
        let f = QSeries::eta_product(&[(1, 2), (11, 2)], 10).unwrap();
        assert_eq!(f.hecke_tp(2, 64).unwrap().exact_coeff(1).unwrap(), &int(-2));
        let d = delta(100);
        let t2 = d.hecke_tp(2, 64).unwrap();
        assert_eq!(t2.truncation(), 50);
        for n in 1..=50 {
            assert_eq!(t2.exact_coeff(n).unwrap(), &(int(-24) * d.exact_coeff(n).unwrap()));
        }
    }

    #[test]
    fn hecke_operators_commute() {
        let f = QSeries::eta_product(&[(1, 2), (11, 2)], 200).unwrap();
        let d = delta(200);
        for s in [&f, &d] {
            for (p, q) in [(2u64, 3u64), (3, 5), (2, 7)] {
                let a = s.hecke_tp(p, 64).unwrap().hecke_tp(q, 64).unwrap();
                let b = s.hecke_tp(q, 64).unwrap().hecke_tp(p, 64).unwrap();
                for n in 1..=a.truncation().min(b.truncation()) {
                    assert_eq!(a.exact_coeff(n), b.exact_coeff(n));
                }
            }
        }
    }

    #[test]
    fn growth_constant_of_delta_is_deligne_bounded() {
        let d = delta(2000);
        let c = d.measured_growth_constant();
        assert!(c <= 1.0 && c > 0.1, "measured {c}");
        assert!((d.growth_constant() - 2.0 * c).abs() < 1e-15);
        assert!(d.clone().with_growth_constant(c / 2.0).is_err());
    }

    fn point(x: f64, y: f64) -> Complex {
        Complex::with_val(128, (x, y))
    }

    #[test]
    fn evaluate_zero_series() {
        let z = QSeries::zero(50, Weight::integral(12), 1, DirichletCharacter::trivial(1)).unwrap();
        let c = z.evaluate(&point(0.0, 1.0), 1e-10, 128).unwrap();
        assert!(c.value.real().is_zero() && c.value.imag().is_zero());
        assert_eq!(c.tail_bound, 0.0);
    }

    #[test]
    fn evaluate_delta_at_i() {
        let d = delta(400);
        let c = d.evaluate(&point(0.0, 1.0), 1e-12, 128).unwrap();
        // oracle: plain f64 summation of 200 terms
        let direct: f64 = (1..=200)
            .map(|n| {
                d.exact_coeff(n).unwrap().to_f64().unwrap() * (-2.0 * std::f64::consts::PI * n as f64).exp()
            })
            .sum();
        assert!((c.value.real().to_f64() - direct).abs() < 1e-15);
        // the quoted rounding 0.00178538 is within 1.5e-8 of the true 0.0017853698506...
        assert!((direct - 0.001_785_38).abs() < 1.5e-8, "{direct}");
        assert!((direct - 0.001_785_369_850_642_15).abs() < 1e-17);
        assert!(c.value.imag().to_f64().abs() < 1e-30);
        assert!(c.tail_bound < 1e-12);
        assert!(c.terms_used <= 400);
    }

    #[test]
    fn evaluate_reports_insufficient_truncation() {
        let d = delta(100);
        match d.evaluate(&point(0.0, 0.01), 1e-6, 128) {
            Err(Error::TruncationInsufficient { required, available, .. }) => {
                assert!(required > 100);
                assert_eq!(available, 100);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(d.evaluate(&point(0.0, -1.0), 1e-6, 128), Err(Error::Domain { .. })));
    }

    #[test]
    fn tail_bound_dominates_actual_tail() {
        let d = delta(3000);
        for &y in &[0.05, 0.2, 1.0] {
            for &t in &[50u64, 200, 800] {
                let bound = d.tail_bound(y, t);
                let actual: f64 = ((t as usize + 1)..=3000)
                    .map(|n| {
                        d.exact_coeff(n).unwrap().to_f64().unwrap().abs()
                            * (-2.0 * std::f64::consts::PI * n as f64 * y).exp()
                    })
                    .sum();
                assert!(bound >= actual, "y = {y}, t = {t}: {bound} < {actual}");
            }
        }
    }

    #[test]
    fn evaluate_modular_uses_invariance() {
        // Δ is level 1: value at a low point equals value at its SL2(Z) reduction
        let d = delta(4000);
        let z = point(0.3, 0.02);
        let direct = d.evaluate(&z, 1e-20, 128).unwrap();
        let reduced = d.evaluate_modular(&z, 1e-20, 128).unwrap();
        assert!(reduced.terms_used < direct.terms_used);
        let diff = (direct.value - reduced.value).abs().real().to_f64();
        assert!(diff < 1e-15 + direct.tail_bound + reduced.tail_bound, "{diff}");
    }

    fn random_series(coeffs: Vec<i64>, level: u64) -> QSeries {
        QSeries::exact(coeffs.into_iter().map(int).collect(), Weight::integral(2), level, DirichletCharacter::trivial(level))
            .unwrap()
    }

    proptest::proptest! {
        #[test]
        fn u_inverts_v(coeffs in proptest::collection::vec(-1000i64..1000, 1..120), m in 1u64..=20) {
            let f = random_series(coeffs, 1);
            let back = f.apply_v(m).unwrap().apply_u(m).unwrap();
            proptest::prop_assert_eq!(back.truncation(), f.truncation());
            for n in 1..=f.truncation() {
                proptest::prop_assert_eq!(back.exact_coeff(n), f.exact_coeff(n));
            }
        }

        #[test]
        fn shifts_compose(coeffs in proptest::collection::vec(-1000i64..1000, 1..150), m in 1u64..=12, n in 1u64..=12) {
            let f = random_series(coeffs, 1);
            let vv = f.apply_v(m).unwrap().apply_v(n).unwrap();
            let v = f.apply_v(m * n).unwrap();
            proptest::prop_assert_eq!(vv.level(), v.level());
            for i in 1..=v.truncation() {
                proptest::prop_assert_eq!(vv.exact_coeff(i), v.exact_coeff(i));
            }
            let uu = f.apply_u(m).unwrap().apply_u(n).unwrap();
            let u = f.apply_u(m * n).unwrap();
            proptest::prop_assert_eq!(uu.truncation(), u.truncation());
            for i in 1..=u.truncation() {
                proptest::prop_assert_eq!(uu.exact_coeff(i), u.exact_coeff(i));
            }
        }

        #[test]
        fn real_coefficients_give_conjugate_symmetry(x in -0.5f64..0.5, y in 0.3f64..2.0) {
            let f = delta(800);
            let a = f.evaluate(&point(x, y), 1e-15, 128).unwrap();
            let b = f.evaluate(&point(-x, y), 1e-15, 128).unwrap();
            let d = Complex::with_val(128, &a.value - Complex::with_val(128, b.value.conj_ref())).abs().real().to_f64();
            proptest::prop_assert!(d <= a.tail_bound + b.tail_bound + 1e-30);
        }
    }
}
