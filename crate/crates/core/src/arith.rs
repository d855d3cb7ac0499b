//! Elementary multiplicative number theory and Dirichlet characters.
//!
//! Everything here works on desk-scale integers (below `10^12`): factorization
//! is trial division backed by a deterministic Miller-Rabin test for the final
//! cofactor.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rug::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::scalar::Scalar;

const MR_BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin, exact for every `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &MR_BASES {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &MR_BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Prime factorization as `(prime, exponent)` pairs in increasing prime order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factorization(Vec<(u64, u32)>);

impl Factorization {
    pub fn iter(&self) -> impl Iterator<Item = &(u64, u32)> + '_ {
        self.0.iter()
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.0.iter().map(|&(p, _)| p)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Multiplies the factors back together.
    pub fn value(&self) -> u64 {
        self.0.iter().map(|&(p, e)| p.pow(e)).product()
    }

    pub fn exponent_of(&self, p: u64) -> u32 {
        self.0
            .iter()
            .find(|&&(q, _)| q == p)
            .map(|&(_, e)| e)
            .unwrap_or(0)
    }
}

pub fn factorize(n: u64) -> Result<Factorization> {
    if n == 0 {
        return precondition("cannot factor 0");
    }
    let mut rest = n;
    let mut out = Vec::new();
    let mut push = |p: u64, rest: &mut u64| {
        let mut e = 0;
        while *rest % p == 0 {
            *rest /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
    };
    push(2, &mut rest);
    push(3, &mut rest);
    let mut p = 5;
    while p * p <= rest {
        if is_prime(rest) {
            break;
        }
        push(p, &mut rest);
        push(p + 2, &mut rest);
        p += 6;
    }
    if rest > 1 {
        out.push((rest, 1));
    }
    Ok(Factorization(out))
}

/// Distinct prime divisors of `n`, ascending. `n = 0` yields nothing.
pub fn prime_divisors(n: u64) -> Vec<u64> {
    factorize(n)
        .map(|f| f.primes().collect())
        .unwrap_or_default()
}

pub fn divisors(n: u64) -> Vec<u64> {
    let Ok(fact) = factorize(n) else {
        return Vec::new();
    };
    let mut out = vec![1u64];
    for &(p, e) in fact.iter() {
        let len = out.len();
        let mut pk = 1;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                out.push(out[i] * pk);
            }
        }
    }
    out.sort_unstable();
    out
}

/// p-adic valuation of `n` (0 when `n = 0`).
pub fn valuation(mut n: u64, p: u64) -> u32 {
    let mut v = 0;
    while n > 0 && n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

/// Number of positive divisors.
pub fn sigma0(n: u64) -> Result<u64> {
    let fact = factorize(n)?;
    Ok(fact.iter().map(|&(_, e)| e as u64 + 1).product())
}

/// `sigma0(n)` for every `n <= limit`; index 0 is unused and set to 0.
pub fn sigma0_table(limit: usize) -> Vec<u32> {
    let mut table = vec![0u32; limit + 1];
    for d in 1..=limit {
        for m in (d..=limit).step_by(d) {
            table[m] += 1;
        }
    }
    table
}

pub fn primes_up_to(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= n {
        if sieve[i] {
            for j in (i * i..=n).step_by(i) {
                sieve[j] = false;
            }
        }
        i += 1;
    }
    sieve
        .iter()
        .enumerate()
        .filter_map(|(i, &p)| p.then_some(i as u64))
        .collect()
}

pub fn euler_phi(n: u64) -> u64 {
    let mut phi = n;
    for p in prime_divisors(n) {
        phi = phi / p * (p - 1);
    }
    phi
}

/// `prod_{p | n, p ∤ level} (1 + 1/p)` as an exact rational.
pub fn local_factor_product(n: u64, level: u64) -> BigRational {
    let mut acc = BigRational::one();
    for p in prime_divisors(n) {
        if level % p != 0 {
            acc *= BigRational::new(BigInt::from(p + 1), BigInt::from(p));
        }
    }
    acc
}

/// The index `(Γ0(N) : Γ0(M))` for `N | M`.
pub fn index_gamma0(n: u64, m: u64) -> Result<u64> {
    if n == 0 || m == 0 || m % n != 0 {
        return precondition(format!("index_gamma0 needs N | M, got N = {n}, M = {m}"));
    }
    let mut idx = BigRational::from_integer(BigInt::from(m / n));
    for p in prime_divisors(m) {
        if n % p != 0 {
            idx *= BigRational::new(BigInt::from(p + 1), BigInt::from(p));
        }
    }
    debug_assert!(idx.is_integer());
    let value = idx.to_integer();
    Ok(u64::try_from(value).expect("index fits in u64"))
}

/// Kronecker symbol `(a / n)`.
pub fn kronecker(a: i64, n: i64) -> i32 {
    if n == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    let mut a = a as i128;
    let mut n = n as i128;
    let mut result = 1i32;
    if n < 0 {
        n = -n;
        if a < 0 {
            result = -result;
        }
    }
    let v = n.trailing_zeros();
    if v > 0 {
        if a % 2 == 0 {
            return 0;
        }
        n >>= v;
        let a8 = a.rem_euclid(8);
        if v % 2 == 1 && (a8 == 3 || a8 == 5) {
            result = -result;
        }
    }
    // Jacobi symbol (a / n) for odd positive n.
    a = a.rem_euclid(n);
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            let n8 = n % 8;
            if n8 == 3 || n8 == 5 {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

/// A value of a Dirichlet character: zero or the root of unity `e^{2πi exp/order}`
/// with `exp/order` in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CharValue {
    Zero,
    Root { order: u64, exp: u64 },
}

impl CharValue {
    pub const ONE: CharValue = CharValue::Root { order: 1, exp: 0 };
    pub const MINUS_ONE: CharValue = CharValue::Root { order: 2, exp: 1 };

    pub fn root(order: u64, exp: u64) -> Self {
        let exp = exp % order;
        let g = exp.gcd(&order);
        CharValue::Root { order: order / g, exp: exp / g }
    }

    fn from_sign(s: i32) -> Self {
        match s {
            0 => CharValue::Zero,
            1 => CharValue::ONE,
            _ => CharValue::MINUS_ONE,
        }
    }

    pub fn is_zero(self) -> bool {
        matches!(self, CharValue::Zero)
    }

    pub fn mul(self, other: Self) -> Self {
        match (self, other) {
            (CharValue::Root { order: o1, exp: e1 }, CharValue::Root { order: o2, exp: e2 }) => {
                let l = o1.lcm(&o2);
                CharValue::root(l, e1 * (l / o1) + e2 * (l / o2))
            }
            _ => CharValue::Zero,
        }
    }

    pub fn conj(self) -> Self {
        match self {
            CharValue::Root { order, exp } => CharValue::root(order, order - exp),
            CharValue::Zero => CharValue::Zero,
        }
    }

    /// Exact value when it is rational, i.e. one of 0, 1, -1.
    pub fn as_integer(self) -> Option<i64> {
        match self {
            CharValue::Zero => Some(0),
            CharValue::Root { order: 1, .. } => Some(1),
            CharValue::Root { order: 2, .. } => Some(-1),
            CharValue::Root { .. } => None,
        }
    }

    pub fn to_complex(self, prec: u32) -> Complex {
        match self {
            CharValue::Zero => Complex::new(prec),
            CharValue::Root { order, exp } => {
                if let Some(v) = self.as_integer() {
                    return Complex::with_val(prec, v);
                }
                let two_pi = rug::Float::with_val(prec, rug::float::Constant::Pi) * 2u32;
                let angle = two_pi * exp / order;
                let (s, c) = angle.sin_cos(rug::Float::new(prec));
                Complex::with_val(prec, (c, s))
            }
        }
    }

    pub fn to_scalar(self, prec: u32) -> Scalar {
        match self.as_integer() {
            Some(v) => Scalar::from_integer(v),
            None => Scalar::Approx(self.to_complex(prec)),
        }
    }

    /// Recognizes a complex unit as a root of unity of order at most `max_order`.
    pub fn from_complex(re: f64, im: f64, max_order: u64) -> Option<Self> {
        let modulus = re.hypot(im);
        if modulus < 1e-9 {
            return Some(CharValue::Zero);
        }
        if (modulus - 1.0).abs() > 1e-9 {
            return None;
        }
        let turns = im.atan2(re) / std::f64::consts::TAU;
        (1..=max_order.max(2)).find_map(|order| {
            let scaled = turns * order as f64;
            let exp = scaled.round();
            ((scaled - exp).abs() < 1e-9)
                .then(|| CharValue::root(order, (exp as i64).rem_euclid(order as i64) as u64))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CharacterKind {
    Trivial,
    /// `a -> (d / a)` for a discriminant `d`.
    Kronecker(i64),
    /// Values indexed by residues modulo `period`.
    Table { period: u64, values: Vec<CharValue> },
}

/// A Dirichlet character modulo `modulus`. The value at `a` is zero whenever
/// `gcd(a, modulus) > 1`; otherwise it is determined by `kind`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DirichletCharacter {
    modulus: u64,
    kind: CharacterKind,
}

impl Serialize for CharValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            CharValue::Zero => (0u64, 0u64).serialize(s),
            CharValue::Root { order, exp } => (*order, *exp).serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for CharValue {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (order, exp) = <(u64, u64)>::deserialize(d)?;
        Ok(if order == 0 {
            CharValue::Zero
        } else {
            CharValue::root(order, exp)
        })
    }
}

impl DirichletCharacter {
    pub fn trivial(modulus: u64) -> Self {
        assert!(modulus >= 1, "modulus must be positive");
        Self { modulus, kind: CharacterKind::Trivial }
    }

    /// The Kronecker character `(d / ·)` modulo `modulus`; `d` must be a
    /// discriminant (`d ≡ 0, 1 mod 4`) with `|d|` dividing `modulus`.
    pub fn kronecker(d: i64, modulus: u64) -> Result<Self> {
        if d == 0 || d.rem_euclid(4) > 1 {
            return precondition(format!("{d} is not a discriminant"));
        }
        if modulus == 0 || modulus % d.unsigned_abs() != 0 {
            return precondition(format!("|{d}| does not divide modulus {modulus}"));
        }
        if d == 1 {
            return Ok(Self::trivial(modulus));
        }
        Ok(Self { modulus, kind: CharacterKind::Kronecker(d) })
    }

    /// A character given by its values on `0..period`. Checks zero pattern,
    /// periodicity and complete multiplicativity.
    pub fn table(modulus: u64, period: u64, values: Vec<CharValue>) -> Result<Self> {
        if period == 0 || values.len() as u64 != period || modulus % period != 0 {
            return precondition(format!(
                "table of length {} with period {period} does not fit modulus {modulus}",
                values.len()
            ));
        }
        let chi = Self { modulus, kind: CharacterKind::Table { period, values } };
        chi.check_axioms()?;
        Ok(chi)
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn kind(&self) -> &CharacterKind {
        &self.kind
    }

    pub fn value(&self, a: i64) -> CharValue {
        let m = self.modulus as i64;
        let r = a.rem_euclid(m);
        if (r as u64).gcd(&self.modulus) != 1 {
            return CharValue::Zero;
        }
        match &self.kind {
            CharacterKind::Trivial => CharValue::ONE,
            CharacterKind::Kronecker(d) => CharValue::from_sign(kronecker(*d, r)),
            CharacterKind::Table { period, values } => values[(r as u64 % period) as usize],
        }
    }

    pub fn is_trivial(&self) -> bool {
        (1..=self.modulus as i64).all(|a| {
            let v = self.value(a);
            v.is_zero() || v == CharValue::ONE
        })
    }

    /// True when every value is 0 or ±1.
    pub fn is_real(&self) -> bool {
        (0..self.modulus as i64).all(|a| self.value(a).as_integer().is_some())
    }

    /// The same character viewed modulo a multiple `m` of the modulus.
    pub fn induce(&self, m: u64) -> Result<Self> {
        if m == 0 || m % self.modulus != 0 {
            return precondition(format!(
                "cannot induce a character mod {} to modulus {m}",
                self.modulus
            ));
        }
        let kind = match &self.kind {
            CharacterKind::Table { period, values } if *period == self.modulus => {
                CharacterKind::Table { period: *period, values: values.clone() }
            }
            k => k.clone(),
        };
        Ok(Self { modulus: m, kind })
    }

    /// Smallest `q | modulus` such that the character factors through `(Z/q)^*`.
    pub fn conductor(&self) -> u64 {
        let m = self.modulus as i64;
        divisors(self.modulus)
            .into_iter()
            .find(|&q| {
                (1..=m)
                    .filter(|&a| a % q as i64 == 1 % q as i64)
                    .all(|a| {
                        let v = self.value(a);
                        v.is_zero() || v == CharValue::ONE
                    })
            })
            .unwrap_or(self.modulus)
    }

    /// Whether both characters agree after inducing to the lcm of their moduli.
    pub fn same_as_induced(&self, other: &Self) -> bool {
        let l = self.modulus.lcm(&other.modulus);
        (1..l as i64)
            .filter(|&a| (a as u64).gcd(&l) == 1)
            .all(|a| self.value(a) == other.value(a))
    }

    pub fn check_axioms(&self) -> Result<()> {
        let m = self.modulus as i64;
        if self.value(1) != CharValue::ONE {
            return Err(Error::Precondition("character must satisfy χ(1) = 1".into()));
        }
        for a in 0..m {
            let va = self.value(a);
            let unit = (a as u64).gcd(&self.modulus) == 1;
            if unit == va.is_zero() {
                return precondition(format!("χ({a}) has the wrong zero pattern"));
            }
            for b in a..m {
                if self.value(a * b) != va.mul(self.value(b)) {
                    return precondition(format!("χ is not multiplicative at ({a}, {b})"));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for DirichletCharacter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            CharacterKind::Trivial => write!(f, "trivial mod {}", self.modulus),
            CharacterKind::Kronecker(d) => write!(f, "({d}/·) mod {}", self.modulus),
            CharacterKind::Table { period, .. } => {
                write!(f, "table(period {period}) mod {}", self.modulus)
            }
        }
    }
}

/// `n^e` as an exact rational; `e` may be negative.
pub(crate) fn rational_pow(n: u64, e: i64) -> BigRational {
    let base = BigInt::from(n).pow(e.unsigned_abs() as u32);
    if e >= 0 {
        BigRational::from_integer(base)
    } else {
        BigRational::new(BigInt::one(), base)
    }
}

pub(crate) fn is_perfect_square(r: &BigRational) -> Option<BigRational> {
    if r < &BigRational::zero() {
        return None;
    }
    let n = r.numer().sqrt();
    let d = r.denom().sqrt();
    (&n * &n == *r.numer() && &d * &d == *r.denom()).then(|| BigRational::new(n, d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma0_examples() {
        assert_eq!(sigma0(1).unwrap(), 1);
        assert_eq!(sigma0(12).unwrap(), 6);
        for p in [2, 3, 97, 1_000_003] {
            assert_eq!(sigma0(p).unwrap(), 2);
        }
        assert!(sigma0(0).is_err());
    }

    #[test]
    fn sigma0_multiplicative_on_coprime_pairs() {
        for m in 1..=100u64 {
            for n in 1..=100u64 {
                if m.gcd(&n) == 1 {
                    assert_eq!(sigma0(m * n).unwrap(), sigma0(m).unwrap() * sigma0(n).unwrap());
                }
            }
        }
    }

    #[test]
    fn sigma0_table_matches() {
        let t = sigma0_table(500);
        for n in 1..=500 {
            assert_eq!(t[n] as u64, sigma0(n as u64).unwrap());
        }
    }

    #[test]
    fn factorization_reconstructs() {
        for n in [1u64, 2, 360, 999_999_999_989, 600_851_475_143, 2 * 999_983 * 999_983] {
            let f = factorize(n).unwrap();
            assert_eq!(f.value(), n);
            assert!(f.primes().all(is_prime));
            let ps: Vec<_> = f.primes().collect();
            assert!(ps.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn miller_rabin_against_sieve() {
        let primes = primes_up_to(10_000);
        for n in 0..=10_000u64 {
            assert_eq!(is_prime(n), primes.binary_search(&n).is_ok(), "n = {n}");
        }
    }

    #[test]
    fn index_examples() {
        assert_eq!(index_gamma0(1, 2).unwrap(), 3);
        assert_eq!(index_gamma0(2, 4).unwrap(), 2);
        assert_eq!(index_gamma0(1, 11).unwrap(), 12);
        assert!(index_gamma0(2, 3).is_err());
    }

    #[test]
    fn index_is_multiplicative_in_towers() {
        for l in 1..=120u64 {
            for m in divisors(l) {
                for n in divisors(m) {
                    assert_eq!(
                        index_gamma0(n, m).unwrap() * index_gamma0(m, l).unwrap(),
                        index_gamma0(n, l).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn local_factor_examples() {
        let r = |a: i64, b: i64| BigRational::new(a.into(), b.into());
        assert_eq!(local_factor_product(1, 7), r(1, 1));
        assert_eq!(local_factor_product(2, 1), r(3, 2));
        assert_eq!(local_factor_product(12, 3), r(3, 2));
    }

    #[test]
    fn kronecker_matches_legendre_by_euler_criterion() {
        for p in primes_up_to(60).into_iter().filter(|&p| p > 2) {
            for a in -30i64..30 {
                let euler = pow_mod(a.rem_euclid(p as i64) as u64, (p - 1) / 2, p);
                let expected = match euler {
                    0 => 0,
                    1 => 1,
                    _ => -1,
                };
                assert_eq!(kronecker(a, p as i64), expected, "({a}/{p})");
            }
        }
    }

    #[test]
    fn induced_kronecker_minus_four() {
        let chi = DirichletCharacter::kronecker(-4, 4).unwrap().induce(8).unwrap();
        let vals: Vec<_> = [1, 3, 5, 7].iter().map(|&a| chi.value(a).as_integer().unwrap()).collect();
        assert_eq!(vals, vec![1, -1, 1, -1]);
        assert!(chi.value(2).is_zero() && chi.value(4).is_zero());
    }

    #[test]
    fn induced_trivial() {
        let chi = DirichletCharacter::trivial(1).induce(4).unwrap();
        assert_eq!(chi.value(1), CharValue::ONE);
        assert_eq!(chi.value(3), CharValue::ONE);
        assert!(chi.value(2).is_zero() && chi.value(4).is_zero());
        assert!(DirichletCharacter::trivial(3).induce(4).is_err());
    }

    #[test]
    fn induced_table_character() {
        // order-4 character mod 5 generated by 2 -> i
        let values = vec![
            CharValue::Zero,
            CharValue::ONE,
            CharValue::root(4, 1),
            CharValue::root(4, 3),
            CharValue::MINUS_ONE,
        ];
        let chi = DirichletCharacter::table(5, 5, values).unwrap();
        let up = chi.induce(10).unwrap();
        assert_eq!(up.value(7), chi.value(2));
        assert!(up.value(2).is_zero());
        up.check_axioms().unwrap();
        assert_eq!(up.conductor(), 5);
        assert!(!chi.is_real());
    }

    #[test]
    fn constructed_characters_are_multiplicative() {
        let chars = vec![
            DirichletCharacter::trivial(12),
            DirichletCharacter::kronecker(-4, 20).unwrap(),
            DirichletCharacter::kronecker(5, 15).unwrap(),
            DirichletCharacter::kronecker(-3, 9).unwrap(),
            DirichletCharacter::kronecker(8, 8).unwrap(),
            DirichletCharacter::kronecker(-7, 7).unwrap(),
        ];
        for chi in chars {
            chi.check_axioms().unwrap();
        }
    }

    #[test]
    fn bad_tables_are_rejected() {
        let values = vec![CharValue::Zero, CharValue::ONE, CharValue::ONE, CharValue::MINUS_ONE, CharValue::ONE];
        assert!(DirichletCharacter::table(5, 5, values).is_err());
    }

    #[test]
    fn conductors() {
        assert_eq!(DirichletCharacter::trivial(12).conductor(), 1);
        assert_eq!(DirichletCharacter::kronecker(-4, 12).unwrap().conductor(), 4);
        assert_eq!(DirichletCharacter::kronecker(-3, 9).unwrap().conductor(), 3);
    }

    #[test]
    fn root_of_unity_recognition() {
        assert_eq!(CharValue::from_complex(0.0, 1.0, 8), Some(CharValue::root(4, 1)));
        assert_eq!(CharValue::from_complex(-1.0, 0.0, 8), Some(CharValue::MINUS_ONE));
        assert_eq!(CharValue::from_complex(0.0, 0.0, 8), Some(CharValue::Zero));
        assert_eq!(CharValue::from_complex(0.5, 0.5, 8), None);
    }

    proptest::proptest! {
        #[test]
        fn kronecker_is_completely_multiplicative(a in -500i64..500, b in -500i64..500, d in prop_oneof(), m in 1u64..8) {
            let chi = DirichletCharacter::kronecker(d, (d.unsigned_abs()) * m).unwrap();
            proptest::prop_assert_eq!(chi.value(a * b), chi.value(a).mul(chi.value(b)));
        }

        #[test]
        fn sigma0_and_index_are_multiplicative(a in 1u64..2000, b in 1u64..2000) {
            proptest::prop_assume!(a.gcd(&b) == 1);
            proptest::prop_assert_eq!(sigma0(a * b).unwrap(), sigma0(a).unwrap() * sigma0(b).unwrap());
            proptest::prop_assert_eq!(
                index_gamma0(1, a * b).unwrap(),
                index_gamma0(1, a).unwrap() * index_gamma0(1, b).unwrap()
            );
        }
    }

    fn prop_oneof() -> impl proptest::strategy::Strategy<Value = i64> {
        proptest::sample::select(vec![-4i64, -3, 5, -7, 8, -8, 12, -15, 13, 21, -23])
    }
}
