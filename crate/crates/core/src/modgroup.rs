//! Unimodular matrices, coset systems for `Γ0(M) ⊂ Γ0(N)`, the weight-k slash
//! action and the character-twisted trace operator.

use std::fmt;
use std::sync::Arc;

use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Complex;
use serde::Serialize;

use crate::arith::{self, DirichletCharacter};
use crate::error::{precondition, Error, Result};
use crate::newforms::{EigenvalueSystem, NewformRecord};
use crate::qseries::{EvalCertificate, QSeries};
use crate::scalar::complex_powi;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct UnimodularMatrix {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl UnimodularMatrix {
    pub const IDENTITY: UnimodularMatrix = UnimodularMatrix { a: 1, b: 0, c: 0, d: 1 };

    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        if a as i128 * d as i128 - b as i128 * c as i128 != 1 {
            return precondition(format!("[[{a}, {b}], [{c}, {d}]] does not have determinant 1"));
        }
        Ok(UnimodularMatrix { a, b, c, d })
    }

    /// Completes a bottom row with `gcd(c, d) = 1` to a matrix of determinant 1.
    pub fn from_bottom_row(c: i64, d: i64) -> Result<Self> {
        let e = d.extended_gcd(&c);
        // e.x * d + e.y * c = gcd
        match e.gcd {
            1 => Ok(UnimodularMatrix { a: e.x, b: -e.y, c, d }),
            -1 => Ok(UnimodularMatrix { a: -e.x, b: e.y, c, d }),
            _ => precondition(format!("bottom row ({c}, {d}) is not primitive")),
        }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }

    pub fn mul(&self, o: &Self) -> Self {
        UnimodularMatrix {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn inverse(&self) -> Self {
        UnimodularMatrix { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    pub fn in_gamma0(&self, level: u64) -> bool {
        self.c.rem_euclid(level as i64) == 0
    }

    /// Möbius action `(az + b) / (cz + d)`.
    pub fn apply(&self, z: &Complex) -> Complex {
        let num = Complex::with_val(z.prec(), z * self.a) + self.b;
        num / self.automorphy(z)
    }

    /// `cz + d`.
    pub fn automorphy(&self, z: &Complex) -> Complex {
        Complex::with_val(z.prec(), z * self.c) + self.d
    }

    fn apply_f64(&self, x: f64, y: f64) -> (f64, f64) {
        let (a, b, c, d) = (self.a as f64, self.b as f64, self.c as f64, self.d as f64);
        let den = (c * x + d).powi(2) + (c * y).powi(2);
        (((a * x + b) * (c * x + d) + a * c * y * y) / den, y / den)
    }
}

impl fmt::Display for UnimodularMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

/// Element `δ ∈ Γ0(level)` making `Im(δz)` as large as possible, together with `δz`.
///
/// Level 1 uses the classical reduction into the standard fundamental domain;
/// otherwise bottom rows `(c, d)` with `level | c` and `|cz + d| < 1` are searched.
pub fn reduce_gamma0(z: &Complex, level: u64, prec: u32) -> Result<(UnimodularMatrix, Complex)> {
    let x = z.real().to_f64();
    let y = z.imag().to_f64();
    if !(y > 0.0) {
        return Err(Error::Domain { im: y });
    }
    let delta = if level == 1 { reduce_sl2(x, y) } else { reduce_level(x, y, level as i64)? };
    let z = Complex::with_val(prec, z);
    let w = delta.apply(&z);
    Ok((delta, w))
}

fn reduce_sl2(x0: f64, y0: f64) -> UnimodularMatrix {
    let mut delta = UnimodularMatrix::IDENTITY;
    let (mut x, mut y) = (x0, y0);
    for _ in 0..10_000 {
        let n = x.round() as i64;
        if n != 0 {
            delta = UnimodularMatrix { a: 1, b: -n, c: 0, d: 1 }.mul(&delta);
            (x, y) = delta.apply_f64(x0, y0);
        }
        if x * x + y * y < 1.0 - 1e-12 {
            delta = UnimodularMatrix { a: 0, b: -1, c: 1, d: 0 }.mul(&delta);
            (x, y) = delta.apply_f64(x0, y0);
        } else {
            break;
        }
    }
    if delta.c < 0 || (delta.c == 0 && delta.d < 0) {
        delta = UnimodularMatrix { a: -delta.a, b: -delta.b, c: -delta.c, d: -delta.d };
    }
    delta
}

fn reduce_level(x: f64, y: f64, level: i64) -> Result<UnimodularMatrix> {
    // |cz + d|^2 = (cx + d)^2 + (cy)^2; the identity has value 1
    let mut best = (1.0f64, 0i64, 1i64);
    let mut c = level;
    while (c as f64 * y).powi(2) < best.0 {
        let cy2 = (c as f64 * y).powi(2);
        let centre = -(c as f64) * x;
        let d0 = centre.round() as i64;
        for t in 0i64.. {
            let near = (t as f64 - 0.5).max(0.0);
            if near * near + cy2 >= best.0 {
                break;
            }
            let cands = if t == 0 { vec![d0] } else { vec![d0 + t, d0 - t] };
            for d in cands {
                if c.gcd(&d) != 1 {
                    continue;
                }
                let v = (centre - d as f64).powi(2) + cy2;
                if v < best.0 * (1.0 - 1e-12) {
                    best = (v, c, d);
                }
            }
        }
        c += level;
    }
    let (_, c, d) = best;
    if c == 0 {
        return Ok(UnimodularMatrix::IDENTITY);
    }
    UnimodularMatrix::from_bottom_row(c, d)
}

/// Right coset representatives of `Γ0(M)` in `Γ0(N)`.
#[derive(Clone, Debug, Serialize)]
pub struct CosetSystem {
    pub n: u64,
    pub m: u64,
    pub reps: Vec<UnimodularMatrix>,
}

impl CosetSystem {
    /// Checks count, inequivalence and membership in `Γ0(N)`.
    pub fn verify(&self) -> Result<()> {
        let index = arith::index_gamma0(self.n, self.m)?;
        if self.reps.len() as u64 != index {
            return precondition(format!("{} representatives for index {index}", self.reps.len()));
        }
        for (i, a) in self.reps.iter().enumerate() {
            if !a.in_gamma0(self.n) {
                return precondition(format!("representative {a} is not in Γ0({})", self.n));
            }
            for b in &self.reps[i + 1..] {
                if a.mul(&b.inverse()).in_gamma0(self.m) {
                    return precondition(format!("{a} and {b} lie in the same coset"));
                }
            }
        }
        Ok(())
    }

    /// Cusp width at `γ∞` seen from `Γ0(M)`: `M / gcd(c², M)`.
    pub fn width(&self, gamma: &UnimodularMatrix) -> u64 {
        let c = gamma.c.unsigned_abs() % self.m;
        self.m / (c * c).gcd(&self.m).max(1).min(self.m)
    }
}

/// Cosets of `Γ0(M)` in `Γ0(N)` through the classes `(c : d)` of `P¹(Z/M)` with
/// `N | c`, each lifted to an integral matrix by the extended gcd.
pub fn coset_reps(n: u64, m: u64) -> Result<CosetSystem> {
    if n == 0 || m == 0 || m % n != 0 {
        return precondition(format!("coset_reps needs N | M, got N = {n}, M = {m}"));
    }
    let mu = m as usize;
    let units: Vec<u64> = (1..=m).filter(|u| u.gcd(&m) == 1).collect();
    let mut seen = vec![false; mu * mu];
    let mut reps = Vec::new();
    for c in (0..m).step_by(n as usize) {
        for d in 0..m {
            if c.gcd(&d).gcd(&m) != 1 || seen[(c * m + d) as usize] {
                continue;
            }
            for &u in &units {
                seen[((u * c % m) * m + u * d % m) as usize] = true;
            }
            reps.push(lift_bottom_row(c, d, m)?);
        }
    }
    let sys = CosetSystem { n, m, reps };
    sys.verify()?;
    Ok(sys)
}

fn lift_bottom_row(c: u64, d: u64, m: u64) -> Result<UnimodularMatrix> {
    if c == 0 {
        return Ok(UnimodularMatrix::IDENTITY);
    }
    let c = c as i64;
    let mut d = d as i64;
    while c.gcd(&d) != 1 {
        d += m as i64;
    }
    UnimodularMatrix::from_bottom_row(c, d)
}

/// `(f|_k γ)(z) = (cz + d)^{-k} f(γz)`, evaluated literally at `γz`.
pub fn slash_evaluate(
    f: &QSeries,
    gamma: &UnimodularMatrix,
    z: &Complex,
    eps: f64,
    prec: u32,
) -> Result<EvalCertificate> {
    slash_with(f, gamma, z, eps, prec, false)
}

/// As [`slash_evaluate`], but `f(γz)` is computed after moving `γz` up under
/// `Γ0(level of f)`.
pub fn slash_evaluate_modular(
    f: &QSeries,
    gamma: &UnimodularMatrix,
    z: &Complex,
    eps: f64,
    prec: u32,
) -> Result<EvalCertificate> {
    slash_with(f, gamma, z, eps, prec, true)
}

fn slash_with(
    f: &QSeries,
    gamma: &UnimodularMatrix,
    z: &Complex,
    eps: f64,
    prec: u32,
    modular: bool,
) -> Result<EvalCertificate> {
    let Some(k) = f.weight().as_integral() else {
        return precondition("slash action is implemented for integral weight");
    };
    let z = Complex::with_val(prec, z);
    if !(z.imag().to_f64() > 0.0) {
        return Err(Error::Domain { im: z.imag().to_f64() });
    }
    if gamma.is_identity() {
        return if modular { f.evaluate_modular(&z, eps, prec) } else { f.evaluate(&z, eps, prec) };
    }
    let j = gamma.automorphy(&z);
    let scale = Complex::with_val(prec, j.abs_ref()).real().to_f64().powi(k as i32);
    let w = gamma.apply(&z);
    let inner = if modular {
        f.evaluate_modular(&w, eps * scale, prec)?
    } else {
        f.evaluate(&w, eps * scale, prec)?
    };
    let value = inner.value / complex_powi(&j, k as i32);
    Ok(EvalCertificate { value, tail_bound: inner.tail_bound / scale, terms_used: inner.terms_used })
}

/// `f|tr_N^M (z) = (1/index) Σ conj(χ(d_α)) (f|α)(z)` over cosets of `Γ0(M)` in `Γ0(N)`.
pub fn trace_evaluate(
    f: &QSeries,
    n: u64,
    m: u64,
    chi: &DirichletCharacter,
    z: &Complex,
    eps: f64,
    prec: u32,
) -> Result<EvalCertificate> {
    let sys = coset_reps(n, m)?;
    trace_evaluate_with(f, &sys.reps, chi, z, eps, prec)
}

/// Trace over an explicit list of representatives.
pub fn trace_evaluate_with(
    f: &QSeries,
    reps: &[UnimodularMatrix],
    chi: &DirichletCharacter,
    z: &Complex,
    eps: f64,
    prec: u32,
) -> Result<EvalCertificate> {
    if reps.is_empty() {
        return precondition("empty coset system");
    }
    let mut value = Complex::new(prec);
    let mut tail = 0.0;
    let mut terms = 0;
    for alpha in reps {
        let member = slash_evaluate_modular(f, alpha, z, eps, prec)?;
        let twist = chi.value(alpha.d).conj().to_complex(prec);
        value += member.value * twist;
        tail += member.tail_bound;
        terms = terms.max(member.terms_used);
    }
    let count = reps.len() as u32;
    Ok(EvalCertificate { value: value / count, tail_bound: tail / count as f64, terms_used: terms })
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceHeckeRow {
    pub identity: String,
    pub point: (f64, f64),
    pub lhs: (f64, f64),
    pub rhs: (f64, f64),
    pub deviation: f64,
    pub certificate: f64,
    pub passed: bool,
}

/// `index·(f|V_d)|tr_N^{Nd} = d^{1−k} conj(λ(1,d)) f` at each point, accepted
/// when the deviation is within the evaluation certificates plus `slack`.
pub fn verify_trace_hecke(
    rec: &Arc<NewformRecord>,
    d: u64,
    points: &[(f64, f64)],
    slack: f64,
    prec: u32,
) -> Result<Vec<TraceHeckeRow>> {
    let f = rec.qexp.as_ref().ok_or_else(|| Error::Precondition(format!("record {} has no q-expansion", rec.id)))?;
    if d == 0 {
        return precondition("d must be positive");
    }
    let (n, k) = (rec.level, rec.weight);
    let fd = f.apply_v(d)?;
    let chi = rec.character_at_level()?;
    let sys = EigenvalueSystem::new(Arc::clone(rec), prec)?;
    let lambda = sys.lambda(d)?.conj().to_complex(prec);
    let coef = lambda * complex_powi(&Complex::with_val(prec, d), 1 - k as i32);
    let coef_abs = Complex::with_val(53, coef.abs_ref()).real().to_f64();
    let cosets = coset_reps(n, n * d)?;
    let index = cosets.reps.len() as f64;
    let eps = slack * 1e-6;
    let identity = format!("trace-hecke {} d={d}", rec.id);
    points
        .iter()
        .map(|&(x, y)| {
            let z = Complex::with_val(prec, (x, y));
            let t = trace_evaluate_with(&fd, &cosets.reps, &chi, &z, eps, prec)?;
            let e = f.evaluate_modular(&z, eps, prec)?;
            let lhs = t.value * index as u32;
            let rhs = Complex::with_val(prec, &coef * &e.value);
            let deviation = Complex::with_val(prec, &lhs - &rhs).abs().real().to_f64();
            let certificate = index * t.tail_bound + coef_abs * e.tail_bound;
            Ok(TraceHeckeRow {
                identity: identity.clone(),
                point: (x, y),
                lhs: (lhs.real().to_f64(), lhs.imag().to_f64()),
                rhs: (rhs.real().to_f64(), rhs.imag().to_f64()),
                deviation,
                certificate,
                passed: deviation <= certificate + slack,
            })
        })
        .collect()
}

/// Seeded test points `x + iy` with `x ∈ [-1/2, 1/2)` and `y ∈ [0.8, 1.6)`.
pub fn test_points(seed: u64, count: usize) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (rng.gen_range(-0.5..0.5), rng.gen_range(0.8..1.6)))
        .collect()
}

/// Random element of `Γ0(level)` with small entries, for representative-independence tests.
pub fn random_gamma0(rng: &mut impl Rng, level: u64) -> UnimodularMatrix {
    loop {
        let c = level as i64 * rng.gen_range(-3i64..=3);
        let d: i64 = rng.gen_range(-7i64..=7);
        if c.gcd(&d) == 1 {
            return UnimodularMatrix::from_bottom_row(c, d).expect("primitive row");
        }
    }
}
