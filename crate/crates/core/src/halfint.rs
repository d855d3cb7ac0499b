//! Half-integral weight `k = κ + 1/2` on `Γ0(4N)`: the predicted products
//! `⟨f, f|V_{p²}⟩/⟨f,f⟩` and `⟨f, f|U(p²)⟩/⟨f,f⟩` for a `T(p²)`-eigenform, and
//! the coefficient operators `U(m²)`, `V(m²)`.
//!
//! No half-integral eigenform data ships here; the predictions are calculators
//! waiting for a user-supplied `λ_p`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::{json, Value};

use crate::arith::{self, DirichletCharacter};
use crate::error::{precondition, Result};
use crate::qseries::{QSeries, Weight};
use crate::scalar::Scalar;

/// Attached to every half-integral report.
pub const NORMALIZATION_NOTE: &str = "U(p²) here carries the double-coset normalization (p²)^{k/2−1} Σ f|α*, \
so ⟨f, f|U(p²)⟩ = p²·λ_p·⟨f,f⟩ is reported as stated for that operator; the coefficient map \
Σ a(n)qⁿ ↦ Σ a(np²)qⁿ agrees with it only when p | 4N. Values are ratios to ⟨f,f⟩.";

#[derive(Clone, Debug)]
pub struct HalfIntegralFormSpec {
    pub kappa: u32,
    /// `4N`.
    pub level: u64,
    pub character: DirichletCharacter,
    /// `λ_p` for `p ∤ 4N`, where known.
    pub eigenvalues: BTreeMap<u64, Scalar>,
    pub qexp: Option<QSeries>,
}

impl HalfIntegralFormSpec {
    pub fn new(kappa: u32, level: u64, character: DirichletCharacter) -> Result<Self> {
        if kappa == 0 {
            return precondition("κ must be positive");
        }
        if level == 0 || level % 4 != 0 {
            return precondition(format!("half-integral level {level} is not divisible by 4"));
        }
        Ok(HalfIntegralFormSpec { kappa, level, character, eigenvalues: BTreeMap::new(), qexp: None })
    }

    pub fn weight(&self) -> Weight {
        Weight::half_integral(self.kappa)
    }

    pub fn predict_v(&self, p: u64) -> Result<Scalar> {
        check_prime(p, self.level)?;
        predicted_product_v(p, self.kappa, &self.lambda(p)?)
    }

    pub fn predict_u(&self, p: u64) -> Result<Scalar> {
        check_prime(p, self.level)?;
        predicted_product_u(p, &self.lambda(p)?)
    }

    fn lambda(&self, p: u64) -> Result<Scalar> {
        match self.eigenvalues.get(&p) {
            Some(l) => Ok(l.clone()),
            None => precondition(format!("no λ_{p} supplied")),
        }
    }
}

fn check_prime(p: u64, level: u64) -> Result<()> {
    if !arith::is_prime(p) {
        return precondition(format!("{p} is not prime"));
    }
    if level % p == 0 || p == 2 {
        return precondition(format!("p = {p} divides the level 4N = {level}"));
    }
    Ok(())
}

/// `λ_p / ((p² + p) p^{2(k−1)})` with `k = κ + 1/2`; the exponent `2κ − 1` is
/// an integer, so an exact `λ_p` gives an exact result. Valid for odd `p`
/// (`p ∤ 4N` always excludes 2).
pub fn predicted_product_v(p: u64, kappa: u32, lambda: &Scalar) -> Result<Scalar> {
    check_prime(p, 4)?;
    if kappa == 0 {
        return precondition("κ must be positive");
    }
    let den = BigRational::from_integer(BigInt::from(p * p + p)) * arith::rational_pow(p, 2 * kappa as i64 - 1);
    Ok(lambda / &Scalar::Exact(den))
}

/// `p² λ_p`, as stated for the normalized `U(p²)`; see [`NORMALIZATION_NOTE`].
pub fn predicted_product_u(p: u64, lambda: &Scalar) -> Result<Scalar> {
    check_prime(p, 4)?;
    Ok(&Scalar::from_integer((p * p) as i64) * lambda)
}

/// `(U(m²) f, V(m²) f)` on coefficients. Levels move to `lcm(4N, m²)` and
/// `4N m²` respectively.
pub fn halfint_u_v_coeffs(f: &QSeries, m: u64) -> Result<(QSeries, QSeries)> {
    if f.level() % 4 != 0 {
        return precondition(format!("half-integral level {} is not divisible by 4", f.level()));
    }
    if m == 0 {
        return precondition("m must be positive");
    }
    Ok((f.apply_u(m * m)?, f.apply_v(m * m)?))
}

pub fn prediction_json(op: &str, p: u64, kappa: Option<u32>, lambda: &Scalar, value: &Scalar, digits: usize) -> Value {
    let mut v = json!({
        "op": op,
        "p": p,
        "lambda": lambda.to_json(digits),
        "value": value.to_json(digits),
        "normalization_note": NORMALIZATION_NOTE,
    });
    if let Some(k) = kappa {
        v["kappa"] = json!(k);
        v["weight"] = json!(format!("{k}+1/2"));
    }
    v
}
