//! Explicit Fourier-coefficient bounds for orthonormal bases and general
//! forms, the Petersson-norm lower bound for primitive forms, and an empirical
//! checker that synthesizes the orthonormal basis and tests the bound.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_integer::Integer;
use rug::float::{Constant, Round};
use rug::ops::Pow;
use rug::{Complex, Float};
use serde::Serialize;
use serde_json::{json, Value};

use crate::arith::{self, DirichletCharacter};
use crate::error::{precondition, Error, Result};
use crate::newforms::{translates_basis, NewformRecord};
use crate::orthobasis::{assemble_full_basis, orthonormalize, NormMode};
use crate::qseries::QSeries;
use crate::scalar::{format_float, Scalar};

/// Working precision for bound arithmetic.
const BOUND_PREC: u32 = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundVariant {
    OrthonormalElement,
    GeneralForm,
    GeneralFormCoprime,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub n: u64,
    pub k: u32,
    pub m: u64,
    pub variant: BoundVariant,
    /// Rounded up to the next double.
    pub value: f64,
    pub value_decimal: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<u64>,
}

impl BoundReport {
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("plain data")
    }
}

/// `2√π e^{2π}`.
pub fn leading_constant(prec: u32) -> Float {
    let pi = Float::with_val(prec, Constant::Pi);
    let e2pi = Float::with_val(prec, &pi * 2u32).exp();
    pi.sqrt() * 2u32 * e2pi
}

/// Nearest-rounded arithmetic at 128 bits stays within a few hundred ulps;
/// inflating by 2^-100 before rounding up to f64 makes the result an upper bound.
fn round_up(x: &Float) -> (f64, String) {
    let inflated = Float::with_val(x.prec(), x * (1.0 + 2f64.powi(-100)));
    (inflated.to_f64_round(Round::Up), format_float(&inflated, 20))
}

fn bound_float(n: u64, k: u32, m: u64, local_exponent: u32) -> Result<Float> {
    if n == 0 || k == 0 || m == 0 {
        return precondition("bounds need n, k, M >= 1");
    }
    let prec = BOUND_PREC;
    let mut v = leading_constant(prec);
    v *= arith::sigma0(n)? as u32;
    v *= Float::with_val(prec, n).pow((k as f64 - 1.0) / 2.0);
    v *= Float::with_val(prec, m).sqrt();
    for p in arith::prime_divisors(m) {
        let local = Float::with_val(prec, 1) + Float::with_val(prec, p).recip();
        v *= local.pow(local_exponent);
        let p4 = Float::with_val(prec, p).pow(4u32).recip();
        v /= (Float::with_val(prec, 1) - p4).sqrt();
    }
    Ok(v)
}


/// `2√π e^{2π} σ0(n) n^{(k−1)/2} √M ∏_{p|M} (1+1/p)³/√(1−p⁻⁴)`, bounding
/// `|a(h_i, n)|` for every element of an orthonormal basis of `S_k(Γ0(M), χ)`.
pub fn hi_bound(n: u64, k: u32, m: u64) -> Result<f64> {
    Ok(round_up(&bound_float(n, k, m, 3)?).0)
}

/// The same with first-power local factors, valid for `gcd(n, M) = 1`.
pub fn hi_bound_coprime(n: u64, k: u32, m: u64) -> Result<f64> {
    if n.gcd(&m) != 1 {
        return precondition(format!("coprime bound needs gcd(n, M) = 1, got gcd({n}, {m}) = {}", n.gcd(&m)));
    }
    Ok(round_up(&bound_float(n, k, m, 1)?).0)
}

/// `hi_bound · √(⟨F,F⟩ · dim)`, bounding `|a(F, n)|` for any `F` in the space.
pub fn f_bound(n: u64, k: u32, m: u64, norm: f64, dim: u64, coprime: bool) -> Result<BoundReport> {
    if !(norm > 0.0) || dim == 0 {
        return precondition("F bound needs ⟨F,F⟩ > 0 and dim >= 1");
    }
    if coprime && n.gcd(&m) != 1 {
        return precondition(format!("coprime bound needs gcd(n, M) = 1, got gcd({n}, {m}) = {}", n.gcd(&m)));
    }
    let base = bound_float(n, k, m, if coprime { 1 } else { 3 })?;
    let scale = Float::with_val(BOUND_PREC, norm * dim as f64).sqrt();
    let (value, value_decimal) = round_up(&(base * scale));
    Ok(BoundReport {
        n,
        k,
        m,
        variant: if coprime { BoundVariant::GeneralFormCoprime } else { BoundVariant::GeneralForm },
        value,
        value_decimal,
        norm: Some(norm),
        dim: Some(dim),
    })
}

/// Report for a single orthonormal element, without `⟨F,F⟩` or `dim`.
pub fn hi_report(n: u64, k: u32, m: u64, coprime: bool) -> Result<BoundReport> {
    if coprime && n.gcd(&m) != 1 {
        return precondition(format!("coprime bound needs gcd(n, M) = 1, got gcd({n}, {m}) = {}", n.gcd(&m)));
    }
    let (value, value_decimal) = round_up(&bound_float(n, k, m, if coprime { 1 } else { 3 })?);
    let variant = if coprime { BoundVariant::GeneralFormCoprime } else { BoundVariant::OrthonormalElement };
    Ok(BoundReport { n, k, m, variant, value, value_decimal, norm: None, dim: None })
}

/// `dim` as supplied must equal the translate count of the data; a mismatch
/// means the newform list is incomplete (or the dimension is wrong).
pub fn check_dimension(records: &[&NewformRecord], m: u64, k: u32, chi: &DirichletCharacter, dim: u64) -> Result<()> {
    let count = translates_basis(records, m, k, chi)?.dimension() as u64;
    if count != dim {
        return Err(Error::IndexMismatch(format!(
            "supplied dim {dim} for S_{k}(Γ0({m})) but the newform data yields {count} translates"
        )));
    }
    Ok(())
}

/// `(4π e^{4π} N ∏_{p|N} (1+1/p))⁻¹`, a lower bound for `⟨f, f⟩` of a
/// primitive form of level `N`. Rounded down.
pub fn petersson_lower_bound(n: u64) -> Result<f64> {
    if n == 0 {
        return precondition("level must be positive");
    }
    let prec = BOUND_PREC;
    let pi = Float::with_val(prec, Constant::Pi);
    let mut den = Float::with_val(prec, &pi * 4u32) * Float::with_val(prec, &pi * 4u32).exp() * n as u32;
    for p in arith::prime_divisors(n) {
        den *= Float::with_val(prec, 1) + Float::with_val(prec, p).recip();
    }
    let v = den.recip() * (1.0 - 2f64.powi(-100));
    Ok(v.to_f64_round(Round::Down))
}

#[derive(Clone, Debug, Serialize)]
pub struct ElementCheck {
    pub form_id: String,
    pub exponents: Vec<(u64, u32)>,
    /// `max_n |a(h, n)| / hi_bound(n)`; below 1 means the bound holds.
    pub max_ratio: f64,
    pub worst_n: u64,
    /// Indices where the bound fails (first 20).
    pub violations: Vec<u64>,
    /// `(p, max_n |T(p)h − λ_p h|(n) / max_n |a(h, n)|)`.
    pub hecke_deviation: Vec<(u64, f64)>,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct EmpiricalReport {
    pub level: u64,
    pub weight: u32,
    pub n_max: u64,
    pub hecke_tolerance: f64,
    pub elements: Vec<ElementCheck>,
}

impl EmpiricalReport {
    pub fn passed(&self) -> bool {
        !self.elements.is_empty() && self.elements.iter().all(|e| e.passed)
    }

    pub fn to_json(&self) -> Value {
        json!({ "passed": self.passed(), "report": serde_json::to_value(self).expect("plain data") })
    }
}

/// Synthesizes every absolute-mode orthonormal `h_i` of the translate span in
/// `S_k(Γ0(M), χ)` through `n_max`, checks `|a(h_i, n)| <= hi_bound(n, k, M)`,
/// and checks that each `h_i` is a `T(p)`-eigenvector for `p ∤ M`, `p <= 7`.
pub fn empirical_check(
    records: &[Arc<NewformRecord>],
    m: u64,
    k: u32,
    chi: &DirichletCharacter,
    n_max: u64,
    prec: u32,
) -> Result<EmpiricalReport> {
    let hecke_tolerance = 1e-20f64.max(2f64.powi(20 - prec as i32));
    let mut norms = BTreeMap::new();
    for r in records {
        let norm = r
            .petersson_norm
            .as_ref()
            .ok_or_else(|| Error::Precondition(format!("record {} has no Petersson norm", r.id)))?;
        norms.insert(r.id.clone(), norm.value);
    }
    let elements = assemble_full_basis(records, m, k, chi, prec)?;
    let ortho = orthonormalize(&elements, NormMode::Absolute, &norms, prec)?;
    let bounds = (1..=n_max).map(|n| hi_bound(n, k, m)).collect::<Result<Vec<_>>>()?;
    let mut checks = Vec::new();
    for h in &ortho {
        let rec = records.iter().find(|r| r.id == h.form_id).expect("basis built from these records");
        let f = rec.qexp.as_ref().ok_or_else(|| Error::Precondition(format!("record {} has no q-expansion", rec.id)))?;
        if (f.truncation() as u64) < n_max {
            return precondition(format!("record {} truncation {} is below n_max = {n_max}", rec.id, f.truncation()));
        }
        let base = f.truncate(n_max as usize);
        let translates = h.coeffs.keys().map(|&l| base.apply_v(l)).collect::<Result<Vec<_>>>()?;
        // V_ℓ stretches the truncation; cut back to a common n_max
        let translates: Vec<QSeries> = translates.iter().map(|s| s.truncate(n_max as usize)).collect();
        let terms: Vec<(Scalar, &QSeries)> = h.coeffs.values().cloned().zip(translates.iter()).collect();
        let hs = QSeries::linear_combination(&terms, prec)?;
        let hs = if hs.level() == m { hs } else { QSeries::approx(
            hs.float_coefficients(prec).to_vec(), hs.weight(), m, chi.induce(m)?)? };
        let coeffs = hs.float_coefficients(prec);
        let mags: Vec<f64> = coeffs.iter().map(|c| Complex::with_val(53, c.abs_ref()).real().to_f64()).collect();
        let (mut max_ratio, mut worst_n, mut violations) = (0.0f64, 1u64, Vec::new());
        for (i, (&a, &b)) in mags.iter().zip(&bounds).enumerate() {
            let ratio = a / b;
            if ratio > max_ratio {
                max_ratio = ratio;
                worst_n = i as u64 + 1;
            }
            if ratio > 1.0 && violations.len() < 20 {
                violations.push(i as u64 + 1);
            }
        }
        let scale = mags.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut hecke_deviation = Vec::new();
        for p in [2u64, 3, 5, 7] {
            if m % p == 0 || p > n_max {
                continue;
            }
            let lambda = rec
                .eigenvalues
                .get(&p)
                .ok_or_else(|| Error::MissingEigenvalue { id: rec.id.clone(), prime: p })?
                .to_complex(prec);
            let tp = hs.hecke_tp(p, prec)?;
            let dev = tp
                .float_coefficients(prec)
                .iter()
                .zip(coeffs.iter())
                .map(|(a, b)| Complex::with_val(prec, a - Complex::with_val(prec, &lambda * b)).abs().real().to_f64())
                .fold(0.0, f64::max);
            hecke_deviation.push((p, dev / scale));
        }
        let passed = violations.is_empty() && hecke_deviation.iter().all(|&(_, d)| d <= hecke_tolerance);
        checks.push(ElementCheck {
            form_id: h.form_id.clone(),
            exponents: h.exponents.clone(),
            max_ratio,
            worst_n,
            violations,
            hecke_deviation,
            passed,
        });
    }
    Ok(EmpiricalReport { level: m, weight: k, n_max, hecke_tolerance, elements: checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newforms::{dataset, Provenance};
    use crate::petersson::{petersson_norm, QuadratureConfig};
    use proptest::prelude::*;

    #[test]
    fn constant_and_examples() {
        let c = leading_constant(128).to_f64();
        // independent f64 oracle
        let oracle = 2.0 * std::f64::consts::PI.sqrt() * (2.0 * std::f64::consts::PI).exp();
        assert!((c - oracle).abs() < 1e-9);
        assert_eq!(format!("{c:.2}"), "1898.27");
        assert!((hi_bound(1, 12, 1).unwrap() - c).abs() < 1e-9);
        let m11 = 11f64.sqrt() * (12.0f64 / 11.0).powi(3) / (1.0 - 11f64.powi(-4)).sqrt();
        assert!((m11 - 4.306).abs() < 1e-4);
        assert!((hi_bound(1, 2, 11).unwrap() / c - m11).abs() < 1e-12);
        let cop = hi_bound_coprime(7, 2, 11).unwrap() / hi_bound(7, 2, 11).unwrap();
        assert!((cop - (11.0f64 / 12.0).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn general_form_bound() {
        let r = f_bound(1, 12, 1, 1.0, 1, false).unwrap();
        assert_eq!(r.value, hi_bound(1, 12, 1).unwrap());
        assert!(f_bound(2, 12, 4, 1.0, 1, true).is_err());
        assert!(hi_bound_coprime(11, 2, 11).is_err());
        let r = f_bound(3, 2, 11, 4.0, 9, true).unwrap();
        assert!((r.value / hi_bound_coprime(3, 2, 11).unwrap() - 6.0).abs() < 1e-12);
        assert_eq!(r.to_json()["variant"], "general-form-coprime");
    }

    #[test]
    fn bound_is_rounded_up() {
        let exact = Float::with_val(256, Constant::Pi).sqrt() * 2u32 * (Float::with_val(256, Constant::Pi) * 2u32).exp();
        assert!(Float::with_val(256, hi_bound(1, 12, 1).unwrap()) >= exact);
    }

    #[test]
    fn lower_bound_values() {
        let one = petersson_lower_bound(1).unwrap();
        let oracle = 1.0 / (4.0 * std::f64::consts::PI * (4.0 * std::f64::consts::PI).exp());
        assert!((one - oracle).abs() < 1e-18);
        assert!((one - 2.7751e-7).abs() < 1e-11);
        assert!((petersson_lower_bound(11).unwrap() * 12.0 / one - 1.0).abs() < 1e-14);
    }

    #[test]
    fn dimension_cross_check() {
        let d = dataset("delta").unwrap();
        let chi = DirichletCharacter::trivial(1);
        assert!(check_dimension(&[&d], 2, 12, &chi, 2).is_ok());
        assert!(matches!(check_dimension(&[&d], 2, 12, &chi, 3), Err(Error::IndexMismatch(_))));
    }

    fn with_numeric_norm(name: &str) -> Arc<NewformRecord> {
        let rec = dataset(name).unwrap();
        let cfg = QuadratureConfig { prec: 64, nodes: 12, eval_eps: 1e-18, ..QuadratureConfig::default() };
        let norm = petersson_norm(&rec, &cfg).unwrap().re();
        Arc::new((*rec).clone().with_norm(norm, Provenance::Numeric))
    }

    #[test]
    fn empirical_delta_level_two() {
        let d = with_numeric_norm("delta");
        let rep = empirical_check(&[d], 2, 12, &DirichletCharacter::trivial(2), 500, 128).unwrap();
        assert_eq!(rep.elements.len(), 2);
        assert!(rep.passed(), "{rep:?}");
        assert!(rep.elements.iter().all(|e| e.max_ratio < 0.5));
        assert!(rep.elements.iter().all(|e| e.hecke_deviation.iter().map(|x| x.0).eq([3, 5, 7])));
    }

    #[test]
    fn corrupted_norm_is_reported() {
        let d = with_numeric_norm("delta");
        let v = d.petersson_norm.as_ref().unwrap().value;
        let bad = Arc::new((*d).clone().with_norm(v * 1e-6, Provenance::External));
        let rep = empirical_check(&[bad], 1, 12, &DirichletCharacter::trivial(1), 200, 128).unwrap();
        assert!(!rep.passed());
        assert!(!rep.elements[0].violations.is_empty());
        let none = Arc::new(NewformRecord { petersson_norm: None, ..(*d).clone() });
        assert!(empirical_check(&[none], 1, 12, &DirichletCharacter::trivial(1), 10, 128).is_err());
    }

    proptest! {
        #[test]
        fn monotone_in_new_prime(n in 1u64..500, k in 1u32..20, m in 1u64..200, p in prop::sample::select(vec![2u64, 3, 5, 7, 11, 13])) {
            prop_assume!(m % p != 0);
            prop_assert!(hi_bound(n, k, m * p).unwrap() > hi_bound(n, k, m).unwrap());
        }

        #[test]
        fn coprime_never_exceeds_general(n in 1u64..2000, k in 1u32..20, m in 1u64..500) {
            prop_assume!(n.gcd(&m) == 1);
            let (c, g) = (hi_bound_coprime(n, k, m).unwrap(), hi_bound(n, k, m).unwrap());
            prop_assert!(c <= g);
            if arith::prime_divisors(m).iter().any(|&p| p % 2 == 1) {
                prop_assert!(c < g);
            }
        }

        #[test]
        fn lower_bound_decreases_along_divisibility(n in 1u64..5000, t in 2u64..50) {
            prop_assert!(petersson_lower_bound(n * t).unwrap() < petersson_lower_bound(n).unwrap());
        }
    }
}
