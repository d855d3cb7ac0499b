//! Closed-form orthogonal bases of the spaces spanned by translates of one
//! primitive form, assembled across primes by tensor products.
//!
//! Every element is stored as `√scale_sq · Σ_ℓ c_ℓ f̃|V_ℓ`. The common factor
//! `∏ p^{j_p k/2}` is irrational for odd `k`, so keeping it squared and apart
//! leaves the coefficients `c_ℓ` exact.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::One;
use rug::Float;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::arith::{self, is_perfect_square, DirichletCharacter};
use crate::error::{precondition, Error, Result};
use crate::gram::GramMatrix;
use crate::newforms::{translates_basis, EigenvalueSystem, NewformRecord};
use crate::scalar::{rational_to_float, Scalar};

#[derive(Clone, Debug)]
pub struct PrimeBasisElement {
    pub p: u64,
    pub j: u32,
    /// `p^{jk}`.
    pub scale_sq: BigRational,
    /// `(i, c_i)`: coefficient `p^{jk/2} c_i` on `f̃|V_{p^i}`.
    pub coeffs: Vec<(u32, Scalar)>,
    pub norm_sq: Scalar,
}

/// `g_0, …, g_r` for the prime `p`.
///
/// `p | N`: `g_j = p^{jk/2}(f̃|V_{p^j} − conj(λ)/p^k · f̃|V_{p^{j−1}})` with norm `1 − |λ|²/p^k`.
/// `p ∤ N`: `g_1 = p^{k/2}(f̃|V_p − conj(λ)/(p^k(1+1/p)) f̃)`, and for `j ≥ 2`
/// `g_j = p^{jk/2}(f̃|V_{p^j} − conj(λ)/p^k f̃|V_{p^{j−1}} + conj(χ(p))/p^{k+1} f̃|V_{p^{j−2}})`,
/// with norms `1 − |λ|²/(p^k(1+1/p)²)` and `(1 − 1/p²)` times that.
pub fn prime_basis(sys: &EigenvalueSystem, p: u64, r: u32) -> Result<Vec<PrimeBasisElement>> {
    if !arith::is_prime(p) {
        return precondition(format!("{p} is not prime"));
    }
    let k = sys.weight() as i64;
    let mut out = vec![PrimeBasisElement {
        p,
        j: 0,
        scale_sq: BigRational::one(),
        coeffs: vec![(0, Scalar::one())],
        norm_sq: Scalar::one(),
    }];
    if r == 0 {
        return Ok(out);
    }
    let lam = sys.lambda(p)?;
    let lam_bar = lam.conj();
    let abs_sq = lam.abs_sq();
    let pk = Scalar::Exact(arith::rational_pow(p, k));
    let one = Scalar::one();
    let divides = sys.level() % p == 0;
    let local = Scalar::Exact(arith::local_factor_product(p, 1));
    for j in 1..=r {
        let scale_sq = arith::rational_pow(p, j as i64 * k);
        let (coeffs, norm_sq) = if divides {
            let c = -(&lam_bar / &pk);
            (vec![(j - 1, c), (j, one.clone())], &one - &(&abs_sq / &pk))
        } else {
            let base = &one - &(&abs_sq / &(&pk * &(&local * &local)));
            if j == 1 {
                let c = -(&lam_bar / &(&pk * &local));
                (vec![(0, c), (1, one.clone())], base)
            } else {
                let c1 = -(&lam_bar / &pk);
                let c2 = &sys.chi(p).conj() / &Scalar::Exact(arith::rational_pow(p, k + 1));
                let factor = Scalar::Exact(BigRational::one() - arith::rational_pow(p, -2));
                (vec![(j - 2, c2), (j - 1, c1), (j, one.clone())], &factor * &base)
            }
        };
        out.push(PrimeBasisElement { p, j, scale_sq, coeffs, norm_sq });
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct OrthoBasisElement {
    pub form_id: String,
    /// `(p, j_p)` for the primes dividing `M/N`, ascending.
    pub exponents: Vec<(u64, u32)>,
    /// `∏ p^{j_p k}`.
    pub scale_sq: BigRational,
    /// Coefficients on `f̃|V_ℓ` before the common factor `√scale_sq`.
    pub coeffs: BTreeMap<u64, Scalar>,
    pub norm_sq: Scalar,
}

impl OrthoBasisElement {
    /// Actual coefficient on `f̃|V_ℓ`; exact when `scale_sq` is a square.
    pub fn coefficient(&self, ell: u64, prec: u32) -> Scalar {
        let Some(c) = self.coeffs.get(&ell) else {
            return Scalar::zero();
        };
        c * &sqrt_scalar(&self.scale_sq, prec)
    }

    pub fn to_json(&self, digits: usize, prec: u32) -> Value {
        let exps: Map<String, Value> = self.exponents.iter().map(|(p, j)| (p.to_string(), json!(j))).collect();
        let coeffs: Map<String, Value> = self
            .coeffs
            .keys()
            .map(|&l| (l.to_string(), self.coefficient(l, prec).to_json(digits)))
            .collect();
        json!({
            "form_id": self.form_id,
            "exponents": exps,
            "coefficients": coeffs,
            "norm_sq": self.norm_sq.to_json(digits),
        })
    }
}

fn sqrt_scalar(r: &BigRational, prec: u32) -> Scalar {
    match is_perfect_square(r) {
        Some(s) => Scalar::Exact(s),
        None => Scalar::Approx(rug::Complex::with_val(prec, (rational_to_float(r, prec).sqrt(), 0))),
    }
}

/// Tensor product of prime elements, one per exponent vector in lexicographic
/// order over the primes of `M/N`.
pub fn form_basis(sys: &EigenvalueSystem, m: u64) -> Result<Vec<OrthoBasisElement>> {
    let n = sys.level();
    if m == 0 || m % n != 0 {
        return precondition(format!("level {n} does not divide M = {m}"));
    }
    let fac = arith::factorize(m / n)?;
    let per_prime: Vec<Vec<PrimeBasisElement>> =
        fac.iter().map(|&(p, r)| prime_basis(sys, p, r)).collect::<Result<_>>()?;
    let mut out = vec![OrthoBasisElement {
        form_id: sys.record().id.clone(),
        exponents: Vec::new(),
        scale_sq: BigRational::one(),
        coeffs: BTreeMap::from([(1, Scalar::one())]),
        norm_sq: Scalar::one(),
    }];
    for elems in &per_prime {
        let mut next = Vec::with_capacity(out.len() * elems.len());
        for base in &out {
            for g in elems {
                let mut coeffs = BTreeMap::new();
                for (&ell, c) in &base.coeffs {
                    for (i, d) in &g.coeffs {
                        coeffs.insert(ell * g.p.pow(*i), c * d);
                    }
                }
                let mut exponents = base.exponents.clone();
                exponents.push((g.p, g.j));
                next.push(OrthoBasisElement {
                    form_id: base.form_id.clone(),
                    exponents,
                    scale_sq: &base.scale_sq * &g.scale_sq,
                    coeffs,
                    norm_sq: &base.norm_sq * &g.norm_sq,
                });
            }
        }
        out = next;
    }
    Ok(out)
}

/// Orthogonal basis of the span of all translates in `S_k(Γ0(M), χ)`.
pub fn assemble_full_basis(
    records: &[Arc<NewformRecord>],
    m: u64,
    k: u32,
    chi: &DirichletCharacter,
    prec: u32,
) -> Result<Vec<OrthoBasisElement>> {
    let refs: Vec<&NewformRecord> = records.iter().map(|r| r.as_ref()).collect();
    let tb = translates_basis(&refs, m, k, chi)?;
    let mut out = Vec::new();
    let mut seen = Vec::new();
    for t in &tb.translates {
        if seen.contains(&t.record) {
            continue;
        }
        seen.push(t.record);
        let sys = EigenvalueSystem::new(Arc::clone(&records[t.record]), prec)?;
        out.extend(form_basis(&sys, m)?);
    }
    if out.len() != tb.dimension() {
        return precondition(format!("{} basis elements for {} translates", out.len(), tb.dimension()));
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct GramSchmidtReport {
    pub form_id: String,
    pub elements: usize,
    pub max_off_diagonal: f64,
    pub max_norm_discrepancy: f64,
    /// Every entry was computed in rational arithmetic.
    pub exact: bool,
    /// `(i, j, |⟨g_i, g_j⟩|)` for nonzero off-diagonal products and `(i, i, discrepancy)`.
    pub nonzero: Vec<(usize, usize, f64)>,
}

impl GramSchmidtReport {
    /// All off-diagonal products and norm discrepancies vanish (exactly, if exact).
    pub fn all_zero(&self) -> bool {
        self.nonzero.is_empty()
    }
}

/// `Σ a_ℓ conj(b_ℓ') G[ℓ, ℓ']` without the scale factors.
fn inner(g: &GramMatrix, a: &BTreeMap<u64, Scalar>, b: &BTreeMap<u64, Scalar>) -> Result<Scalar> {
    let mut acc = Scalar::zero();
    for (&l, x) in a {
        let i = g.position(l).ok_or_else(|| Error::IndexMismatch(format!("ℓ = {l} is not in the Gram index")))?;
        for (&l2, y) in b {
            let j = g
                .position(l2)
                .ok_or_else(|| Error::IndexMismatch(format!("ℓ = {l2} is not in the Gram index")))?;
            acc = &acc + &(&(x * &y.conj()) * &g.entries[i][j]);
        }
    }
    Ok(acc)
}

/// `⟨g_i, g_j⟩` for an element pair, including the scale factors.
pub fn element_product(g: &GramMatrix, a: &OrthoBasisElement, b: &OrthoBasisElement, prec: u32) -> Result<Scalar> {
    let raw = inner(g, &a.coeffs, &b.coeffs)?;
    if raw.is_zero() {
        return Ok(raw);
    }
    Ok(&raw * &sqrt_scalar(&(&a.scale_sq * &b.scale_sq), prec))
}

/// All pairwise products of the elements through the Gram matrix, compared
/// with zero off the diagonal and with the claimed norms on it.
pub fn gram_schmidt_check(g: &GramMatrix, elements: &[OrthoBasisElement], prec: u32) -> Result<GramSchmidtReport> {
    if let Some(e) = elements.iter().find(|e| e.form_id != g.form_id) {
        return Err(Error::IndexMismatch(format!("element of {} checked against Gram matrix of {}", e.form_id, g.form_id)));
    }
    let tol = 2f64.powi(8 - prec as i32);
    let mut report = GramSchmidtReport {
        form_id: g.form_id.clone(),
        elements: elements.len(),
        max_off_diagonal: 0.0,
        max_norm_discrepancy: 0.0,
        exact: g.is_exact(),
        nonzero: Vec::new(),
    };
    for (i, a) in elements.iter().enumerate() {
        for (j, b) in elements.iter().enumerate().skip(i) {
            let v = element_product(g, a, b, prec)?;
            report.exact &= v.is_exact() && a.norm_sq.is_exact();
            let (value, bad) = if i == j {
                let d = &v - &a.norm_sq;
                let mag = d.abs_f64();
                report.max_norm_discrepancy = report.max_norm_discrepancy.max(mag);
                (mag, if d.is_exact() { !d.is_zero() } else { mag > tol * a.norm_sq.abs_f64().max(1.0) })
            } else {
                let mag = v.abs_f64();
                report.max_off_diagonal = report.max_off_diagonal.max(mag);
                (mag, if v.is_exact() { !v.is_zero() } else { mag > tol })
            };
            if bad {
                report.nonzero.push((i, j, value));
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NormMode {
    /// Coefficients on `f̃|V_ℓ`.
    Relative,
    /// Coefficients on `f|V_ℓ`, using `⟨f, f⟩`.
    Absolute,
}

#[derive(Clone, Debug)]
pub struct OrthonormalElement {
    pub form_id: String,
    pub exponents: Vec<(u64, u32)>,
    pub mode: NormMode,
    pub coeffs: BTreeMap<u64, Scalar>,
}

impl OrthonormalElement {
    pub fn to_json(&self, digits: usize) -> Value {
        let exps: Map<String, Value> = self.exponents.iter().map(|(p, j)| (p.to_string(), json!(j))).collect();
        let coeffs: Map<String, Value> = self.coeffs.iter().map(|(l, c)| (l.to_string(), c.to_json(digits))).collect();
        json!({ "form_id": self.form_id, "exponents": exps, "mode": self.mode, "coefficients": coeffs })
    }
}

/// Divides each element by `√⟨g, g⟩`; in absolute mode also by `√⟨f, f⟩`,
/// looked up by form id in `norms`.
pub fn orthonormalize(
    elements: &[OrthoBasisElement],
    mode: NormMode,
    norms: &BTreeMap<String, f64>,
    prec: u32,
) -> Result<Vec<OrthonormalElement>> {
    elements
        .iter()
        .map(|e| {
            if e.norm_sq.re_f64() <= 0.0 {
                return precondition(format!("element {:?} of {} has nonpositive norm", e.exponents, e.form_id));
            }
            let mut denom_sq = e.norm_sq.clone();
            if mode == NormMode::Absolute {
                let n = norms.get(&e.form_id).copied().ok_or_else(|| {
                    Error::Precondition(format!("absolute normalization needs ⟨f, f⟩ for {}", e.form_id))
                })?;
                if !(n > 0.0) {
                    return precondition(format!("⟨f, f⟩ for {} must be positive", e.form_id));
                }
                denom_sq = &denom_sq * &Scalar::Approx(rug::Complex::with_val(prec, (n, 0)));
            }
            // √(scale_sq / denom_sq) as one factor keeps rational cases exact
            let factor = match (&denom_sq, is_perfect_square(&e.scale_sq)) {
                (Scalar::Exact(d), _) => sqrt_scalar(&(&e.scale_sq / d), prec),
                (Scalar::Approx(d), _) => {
                    let s = rational_to_float(&e.scale_sq, prec);
                    let d = Float::with_val(prec, d.real());
                    Scalar::Approx(rug::Complex::with_val(prec, ((s / d).sqrt(), 0)))
                }
            };
            let coeffs = e.coeffs.iter().map(|(&l, c)| (l, c * &factor)).collect();
            Ok(OrthonormalElement { form_id: e.form_id.clone(), exponents: e.exponents.clone(), mode, coeffs })
        })
        .collect()
}
