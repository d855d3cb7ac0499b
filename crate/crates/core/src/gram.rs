//! Closed-form Petersson Gram matrices of the translates `f̃|V_ℓ` of a
//! normalized primitive form `f̃ = f/√⟨f,f⟩`.

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::arith;
use crate::error::{precondition, Result};
use crate::newforms::EigenvalueSystem;
use crate::scalar::Scalar;

/// `⟨f̃|V_m, f̃|V_n⟩ = λ(1,n/d)·conj(λ(1,m/d)) / ((mn/d)^k ∏_{p | mn/d², p ∤ N} (1 + 1/p))`
/// with `d = gcd(m, n)`.
pub fn gram_entry(sys: &EigenvalueSystem, m: u64, n: u64) -> Result<Scalar> {
    if m == 0 || n == 0 {
        return precondition("gram_entry needs m, n >= 1");
    }
    let d = m.gcd(&n);
    let (a, b) = (n / d, m / d);
    let num = &sys.lambda(a)? * &sys.lambda(b)?.conj();
    let k = sys.weight() as i64;
    let lcm = a * b * d;
    let den = arith::rational_pow(lcm, k) * arith::local_factor_product(a * b, sys.level());
    Ok(&num / &Scalar::Exact(den))
}

#[derive(Clone, Debug)]
pub struct GramMatrix {
    pub form_id: String,
    pub level: u64,
    /// Divisors `ℓ` of `M/N` in ascending order.
    pub index: Vec<u64>,
    pub entries: Vec<Vec<Scalar>>,
}

pub fn gram_matrix(sys: &EigenvalueSystem, m: u64) -> Result<GramMatrix> {
    let n = sys.level();
    if m == 0 || m % n != 0 {
        return precondition(format!("level {n} does not divide M = {m}"));
    }
    let index = arith::divisors(m / n);
    let entries = index
        .iter()
        .map(|&a| index.iter().map(|&b| gram_entry(sys, a, b)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(GramMatrix { form_id: sys.record().id.clone(), level: m, index, entries })
}

impl GramMatrix {
    pub fn dim(&self) -> usize {
        self.index.len()
    }

    pub fn position(&self, ell: u64) -> Option<usize> {
        self.index.iter().position(|&l| l == ell)
    }

    pub fn get(&self, m: u64, n: u64) -> Option<&Scalar> {
        Some(&self.entries[self.position(m)?][self.position(n)?])
    }

    /// Exact Hermitian symmetry (within `ulps` for complex entries).
    pub fn is_hermitian(&self, ulps: u32) -> bool {
        (0..self.dim()).all(|i| (0..self.dim()).all(|j| self.entries[i][j].close_to(&self.entries[j][i].conj(), ulps)))
    }

    pub fn is_exact(&self) -> bool {
        self.entries.iter().flatten().all(Scalar::is_exact)
    }

    /// Leading principal minors, exactly, for rational matrices.
    pub fn leading_minors(&self) -> Option<Vec<BigRational>> {
        let mut a: Vec<Vec<BigRational>> = self
            .entries
            .iter()
            .map(|row| row.iter().map(|s| s.as_exact().cloned()).collect::<Option<Vec<_>>>())
            .collect::<Option<Vec<_>>>()?;
        // Without pivoting, the running product of pivots is the leading minor;
        // a zero pivot means that minor vanishes.
        let n = a.len();
        let mut minors = Vec::with_capacity(n);
        let mut det = BigRational::from_integer(1.into());
        for i in 0..n {
            let pivot = a[i][i].clone();
            det *= &pivot;
            minors.push(det.clone());
            if pivot.is_zero() {
                minors.extend(std::iter::repeat(BigRational::zero()).take(n - i - 1));
                break;
            }
            for r in i + 1..n {
                let factor = &a[r][i] / &pivot;
                if factor.is_zero() {
                    continue;
                }
                for c in i..n {
                    let sub = &factor * &a[i][c];
                    a[r][c] -= sub;
                }
            }
        }
        Some(minors)
    }

    pub fn is_positive_definite_exact(&self) -> Option<bool> {
        self.leading_minors().map(|m| m.iter().all(|x| x.is_positive()))
    }

    /// `{form_id, level, index, entries}`; exact values as rational strings.
    pub fn to_json(&self, digits: usize) -> Value {
        let entries: Vec<Vec<Value>> =
            self.entries.iter().map(|row| row.iter().map(|s| s.to_json(digits)).collect()).collect();
        json!({ "form_id": self.form_id, "level": self.level, "index": self.index, "entries": entries })
    }

    /// Decimal rendering; complex entries print as `re+imi`.
    pub fn to_csv(&self, digits: usize) -> String {
        let mut out = String::from("ell");
        for l in &self.index {
            out.push_str(&format!(",{l}"));
        }
        out.push('\n');
        let prec = ((digits as f64) * 3.33).ceil() as u32 + 8;
        for (l, row) in self.index.iter().zip(&self.entries) {
            out.push_str(&l.to_string());
            for s in row {
                let c = s.to_complex(prec);
                let re = crate::scalar::format_float(c.real(), digits);
                if c.imag().is_zero() {
                    out.push_str(&format!(",{re}"));
                } else {
                    let im = crate::scalar::format_float(c.imag(), digits);
                    out.push_str(&format!(",{re}{}{im}i", if im.starts_with('-') { "" } else { "+" }));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// `gram_entry(m1,m1')·gram_entry(m2,m2') = gram_entry(m1 m2, m1' m2')` for
/// `gcd(m1 m1', m2 m2') = 1`; exact in the rational domain, 4 ulps otherwise.
pub fn product_decomposition_check(sys: &EigenvalueSystem, m1: u64, m1p: u64, m2: u64, m2p: u64) -> Result<bool> {
    if (m1 * m1p).gcd(&(m2 * m2p)) != 1 {
        return precondition(format!("gcd({}, {}) ≠ 1", m1 * m1p, m2 * m2p));
    }
    let lhs = &gram_entry(sys, m1, m1p)? * &gram_entry(sys, m2, m2p)?;
    let rhs = gram_entry(sys, m1 * m2, m1p * m2p)?;
    Ok(lhs.close_to(&rhs, 4))
}

/// Seeded tuples `(m1, m1', m2, m2')` in `1..=max` with `gcd(m1 m1', m2 m2') = 1`.
pub fn admissible_tuples(seed: u64, count: usize, max: u64) -> Vec<(u64, u64, u64, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let t: (u64, u64, u64, u64) =
            (rng.gen_range(1..=max), rng.gen_range(1..=max), rng.gen_range(1..=max), rng.gen_range(1..=max));
        if (t.0 * t.1).gcd(&(t.2 * t.3)) == 1 {
            out.push(t);
        }
    }
    out
}
