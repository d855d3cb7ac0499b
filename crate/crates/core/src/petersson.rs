//! Numerical Petersson inner products on `Γ0(M)`:
//! `⟨f, g⟩ = (1/index) Σ_γ ∫_{F₁} (f|γ)(z) conj((g|γ)(z)) y^{k−2} dx dy`
//! over SL2(Z)-coset representatives `γ` of `Γ0(M)`, with `F₁` the standard
//! fundamental domain of SL2(Z).
//!
//! The error estimate is heuristic: node-halving delta, plus evaluation
//! certificates, plus an extrapolated tail above the cutoff. It is not an
//! enclosure.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use rug::float::Constant;
use rug::ops::Pow;
use rug::{Complex, Float};
use serde::Serialize;
use serde_json::{json, Value};

use crate::arith::{self, DirichletCharacter};
use crate::error::{precondition, Error, Result};
use crate::gram::gram_entry;
use crate::modgroup::{coset_reps, reduce_gamma0, slash_evaluate_modular, CosetSystem, UnimodularMatrix};
use crate::newforms::{EigenvalueSystem, NewformRecord};
use crate::qseries::{EvalCertificate, QSeries};
use crate::scalar::{complex_powi, format_float, Scalar, DEFAULT_PRECISION};
use crate::special::ln_upper_gamma;

/// Largest coset index accepted.
pub const MAX_INDEX: u64 = 200;

#[derive(Clone, Debug, Serialize)]
pub struct QuadratureConfig {
    /// Cutoff height on the width-1 cusp; a cusp of width `w` is cut at `w·Y`.
    pub y_cutoff: f64,
    /// Gauss–Legendre nodes per cell and direction.
    pub nodes: usize,
    /// Cells across `|x| <= 1/2`.
    pub x_cells: usize,
    /// Cell height in the strip `y >= 1`, in units of the cusp width.
    pub y_cell_height: f64,
    /// Pointwise evaluation target for the series.
    pub eval_eps: f64,
    pub prec: u32,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            y_cutoff: 6.0,
            nodes: 16,
            x_cells: 2,
            y_cell_height: 0.5,
            eval_eps: 1e-22,
            prec: DEFAULT_PRECISION,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.y_cutoff >= 2.0) {
            return precondition(format!("y cutoff {} must be at least 2", self.y_cutoff));
        }
        if self.nodes < 2 || self.x_cells == 0 || !(self.y_cell_height > 0.0) {
            return precondition("quadrature needs >= 2 nodes, >= 1 x-cell and a positive cell height");
        }
        if !(self.eval_eps > 0.0) {
            return precondition("evaluation tolerance must be positive");
        }
        if self.prec < 53 {
            return precondition("precision must be at least 53 bits");
        }
        Ok(())
    }

    pub fn with_nodes(&self, nodes: usize) -> Self {
        QuadratureConfig { nodes, ..self.clone() }
    }
}

#[derive(Clone, Debug)]
pub struct PeterssonResult {
    pub value: Complex,
    /// Sum of the three parts below.
    pub error: f64,
    pub refinement: f64,
    pub certificate: f64,
    pub tail: f64,
    pub index: u64,
}

impl PeterssonResult {
    pub fn re(&self) -> f64 {
        self.value.real().to_f64()
    }

    pub fn im(&self) -> f64 {
        self.value.imag().to_f64()
    }

    pub fn to_json(&self, digits: usize) -> Value {
        json!({
            "value": [format_float(self.value.real(), digits), format_float(self.value.imag(), digits)],
            "error": self.error,
            "index": self.index,
        })
    }
}

/// Something whose slash by an SL2(Z) element can be evaluated pointwise.
pub trait ModularFunction: Sync {
    fn weight(&self) -> u32;
    fn level(&self) -> u64;
    fn slash(&self, gamma: &UnimodularMatrix, z: &Complex, eps: f64, prec: u32) -> Result<EvalCertificate>;
}

impl ModularFunction for QSeries {
    fn weight(&self) -> u32 {
        self.weight().as_integral().unwrap_or(0)
    }

    fn level(&self) -> u64 {
        self.level()
    }

    fn slash(&self, gamma: &UnimodularMatrix, z: &Complex, eps: f64, prec: u32) -> Result<EvalCertificate> {
        slash_evaluate_modular(self, gamma, z, eps, prec)
    }
}

/// `f|V_ℓ` evaluated through `f` itself: `(f|V_ℓ)|γ (z) = (cz+d)^{−k} f(ℓ·γz)`,
/// with `ℓ·γz` reduced under the level of `f` rather than `ℓN`. Much higher
/// points, hence far fewer terms, than reducing under `Γ0(ℓN)`.
///
/// For a newform of prime level `p` with trivial character the Fricke
/// relation `f(−1/(pz)) = ε p^{k/2} z^k f(z)`, `ε = −a(p)/p^{k/2−1}`, reaches
/// the points near cusp 0 that no element of `Γ0(p)` lifts.
pub struct Translate<'a> {
    pub f: &'a QSeries,
    pub ell: u64,
    pub fricke_sign: Option<i32>,
}

impl<'a> Translate<'a> {
    pub fn plain(f: &'a QSeries, ell: u64) -> Self {
        Translate { f, ell, fricke_sign: None }
    }

    /// Uses the Fricke relation when the record allows it.
    pub fn of_record(rec: &'a NewformRecord, ell: u64) -> Result<Self> {
        let f = rec.qexp.as_ref().ok_or_else(|| Error::Precondition(format!("record {} has no q-expansion", rec.id)))?;
        Ok(Translate { f, ell, fricke_sign: fricke_sign(rec) })
    }
}

/// `ε` with `f|W_p = ε f`, for prime level, trivial character and even weight.
pub fn fricke_sign(rec: &NewformRecord) -> Option<i32> {
    let p = rec.level;
    if p < 2 || !arith::is_prime(p) || rec.weight % 2 == 1 {
        return None;
    }
    if !rec.character_at_level().ok()?.is_trivial() {
        return None;
    }
    let a = rec.qexp.as_ref()?.exact_coeff(p as usize)?.clone();
    let unit = arith::rational_pow(p, rec.weight as i64 / 2 - 1);
    let sign = -(a / unit);
    if sign == num_rational::BigRational::from_integer(1.into()) {
        Some(1)
    } else if sign == num_rational::BigRational::from_integer((-1).into()) {
        Some(-1)
    } else {
        None
    }
}

impl Translate<'_> {
    /// `f(w)`, through the Fricke relation when that lands higher.
    fn eval_base(&self, w: &Complex, eps: f64, prec: u32) -> Result<EvalCertificate> {
        let n = self.f.level();
        if let Some(sign) = self.fricke_sign {
            let (_, direct) = reduce_gamma0(w, n, prec)?;
            let z = Complex::with_val(prec, Complex::with_val(prec, w * n as u32).recip()) * -1i32;
            let (_, flipped) = reduce_gamma0(&z, n, prec)?;
            if flipped.imag() > direct.imag() {
                let k = ModularFunction::weight(self) as i32;
                let factor = complex_powi(&z, k) * Float::with_val(prec, n).pow(k as f64 / 2.0) * sign;
                let size = Complex::with_val(53, factor.abs_ref()).real().to_f64();
                let inner = self.f.evaluate_modular(&z, eps / size, prec)?;
                return Ok(EvalCertificate {
                    value: inner.value * factor,
                    tail_bound: inner.tail_bound * size,
                    terms_used: inner.terms_used,
                });
            }
        }
        self.f.evaluate_modular(w, eps, prec)
    }
}

impl ModularFunction for Translate<'_> {
    fn weight(&self) -> u32 {
        self.f.weight().as_integral().unwrap_or(0)
    }

    fn level(&self) -> u64 {
        self.f.level() * self.ell
    }

    fn slash(&self, gamma: &UnimodularMatrix, z: &Complex, eps: f64, prec: u32) -> Result<EvalCertificate> {
        let k = ModularFunction::weight(self) as i32;
        let j = gamma.automorphy(z);
        let scale = Complex::with_val(53, j.abs_ref()).real().to_f64().powi(k);
        let w = gamma.apply(z) * self.ell as u32;
        let inner = self.eval_base(&w, eps * scale, prec)?;
        Ok(EvalCertificate {
            value: inner.value / complex_powi(&j, k),
            tail_bound: inner.tail_bound / scale,
            terms_used: inner.terms_used,
        })
    }
}

/// `g|tr_N^M`, evaluated pointwise as a coset average.
pub struct Traced<'a> {
    pub g: &'a QSeries,
    pub chi: DirichletCharacter,
    pub cosets: CosetSystem,
}

impl<'a> Traced<'a> {
    pub fn new(g: &'a QSeries, n: u64, m: u64, chi: &DirichletCharacter) -> Result<Self> {
        Ok(Traced { g, chi: chi.induce(chi.modulus().max(1))?, cosets: coset_reps(n, m)? })
    }
}

impl ModularFunction for Traced<'_> {
    fn weight(&self) -> u32 {
        self.g.weight().as_integral().unwrap_or(0)
    }

    fn level(&self) -> u64 {
        self.cosets.n
    }

    fn slash(&self, gamma: &UnimodularMatrix, z: &Complex, eps: f64, prec: u32) -> Result<EvalCertificate> {
        let mut value = Complex::new(prec);
        let mut tail = 0.0;
        let mut terms = 0;
        for alpha in &self.cosets.reps {
            let c = slash_evaluate_modular(self.g, &alpha.mul(gamma), z, eps, prec)?;
            value += c.value * self.chi.value(alpha.d).conj().to_complex(prec);
            tail += c.tail_bound;
            terms = terms.max(c.terms_used);
        }
        let count = self.cosets.reps.len() as u32;
        Ok(EvalCertificate { value: value / count, tail_bound: tail / count as f64, terms_used: terms })
    }
}

type NodeTable = Arc<(Vec<Float>, Vec<Float>)>;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration at `prec` bits.
pub fn gauss_legendre(n: usize, prec: u32) -> NodeTable {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u32), NodeTable>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().expect("node cache poisoned").get(&(n, prec)) {
        return Arc::clone(t);
    }
    let work = prec + 32;
    let pi = Float::with_val(work, Constant::Pi);
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let guess = Float::with_val(work, &pi * (i as f64 + 0.75)) / (n as f64 + 0.5);
        let mut x = guess.cos();
        let mut dp = Float::new(work);
        for _ in 0..100 {
            // P_n(x) and P_n'(x) by the three-term recurrence
            let mut p0 = Float::with_val(work, 1);
            let mut p1 = x.clone();
            for j in 2..=n {
                let p2 = (Float::with_val(work, &x * &p1) * (2 * j - 1) as u32 - Float::with_val(work, &p0 * (j - 1) as u32))
                    / j as u32;
                p0 = p1;
                p1 = p2;
            }
            let (pn, pn1) = if n == 1 { (x.clone(), Float::with_val(work, 1)) } else { (p1, p0) };
            let denom = Float::with_val(work, &x * &x) - 1u32;
            dp = Float::with_val(work, &x * &pn - &pn1) * n as u32 / denom;
            let step = Float::with_val(work, &pn / &dp);
            x -= &step;
            if step.abs().to_f64() < 2f64.powi(-(work as i32) + 4) {
                break;
            }
        }
        let x2 = Float::with_val(work, &x * &x);
        let w = Float::with_val(work, 2) / ((Float::with_val(work, 1) - x2) * Float::with_val(work, &dp * &dp));
        nodes.push(Float::with_val(prec, &x));
        weights.push(Float::with_val(prec, &w));
    }
    let table = Arc::new((nodes, weights));
    cache.lock().expect("node cache poisoned").insert((n, prec), Arc::clone(&table));
    table
}

#[derive(Clone, Copy, Debug)]
enum Cell {
    /// `x0 <= x <= x1`, `√(1 − x²) <= y <= 1`.
    Arc { x0: f64, x1: f64 },
    Rect { x0: f64, x1: f64, y0: f64, y1: f64 },
}

fn cells(cfg: &QuadratureConfig, width: u64) -> (Vec<Cell>, f64) {
    let top = cfg.y_cutoff * width as f64;
    let xs: Vec<f64> = (0..=cfg.x_cells).map(|i| -0.5 + i as f64 / cfg.x_cells as f64).collect();
    let mut out = Vec::new();
    for w in xs.windows(2) {
        out.push(Cell::Arc { x0: w[0], x1: w[1] });
    }
    let h = cfg.y_cell_height * width as f64;
    let count = ((top - 1.0) / h).ceil().max(1.0) as usize;
    let h = (top - 1.0) / count as f64;
    for j in 0..count {
        let (y0, y1) = (1.0 + j as f64 * h, 1.0 + (j + 1) as f64 * h);
        for w in xs.windows(2) {
            out.push(Cell::Rect { x0: w[0], x1: w[1], y0, y1 });
        }
    }
    (out, top)
}

struct CosetPart {
    sums: Vec<Complex>,
    coarse: Vec<Complex>,
    certificate: Vec<f64>,
    tail: Vec<f64>,
}

fn to_interval(t: &Float, a: &Float, b: &Float, prec: u32) -> Float {
    // a + (b − a)(t + 1)/2
    let half = Float::with_val(prec, b - a) / 2u32;
    Float::with_val(prec, &half * t) + &half + a
}

/// Tensor Gauss–Legendre over the cells for one coset: all pair sums at once.
fn integrate_cells(
    funcs: &[&dyn ModularFunction],
    pairs: &[(usize, usize)],
    gamma: &UnimodularMatrix,
    cell_list: &[Cell],
    nodes: usize,
    cfg: &QuadratureConfig,
    k: u32,
) -> Result<(Vec<Complex>, Vec<f64>)> {
    let prec = cfg.prec;
    let table = gauss_legendre(nodes, prec);
    let (t, wt) = (&table.0, &table.1);
    let mut sums = vec![Complex::new(prec); pairs.len()];
    let mut cert = vec![0.0; pairs.len()];
    let one = Float::with_val(prec, 1);
    for cell in cell_list {
        let (x0, x1) = match *cell {
            Cell::Arc { x0, x1 } | Cell::Rect { x0, x1, .. } => (Float::with_val(prec, x0), Float::with_val(prec, x1)),
        };
        let hx = Float::with_val(prec, &x1 - &x0) / 2u32;
        for (ti, wi) in t.iter().zip(wt) {
            let x = to_interval(ti, &x0, &x1, prec);
            let (y0, y1) = match *cell {
                Cell::Arc { .. } => {
                    let a = (Float::with_val(prec, 1) - Float::with_val(prec, &x * &x)).sqrt();
                    (a, one.clone())
                }
                Cell::Rect { y0, y1, .. } => (Float::with_val(prec, y0), Float::with_val(prec, y1)),
            };
            let hy = Float::with_val(prec, &y1 - &y0) / 2u32;
            for (tj, wj) in t.iter().zip(wt) {
                let y = to_interval(tj, &y0, &y1, prec);
                let weight = Float::with_val(prec, &hx * wi) * &hy * wj * Float::with_val(prec, (&y).pow(k as i32 - 2));
                let z = Complex::with_val(prec, (&x, &y));
                let vals = funcs
                    .iter()
                    .map(|f| f.slash(gamma, &z, cfg.eval_eps, prec))
                    .collect::<Result<Vec<_>>>()?;
                let w64 = weight.to_f64();
                for (s, &(a, b)) in pairs.iter().enumerate() {
                    let (fa, fb) = (&vals[a], &vals[b]);
                    let prod = Complex::with_val(prec, &fa.value * Complex::with_val(prec, fb.value.conj_ref()));
                    sums[s] += prod * &weight;
                    let ma = Complex::with_val(53, fa.value.abs_ref()).real().to_f64();
                    let mb = Complex::with_val(53, fb.value.abs_ref()).real().to_f64();
                    cert[s] += w64 * (fa.tail_bound * mb + ma * fb.tail_bound + fa.tail_bound * fb.tail_bound);
                }
            }
        }
    }
    Ok((sums, cert))
}

/// Extrapolated `∫_{top}^∞` of `|F|` assuming decay like `e^{−4πy/w} y^{k−2}`
/// from the largest sampled `|F|` on the line `y = top`.
fn tail_estimate(
    funcs: &[&dyn ModularFunction],
    pairs: &[(usize, usize)],
    gamma: &UnimodularMatrix,
    top: f64,
    width: u64,
    cfg: &QuadratureConfig,
    k: u32,
) -> Result<Vec<f64>> {
    let prec = cfg.prec;
    let mut amp = vec![0.0f64; pairs.len()];
    for i in 0..=8 {
        let x = -0.5 + i as f64 / 8.0;
        let z = Complex::with_val(prec, (x, top));
        let vals = funcs.iter().map(|f| f.slash(gamma, &z, cfg.eval_eps, prec)).collect::<Result<Vec<_>>>()?;
        for (s, &(a, b)) in pairs.iter().enumerate() {
            let ma = Complex::with_val(53, vals[a].value.abs_ref()).real().to_f64() + vals[a].tail_bound;
            let mb = Complex::with_val(53, vals[b].value.abs_ref()).real().to_f64() + vals[b].tail_bound;
            amp[s] = amp[s].max(ma * mb * top.powi(k as i32 - 2));
        }
    }
    // A · Y^{2−k} e^{rY} Γ(k−1, rY) / r^{k−1} with r = 4π/w
    let r = 4.0 * std::f64::consts::PI / width as f64;
    let s = (k as f64 - 1.0).max(1e-3);
    let ln_factor = (2.0 - k as f64) * top.ln() + r * top + ln_upper_gamma(s, r * top) - s * r.ln();
    Ok(amp.into_iter().map(|a| a * ln_factor.exp()).collect())
}

/// Integrates `f_a conj(f_b)` for every requested pair at level `m`, evaluating
/// each function once per node.
pub fn petersson_products(
    funcs: &[&dyn ModularFunction],
    pairs: &[(usize, usize)],
    m: u64,
    cfg: &QuadratureConfig,
) -> Result<Vec<PeterssonResult>> {
    cfg.validate()?;
    let Some(first) = funcs.first() else {
        return precondition("no functions to integrate");
    };
    let k = first.weight();
    if k == 0 || funcs.iter().any(|f| f.weight() != k) {
        return precondition("Petersson products need a common integral weight");
    }
    if let Some(f) = funcs.iter().find(|f| m % f.level() != 0) {
        return precondition(format!("level {} does not divide M = {m}", f.level()));
    }
    if pairs.iter().any(|&(a, b)| a >= funcs.len() || b >= funcs.len()) {
        return precondition("pair index out of range");
    }
    let index = arith::index_gamma0(1, m)?;
    if index > MAX_INDEX {
        return precondition(format!("index {index} of Γ0({m}) exceeds the guard rail {MAX_INDEX}"));
    }
    let sys = coset_reps(1, m)?;
    // fail fast on the lowest points before spending time on the interior
    for gamma in &sys.reps {
        let (_, top) = cells(cfg, sys.width(gamma));
        for (x, y) in [(-0.5, top), (0.0, top), (0.5, top), (-0.5, 0.8660254), (0.0, 1.0)] {
            let z = Complex::with_val(cfg.prec, (x, y));
            for f in funcs {
                f.slash(gamma, &z, cfg.eval_eps, cfg.prec)?;
            }
        }
    }
    let coarse_nodes = (cfg.nodes / 2).max(1);
    let parts: Vec<CosetPart> = sys
        .reps
        .par_iter()
        .map(|gamma| {
            let width = sys.width(gamma);
            let (cell_list, top) = cells(cfg, width);
            let (sums, certificate) = integrate_cells(funcs, pairs, gamma, &cell_list, cfg.nodes, cfg, k)?;
            let (coarse, _) = integrate_cells(funcs, pairs, gamma, &cell_list, coarse_nodes, cfg, k)?;
            let tail = tail_estimate(funcs, pairs, gamma, top, width, cfg, k)?;
            Ok(CosetPart { sums, coarse, certificate, tail })
        })
        .collect::<Result<Vec<_>>>()?;
    let prec = cfg.prec;
    let results = (0..pairs.len())
        .map(|s| {
            let mut value = Complex::new(prec);
            let mut coarse = Complex::new(prec);
            let (mut cert, mut tail) = (0.0, 0.0);
            for part in &parts {
                value += &part.sums[s];
                coarse += &part.coarse[s];
                cert += part.certificate[s];
                tail += part.tail[s];
            }
            let value = value / index as u32;
            let coarse = coarse / index as u32;
            let refinement = Complex::with_val(53, &value - &coarse).abs().real().to_f64();
            let (certificate, tail) = (cert / index as f64, tail / index as f64);
            PeterssonResult { value, error: refinement + certificate + tail, refinement, certificate, tail, index }
        })
        .collect();
    Ok(results)
}

/// `⟨f, g⟩` at level `m`.
pub fn petersson_product(f: &QSeries, g: &QSeries, m: u64, cfg: &QuadratureConfig) -> Result<PeterssonResult> {
    let funcs: [&dyn ModularFunction; 2] = [f, g];
    Ok(petersson_products(&funcs, &[(0, 1)], m, cfg)?.remove(0))
}

/// `⟨f, f⟩` of a record with a q-expansion, at its own level.
pub fn petersson_norm(rec: &NewformRecord, cfg: &QuadratureConfig) -> Result<PeterssonResult> {
    let f = Translate::of_record(rec, 1)?;
    let funcs: [&dyn ModularFunction; 1] = [&f];
    Ok(petersson_products(&funcs, &[(0, 0)], rec.level, cfg)?.remove(0))
}

#[derive(Clone, Debug, Serialize)]
pub struct GramNumericRow {
    pub m: u64,
    pub n: u64,
    pub numeric: (f64, f64),
    pub predicted: (f64, f64),
    pub relative_deviation: f64,
    /// Error estimate carried into the ratio.
    pub error_estimate: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GramNumericReport {
    pub form_id: String,
    pub level: u64,
    pub norm: f64,
    pub norm_error: f64,
    pub tolerance: f64,
    pub rows: Vec<GramNumericRow>,
}

impl GramNumericReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }
}

/// `⟨f|V_m, f|V_n⟩ / ⟨f, f⟩` by quadrature at level `M`, against `gram_entry`.
pub fn verify_gram_numeric(
    rec: &Arc<NewformRecord>,
    m: u64,
    pairs: &[(u64, u64)],
    tolerance: f64,
    cfg: &QuadratureConfig,
) -> Result<GramNumericReport> {
    let mut ells: Vec<u64> = vec![1];
    for &(a, b) in pairs {
        for l in [a, b] {
            if m % (rec.level * l) != 0 {
                return precondition(format!("translate V_{l} of level {} does not fit M = {m}", rec.level * l));
            }
            if !ells.contains(&l) {
                ells.push(l);
            }
        }
    }
    let translates: Vec<Translate> = ells.iter().map(|&ell| Translate::of_record(rec, ell)).collect::<Result<_>>()?;
    let funcs: Vec<&dyn ModularFunction> = translates.iter().map(|t| t as &dyn ModularFunction).collect();
    let pos = |l: u64| ells.iter().position(|&x| x == l).expect("collected");
    let mut idx_pairs = vec![(0, 0)];
    idx_pairs.extend(pairs.iter().map(|&(a, b)| (pos(a), pos(b))));
    let results = petersson_products(&funcs, &idx_pairs, m, cfg)?;
    let norm = &results[0];
    let sys = EigenvalueSystem::new(Arc::clone(rec), cfg.prec)?;
    let rows = pairs
        .iter()
        .zip(&results[1..])
        .map(|(&(a, b), r)| {
            let ratio = Complex::with_val(cfg.prec, &r.value / &norm.value);
            let predicted = gram_entry(&sys, a, b)?.to_complex(cfg.prec);
            let dev = Complex::with_val(cfg.prec, &ratio - &predicted).abs().real().to_f64();
            let scale = Complex::with_val(53, predicted.abs_ref()).real().to_f64();
            let rel = dev / scale;
            let err = (r.error + ratio.clone().abs().real().to_f64() * norm.error) / norm.re().abs();
            Ok(GramNumericRow {
                m: a,
                n: b,
                numeric: (ratio.real().to_f64(), ratio.imag().to_f64()),
                predicted: (predicted.real().to_f64(), predicted.imag().to_f64()),
                relative_deviation: rel,
                error_estimate: err,
                passed: rel < tolerance,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GramNumericReport {
        form_id: rec.id.clone(),
        level: m,
        norm: norm.re(),
        norm_error: norm.error,
        tolerance,
        rows,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceSkpReport {
    pub n: u64,
    pub m: u64,
    pub lhs: (f64, f64),
    pub rhs: (f64, f64),
    pub deviation: f64,
    pub relative_deviation: f64,
    pub error_estimate: f64,
}

/// `⟨f, g⟩` at level `M` against `⟨f, g|tr_N^M⟩` at level `N`, the trace taken
/// pointwise inside the level-N integrand.
pub fn verify_trace_skp(
    f: &QSeries,
    g: &QSeries,
    n: u64,
    m: u64,
    chi: &DirichletCharacter,
    cfg: &QuadratureConfig,
) -> Result<TraceSkpReport> {
    if n == 0 || m % n != 0 {
        return precondition(format!("N = {n} does not divide M = {m}"));
    }
    let lhs = petersson_product(f, g, m, cfg)?;
    let traced = Traced::new(g, n, m, chi)?;
    let funcs: [&dyn ModularFunction; 2] = [f, &traced];
    let rhs = petersson_products(&funcs, &[(0, 1)], n, cfg)?.remove(0);
    let deviation = Complex::with_val(cfg.prec, &lhs.value - &rhs.value).abs().real().to_f64();
    let scale = Complex::with_val(53, lhs.value.abs_ref()).real().to_f64().max(f64::MIN_POSITIVE);
    Ok(TraceSkpReport {
        n,
        m,
        lhs: (lhs.re(), lhs.im()),
        rhs: (rhs.re(), rhs.im()),
        deviation,
        relative_deviation: deviation / scale,
        error_estimate: lhs.error + rhs.error,
    })
}

/// `⟨f, f⟩` as a [`Scalar`], for callers that mix it with exact data.
pub fn norm_scalar(r: &PeterssonResult) -> Scalar {
    Scalar::Approx(r.value.clone())
}
