use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use cuspforms::arith::DirichletCharacter;
use cuspforms::bounds::{check_dimension, empirical_check, f_bound, hi_report};
use cuspforms::gram::gram_matrix;
use cuspforms::halfint::{predicted_product_u, predicted_product_v, prediction_json};
use cuspforms::modgroup::{test_points, verify_trace_hecke};
use cuspforms::newforms::{dataset, export_json, ingest_path, EigenvalueSystem, NewformRecord, Provenance, EMBEDDED_DATASETS};
use cuspforms::orthobasis::{assemble_full_basis, gram_schmidt_check, orthonormalize, NormMode};
use cuspforms::petersson::{
    petersson_norm, petersson_products, verify_gram_numeric, verify_trace_skp, ModularFunction, QuadratureConfig,
    Translate,
};
use cuspforms::scalar::Scalar;

#[derive(Parser)]
#[command(name = "cuspforms", version, about = "Orthogonal bases of cusp-form spaces from newform eigenvalue data")]
struct Cli {
    /// Working precision in bits.
    #[arg(long, env = "CUSPFORMS_PRECISION", default_value_t = 128, global = true)]
    prec: u32,
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Extra newform datasets (JSON); the embedded forms are always available.
    #[arg(long = "data", global = true)]
    data: Vec<PathBuf>,
    /// Significant digits for non-exact values.
    #[arg(long, default_value_t = 20, global = true)]
    digits: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Pretty,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Relative,
    Absolute,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    TraceHecke,
    TraceSkp,
    GramNumeric,
    BoundsEmpirical,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum Op {
    V,
    U,
}

#[derive(Subcommand)]
enum Command {
    /// Validate newform JSON files and print the normalized records.
    Ingest {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Orthonormal basis of S_k(Γ0(M)) with its Gram matrices and check report.
    Basis {
        #[arg(long)]
        level: u64,
        #[arg(long)]
        weight: u32,
        #[arg(long, value_enum, default_value_t = Mode::Relative)]
        mode: Mode,
        /// Also write basis.json, gram_<form>.json and check.json here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Closed-form Gram matrix of the translates of one form at level M.
    Gram {
        #[arg(long)]
        form: String,
        #[arg(long)]
        level: u64,
    },
    /// Numerical Petersson product ⟨f, f⟩ or ⟨f, f|V_m⟩ at level M.
    Petersson {
        #[arg(long)]
        form: String,
        #[arg(long)]
        level: u64,
        /// Second argument as `V=m`.
        #[arg(long = "with")]
        with: Option<String>,
        #[arg(long = "Y", default_value_t = 6.0)]
        y: f64,
        #[arg(long, default_value_t = 16)]
        nodes: usize,
    },
    /// Fourier-coefficient bound for an orthonormal element, or for F given ⟨F,F⟩ and dim.
    Bound {
        #[arg(long)]
        level: u64,
        #[arg(long)]
        weight: u32,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        coprime: bool,
        #[arg(long, requires = "dim")]
        norm: Option<f64>,
        #[arg(long, requires = "norm")]
        dim: Option<u64>,
    },
    /// Half-integral weight calculators.
    Halfint {
        #[command(subcommand)]
        command: HalfintCommand,
    },
    /// Run verification suites on the embedded forms.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        /// Seed for the test points.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        points: usize,
    },
}

#[derive(Subcommand)]
enum HalfintCommand {
    /// Predicted ⟨f, f|V_{p²}⟩/⟨f,f⟩ or ⟨f, f|U(p²)⟩/⟨f,f⟩.
    Predict {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        kappa: Option<u32>,
        /// Rational, e.g. `3` or `-5/2`.
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        #[arg(long, value_enum, default_value_t = Op::V)]
        op: Op,
    },
}

struct Outcome {
    value: Value,
    csv: Option<String>,
    passed: bool,
}

impl Outcome {
    fn ok(value: Value) -> Self {
        Outcome { value, csv: None, passed: true }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            print!("{}", render(&out, cli.format));
            if out.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome> {
    if cli.prec < 53 {
        bail!("precision must be at least 53 bits");
    }
    match &cli.command {
        Command::Ingest { paths } => cmd_ingest(cli, paths),
        Command::Basis { level, weight, mode, out_dir } => cmd_basis(cli, *level, *weight, *mode, out_dir.as_deref()),
        Command::Gram { form, level } => cmd_gram(cli, form, *level),
        Command::Petersson { form, level, with, y, nodes } => cmd_petersson(cli, form, *level, with.as_deref(), *y, *nodes),
        Command::Bound { level, weight, n, coprime, norm, dim } => cmd_bound(cli, *level, *weight, *n, *coprime, *norm, *dim),
        Command::Halfint { command: HalfintCommand::Predict { p, kappa, lambda, op } } => {
            cmd_halfint(cli, *p, *kappa, lambda, *op)
        }
        Command::Verify { suite, seed, points } => cmd_verify(cli, *suite, *seed, *points),
    }
}

/// Embedded forms followed by everything under `--data`.
fn records(cli: &Cli) -> Result<Vec<Arc<NewformRecord>>> {
    let mut out = Vec::new();
    for name in EMBEDDED_DATASETS {
        out.push(dataset(name)?);
    }
    for path in &cli.data {
        let recs = ingest_path(path, cli.prec).with_context(|| format!("reading {}", path.display()))?;
        out.extend(recs.into_iter().map(Arc::new));
    }
    Ok(out)
}

fn find_form(cli: &Cli, id: &str) -> Result<Arc<NewformRecord>> {
    records(cli)?
        .into_iter()
        .find(|r| r.id == id)
        .ok_or_else(|| anyhow!("no form with id {id:?} (embedded: {})", EMBEDDED_DATASETS.join(", ")))
}

fn quadrature(cli: &Cli) -> QuadratureConfig {
    QuadratureConfig { prec: cli.prec, ..QuadratureConfig::default() }
}

fn with_numeric_norm(rec: &Arc<NewformRecord>, cfg: &QuadratureConfig) -> Result<Arc<NewformRecord>> {
    if rec.petersson_norm.is_some() {
        return Ok(Arc::clone(rec));
    }
    let norm = petersson_norm(rec, cfg)?.re();
    Ok(Arc::new((**rec).clone().with_norm(norm, Provenance::Numeric)))
}

fn cmd_ingest(cli: &Cli, paths: &[PathBuf]) -> Result<Outcome> {
    let mut all = Vec::new();
    for path in paths {
        all.extend(ingest_path(path, cli.prec).with_context(|| format!("reading {}", path.display()))?);
    }
    Ok(Outcome::ok(json!({ "records": export_json(&all, cli.digits), "count": all.len() })))
}

fn cmd_basis(cli: &Cli, level: u64, weight: u32, mode: Mode, out_dir: Option<&Path>) -> Result<Outcome> {
    let chi = DirichletCharacter::trivial(level);
    let mut recs: Vec<Arc<NewformRecord>> = records(cli)?
        .into_iter()
        .filter(|r| r.weight == weight && level % r.level == 0)
        .collect();
    if recs.is_empty() {
        bail!("no newform data covers S_{weight}(Γ0({level}))");
    }
    let mode = match mode {
        Mode::Relative => NormMode::Relative,
        Mode::Absolute => {
            let cfg = quadrature(cli);
            recs = recs.iter().map(|r| with_numeric_norm(r, &cfg)).collect::<Result<_>>()?;
            NormMode::Absolute
        }
    };
    let elements = assemble_full_basis(&recs, level, weight, &chi, cli.prec)?;
    let mut grams = Vec::new();
    let mut checks = Vec::new();
    let mut passed = true;
    for rec in &recs {
        let sys = EigenvalueSystem::new(Arc::clone(rec), cli.prec)?;
        let g = gram_matrix(&sys, level)?;
        let mine: Vec<_> = elements.iter().filter(|e| e.form_id == rec.id).cloned().collect();
        let report = gram_schmidt_check(&g, &mine, cli.prec)?;
        passed &= report.all_zero();
        grams.push(g.to_json(cli.digits));
        checks.push(serde_json::to_value(&report)?);
    }
    let norms: BTreeMap<String, f64> =
        recs.iter().filter_map(|r| r.petersson_norm.as_ref().map(|n| (r.id.clone(), n.value))).collect();
    let ortho = orthonormalize(&elements, mode, &norms, cli.prec)?;
    let basis = json!({
        "level": level,
        "weight": weight,
        "dimension": ortho.len(),
        "elements": ortho.iter().map(|e| e.to_json(cli.digits)).collect::<Vec<_>>(),
    });
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        write_json(&dir.join("basis.json"), &basis)?;
        for (rec, g) in recs.iter().zip(&grams) {
            write_json(&dir.join(format!("gram_{}.json", rec.id)), g)?;
        }
        write_json(&dir.join("check.json"), &json!({ "passed": passed, "reports": checks }))?;
    }
    Ok(Outcome { value: json!({ "basis": basis, "gram": grams, "check": checks, "passed": passed }), csv: None, passed })
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(v)? + "\n").with_context(|| format!("writing {}", path.display()))
}

fn cmd_gram(cli: &Cli, form: &str, level: u64) -> Result<Outcome> {
    let sys = EigenvalueSystem::new(find_form(cli, form)?, cli.prec)?;
    let g = gram_matrix(&sys, level)?;
    let positive = g.is_positive_definite_exact();
    let mut value = g.to_json(cli.digits);
    value["positive_definite"] = json!(positive);
    Ok(Outcome { value, csv: Some(g.to_csv(cli.digits)), passed: true })
}

fn parse_with(s: &str) -> Result<u64> {
    let m = s.strip_prefix("V=").ok_or_else(|| anyhow!("--with expects V=<m>, got {s:?}"))?;
    let m: u64 = m.parse().with_context(|| format!("bad translate index in {s:?}"))?;
    if m == 0 {
        bail!("translate index must be positive");
    }
    Ok(m)
}

fn cmd_petersson(cli: &Cli, form: &str, level: u64, with: Option<&str>, y: f64, nodes: usize) -> Result<Outcome> {
    let rec = find_form(cli, form)?;
    let cfg = QuadratureConfig { y_cutoff: y, nodes, ..quadrature(cli) };
    let ell = with.map(parse_with).transpose()?;
    let base = Translate::of_record(&rec, 1)?;
    let other = Translate::of_record(&rec, ell.unwrap_or(1))?;
    let funcs: [&dyn ModularFunction; 2] = [&base, &other];
    let r = petersson_products(&funcs, &[(0, 1)], level, &cfg)?.remove(0);
    let mut value = r.to_json(cli.digits);
    value["form"] = json!(form);
    value["level"] = json!(level);
    if let Some(m) = ell {
        value["with"] = json!(format!("V={m}"));
    }
    Ok(Outcome::ok(value))
}

fn cmd_bound(
    cli: &Cli,
    level: u64,
    weight: u32,
    n: u64,
    coprime: bool,
    norm: Option<f64>,
    dim: Option<u64>,
) -> Result<Outcome> {
    let report = match (norm, dim) {
        (Some(norm), Some(dim)) => {
            let recs = records(cli)?;
            let refs: Vec<&NewformRecord> = recs.iter().map(|r| r.as_ref()).collect();
            check_dimension(&refs, level, weight, &DirichletCharacter::trivial(level), dim)?;
            f_bound(n, weight, level, norm, dim, coprime)?
        }
        _ => hi_report(n, weight, level, coprime)?,
    };
    Ok(Outcome::ok(report.to_json()))
}

fn cmd_halfint(cli: &Cli, p: u64, kappa: Option<u32>, lambda: &str, op: Op) -> Result<Outcome> {
    let lambda = Scalar::from_json(&json!(lambda), cli.prec, "--lambda")?;
    let value = match op {
        Op::V => {
            let kappa = kappa.ok_or_else(|| anyhow!("--op V needs --kappa"))?;
            prediction_json("V", p, Some(kappa), &lambda, &predicted_product_v(p, kappa, &lambda)?, cli.digits)
        }
        Op::U => prediction_json("U", p, kappa, &lambda, &predicted_product_u(p, &lambda)?, cli.digits),
    };
    Ok(Outcome::ok(value))
}

fn cmd_verify(cli: &Cli, suite: Suite, seed: u64, points: usize) -> Result<Outcome> {
    let run = |s: Suite| suite == Suite::All || suite == s;
    let mut results = Map::new();
    let mut passed = true;
    if run(Suite::TraceHecke) {
        let pts = test_points(seed, points);
        let mut rows = Vec::new();
        let mut ok = true;
        for (name, d) in [("delta", 2u64), ("delta", 3), ("delta", 4), ("11a", 2), ("11a", 11)] {
            for r in verify_trace_hecke(&dataset(name)?, d, &pts, 1e-8, cli.prec)? {
                ok &= r.passed;
                rows.push(serde_json::to_value(&r)?);
            }
        }
        passed &= ok;
        results.insert("trace-hecke".into(), json!({ "passed": ok, "rows": rows }));
    }
    if run(Suite::TraceSkp) {
        let cfg = quadrature(cli);
        let delta = dataset("delta")?;
        let f = delta.qexp.as_ref().ok_or_else(|| anyhow!("delta has no q-expansion"))?;
        let mut rows = Vec::new();
        let mut ok = true;
        for m in [2u64, 3] {
            let g = f.apply_v(m)?;
            let rep = verify_trace_skp(f, &g, 1, m, &DirichletCharacter::trivial(1), &cfg)?;
            let good = rep.relative_deviation < 1e-3;
            ok &= good;
            let mut v = serde_json::to_value(&rep)?;
            v["form"] = json!("delta");
            v["g"] = json!(format!("V={m}"));
            v["passed"] = json!(good);
            rows.push(v);
        }
        passed &= ok;
        results.insert("trace-skp".into(), json!({ "passed": ok, "tolerance": 1e-3, "rows": rows }));
    }
    if run(Suite::GramNumeric) {
        let cfg = quadrature(cli);
        let delta = dataset("delta")?;
        let runs = [
            (Arc::clone(&delta), 2u64, vec![(1u64, 2u64), (2, 2)]),
            (Arc::clone(&delta), 3, vec![(1, 3)]),
            (Arc::clone(&delta), 6, vec![(1, 2), (2, 2), (1, 3), (2, 3)]),
            (dataset("11a")?, 22, vec![(1, 2)]),
        ];
        let mut reports = Vec::new();
        let mut ok = true;
        for (rec, m, pairs) in runs {
            let rep = verify_gram_numeric(&rec, m, &pairs, 1e-3, &cfg)?;
            ok &= rep.passed();
            reports.push(serde_json::to_value(&rep)?);
        }
        passed &= ok;
        results.insert("gram-numeric".into(), json!({ "passed": ok, "reports": reports }));
    }
    if run(Suite::BoundsEmpirical) {
        let cfg = quadrature(cli);
        let delta = with_numeric_norm(&dataset("delta")?, &cfg)?;
        let e11 = with_numeric_norm(&dataset("11a")?, &cfg)?;
        let mut reports = Vec::new();
        let mut ok = true;
        for (rec, m, k) in [(&delta, 1u64, 12u32), (&delta, 2, 12), (&e11, 11, 2)] {
            let rep = empirical_check(&[Arc::clone(rec)], m, k, &DirichletCharacter::trivial(m), 1000, cli.prec)?;
            ok &= rep.passed();
            let mut v = rep.to_json();
            v["form"] = json!(rec.id);
            reports.push(v);
        }
        passed &= ok;
        results.insert("bounds-empirical".into(), json!({ "passed": ok, "reports": reports }));
    }
    Ok(Outcome { value: json!({ "passed": passed, "suites": results }), csv: None, passed })
}

fn render(out: &Outcome, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(&out.value).expect("serializable") + "\n",
        Format::Csv => out.csv.clone().unwrap_or_else(|| {
            let mut rows = Vec::new();
            flatten("", &out.value, &mut rows);
            let mut s = String::from("key,value\n");
            for (k, v) in rows {
                s.push_str(&format!("{k},{}\n", csv_field(&v)));
            }
            s
        }),
        Format::Pretty => {
            let mut s = String::new();
            pretty(&out.value, 0, &mut s);
            s
        }
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => m.iter().for_each(|(k, v)| flatten(&join(k), v, out)),
        Value::Array(a) => a.iter().enumerate().for_each(|(i, v)| flatten(&join(&i.to_string()), v, out)),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn pretty(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(m) => {
            for (k, v) in m {
                if v.is_object() || (v.is_array() && !is_flat(v)) {
                    out.push_str(&format!("{pad}{k}:\n"));
                    pretty(v, indent + 1, out);
                } else {
                    out.push_str(&format!("{pad}{k}: {}\n", scalar_text(v)));
                }
            }
        }
        Value::Array(a) => {
            for (i, v) in a.iter().enumerate() {
                if is_flat(v) {
                    out.push_str(&format!("{pad}- {}\n", scalar_text(v)));
                } else {
                    out.push_str(&format!("{pad}[{i}]\n"));
                    pretty(v, indent + 1, out);
                }
            }
        }
        other => out.push_str(&format!("{pad}{}\n", scalar_text(other))),
    }
}

fn is_flat(v: &Value) -> bool {
    match v {
        Value::Array(a) => a.iter().all(|x| !x.is_object() && !x.is_array()),
        Value::Object(_) => false,
        _ => true,
    }
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(a) => format!("[{}]", a.iter().map(scalar_text).collect::<Vec<_>>().join(", ")),
        other => other.to_string(),
    }
}
