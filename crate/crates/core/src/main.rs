use std::io::Read as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use gauss_eof::ensemble::{make_ensemble, verify_realization};
use gauss_eof::eof::{eof_with, EofReport};
use gauss_eof::epr::{lambda_theta_moments, EntanglementValue};
use gauss_eof::fock::probe::{conjecture_probe, ProbeOptions};
use gauss_eof::io::{format_number, mat_rows, to_json, InputDocument, InputFormat};
use gauss_eof::{reduce_to_standard_form, CovMat4, Error, Tolerances};

const EXIT_USAGE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_COUNTEREXAMPLE: u8 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "gauss-eof", version, about = "Entanglement of formation of two-mode Gaussian states")]
struct Cli {
    #[arg(long, value_enum, default_value = "json", global = true)]
    format: Format,
    /// Override a numerical threshold, e.g. `--tolerance physical=1e-8`.
    #[arg(long = "tolerance", value_name = "KEY=VALUE", global = true)]
    tolerances: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check symmetry, the uncertainty principle and PPT separability.
    Validate {
        #[arg(long)]
        input: PathBuf,
    },
    /// Local-symplectic standard form (n, m, kx, kp).
    StandardForm {
        #[arg(long)]
        input: PathBuf,
    },
    /// Canonical parameters (r0, theta0, u, v, alpha0, beta0).
    Canonical {
        #[arg(long)]
        input: PathBuf,
    },
    /// Entanglement of formation in ebits.
    Eof {
        #[arg(long)]
        input: PathBuf,
    },
    /// EPR variance Lambda_theta over a grid of angles.
    EprCurve {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_parser = parse_angle, conflicts_with = "theta_range")]
        theta: Option<f64>,
        /// `A:B:STEPS`, endpoints included; angles accept `pi/4` style.
        #[arg(long)]
        theta_range: Option<String>,
    },
    /// Search Fock space for a state beating the squeezed vacuum.
    Probe {
        #[arg(long, value_parser = parse_angle)]
        theta: f64,
        #[arg(long)]
        ebits: f64,
        #[arg(long, default_value_t = 25)]
        dim: usize,
        #[arg(long, default_value_t = 64)]
        restarts: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 35)]
        reverify_dim: usize,
        #[arg(long, default_value_t = 200)]
        max_iters: usize,
    },
    /// Monte Carlo check of the optimal displaced squeezed-vacuum ensemble.
    EnsembleCheck {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Entanglement of formation for a directory, a document array, or `-` (stdin).
    Batch {
        #[arg(long)]
        input: PathBuf,
    },
}

fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.trim().to_ascii_lowercase();
    let pi = std::f64::consts::PI;
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("bad angle {s:?}: {e}"));
    if t == "pi" {
        Ok(pi)
    } else if let Some(d) = t.strip_prefix("pi/") {
        Ok(pi / num(d)?)
    } else if let Some(k) = t.strip_suffix("*pi").or_else(|| t.strip_suffix("pi")) {
        Ok(num(k)? * pi)
    } else {
        num(&t)
    }
}

fn theta_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [a, b, steps] = parts.as_slice() else {
        bail!("theta range must be A:B:STEPS, got {spec:?}");
    };
    let (a, b) = (parse_angle(a).map_err(|e| anyhow!(e))?, parse_angle(b).map_err(|e| anyhow!(e))?);
    let steps: usize = steps.parse().with_context(|| format!("bad step count in {spec:?}"))?;
    Ok(match steps {
        0 => bail!("theta range needs at least one step"),
        1 => vec![a],
        _ => (0..steps).map(|i| a + (b - a) * i as f64 / (steps - 1) as f64).collect(),
    })
}

fn tolerances(overrides: &[String]) -> Result<Tolerances> {
    let mut tol = Tolerances::default();
    for o in overrides {
        let (k, v) = o.split_once('=').ok_or_else(|| anyhow!("tolerance override {o:?} is not KEY=VALUE"))?;
        let value: f64 = v.trim().parse().with_context(|| format!("bad tolerance value in {o:?}"))?;
        if !tol.set(k.trim(), value) {
            bail!("unknown tolerance key {k:?} (known: symmetry, physical, symplectic, block)");
        }
    }
    Ok(tol)
}

fn load(path: &Path, tol: &Tolerances) -> Result<(InputDocument, CovMat4)> {
    let doc = InputDocument::read(path)?;
    let v = doc.covariance(tol)?;
    Ok((doc, v))
}

fn eof_json(rep: &EofReport) -> Value {
    let mut out = serde_json::to_value(rep).expect("report serializes");
    if let (Some(red), Value::Object(map)) = (&rep.canonical, &mut out) {
        map.insert("canonical_form".into(), serde_json::to_value(red.form).expect("form serializes"));
    }
    out
}

struct Outcome {
    report: Value,
    code: u8,
    table: Option<(Vec<&'static str>, Vec<Vec<String>>)>,
}

impl Outcome {
    fn ok(report: Value) -> Self {
        Self { report, code: 0, table: None }
    }
}

fn run(cli: &Cli) -> Result<Outcome> {
    let tol = tolerances(&cli.tolerances)?;
    let tol_json = serde_json::to_value(tol)?;
    let with_header = |command: &str, label: Option<&str>, body: Value| -> Value {
        let mut map = Map::new();
        map.insert("command".into(), json!(command));
        if let Some(l) = label {
            map.insert("label".into(), json!(l));
        }
        map.insert("tolerances".into(), tol_json.clone());
        if let Value::Object(b) = body {
            map.extend(b);
        }
        Value::Object(map)
    };
    match &cli.command {
        Command::Validate { input } => {
            let (doc, v) = load(input, &tol)?;
            let validity = v.validate_with(&tol);
            let ppt = v.ppt_separability_with(&tol);
            let body = json!({ "validity": validity, "ppt": ppt });
            let code = if validity.is_physical { 0 } else { EXIT_INPUT };
            Ok(Outcome { code, ..Outcome::ok(with_header("validate", doc.label.as_deref(), body)) })
        }
        Command::StandardForm { input } => {
            let (doc, v) = load(input, &tol)?;
            v.require_physical(&tol)?;
            let red = reduce_to_standard_form(&v)?;
            let body = json!({
                "standard_form": red.params,
                "swapped": red.swapped,
                "same_sign_correlations": red.same_sign_correlations,
                "transform": mat_rows(&red.transform),
            });
            Ok(Outcome::ok(with_header("standard-form", doc.label.as_deref(), body)))
        }
        Command::Canonical { input } => {
            let (doc, v) = load(input, &tol)?;
            let rep = eof_with(&v, &tol)?;
            let body = json!({
                "separable": rep.separable,
                "ppt": rep.ppt,
                "standard_form": rep.standard_form,
                "canonical_form": rep.canonical.as_ref().map(|c| c.form),
                "reduction": rep.canonical,
                "residual": rep.certificate.map(|c| json!({
                    "min_eigenvalue": c.residual_min_eigenvalue,
                    "rank": c.residual_rank,
                })),
            });
            Ok(Outcome::ok(with_header("canonical", doc.label.as_deref(), body)))
        }
        Command::Eof { input } => {
            let (doc, v) = load(input, &tol)?;
            let rep = eof_with(&v, &tol)?;
            Ok(Outcome::ok(with_header("eof", doc.label.as_deref(), eof_json(&rep))))
        }
        Command::EprCurve { input, theta, theta_range } => {
            let (doc, v) = load(input, &tol)?;
            let thetas = match (theta, theta_range) {
                (Some(t), _) => vec![*t],
                (None, Some(r)) => theta_grid(r)?,
                (None, None) => bail!("give --theta or --theta-range"),
            };
            if let Some(t) = thetas.iter().find(|t| !(**t > 0.0 && **t <= std::f64::consts::FRAC_PI_4 + 1e-12)) {
                return Err(Error::InvalidArgument(format!("angle {t} outside (0, pi/4]")).into());
            }
            let rep = eof_with(&v, &tol)?;
            let r0 = rep.r0;
            let rows: Vec<Value> = thetas
                .iter()
                .map(|&t| json!({ "theta": t, "lambda": lambda_theta_moments(&v, t), "in_range": t.tan() >= r0.tanh() - 1e-12 }))
                .collect();
            let table = rows
                .iter()
                .map(|r| {
                    vec![
                        format_number(r["theta"].as_f64().unwrap()),
                        format_number(r["lambda"].as_f64().unwrap()),
                        r["in_range"].to_string(),
                    ]
                })
                .collect();
            let body = json!({ "r0": r0, "curve": rows });
            Ok(Outcome {
                table: Some((vec!["theta", "lambda", "in_range"], table)),
                ..Outcome::ok(with_header("epr-curve", doc.label.as_deref(), body))
            })
        }
        Command::Probe { theta, ebits, dim, restarts, seed, reverify_dim, max_iters } => {
            let opts = ProbeOptions {
                dim: *dim,
                restarts: *restarts,
                seed: *seed,
                reverify_dim: *reverify_dim,
                max_iters: *max_iters,
                ..Default::default()
            };
            let rep = conjecture_probe(*theta, EntanglementValue(*ebits).ebits(), &opts)?;
            let code = if rep.counterexample { EXIT_COUNTEREXAMPLE } else { 0 };
            let body = json!({ "probe": rep, "options": opts });
            Ok(Outcome { code, ..Outcome::ok(with_header("probe", None, body)) })
        }
        Command::EnsembleCheck { input, samples, seed } => {
            let (doc, v) = load(input, &tol)?;
            let rep = eof_with(&v, &tol)?;
            let body = match &rep.canonical {
                None => json!({ "separable": true, "seed": seed, "samples": samples }),
                Some(red) => {
                    let spec = make_ensemble(&red.form)?;
                    let real = verify_realization(&spec, *samples, *seed)?;
                    json!({
                        "separable": false,
                        "seed": seed,
                        "samples": samples,
                        "canonical_form": red.form,
                        "residual": mat_rows(&spec.residual),
                        "range_variances": spec.components.iter().map(|c| c.0).collect::<Vec<_>>(),
                        "v_hat": mat_rows(&real.v_hat),
                        "max_abs_dev": real.max_abs_dev,
                        "max_cov_z": real.max_cov_z,
                        "max_mean_z": real.max_mean_z,
                        "within_5_standard_errors": real.within(5.0),
                        "member_displacement": real.member_displacement.iter().copied().collect::<Vec<_>>(),
                        "member_entanglement": real.member_entanglement,
                        "reference_entanglement": real.reference_entanglement,
                    })
                }
            };
            Ok(Outcome::ok(with_header("ensemble-check", doc.label.as_deref(), body)))
        }
        Command::Batch { input } => batch(input, &tol).map(|mut o| {
            o.report = with_header("batch", None, o.report);
            o
        }),
    }
}

fn batch_sources(path: &Path) -> Result<Vec<(String, Result<InputDocument>)>> {
    if path.as_os_str() == "-" {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text)?;
        return Ok(split_stream(&text, "stdin"));
    }
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| InputFormat::from_path(p).is_some())
            .collect();
        files.sort();
        return Ok(files
            .into_iter()
            .map(|p| (p.display().to_string(), InputDocument::read(&p).map_err(Into::into)))
            .collect());
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(split_stream(&text, &path.display().to_string()))
}

/// A JSON array of documents, a single document, or one JSON document per line.
fn split_stream(text: &str, name: &str) -> Vec<(String, Result<InputDocument>)> {
    if text.trim().is_empty() {
        return Vec::new();
    }
    if let Ok(items) = serde_json::from_str::<Vec<Value>>(text) {
        return items
            .into_iter()
            .enumerate()
            .map(|(i, v)| (format!("{name}[{i}]"), serde_json::from_value(v).map_err(|e| Error::Parse(e.to_string()).into())))
            .collect();
    }
    if let Ok(doc) = InputDocument::parse(text, None) {
        return vec![(name.to_string(), Ok(doc))];
    }
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (format!("{name}:{}", i + 1), InputDocument::parse(l, Some(InputFormat::Json)).map_err(Into::into)))
        .collect()
}

fn batch(path: &Path, tol: &Tolerances) -> Result<Outcome> {
    let sources = batch_sources(path)?;
    let results: Vec<(String, Option<String>, Result<EofReport>)> = sources
        .into_par_iter()
        .map(|(source, doc)| {
            let label = doc.as_ref().ok().and_then(|d| d.label.clone());
            let rep = doc.and_then(|d| Ok(eof_with(&d.covariance(tol)?, tol)?));
            (source, label, rep)
        })
        .collect();
    let mut entries = Vec::new();
    let mut rows = Vec::new();
    let mut code = 0;
    let (mut ok, mut separable) = (0usize, 0usize);
    let mut ebits = Vec::new();
    for (source, label, rep) in &results {
        match rep {
            Ok(r) => {
                ok += 1;
                separable += r.separable as usize;
                ebits.push(r.ebits);
                let form = r.canonical.as_ref().map(|c| c.form);
                rows.push(vec![
                    source.clone(),
                    label.clone().unwrap_or_default(),
                    "ok".into(),
                    format_number(r.ebits),
                    format_number(r.r0),
                    r.separable.to_string(),
                    form.map_or(String::new(), |f| format_number(f.theta0)),
                    form.map_or(String::new(), |f| format_number(f.u)),
                    form.map_or(String::new(), |f| format_number(f.v)),
                    String::new(),
                ]);
                entries.push(json!({ "source": source, "label": label, "status": "ok", "result": eof_json(r) }));
            }
            Err(e) => {
                let c = classify(e);
                code = code.max(c);
                let mut row = vec![source.clone(), label.clone().unwrap_or_default(), "error".into()];
                row.extend(std::iter::repeat_n(String::new(), 6));
                row.push(format!("{e:#}"));
                rows.push(row);
                entries.push(json!({ "source": source, "label": label, "status": "error", "exit_code": c, "error": format!("{e:#}") }));
            }
        }
    }
    let summary = json!({
        "total": results.len(),
        "ok": ok,
        "failed": results.len() - ok,
        "separable": separable,
        "max_ebits": ebits.iter().copied().fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x)))),
        "mean_ebits": (!ebits.is_empty()).then(|| ebits.iter().sum::<f64>() / ebits.len() as f64),
    });
    Ok(Outcome {
        report: json!({ "summary": summary, "entries": entries }),
        code,
        table: Some((vec!["source", "label", "status", "ebits", "r0", "separable", "theta0", "u", "v", "error"], rows)),
    })
}

fn classify(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_input_error() => EXIT_INPUT,
        Some(_) => EXIT_SOLVER,
        None if err.downcast_ref::<std::io::Error>().is_some() => EXIT_USAGE,
        None => EXIT_USAGE,
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        Value::Array(items) if items.iter().any(|x| x.is_object() || x.is_array()) => {
            for (i, x) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), x, out);
            }
        }
        Value::Array(items) => {
            let parts: Vec<String> = items.iter().map(scalar).collect();
            out.push((prefix.to_string(), parts.join(" ")));
        }
        _ => out.push((prefix.to_string(), scalar(v))),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Number(n) if n.is_f64() => format_number(n.as_f64().unwrap()),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn render(outcome: &Outcome, format: Format) -> Result<String> {
    Ok(match format {
        Format::Json => to_json(&outcome.report)?,
        Format::Text => {
            let mut pairs = Vec::new();
            flatten("", &outcome.report, &mut pairs);
            pairs.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            match &outcome.table {
                Some((header, rows)) => {
                    w.write_record(header)?;
                    for r in rows {
                        w.write_record(r)?;
                    }
                }
                None => {
                    let mut pairs = Vec::new();
                    flatten("", &outcome.report, &mut pairs);
                    w.write_record(["key", "value"])?;
                    for (k, v) in pairs {
                        w.write_record([k, v])?;
                    }
                }
            }
            String::from_utf8(w.into_inner()?)?
        }
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(&cli).and_then(|o| Ok((render(&o, cli.format)?, o.code))) {
        Ok((text, code)) => {
            print!("{text}");
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify(&e))
        }
    }
}
