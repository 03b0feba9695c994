use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use tklv::oracle::{self, HatOperators};
use tklv::{hecke, klv, Entry, ExtBlock, PolyTable};

const SCHEMA_VERSION: u32 = 1;

const EXIT_INPUT: u8 = 1;
const EXIT_RELATION: u8 = 2;
const EXIT_UNRESOLVED: u8 = 3;
const EXIT_MISMATCH: u8 = 4;

/// Twisted Kazhdan-Lusztig-Vogan polynomials for extended blocks.
#[derive(Parser)]
#[command(name = "tklv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a block file and check its invariants.
    Validate(Common),
    /// Check the quadratic (and optionally braid) relations of the action.
    HeckeCheck {
        #[command(flatten)]
        common: Common,
        /// Also check braid relations for every pair of generators.
        #[arg(long)]
        braid: bool,
    },
    /// Compute the polynomial table.
    Compute {
        #[command(flatten)]
        common: Common,
        /// Check the eigen and decomposition equations on the result.
        #[arg(long)]
        verify: bool,
        /// Render polynomials in u = v^2, shifted to P^σ.
        #[arg(long)]
        u_form: bool,
        /// Fail with exit code 3 if any entry stays unresolved.
        #[arg(long)]
        strict: bool,
    },
    /// Emit the W-graph.
    Wgraph(Common),
    /// Compare the table with the brute-force bar-involution oracle.
    OracleCompare(Common),
}

#[derive(Args)]
struct Common {
    /// Block file (JSON).
    input: PathBuf,
    /// Write to this file instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Machine-readable output.
    #[arg(long)]
    json: bool,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

/// What a command produced: a report plus its exit status.
struct Report {
    block: String,
    results: Value,
    text: String,
    status: u8,
    complaint: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cmd: Command) -> Result<u8, Failure> {
    let (common, report) = match cmd {
        Command::Validate(c) => {
            let r = validate(&c)?;
            (c, r)
        }
        Command::HeckeCheck { common, braid } => {
            let r = hecke_check(&load(&common)?, braid);
            (common, r)
        }
        Command::Compute {
            common,
            verify,
            u_form,
            strict,
        } => {
            let r = compute(&load(&common)?, verify, u_form, strict)?;
            (common, r)
        }
        Command::Wgraph(c) => {
            let r = wgraph(&load(&c)?)?;
            (c, r)
        }
        Command::OracleCompare(c) => {
            let r = oracle_compare(&load(&c)?)?;
            (c, r)
        }
    };
    let body = if common.json {
        let env = json!({
            "schema_version": SCHEMA_VERSION,
            "block_name": report.block,
            "results": report.results,
        });
        serde_json::to_string_pretty(&env).expect("serializable") + "\n"
    } else {
        report.text
    };
    emit(common.output.as_ref(), &body)?;
    if let Some(msg) = report.complaint {
        eprintln!("{msg}");
    }
    Ok(report.status)
}

fn emit(path: Option<&PathBuf>, body: &str) -> Result<(), Failure> {
    let res = match path {
        Some(p) => fs::write(p, body),
        None => std::io::stdout().lock().write_all(body.as_bytes()),
    };
    res.map_err(|e| Failure::new(EXIT_INPUT, format!("cannot write output: {e}")))
}

fn load(c: &Common) -> Result<ExtBlock, Failure> {
    ExtBlock::from_json_file(&c.input).map_err(|e| Failure::new(EXIT_INPUT, e.to_string()))
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

fn engine_failure(e: klv::KlvError) -> Failure {
    Failure::new(EXIT_RELATION, format!("computation failed: {e}"))
}

// ---------------------------------------------------------------------------

fn validate(c: &Common) -> Result<Report, Failure> {
    let b = load(c)?;
    let mut text = format!(
        "{}: valid, {} parameters, {} generators\n",
        b.name(),
        b.size(),
        b.kappa_count()
    );
    for w in b.warnings() {
        text.push_str(&format!("warning: {w}\n"));
    }
    Ok(Report {
        block: b.name().to_string(),
        results: json!({
            "valid": true,
            "parameters": b.size(),
            "kappas": b.kappa_count(),
            "trivially_twisted": b.is_trivially_twisted(),
            "warnings": b.warnings(),
        }),
        text,
        status: 0,
        complaint: None,
    })
}

fn hecke_check(b: &ExtBlock, braid: bool) -> Report {
    let (quad, br) = hecke::check_all(b, braid);
    let mut text = String::new();
    for q in &quad {
        text.push_str(&format!("quadratic k{}: {}", q.kappa, pass(q.passed)));
        if let Some(g) = q.failing_parameter {
            text.push_str(&format!(" (fails on a_{g})"));
        }
        text.push('\n');
    }
    for r in &br {
        let (k1, k2) = r.kappas;
        let verdict = if r.checked {
            pass(r.passed)
        } else {
            "skipped (m = inf)"
        };
        text.push_str(&format!("braid k{k1} k{k2} (m = {}): {verdict}", r.order));
        if let Some(g) = r.failing_parameter {
            text.push_str(&format!(" (fails on a_{g})"));
        }
        text.push('\n');
    }
    let ok = quad.iter().all(|q| q.passed) && br.iter().all(|r| r.passed);
    Report {
        block: b.name().to_string(),
        results: json!({ "passed": ok, "quadratic": to_value(&quad), "braid": to_value(&br) }),
        text,
        status: if ok { 0 } else { EXIT_RELATION },
        complaint: (!ok).then(|| "relation check failed".to_string()),
    }
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

#[derive(Serialize)]
struct Row {
    gamma: usize,
    delta: usize,
    poly_v: Option<String>,
    poly_u: Option<String>,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    route: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
}

fn u_form(b: &ExtBlock, t: &PolyTable, g: usize, d: usize) -> Option<String> {
    klv::to_classical(b, t, g, d).ok()?.to_u_string().ok()
}

/// Nonzero and unresolved entries, column by column.
fn rows(b: &ExtBlock, t: &PolyTable) -> Vec<Row> {
    let mut out = vec![];
    for d in 0..b.size() {
        for g in 0..b.size() {
            match t.entry(g, d) {
                Entry::Known { poly, route, .. } if !poly.is_zero() => out.push(Row {
                    gamma: g,
                    delta: d,
                    poly_v: Some(poly.to_string()),
                    poly_u: u_form(b, t, g, d),
                    status: "known",
                    route: Some(route.to_string()),
                    reason: None,
                }),
                Entry::Unresolved { reason } => out.push(Row {
                    gamma: g,
                    delta: d,
                    poly_v: None,
                    poly_u: None,
                    status: "unresolved",
                    route: None,
                    reason: Some(reason.clone()),
                }),
                _ => {}
            }
        }
    }
    out
}

/// Rows `γ`, columns `δ`; `.` marks zero and `?` unresolved.
fn matrix_text(b: &ExtBlock, t: &PolyTable, in_u: bool) -> String {
    let n = b.size();
    let cell = |g: usize, d: usize| -> String {
        match t.entry(g, d) {
            Entry::Known { poly, .. } if poly.is_zero() => ".".into(),
            Entry::Known { poly, .. } if in_u => {
                u_form(b, t, g, d).unwrap_or_else(|| format!("[{poly}]"))
            }
            Entry::Known { poly, .. } => poly.to_string(),
            _ => "?".into(),
        }
    };
    let cells: Vec<Vec<String>> = (0..n)
        .map(|g| (0..n).map(|d| cell(g, d)).collect())
        .collect();
    let label = |i: usize| format!("p{i}");
    let first = (0..n).map(|i| label(i).len()).max().unwrap_or(1);
    let widths: Vec<usize> = (0..n)
        .map(|d| {
            (0..n)
                .map(|g| cells[g][d].len())
                .chain([label(d).len()])
                .max()
                .unwrap()
        })
        .collect();
    let mut s = format!("{:first$}", "");
    for d in 0..n {
        s.push_str(&format!("  {:>w$}", label(d), w = widths[d]));
    }
    s.push('\n');
    for g in 0..n {
        s.push_str(&format!("{:first$}", label(g)));
        for d in 0..n {
            s.push_str(&format!("  {:>w$}", cells[g][d], w = widths[d]));
        }
        s.push('\n');
    }
    s
}

fn compute(b: &ExtBlock, verify: bool, in_u: bool, strict: bool) -> Result<Report, Failure> {
    let t = klv::compute_all(b).map_err(engine_failure)?;
    let rows = rows(b, &t);
    let unresolved = t.unresolved();
    let mut text = format!("{}: {} parameters\n", b.name(), b.size());
    text.push_str(&matrix_text(b, &t, in_u));
    for (g, d, why) in &unresolved {
        text.push_str(&format!("unresolved P({g},{d}): {why}\n"));
    }
    let mut results = json!({ "table": to_value(&rows), "unresolved": unresolved.len() });
    let mut status = 0;
    let mut complaint = None;
    if verify {
        let rep = klv::verify(b, &t);
        for (name, s) in [
            ("eigen", &rep.eigen),
            ("decomposition", &rep.decomposition),
            ("entries", &rep.entries),
            ("nonvanishing", &rep.nonvanishing),
        ] {
            text.push_str(&format!(
                "verify {name}: {} ({} checked, {} skipped)\n",
                pass(s.passed()),
                s.checked,
                s.skipped
            ));
            for f in &s.failures {
                text.push_str(&format!("  {f}\n"));
            }
        }
        results["verify"] = to_value(&rep);
        if !rep.passed() {
            status = EXIT_RELATION;
            complaint = Some("verification failed".to_string());
        }
    }
    if status == 0 && strict && !unresolved.is_empty() {
        status = EXIT_UNRESOLVED;
        complaint = Some(format!("{} unresolved entries", unresolved.len()));
    }
    Ok(Report {
        block: b.name().to_string(),
        results,
        text,
        status,
        complaint,
    })
}

fn wgraph(b: &ExtBlock) -> Result<Report, Failure> {
    let t = klv::compute_all(b).map_err(engine_failure)?;
    let w = klv::wgraph(b, &t);
    let mut text = String::new();
    for v in &w.vertices {
        let tau: Vec<String> = v.tau.iter().map(|k| format!("k{k}")).collect();
        text.push_str(&format!(
            "p{} len {} tau {{{}}}:",
            v.id,
            v.length,
            tau.join(",")
        ));
        for e in &v.edges {
            text.push_str(&format!(" p{}({}, {})", e.to, e.kind, e.mu));
        }
        text.push('\n');
    }
    Ok(Report {
        block: b.name().to_string(),
        results: json!({ "edges": w.edge_count(), "vertices": to_value(&w.vertices) }),
        text,
        status: 0,
        complaint: None,
    })
}

fn oracle_compare(b: &ExtBlock) -> Result<Report, Failure> {
    let t = klv::compute_all(b).map_err(engine_failure)?;
    let (kind, ops) = match HatOperators::classical(b) {
        Ok(ops) => ("classical", ops),
        Err(_) => ("twisted", HatOperators::from_block(b)),
    };
    let c = oracle::compare(&t, &oracle::bar_oracle(&ops));
    let mut text = format!(
        "{kind} oracle: {} compared, {} skipped, {} mismatches\n",
        c.compared,
        c.skipped,
        c.mismatches.len()
    );
    for m in &c.mismatches {
        text.push_str(&format!(
            "mismatch P({},{}): engine {}, oracle {}\n",
            m.gamma, m.delta, m.engine, m.oracle
        ));
    }
    for n in &c.notes {
        text.push_str(&format!("note: {n}\n"));
    }
    let ok = c.mismatches.is_empty();
    let mut results = to_value(&c);
    results["oracle"] = json!(kind);
    results["agrees"] = json!(ok);
    Ok(Report {
        block: b.name().to_string(),
        results,
        text,
        status: if ok { 0 } else { EXIT_MISMATCH },
        complaint: (!ok).then(|| "engine and oracle disagree".to_string()),
    })
}
