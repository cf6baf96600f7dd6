//! Command-line orchestration. Exit codes: 0 success, 2 input
//! validation failure, 3 solver non-convergence (a complete report is
//! still written in that case).

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::kenergy::{self, QuadConfig, SmoothCandidate};
use crate::poly::Polynomial;
use crate::problem::{parse_rational, Analysis, ProblemSpec};
use crate::report::{self, KenergySection, MinimizeSection, RunReport, TraceRow};

#[derive(Parser)]
#[command(name = "groupke", version, about = "Existence criteria and reduced K-energy for polarized group compactifications")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the requested analyses on a problem file and emit a JSON report.
    Analyze {
        file: PathBuf,
        /// Comma-separated subset (ke,properness,futaki,soliton,kenergy,destabilize);
        /// overrides the list in the problem file.
        #[arg(long, value_delimiter = ',')]
        analyses: Vec<Analysis>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (0 = all cores). Reports are byte-identical
        /// regardless of this setting.
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Override the quadrature order from the problem file.
        #[arg(long)]
        quad_order: Option<usize>,
    },
    /// Operate on the bundled corpus.
    Corpus {
        #[command(subcommand)]
        action: CorpusAction,
    },
    /// Evaluate (and optionally minimize) the reduced K-energy for one
    /// candidate potential.
    Kenergy {
        file: PathBuf,
        /// Candidate family: the canonical symplectic potential, or a
        /// polynomial perturbation of it read from --candidate-file.
        #[arg(long, default_value = "guillemin")]
        candidate: String,
        /// JSON polynomial (terms of exponents + rational coefficients)
        /// added to the canonical potential when --candidate=file.
        #[arg(long)]
        candidate_file: Option<PathBuf>,
        #[arg(long)]
        quad_order: Option<usize>,
        #[arg(long)]
        wall_margin: Option<f64>,
        /// Minimize over the invariant polynomial family instead of
        /// evaluating a single candidate.
        #[arg(long)]
        minimize: bool,
        /// Polynomial degree of the minimization family.
        #[arg(long)]
        degree: Option<u32>,
        /// Gradient-norm stopping tolerance for --minimize.
        #[arg(long)]
        tol: Option<f64>,
        /// Append one JSON object per descent step to this file.
        #[arg(long)]
        trace_out: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Export columnar plot data from a finished report.
    Export {
        report: PathBuf,
        /// One of: polytope, barycenters, descent-trace.
        #[arg(long)]
        what: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CorpusAction {
    /// List the bundled corpus entries.
    List {
        #[arg(long, default_value = "corpus")]
        dir: PathBuf,
    },
    /// Analyze every corpus entry and compare against the expected
    /// reports (or rewrite them with --bless).
    Run {
        #[arg(long, default_value = "corpus")]
        dir: PathBuf,
        /// Write the produced reports here as well.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Rewrite the expected reports from this run's output.
        #[arg(long, hide = true)]
        bless: bool,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CandidateFile {
    terms: Vec<CandidateTerm>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CandidateTerm {
    exponents: Vec<u32>,
    coeff: String,
}

fn fail(code: i32, msg: &str) -> i32 {
    eprintln!("error: {msg}");
    code
}

fn init_threads(threads: usize) {
    if threads > 0 {
        // ignore the error if a pool already exists (tests call run()
        // repeatedly in one process)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), String> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| e.to_string())
        }
    }
}

fn load_problem(file: &Path) -> Result<(String, ProblemSpec), String> {
    let raw = std::fs::read_to_string(file)
        .map_err(|e| format!("cannot read {}: {e}", file.display()))?;
    let spec = ProblemSpec::from_json(&raw).map_err(|e| e.to_string())?;
    Ok((raw, spec))
}

fn analyze_file(
    file: &Path,
    analyses: &[Analysis],
    quad_order: Option<usize>,
) -> Result<(RunReport, i32), String> {
    let (raw, mut spec) = load_problem(file)?;
    if !analyses.is_empty() {
        spec.analyses = analyses.to_vec();
    }
    if let Some(q) = quad_order {
        spec.options.quad_order = q;
    }
    let rs = spec.build_root_system().map_err(|e| e.to_string())?;
    let (_, cp) = spec.build_polytope(&rs).map_err(|e| e.to_string())?;
    let out = report::run_analyses(&spec, &raw, &rs, &cp);
    Ok((out.report, out.exit_code))
}

fn run_analyze(
    file: &Path,
    analyses: &[Analysis],
    out: Option<&Path>,
    quad_order: Option<usize>,
) -> i32 {
    let (rep, code) = match analyze_file(file, analyses, quad_order) {
        Ok(r) => r,
        Err(e) => return fail(2, &e),
    };
    match emit(&report::to_canonical_json(&rep), out) {
        Ok(()) => code,
        Err(e) => fail(2, &e),
    }
}

fn corpus_entries(dir: &Path) -> Result<Vec<PathBuf>, String> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| format!("cannot read corpus dir {}: {e}", dir.display()))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "json") && p.is_file())
        .collect();
    entries.sort();
    Ok(entries)
}

fn run_corpus(dir: &Path, out_dir: Option<&Path>, bless: bool) -> i32 {
    let entries = match corpus_entries(dir) {
        Ok(e) => e,
        Err(e) => return fail(2, &e),
    };
    if entries.is_empty() {
        return fail(2, &format!("no corpus entries in {}", dir.display()));
    }
    let expected_dir = dir.join("expected");
    // analyze in parallel, report in deterministic (sorted) order
    use rayon::prelude::*;
    let results: Vec<(PathBuf, Result<(RunReport, i32), String>)> = entries
        .par_iter()
        .map(|p| (p.clone(), analyze_file(p, &[], None)))
        .collect();
    let mut exit = 0;
    for (path, res) in results {
        let stem = path.file_stem().unwrap().to_string_lossy().to_string();
        let (rep, code) = match res {
            Ok(r) => r,
            Err(e) => {
                println!("{stem}: ERROR {e}");
                exit = 2;
                continue;
            }
        };
        let text = report::to_canonical_json(&rep);
        if let Some(od) = out_dir {
            if std::fs::create_dir_all(od).is_err()
                || std::fs::write(od.join(format!("{stem}.report.json")), &text).is_err()
            {
                return fail(2, &format!("cannot write report for {stem}"));
            }
        }
        let expected_path = expected_dir.join(format!("{stem}.report.json"));
        if bless {
            if std::fs::create_dir_all(&expected_dir).is_err()
                || std::fs::write(&expected_path, &text).is_err()
            {
                return fail(2, &format!("cannot bless {}", expected_path.display()));
            }
            println!("{stem}: blessed");
        } else {
            match std::fs::read_to_string(&expected_path) {
                Ok(want) if want == text => println!("{stem}: ok"),
                Ok(_) => {
                    println!("{stem}: MISMATCH vs {}", expected_path.display());
                    exit = 1;
                }
                Err(_) => {
                    println!("{stem}: no expected report (run with --bless)");
                    exit = 1;
                }
            }
        }
        if code != 0 && exit == 0 {
            exit = code;
        }
    }
    exit
}

fn load_candidate_poly(dim: usize, path: &Path) -> Result<Polynomial, String> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let cf: CandidateFile =
        serde_json::from_str(&raw).map_err(|e| format!("bad candidate file: {e}"))?;
    let mut f = Polynomial::zero(dim);
    for t in &cf.terms {
        if t.exponents.len() != dim {
            return Err(format!("candidate exponent arity {} != rank {dim}", t.exponents.len()));
        }
        let c = parse_rational(&t.coeff).map_err(|e| e.to_string())?;
        let mut mono = Polynomial::constant(dim, c);
        for (i, &e) in t.exponents.iter().enumerate() {
            for _ in 0..e {
                mono = mono.mul(&Polynomial::var(dim, i));
            }
        }
        f = f.add(&mono);
    }
    Ok(f)
}

#[allow(clippy::too_many_arguments)]
fn run_kenergy(
    file: &Path,
    candidate: &str,
    candidate_file: Option<&Path>,
    quad_order: Option<usize>,
    wall_margin: Option<f64>,
    minimize: bool,
    degree: Option<u32>,
    tol: Option<f64>,
    trace_out: Option<&Path>,
    out: Option<&Path>,
) -> i32 {
    let (raw, spec) = match load_problem(file) {
        Ok(v) => v,
        Err(e) => return fail(2, &e),
    };
    let rs = match spec.build_root_system() {
        Ok(v) => v,
        Err(e) => return fail(2, &e.to_string()),
    };
    let (_, cp) = match spec.build_polytope(&rs) {
        Ok(v) => v,
        Err(e) => return fail(2, &e.to_string()),
    };
    let cfg = QuadConfig {
        quad_s: quad_order.unwrap_or(spec.options.quad_order),
        wall_margin_rel: wall_margin.unwrap_or(spec.options.wall_margin),
        ..Default::default()
    };
    let degree = degree.unwrap_or(spec.options.kenergy_degree);
    let tol = tol.unwrap_or(spec.options.kenergy_tol);

    let mut exit = 0;
    let section = if minimize {
        let res = match kenergy::minimize_kenergy(&cp, &rs, degree, tol, 200, &cfg) {
            Ok(r) => r,
            Err(e) => return fail(3, &format!("minimization failed: {e}")),
        };
        if let Some(tp) = trace_out {
            let mut lines = String::new();
            for s in &res.trace {
                lines.push_str(
                    &serde_json::to_string(&TraceRow {
                        iter: s.iter,
                        value: s.value,
                        grad_norm: s.grad_norm,
                        step: s.step,
                    })
                    .unwrap(),
                );
                lines.push('\n');
            }
            if let Err(e) = std::fs::write(tp, lines) {
                return fail(2, &format!("cannot write trace {}: {e}", tp.display()));
            }
        }
        let status = format!("{:?}", res.status).to_lowercase();
        if status == "nodescent" {
            exit = 3;
        }
        let k = match kenergy::kenergy_value(&cp, &rs, &res.candidate, &cfg) {
            Ok(k) => k,
            Err(e) => return fail(3, &format!("evaluating minimizer failed: {e}")),
        };
        KenergySection {
            candidate: format!("minimized(degree={degree})"),
            linear: k.linear.value,
            nonlinear: k.nonlinear.value,
            total: k.total,
            error: k.linear.error + k.nonlinear.error,
            dropped_mass: k.linear.dropped_mass.max(k.nonlinear.dropped_mass),
            minimize: Some(MinimizeSection {
                degree,
                value: res.value,
                iterations: res.trace.len().saturating_sub(1),
                status,
                coefficients: res.coefficients.clone(),
                label: res.label.to_string(),
                trace: res
                    .trace
                    .iter()
                    .map(|s| TraceRow {
                        iter: s.iter,
                        value: s.value,
                        grad_norm: s.grad_norm,
                        step: s.step,
                    })
                    .collect(),
            }),
        }
    } else {
        let (name, u) = match candidate {
            "guillemin" => ("guillemin".to_string(), SmoothCandidate::guillemin(&cp.parent)),
            "file" => {
                let Some(cf) = candidate_file else {
                    return fail(2, "--candidate=file requires --candidate-file");
                };
                let f = match load_candidate_poly(cp.dim, cf) {
                    Ok(f) => f,
                    Err(e) => return fail(2, &e),
                };
                let sym = kenergy::symmetrize(&rs, &f);
                (
                    format!("guillemin+{}", cf.file_name().unwrap().to_string_lossy()),
                    SmoothCandidate::from_parts(
                        cp.dim,
                        Some(kenergy::GuilleminFunction::new(&cp.parent)),
                        &sym,
                    ),
                )
            }
            other => return fail(2, &format!("unknown candidate {other:?} (guillemin|file)")),
        };
        let k = match kenergy::kenergy_value(&cp, &rs, &u, &cfg) {
            Ok(k) => k,
            Err(e) => return fail(3, &format!("evaluation failed: {e}")),
        };
        KenergySection {
            candidate: name,
            linear: k.linear.value,
            nonlinear: k.nonlinear.value,
            total: k.total,
            error: k.linear.error + k.nonlinear.error,
            dropped_mass: k.linear.dropped_mass.max(k.nonlinear.dropped_mass),
            minimize: None,
        }
    };

    let mut doc = serde_json::Map::new();
    doc.insert("schema_version".into(), serde_json::json!(report::REPORT_SCHEMA_VERSION));
    doc.insert("tool".into(), serde_json::json!("groupke"));
    doc.insert("input_sha256".into(), serde_json::json!(report::input_hash(&raw)));
    doc.insert("name".into(), serde_json::json!(spec.name));
    doc.insert("kenergy".into(), serde_json::to_value(&section).unwrap());
    let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(doc)).unwrap();
    text.push('\n');
    match emit(&text, out) {
        Ok(()) => exit,
        Err(e) => fail(2, &e),
    }
}

fn run_export(report_path: &Path, what: &str, out: Option<&Path>) -> i32 {
    let raw = match std::fs::read_to_string(report_path) {
        Ok(r) => r,
        Err(e) => return fail(2, &format!("cannot read {}: {e}", report_path.display())),
    };
    let rep: RunReport = match serde_json::from_str(&raw) {
        Ok(r) => r,
        Err(e) => return fail(2, &format!("not a report file: {e}")),
    };
    match report::export_plot_data(&rep, what) {
        Ok(text) => match emit(&text, out) {
            Ok(()) => 0,
            Err(e) => fail(2, &e),
        },
        Err(e) => fail(2, &e),
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

/// Testable entry point over explicit arguments.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Analyze { file, analyses, out, threads, quad_order } => {
            init_threads(threads);
            run_analyze(&file, &analyses, out.as_deref(), quad_order)
        }
        Command::Corpus { action } => match action {
            CorpusAction::List { dir } => match corpus_entries(&dir) {
                Ok(entries) => {
                    for e in entries {
                        println!("{}", e.file_stem().unwrap().to_string_lossy());
                    }
                    0
                }
                Err(e) => fail(2, &e),
            },
            CorpusAction::Run { dir, out_dir, threads, bless } => {
                init_threads(threads);
                run_corpus(&dir, out_dir.as_deref(), bless)
            }
        },
        Command::Kenergy {
            file,
            candidate,
            candidate_file,
            quad_order,
            wall_margin,
            minimize,
            degree,
            tol,
            trace_out,
            out,
            threads,
        } => {
            init_threads(threads);
            run_kenergy(
                &file,
                &candidate,
                candidate_file.as_deref(),
                quad_order,
                wall_margin,
                minimize,
                degree,
                tol,
                trace_out.as_deref(),
                out.as_deref(),
            )
        }
        Command::Export { report, what, out } => run_export(&report, &what, out.as_deref()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_temp(name: &str, text: &str) -> PathBuf {
        let p = std::env::temp_dir().join(format!("groupke-cli-{name}-{}", std::process::id()));
        std::fs::write(&p, text).unwrap();
        p
    }

    const QUADRIC: &str = r#"{
        "schema_version": 1,
        "name": "quadric_sl2",
        "root_system": {"rank": 1, "gram": [["1/2"]], "simple_roots": [["2"]]},
        "polytope": {"facets": [{"u": [1], "lambda": "6"}, {"u": [-1], "lambda": "6"}]}
    }"#;

    #[test]
    fn analyze_writes_a_deterministic_report() {
        let prob = write_temp("prob.json", QUADRIC);
        let out1 = std::env::temp_dir().join("groupke-cli-out1.json");
        let out2 = std::env::temp_dir().join("groupke-cli-out2.json");
        let code = run_from([
            "groupke",
            "analyze",
            prob.to_str().unwrap(),
            "--analyses",
            "ke,futaki",
            "--out",
            out1.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let code = run_from([
            "groupke",
            "analyze",
            prob.to_str().unwrap(),
            "--analyses",
            "ke,futaki",
            "--out",
            out2.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let a = std::fs::read(&out1).unwrap();
        let b = std::fs::read(&out2).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b);
        let rep: RunReport = serde_json::from_slice(&a).unwrap();
        assert_eq!(rep.ke.unwrap().verdict, "yes");
        assert!(rep.soliton.is_none());
    }

    #[test]
    fn validation_failures_exit_2() {
        let bad = write_temp("bad.json", "{\"schema_version\": 1}");
        assert_eq!(run_from(["groupke", "analyze", bad.to_str().unwrap()]), 2);
        assert_eq!(run_from(["groupke", "analyze", "/nonexistent/x.json"]), 2);
    }

    #[test]
    fn export_rejects_unknown_selector() {
        let prob = write_temp("prob2.json", QUADRIC);
        let out = std::env::temp_dir().join("groupke-cli-out3.json");
        assert_eq!(
            run_from([
                "groupke",
                "analyze",
                prob.to_str().unwrap(),
                "--analyses",
                "ke",
                "--out",
                out.to_str().unwrap(),
            ]),
            0
        );
        assert_eq!(
            run_from(["groupke", "export", out.to_str().unwrap(), "--what", "polytope"]),
            0
        );
        assert_eq!(
            run_from(["groupke", "export", out.to_str().unwrap(), "--what", "bogus"]),
            2
        );
    }
}
