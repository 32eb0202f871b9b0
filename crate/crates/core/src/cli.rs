//! Command-line front end: reads problem documents and prints reports.
//!
//! Exit codes: 0 success, 2 malformed input, 3 nonconvergence,
//! 4 certification failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bregman::ProjectError;
use crate::coherence::{check, witness_measure, CheckOptions, CoherenceError, Separator, Status};
use crate::domination::{compare, penalty_profile, Relation};
use crate::event_algebra::{build_vertex_set, EventSystem, Vertex, VertexSet};
use crate::ext::ExtReal;
use crate::forecast::Forecast;
use crate::repair::{certify, certify_point, repair, CertifyError, RepairError, RepairOptions, RepairPath};
use crate::scoring::{brier, log_rule, verify_properness, BinaryScore, PropernessReport, RuleFamily, ScoreFunctions, ScoringRule};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MALFORMED: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;
pub const EXIT_CERTIFICATION: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "coherence", version, about = "Check, score and repair probability forecasts over finite event systems")]
pub struct Cli {
    /// Distance threshold for coherence and gap tolerance for projections.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tolerance: f64,
    /// Iteration cap for the Frank-Wolfe solver.
    #[arg(long, global = true, default_value_t = 100_000)]
    max_iters: usize,
    /// Smallest per-world margin a repair must achieve.
    #[arg(long, global = true, default_value_t = 1e-10)]
    margin_floor: f64,
    /// Seed for randomised searches; the current subcommands are deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Process every `*.json` document in this directory instead of a single file.
    #[arg(long, global = true, value_name = "DIR")]
    batch: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide coherence; report a witness measure or a separating hyperplane.
    Check { problem: Option<PathBuf> },
    /// Build a coherent forecast that strictly dominates an incoherent one.
    Repair { problem: Option<PathBuf> },
    /// Compare the penalties of `forecast` and `forecast_rival` in every world.
    Dominate { problem: Option<PathBuf> },
    /// Penalty of `forecast` in every world.
    Score { problem: Option<PathBuf> },
    /// Independently recheck a saved repair report against its problem.
    Certify { problem: PathBuf, report: PathBuf },
    /// Scoring-rule utilities.
    Rules {
        #[command(subcommand)]
        action: RulesCommand,
    },
}

#[derive(Debug, Subcommand)]
enum RulesCommand {
    /// Grid-check strict properness and continuity of a rule.
    Verify {
        rule: Option<PathBuf>,
        #[arg(long, default_value_t = 101)]
        grid_size: usize,
    },
}

/// A failed command: exit code plus message for the error stream.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn malformed(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_MALFORMED,
            message: message.into(),
        }
    }
}

/// A finished command. `code` may be nonzero when a report is still useful,
/// e.g. a failed certificate.
struct Report {
    json: Value,
    table: String,
    code: i32,
}

impl Report {
    fn ok(json: Value, table: String) -> Self {
        Report {
            json,
            table,
            code: EXIT_OK,
        }
    }
}

// ---------------------------------------------------------------------------
// problem documents

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemDoc {
    worlds: Vec<String>,
    events: Vec<EventDoc>,
    forecast: Vec<f64>,
    #[serde(default)]
    forecast_rival: Option<Vec<f64>>,
    #[serde(default)]
    rule: Option<RuleDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventDoc {
    name: String,
    members: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum RuleDoc {
    PerEvent { per_event: Vec<RuleDoc> },
    Named(NamedRule),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
enum NamedRule {
    Brier,
    Log,
    Custom {
        phi_grid: Vec<ExtReal>,
        phi_prime_grid: Vec<ExtReal>,
    },
    /// Improper; accepted by `rules verify` only.
    AbsoluteDeviation,
}

fn build_rule(named: &NamedRule, label: &str) -> Result<ScoringRule, Failure> {
    match named {
        NamedRule::Brier => Ok(brier()),
        NamedRule::Log => Ok(log_rule()),
        NamedRule::Custom { phi_grid, phi_prime_grid } => ScoringRule::from_grid(
            label,
            phi_grid.iter().map(|v| v.value()).collect(),
            phi_prime_grid.iter().map(|v| v.value()).collect(),
        )
        .map_err(|e| Failure::malformed(format!("custom rule {label}: {e}"))),
        NamedRule::AbsoluteDeviation => Err(Failure::malformed(
            "absolute_deviation is not strictly proper and cannot score a problem",
        )),
    }
}

fn build_family(doc: &RuleDoc, n: usize) -> Result<RuleFamily, Failure> {
    match doc {
        RuleDoc::Named(named) => Ok(RuleFamily::uniform(build_rule(named, "custom")?, n)),
        RuleDoc::PerEvent { per_event } => {
            if per_event.len() != n {
                return Err(Failure::malformed(format!(
                    "per_event lists {} rules for {n} events",
                    per_event.len()
                )));
            }
            let rules = per_event
                .iter()
                .enumerate()
                .map(|(i, r)| match r {
                    RuleDoc::Named(named) => build_rule(named, &format!("custom[{i}]")),
                    RuleDoc::PerEvent { .. } => Err(Failure::malformed("per_event rules cannot nest")),
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(RuleFamily::new(rules))
        }
    }
}

struct Problem {
    system: EventSystem,
    vertices: VertexSet,
    rules: RuleFamily,
    forecast: Forecast,
    rival: Option<Forecast>,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::malformed(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::malformed(format!("{}: {e}", path.display())))
}

fn parse_forecast(values: Vec<f64>, n: usize, field: &str) -> Result<Forecast, Failure> {
    let f = Forecast::new(values).map_err(|e| Failure::malformed(format!("{field}: {e}")))?;
    f.expect_dim(n).map_err(|e| Failure::malformed(format!("{field}: {e}")))?;
    Ok(f)
}

fn load_problem(path: &Path) -> Result<Problem, Failure> {
    let doc: ProblemDoc = read_json(path)?;
    let events: Vec<(String, Vec<String>)> = doc.events.into_iter().map(|e| (e.name, e.members)).collect();
    let system = EventSystem::from_members(doc.worlds, &events).map_err(|e| Failure::malformed(e.to_string()))?;
    let n = system.num_events();
    let forecast = parse_forecast(doc.forecast, n, "forecast")?;
    let rival = doc
        .forecast_rival
        .map(|r| parse_forecast(r, n, "forecast_rival"))
        .transpose()?;
    let rules = match &doc.rule {
        Some(rule) => build_family(rule, n)?,
        None => RuleFamily::uniform(brier(), n),
    };
    let vertices = build_vertex_set(&system);
    Ok(Problem {
        system,
        vertices,
        rules,
        forecast,
        rival,
    })
}

// ---------------------------------------------------------------------------
// error mapping

fn project_failure(e: &ProjectError) -> Failure {
    let code = match e {
        ProjectError::DimensionMismatch { .. } => EXIT_MALFORMED,
        _ => EXIT_NONCONVERGENCE,
    };
    Failure {
        code,
        message: e.to_string(),
    }
}

fn coherence_failure(e: CoherenceError) -> Failure {
    match &e {
        CoherenceError::Projection(p) => project_failure(p),
        _ => Failure::malformed(e.to_string()),
    }
}

fn repair_failure(e: RepairError) -> Failure {
    match e {
        RepairError::Projection(p) => project_failure(&p),
        RepairError::Coherence(c) => coherence_failure(c),
        RepairError::EpsilonExhausted { .. } => Failure {
            code: EXIT_NONCONVERGENCE,
            message: e.to_string(),
        },
        RepairError::NotDominating { .. } => Failure {
            code: EXIT_CERTIFICATION,
            message: e.to_string(),
        },
        RepairError::Forecast(_) | RepairError::RuleCount { .. } | RepairError::Coherent => Failure::malformed(e.to_string()),
    }
}

// ---------------------------------------------------------------------------
// shared report pieces

#[derive(Clone, Copy)]
struct Settings {
    tol: f64,
    max_iters: usize,
    margin_floor: f64,
}

impl Settings {
    fn check(&self) -> CheckOptions {
        CheckOptions {
            tol: self.tol,
            max_iters: self.max_iters,
        }
    }

    fn repair(&self) -> RepairOptions {
        RepairOptions {
            tol: self.tol,
            max_iters: self.max_iters,
            margin_floor: self.margin_floor,
        }
    }
}

fn world_names(problem: &Problem, vertices: &VertexSet, j: usize) -> Vec<String> {
    vertices
        .world_class(j)
        .iter()
        .map(|&w| problem.system.worlds()[w].clone())
        .collect()
}

/// `E=T F=F` style description of a vertex.
fn describe(system: &EventSystem, v: &Vertex) -> String {
    system
        .event_names()
        .iter()
        .enumerate()
        .map(|(i, name)| format!("{name}={}", if v.get(i) { 'T' } else { 'F' }))
        .collect::<Vec<_>>()
        .join(" ")
}

fn fmt_ext(x: ExtReal, digits: usize) -> String {
    match x.finite() {
        Some(v) => format!("{v:.digits$}"),
        None => x.to_string(),
    }
}

fn fmt_vec(x: &[f64]) -> String {
    let parts: Vec<String> = x.iter().map(|v| format!("{v:.6}")).collect();
    format!("({})", parts.join(", "))
}

fn relation_phrase(relation: Relation) -> &'static str {
    match relation {
        Relation::StrictlyDominates => "strictly dominates",
        Relation::WeaklyDominates => "weakly dominates",
        Relation::NoDomination => "does not dominate",
    }
}

// ---------------------------------------------------------------------------
// commands

#[derive(Serialize)]
struct WitnessAtom {
    vertex: Vertex,
    worlds: Vec<String>,
    mass: f64,
}

fn cmd_check(problem: &Problem, settings: Settings) -> Result<Report, Failure> {
    let verdict = check(&problem.forecast, &problem.vertices, settings.check()).map_err(coherence_failure)?;
    let mut table = String::new();
    writeln!(table, "status: {}", if verdict.is_coherent() { "coherent" } else { "incoherent" }).unwrap();
    writeln!(table, "hull distance: {:.3e}", verdict.hull_distance).unwrap();
    let mut json = json!({
        "status": verdict.status,
        "hull_distance": verdict.hull_distance,
        "iterations": verdict.iterations,
    });
    match verdict.status {
        Status::Coherent => {
            let witness = verdict.witness.as_ref().expect("coherent verdicts carry a witness");
            let atoms: Vec<WitnessAtom> = witness
                .iter()
                .enumerate()
                .map(|(j, a)| WitnessAtom {
                    vertex: a.vertex.clone(),
                    worlds: world_names(problem, &problem.vertices, j),
                    mass: a.mass,
                })
                .collect();
            let measure = witness_measure(&verdict, &problem.system).map_err(coherence_failure)?;
            let per_world: serde_json::Map<String, Value> = problem
                .system
                .worlds()
                .iter()
                .zip(&measure)
                .map(|(w, m)| (w.clone(), json!(m)))
                .collect();
            writeln!(table, "{:<24} {:<20} {:>12}", "atom", "worlds", "mass").unwrap();
            for atom in &atoms {
                writeln!(
                    table,
                    "{:<24} {:<20} {:>12.9}",
                    describe(&problem.system, &atom.vertex),
                    atom.worlds.join(","),
                    atom.mass
                )
                .unwrap();
            }
            json["witness"] = json!(atoms);
            json["world_measure"] = Value::Object(per_world);
        }
        Status::Incoherent => {
            let separator: &Separator = verdict.separator.as_ref().expect("incoherent verdicts carry a separator");
            writeln!(table, "separator normal: {}", fmt_vec(&separator.normal)).unwrap();
            writeln!(table, "separator margin: {:.6e}", separator.margin).unwrap();
            json["separator"] = json!(separator);
        }
    }
    Ok(Report::ok(json, table))
}

#[derive(Serialize)]
struct PenaltyRow {
    vertex: Vertex,
    worlds: Vec<String>,
    penalty: ExtReal,
}

fn cmd_score(problem: &Problem) -> Result<Report, Failure> {
    let profile = penalty_profile(&problem.rules, &problem.forecast, &problem.vertices);
    let rows: Vec<PenaltyRow> = profile
        .entries
        .iter()
        .enumerate()
        .map(|(j, e)| PenaltyRow {
            vertex: e.vertex.clone(),
            worlds: world_names(problem, &problem.vertices, j),
            penalty: e.penalty,
        })
        .collect();
    let mut table = String::new();
    writeln!(table, "{:<24} {:<20} {:>12}", "possibility", "worlds", "penalty").unwrap();
    for row in rows.iter().rev() {
        writeln!(
            table,
            "{:<24} {:<20} {:>12}",
            describe(&problem.system, &row.vertex),
            row.worlds.join(","),
            fmt_ext(row.penalty, 6)
        )
        .unwrap();
    }
    let json = json!({
        "forecast": problem.forecast,
        "penalties": rows,
    });
    Ok(Report::ok(json, table))
}

#[derive(Serialize)]
struct DominateRow {
    vertex: Vertex,
    worlds: Vec<String>,
    forecast: ExtReal,
    rival: ExtReal,
}

fn cmd_dominate(problem: &Problem) -> Result<Report, Failure> {
    let rival = problem
        .rival
        .as_ref()
        .ok_or_else(|| Failure::malformed("dominate needs a forecast_rival"))?;
    let f = &problem.forecast;
    let original = penalty_profile(&problem.rules, f, &problem.vertices);
    let other = penalty_profile(&problem.rules, rival, &problem.vertices);
    let forecast_over_rival = compare(&problem.rules, rival, f, &problem.vertices);
    let rival_over_forecast = compare(&problem.rules, f, rival, &problem.vertices);
    let rows: Vec<DominateRow> = original
        .entries
        .iter()
        .zip(&other.entries)
        .enumerate()
        .map(|(j, (a, b))| DominateRow {
            vertex: a.vertex.clone(),
            worlds: world_names(problem, &problem.vertices, j),
            forecast: a.penalty,
            rival: b.penalty,
        })
        .collect();
    // rows run from the all-true possibility down, as in the usual layout
    let mut table = String::new();
    writeln!(table, "{:<24} {:>12} {:>12}", "possibility", "original", "rival").unwrap();
    for row in rows.iter().rev() {
        writeln!(
            table,
            "{:<24} {:>12} {:>12}",
            describe(&problem.system, &row.vertex),
            fmt_ext(row.forecast, 3),
            fmt_ext(row.rival, 3)
        )
        .unwrap();
    }
    writeln!(table, "original {} rival", relation_phrase(forecast_over_rival.relation)).unwrap();
    writeln!(table, "rival {} original", relation_phrase(rival_over_forecast.relation)).unwrap();
    let json = json!({
        "forecast": f,
        "forecast_rival": rival,
        "penalties": rows,
        "forecast_vs_rival": forecast_over_rival,
        "rival_vs_forecast": rival_over_forecast,
    });
    Ok(Report::ok(json, table))
}

fn margin_table(problem: &Problem, cert: &crate::repair::Certificate) -> String {
    let mut table = String::new();
    writeln!(
        table,
        "{:<24} {:>14} {:>14} {:>14}",
        "possibility", "input", "repaired", "margin"
    )
    .unwrap();
    for m in cert.margins.iter().rev() {
        writeln!(
            table,
            "{:<24} {:>14} {:>14} {:>14}",
            describe(&problem.system, &m.vertex),
            fmt_ext(m.input_penalty, 6),
            fmt_ext(m.repaired_penalty, 6),
            fmt_ext(m.margin, 6)
        )
        .unwrap();
    }
    table
}

fn cmd_repair(problem: &Problem, settings: Settings) -> Result<Report, Failure> {
    let result = repair(&problem.rules, &problem.forecast, &problem.vertices, settings.repair()).map_err(repair_failure)?;
    let (certificate, code) = match certify(&result, &problem.rules, &problem.forecast, &problem.vertices, settings.check()) {
        Ok(cert) => (cert, EXIT_OK),
        Err(CertifyError::Failed(cert)) => (*cert, EXIT_CERTIFICATION),
        Err(CertifyError::Coherence(e)) => return Err(coherence_failure(e)),
        Err(CertifyError::Forecast(e)) => return Err(Failure::malformed(e.to_string())),
    };
    let mut table = String::new();
    writeln!(table, "input:    {}", fmt_vec(&problem.forecast)).unwrap();
    writeln!(table, "repaired: {}", fmt_vec(&result.repaired)).unwrap();
    let path = match &result.path {
        RepairPath::Projection { iterations, fw_gap } => {
            format!("projection ({iterations} iterations, gap {fw_gap:.1e})")
        }
        RepairPath::FaceRecursion { depth, epsilon } => format!("face recursion (depth {depth}, epsilon {epsilon})"),
        RepairPath::SingleVertex => "single vertex".to_string(),
    };
    writeln!(table, "path: {path}").unwrap();
    writeln!(table, "divergence: {}", fmt_ext(result.divergence, 9)).unwrap();
    writeln!(table, "min margin: {}", fmt_ext(result.min_margin, 9)).unwrap();
    table.push_str(&margin_table(problem, &certificate));
    writeln!(table, "certificate: {}", if certificate.passed { "passed" } else { "FAILED" }).unwrap();
    let mut json = serde_json::to_value(&result).expect("serialisable result");
    json["forecast"] = json!(problem.forecast);
    json["certificate"] = serde_json::to_value(&certificate).expect("serialisable certificate");
    Ok(Report { json, table, code })
}

#[derive(Deserialize)]
struct SavedReport {
    repaired: Vec<f64>,
}

fn cmd_certify(problem: &Problem, report_path: &Path, settings: Settings) -> Result<Report, Failure> {
    let saved: SavedReport = read_json(report_path)?;
    let g = parse_forecast(saved.repaired, problem.vertices.dim(), "repaired")?;
    let (certificate, code) = match certify_point(&g, &problem.rules, &problem.forecast, &problem.vertices, settings.check()) {
        Ok(cert) => (cert, EXIT_OK),
        Err(CertifyError::Failed(cert)) => (*cert, EXIT_CERTIFICATION),
        Err(CertifyError::Coherence(e)) => return Err(coherence_failure(e)),
        Err(CertifyError::Forecast(e)) => return Err(Failure::malformed(e.to_string())),
    };
    let mut table = margin_table(problem, &certificate);
    for failure in &certificate.failures {
        writeln!(table, "failure: {failure}").unwrap();
    }
    writeln!(table, "certificate: {}", if certificate.passed { "passed" } else { "FAILED" }).unwrap();
    let json = serde_json::to_value(&certificate).expect("serialisable certificate");
    Ok(Report { json, table, code })
}

fn cmd_verify(path: &Path, grid_size: usize) -> Result<Report, Failure> {
    let doc: RuleDoc = read_json(path)?;
    let named: Vec<NamedRule> = match doc {
        RuleDoc::Named(n) => vec![n],
        RuleDoc::PerEvent { per_event } => per_event
            .into_iter()
            .map(|r| match r {
                RuleDoc::Named(n) => Ok(n),
                RuleDoc::PerEvent { .. } => Err(Failure::malformed("per_event rules cannot nest")),
            })
            .collect::<Result<_, _>>()?,
    };
    let reports = named
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let rule: Box<dyn BinaryScore> = match n {
                NamedRule::AbsoluteDeviation => Box::new(ScoreFunctions::absolute_deviation()),
                other => Box::new(build_rule(other, &format!("custom[{i}]"))?),
            };
            verify_properness(rule.as_ref(), grid_size).map_err(|e| Failure::malformed(e.to_string()))
        })
        .collect::<Result<Vec<PropernessReport>, Failure>>()?;
    let passed = reports.iter().all(|r| r.passed);
    let mut table = String::new();
    for r in &reports {
        writeln!(
            table,
            "{}: {} ({} violating pairs, {} continuity defects on a {}-point grid)",
            r.rule,
            if r.passed { "proper" } else { "NOT proper" },
            r.violations,
            r.continuity_defects.len(),
            r.grid_size
        )
        .unwrap();
        if let Some(w) = &r.worst {
            writeln!(
                table,
                "  worst: belief {} announcing {} beats sincere by {:.6}",
                w.p, w.x, -w.gain
            )
            .unwrap();
        }
    }
    let json = json!({ "passed": passed, "reports": reports });
    Ok(Report {
        json,
        table,
        code: if passed { EXIT_OK } else { EXIT_CERTIFICATION },
    })
}

// ---------------------------------------------------------------------------
// dispatch

fn run_one(command: &Command, path: &Path, settings: Settings) -> Result<Report, Failure> {
    match command {
        Command::Check { .. } => cmd_check(&load_problem(path)?, settings),
        Command::Repair { .. } => cmd_repair(&load_problem(path)?, settings),
        Command::Dominate { .. } => cmd_dominate(&load_problem(path)?),
        Command::Score { .. } => cmd_score(&load_problem(path)?),
        Command::Certify { report, .. } => cmd_certify(&load_problem(path)?, report, settings),
        Command::Rules {
            action: RulesCommand::Verify { grid_size, .. },
        } => cmd_verify(path, *grid_size),
    }
}

fn input_path(command: &Command) -> Option<&Path> {
    match command {
        Command::Check { problem }
        | Command::Repair { problem }
        | Command::Dominate { problem }
        | Command::Score { problem } => problem.as_deref(),
        Command::Certify { problem, .. } => Some(problem),
        Command::Rules {
            action: RulesCommand::Verify { rule, .. },
        } => rule.as_deref(),
    }
}

fn render_json(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialisable report");
    s.push('\n');
    s
}

fn run_batch(cli: &Cli, dir: &Path, settings: Settings, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    if matches!(cli.command, Command::Certify { .. }) {
        let _ = writeln!(err, "error: certify does not support --batch");
        return EXIT_MALFORMED;
    }
    if input_path(&cli.command).is_some() {
        let _ = writeln!(err, "error: give either a document path or --batch, not both");
        return EXIT_MALFORMED;
    }
    let entries = match std::fs::read_dir(dir) {
        Ok(entries) => entries,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", dir.display());
            return EXIT_MALFORMED;
        }
    };
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    let results: Vec<(String, Result<Report, Failure>)> = files
        .par_iter()
        .map(|p| {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            (name, run_one(&cli.command, p, settings))
        })
        .collect();
    let mut code = EXIT_OK;
    let mut documents = Vec::new();
    let mut table = String::new();
    for (name, result) in results {
        match result {
            Ok(report) => {
                code = code.max(report.code);
                documents.push(json!({ "file": name, "exit_code": report.code, "report": report.json }));
                writeln!(table, "== {name} ==").unwrap();
                table.push_str(&report.table);
            }
            Err(failure) => {
                code = code.max(failure.code);
                let _ = writeln!(err, "error: {name}: {}", failure.message);
                documents.push(json!({ "file": name, "exit_code": failure.code, "error": failure.message }));
                writeln!(table, "== {name} ==\nerror: {}", failure.message).unwrap();
            }
        }
    }
    let text = match cli.format {
        Format::Json => render_json(&json!({ "documents": documents })),
        Format::Table => table,
    };
    let _ = out.write_all(text.as_bytes());
    code
}

/// Runs the command line `args` (including the program name), writing the
/// report to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_MALFORMED
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    if !(cli.tolerance.is_finite() && cli.tolerance > 0.0) {
        let _ = writeln!(err, "error: --tolerance must be a positive number");
        return EXIT_MALFORMED;
    }
    if !(cli.margin_floor.is_finite() && cli.margin_floor >= 0.0) {
        let _ = writeln!(err, "error: --margin-floor must be a nonnegative number");
        return EXIT_MALFORMED;
    }
    let settings = Settings {
        tol: cli.tolerance,
        max_iters: cli.max_iters,
        margin_floor: cli.margin_floor,
    };
    if let Some(dir) = &cli.batch {
        return run_batch(&cli, dir, settings, out, err);
    }
    let Some(path) = input_path(&cli.command) else {
        let _ = writeln!(err, "error: missing input document (or use --batch <dir>)");
        return EXIT_MALFORMED;
    };
    match run_one(&cli.command, path, settings) {
        Ok(report) => {
            let text = match cli.format {
                Format::Json => render_json(&report.json),
                Format::Table => report.table,
            };
            let _ = out.write_all(text.as_bytes());
            report.code
        }
        Err(failure) => {
            let _ = writeln!(err, "error: {}", failure.message);
            failure.code
        }
    }
}
