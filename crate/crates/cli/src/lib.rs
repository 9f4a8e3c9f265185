// SPDX-License-Identifier: Apache-2.0

//! Subcommands of the `linbis` binary. Each command returns a [`Report`]
//! holding its output and exit code, so tests can drive them in-process.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use linbis_core::bisim::{
    check_bisimulation, check_candidate, check_candidate_simulation, check_simulation, game_distinguish,
    lmc_from_json, lockstep_relation, partition_refine, BasisFile, BisimError, Calculus, Classical, GameResult,
    LmcState, Quantum, RelationFile, TermVerdict, TestBasis, Verdict,
};
use linbis_core::ctxequiv::{search_separating_context, CtxError, SearchConfig, SearchOutcome};
use linbis_core::quantum::{eval_closure_big, GateError, GateTable, QuantumClosure, QuantumError};
use linbis_core::semantics::{eval_big, trace, EvalError, Probability};
use linbis_core::syntax::{parse_with, CalculusMode, ParseError, ParseOptions, Term};
use linbis_core::typecheck::{check_type, typecheck_with_gates, Type, TypeError, TypingContext};
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Calculus; when absent, a `-- mode: ...` line in the file decides,
    /// then `det`.
    pub mode: Option<CalculusMode>,
    pub basis_size: usize,
    pub basis_file: Option<PathBuf>,
    pub strict_basis: bool,
    pub depth: usize,
    pub ctx_bound: usize,
    /// Only used by the quantum calculus.
    pub tol: f64,
    pub json: bool,
    pub gates: Option<PathBuf>,
    pub relation: Option<PathBuf>,
    pub simulation: bool,
    pub trace: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: None,
            basis_size: linbis_core::bisim::DEFAULT_BASIS_SIZE,
            basis_file: None,
            strict_basis: false,
            depth: 6,
            ctx_bound: 8,
            tol: linbis_core::quantum::TOLERANCE,
            json: false,
            gates: None,
            relation: None,
            simulation: false,
            trace: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("type error: {0}")]
    Type(#[from] TypeError),
    #[error(transparent)]
    Gate(#[from] GateError),
    #[error(transparent)]
    Bisim(#[from] BisimError),
    #[error(transparent)]
    Ctx(#[from] CtxError),
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("evaluation failed: {0}")]
    Quantum(#[from] QuantumError),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// 2 for bad input of any kind, 3 when a well-typed program breaks an
    /// evaluator invariant or a resource limit is hit.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Eval(_) | CliError::Quantum(_) => 3,
            CliError::Bisim(BisimError::Eval(_) | BisimError::Quantum(_) | BisimError::TooManyStates(_)) => 3,
            CliError::Bisim(BisimError::SupportTooLarge(_)) => 3,
            CliError::Ctx(CtxError::Eval(_) | CtxError::Quantum(_)) => 3,
            _ => 2,
        }
    }
}

/// Output of a command.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Report {
    fn ok(code: i32, stdout: String) -> Self {
        Report { code, stdout, stderr: String::new() }
    }

    fn error(err: &CliError, json: bool) -> Self {
        let code = err.exit_code();
        if json {
            let kind = match err {
                CliError::Type(t) => t.kind(),
                CliError::Parse(ParseError::Mode { .. }) => "Mode",
                CliError::Parse(_) => "Parse",
                _ => "Error",
            };
            Report::ok(code, format!("{}\n", json!({"error": kind, "message": err.to_string()})))
        } else {
            Report { code, stdout: String::new(), stderr: format!("error: {err}\n") }
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

/// `-- mode: prob` on a comment line.
fn pragma_mode(src: &str) -> Option<CalculusMode> {
    src.lines()
        .filter_map(|l| l.trim().strip_prefix("--"))
        .filter_map(|l| l.trim().strip_prefix("mode:"))
        .find_map(|m| m.trim().parse().ok())
}

struct Program {
    term: Term,
    ty: Type,
    mode: CalculusMode,
}

fn gates(cfg: &RunConfig) -> Result<GateTable, CliError> {
    let mut table = GateTable::builtin();
    if let Some(path) = &cfg.gates {
        table.load_json(&read(path)?)?;
    }
    Ok(table)
}

fn load(path: &Path, cfg: &RunConfig, gates: &GateTable) -> Result<Program, CliError> {
    let src = read(path)?;
    let mode = cfg.mode.or_else(|| pragma_mode(&src)).unwrap_or(CalculusMode::Det);
    let opts = ParseOptions { gates: gates.clone(), ..ParseOptions::new(mode) };
    let term = parse_with(&src, &opts)?;
    let ty = typecheck_with_gates(&TypingContext::empty(), &term, mode, gates)?;
    Ok(Program { term, ty, mode })
}

fn finish(res: Result<Report, CliError>, json: bool) -> Report {
    res.unwrap_or_else(|e| Report::error(&e, json))
}

pub fn cmd_typecheck(file: &Path, cfg: &RunConfig) -> Report {
    let run = || -> Result<Report, CliError> {
        let gates = gates(cfg)?;
        match load(file, cfg, &gates) {
            Ok(p) if cfg.json => Ok(Report::ok(0, format!("{}\n", json!({"type": p.ty.to_string(), "mode": p.mode})))),
            Ok(p) => Ok(Report::ok(0, format!("{}\n", p.ty))),
            Err(CliError::Type(err)) => {
                let mut r = Report::error(&CliError::Type(err), cfg.json);
                r.code = 1;
                Ok(r)
            }
            Err(e) => Err(e),
        }
    };
    finish(run(), cfg.json)
}

/// Decimal rendering for float probabilities: at most nine places, no
/// trailing zeros.
fn decimal(x: f64) -> String {
    let s = format!("{x:.9}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn show_closure(c: &QuantumClosure) -> String {
    if c.register.is_empty() {
        c.term.to_string()
    } else {
        c.to_string()
    }
}

fn distribution_line(entries: &[(String, String)], mass: &str) -> String {
    let mut parts: Vec<String> = entries.iter().map(|(v, p)| format!("{v}: {p}")).collect();
    parts.push(format!("mass {mass}"));
    parts.join(", ")
}

pub fn cmd_eval(file: &Path, cfg: &RunConfig) -> Report {
    let run = || -> Result<Report, CliError> {
        let gates = gates(cfg)?;
        let p = load(file, cfg, &gates)?;
        let mut out = String::new();
        let (entries, mass) = if p.mode.allows_quantum() {
            if cfg.trace {
                return Err(CliError::Usage("--trace is only available for the det and prob calculi".into()));
            }
            let dist = eval_closure_big(&QuantumClosure::pure(p.term.clone()), &gates)?;
            let entries: Vec<(String, String)> = dist.iter().map(|(c, q)| (show_closure(c), decimal(*q))).collect();
            (entries, decimal(dist.mass()))
        } else {
            if cfg.trace {
                for ev in trace(&p.term, p.mode)? {
                    out.push_str(&serde_json::to_string(&ev).expect("trace events serialize"));
                    out.push('\n');
                }
            }
            let dist = eval_big(&p.term, p.mode)?;
            let entries: Vec<(String, String)> = dist.iter().map(|(v, q)| (v.to_string(), q.to_string())).collect();
            (entries, dist.mass().to_string())
        };
        if cfg.json {
            let dist: Vec<Value> = entries.iter().map(|(v, q)| json!({"value": v, "p": q})).collect();
            out.push_str(&format!(
                "{}\n",
                json!({"mode": p.mode, "type": p.ty.to_string(), "distribution": dist, "mass": mass})
            ));
        } else {
            out.push_str(&distribution_line(&entries, &mass));
            out.push('\n');
        }
        Ok(Report::ok(0, out))
    };
    finish(run(), cfg.json)
}

fn common_type(e: &Program, f: &Program, gates: &GateTable) -> Result<Type, CliError> {
    linbis_core::typecheck::common_type(&e.term, &f.term, e.mode, gates)?
        .ok_or_else(|| CliError::Usage(format!("the programs have different types: {} and {}", e.ty, f.ty)))
}

fn basis_for(ty: &Type, mode: CalculusMode, gates: &GateTable, cfg: &RunConfig) -> Result<TestBasis, CliError> {
    Ok(match &cfg.basis_file {
        Some(path) => {
            let mut file: BasisFile = serde_json::from_str(&read(path)?).map_err(BisimError::from)?;
            file.size.get_or_insert(cfg.basis_size);
            TestBasis::from_file(&file, ty, mode, gates, cfg.strict_basis)?
        }
        None => TestBasis::auto(ty, mode, gates, cfg.basis_size)?,
    })
}

fn basis_line(basis: &TestBasis) -> String {
    format!("basis {} ({} entries; verdicts are relative to this basis)", basis.fingerprint(), basis.len())
}

fn game_report<C: Calculus>(
    calc: &C,
    basis: &TestBasis,
    e: &Term,
    f: &Term,
    ty: &Type,
    cfg: &RunConfig,
) -> Result<Report, CliError> {
    let res = game_distinguish(calc, basis, &QuantumClosure::pure(e.clone()), &QuantumClosure::pure(f.clone()), ty, cfg.depth)?;
    let code = if res.is_distinguished() { 1 } else { 0 };
    if cfg.json {
        return Ok(Report::ok(code, format!("{}\n", res.to_json(basis))));
    }
    let mut out = String::new();
    match &res {
        GameResult::Distinguished { rounds, trace, .. } => {
            out.push_str(&format!("DISTINGUISHED rounds={rounds}\n"));
            for (i, s) in trace.iter().enumerate() {
                out.push_str(&format!(
                    "  {}. {} vs {}\n     {} into {}: {} vs {}\n",
                    i + 1,
                    s.left,
                    s.right,
                    basis.describe(&s.label),
                    class_summary(&s.class),
                    s.p_left,
                    s.p_right
                ));
            }
        }
        GameResult::IndistinguishableUpTo { depth, states, .. } => {
            out.push_str(&format!("INDISTINGUISHABLE-UP-TO depth={depth}\n  explored {states} states\n"));
        }
    }
    out.push_str(&basis_line(basis));
    out.push('\n');
    Ok(Report::ok(code, out))
}

fn class_summary(class: &[LmcState]) -> String {
    let shown: Vec<String> = class.iter().take(3).map(|s| s.to_string()).collect();
    let more = class.len().saturating_sub(3);
    if more > 0 {
        format!("{{{}, ... {more} more}}", shown.join(", "))
    } else {
        format!("{{{}}}", shown.join(", "))
    }
}

fn verdict_report<P: Probability>(v: &TermVerdict<P>, basis: &TestBasis, cfg: &RunConfig) -> Report {
    let code = if v.holds() { 0 } else { 1 };
    if cfg.json {
        let mut j = v.to_json();
        j["basis"] = json!(basis.fingerprint());
        return Report::ok(code, format!("{j}\n"));
    }
    let mut out = match v {
        TermVerdict::Holds { relation_size, state_count } => {
            format!("HOLDS relation-size={relation_size} states={state_count}\n")
        }
        TermVerdict::Fails { left, right, label, class, p_left, p_right } => format!(
            "FAILS\n  {left} vs {right}\n     {label} into {}: {p_left} vs {p_right}\n",
            class_summary(class)
        ),
    };
    out.push_str(&basis_line(basis));
    out.push('\n');
    Report::ok(code, out)
}

fn relation_report<C: Calculus>(
    calc: &C,
    rel: &RelationFile,
    mode: CalculusMode,
    gates: &GateTable,
    cfg: &RunConfig,
) -> Result<Report, CliError>
where
    C::P: Display,
{
    let ty = Type::parse(&rel.ty)?;
    let basis = basis_for(&ty, mode, gates, cfg)?;
    let opts = ParseOptions { gates: gates.clone(), ..ParseOptions::new(mode) };
    let mut pairs = Vec::new();
    for (a, b) in &rel.pairs {
        let (a, b) = (parse_with(a, &opts)?, parse_with(b, &opts)?);
        for t in [&a, &b] {
            check_type(&TypingContext::empty(), t, &ty, mode, gates)?;
        }
        let (s, t) = (LmcState::of_term(a, ty.clone()), LmcState::of_term(b, ty.clone()));
        if rel.lockstep {
            pairs.extend(lockstep_relation(calc, &basis, &s, &t, 100_000)?);
        } else {
            pairs.push((s, t));
        }
    }
    let verdict = if cfg.simulation {
        check_candidate_simulation(calc, &basis, &pairs)?
    } else {
        check_candidate(calc, &basis, &pairs)?
    };
    Ok(verdict_report(&verdict, &basis, cfg))
}

/// `bisim E F` plays the bounded game; `bisim --relation R` checks a
/// candidate relation.
pub fn cmd_bisim(files: &[PathBuf], cfg: &RunConfig) -> Report {
    let run = || -> Result<Report, CliError> {
        let gates = gates(cfg)?;
        if let Some(path) = &cfg.relation {
            if !files.is_empty() {
                return Err(CliError::Usage("give either two programs or --relation, not both".into()));
            }
            let rel: RelationFile = serde_json::from_str(&read(path)?).map_err(BisimError::from)?;
            let mode = cfg.mode.or(rel.mode).unwrap_or(CalculusMode::Det);
            return if mode.allows_quantum() {
                relation_report(&Quantum { gates: gates.clone(), tol: cfg.tol }, &rel, mode, &gates, cfg)
            } else {
                relation_report(&Classical::new(mode), &rel, mode, &gates, cfg)
            };
        }
        let [e, f] = files else {
            return Err(CliError::Usage("bisim needs two programs or --relation".into()));
        };
        let (e, f) = (load(e, cfg, &gates)?, load(f, cfg, &gates)?);
        if e.mode != f.mode {
            return Err(CliError::Usage(format!("programs are in different calculi: {} and {}", e.mode, f.mode)));
        }
        let ty = common_type(&e, &f, &gates)?;
        let basis = basis_for(&ty, e.mode, &gates, cfg)?;
        if e.mode.allows_quantum() {
            game_report(&Quantum { gates: gates.clone(), tol: cfg.tol }, &basis, &e.term, &f.term, &ty, cfg)
        } else {
            game_report(&Classical::new(e.mode), &basis, &e.term, &f.term, &ty, cfg)
        }
    };
    finish(run(), cfg.json)
}

pub fn cmd_ctx_search(e: &Path, f: &Path, cfg: &RunConfig) -> Report {
    let run = || -> Result<Report, CliError> {
        let gates = gates(cfg)?;
        let (e, f) = (load(e, cfg, &gates)?, load(f, cfg, &gates)?);
        if e.mode != f.mode {
            return Err(CliError::Usage(format!("programs are in different calculi: {} and {}", e.mode, f.mode)));
        }
        let ty = common_type(&e, &f, &gates)?;
        let search = SearchConfig {
            gates: gates.clone(),
            tol: cfg.tol,
            program_ty: Some(ty),
            ..SearchConfig::new(e.mode, cfg.ctx_bound)
        };
        let out = search_separating_context(&e.term, &f.term, &search)?;
        let code = if matches!(out, SearchOutcome::Separating { .. }) { 1 } else { 0 };
        if cfg.json {
            return Ok(Report::ok(code, format!("{}\n", serde_json::to_value(&out).expect("outcomes serialize"))));
        }
        let text = match &out {
            SearchOutcome::Separating { context, size, left, right, examined } => format!(
                "SEPARATED size={size} examined={examined}\n  context: {context}\n  observations: {left} vs {right}\n"
            ),
            SearchOutcome::NoneUpTo { bound, examined } => format!("NONE-UP-TO {bound}\n  examined {examined} contexts\n"),
        };
        Ok(Report::ok(code, text))
    };
    finish(run(), cfg.json)
}

/// Partition of an explicit chain; with `--relation` (a JSON list of
/// state-name pairs) checks that relation instead.
pub fn cmd_lmc(file: &Path, cfg: &RunConfig) -> Report {
    let run = || -> Result<Report, CliError> {
        let lmc = lmc_from_json(&read(file)?)?;
        if let Some(path) = &cfg.relation {
            let names: Vec<(String, String)> = serde_json::from_str(&read(path)?).map_err(BisimError::from)?;
            let index = |n: &String| {
                lmc.names().iter().position(|m| m == n).ok_or_else(|| BisimError::UnknownState(n.clone()))
            };
            let pairs = names.iter().map(|(a, b)| Ok((index(a)?, index(b)?))).collect::<Result<Vec<_>, BisimError>>()?;
            let verdict =
                if cfg.simulation { check_simulation(&lmc, &pairs, 0.0)? } else { check_bisimulation(&lmc, &pairs, 0.0) };
            let (code, text, j) = match &verdict {
                Verdict::Holds { relation_size, state_count } => (
                    0,
                    format!("HOLDS relation-size={relation_size} states={state_count}\n"),
                    json!({"verdict": "holds", "relation_size": relation_size, "states": state_count}),
                ),
                Verdict::Fails(w) => {
                    let names = |v: &[usize]| v.iter().map(|&s| lmc.name(s).to_string()).collect::<Vec<_>>();
                    (
                        1,
                        format!(
                            "FAILS\n  {} vs {}\n     {} into {{{}}}: {} vs {}\n",
                            lmc.name(w.left),
                            lmc.name(w.right),
                            lmc.label(w.label),
                            names(&w.class).join(", "),
                            w.p_left,
                            w.p_right
                        ),
                        json!({
                            "verdict": "fails",
                            "left": lmc.name(w.left),
                            "right": lmc.name(w.right),
                            "label": lmc.label(w.label),
                            "class": names(&w.class),
                            "image": names(&w.image),
                            "p_left": w.p_left.to_string(),
                            "p_right": w.p_right.to_string(),
                        }),
                    )
                }
            };
            return Ok(Report::ok(code, if cfg.json { format!("{j}\n") } else { text }));
        }
        let blocks: Vec<Vec<String>> = partition_refine(&lmc, 0.0)
            .iter()
            .map(|b| b.iter().map(|&s| lmc.name(s).to_string()).collect())
            .collect();
        let text = if cfg.json {
            format!("{}\n", json!({"blocks": blocks}))
        } else {
            blocks.iter().map(|b| format!("{{{}}}", b.join(", "))).collect::<Vec<_>>().join(" ") + "\n"
        };
        Ok(Report::ok(0, text))
    };
    finish(run(), cfg.json)
}
