// SPDX-License-Identifier: Apache-2.0

//! Acceptance suite: one PASS/FAIL line per criterion. Tolerances and time
//! limits are fixed below; a criterion that panics, errors or overruns its
//! limit fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use linbis_cli::{cmd_bisim, cmd_ctx_search, cmd_eval, cmd_typecheck, RunConfig};
use linbis_core::bisim::{
    check_bisimulation, check_candidate, check_simulation, explore, game_distinguish, largest_simulation,
    lockstep_relation, partition_refine, replay, transitions, BasisFile, Calculus, Classical, FiniteLmc, GameResult,
    LmcState, Quantum, RelationFile, TestBasis, MAX_STATES,
};
use linbis_core::ctxequiv::{search_separating_context, SearchConfig, SearchOutcome};
use linbis_core::gen::random_closed;
use linbis_core::quantum::{GateTable, QuantumClosure, QuantumRegister};
use linbis_core::semantics::{eval_big, normalize_by_steps, step, StepResult};
use linbis_core::syntax::{parse, parse_with, CalculusMode, Name, ParseError, ParseOptions, Term};
use linbis_core::typecheck::{check_type, typecheck, Type, TypingContext};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

/// Amplitude and probability tolerance for the quantum criteria.
const QUANTUM_TOL: f64 = 1e-9;
/// Context bound for the counterexample search.
const CTX_BOUND: usize = 10;
/// Context bound for the soundness cross-check on the main pairs, and on
/// every pair of the verified relations.
const SOUNDNESS_BOUND: usize = 10;
const SOUNDNESS_PAIR_BOUND: usize = 5;

type Check = fn() -> Result<String, String>;

fn main() -> ExitCode {
    let criteria: [(&str, Check, Duration); 8] = [
        ("typing corpus", typing_corpus, Duration::from_secs(1)),
        ("distribution exactness", distribution_exactness, Duration::from_secs(30)),
        ("quantum laws", quantum_laws, Duration::from_secs(30)),
        ("determinism of the deterministic chain", lts_determinism, Duration::from_secs(60)),
        ("choice counterexample both ways", counterexample, Duration::from_secs(120)),
        ("bisimilar example pairs", example_pairs, Duration::from_secs(60)),
        ("finite chain laws", finite_laws, Duration::from_secs(30)),
        ("soundness consistency", soundness, Duration::from_secs(300)),
    ];
    let mut failed = 0;
    for (i, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let took = start.elapsed();
        let res = match res {
            Ok(_) if took > *limit => Err(format!("took {took:.2?}, limit {limit:?}")),
            other => other,
        };
        match res {
            Ok(detail) => println!("PASS {} {name}: {detail} ({took:.2?})", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why} ({took:.2?})", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn corpus(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(rel)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn write_temp(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("linbis-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

// 1

fn typing_corpus() -> Result<String, String> {
    let cfg = RunConfig::default();
    let dup = cmd_typecheck(&corpus("ex2-dup/dup.lin"), &cfg);
    ensure(dup.code == 0 && dup.stdout.trim() == "bool -o bool * bool", || format!("dup: {dup:?}"))?;
    let twice = cmd_typecheck(&write_temp("twice.lin", r"\x:bool. <x, x>"), &RunConfig { json: true, ..cfg.clone() });
    ensure(twice.code == 1 && twice.stdout.contains("DuplicatedUse"), || format!("<x, x>: {twice:?}"))?;
    let prob = RunConfig { mode: Some(CalculusMode::Prob), ..cfg.clone() };
    let moded = cmd_typecheck(&corpus("basics/hadamard.lin"), &prob);
    ensure(moded.code == 2, || format!("quantum file in prob mode: {moded:?}"))?;

    let text = std::fs::read_to_string(corpus("typing.json")).map_err(|e| e.to_string())?;
    let cases: Vec<serde_json::Value> = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let (mut pos, mut neg) = (0, 0);
    for case in &cases {
        let name = case["name"].as_str().unwrap_or("?");
        let mode: CalculusMode = case["mode"].as_str().unwrap_or("det").parse()?;
        let mut ctx = TypingContext::empty();
        for q in case["qvars"].as_array().into_iter().flatten() {
            ctx = ctx.with_qvar(q.as_str().unwrap());
        }
        let got = match parse(case["term"].as_str().unwrap(), mode) {
            Ok(t) => typecheck(&ctx, &t, mode).map_err(|e| e.kind().to_string()),
            Err(ParseError::Mode { .. }) => Err("Mode".to_string()),
            Err(e) => return Err(format!("{name}: {e}")),
        };
        match (case.get("type"), case.get("error"), &got) {
            (Some(want), None, Ok(ty)) if Type::parse(want.as_str().unwrap()).ok().as_ref() == Some(ty) => pos += 1,
            (None, Some(want), Err(kind)) if want.as_str() == Some(kind.as_str()) => neg += 1,
            _ => return Err(format!("{name}: got {got:?}")),
        }
    }
    ensure(pos + neg >= 20 && pos > 0 && neg > 0, || format!("corpus too small: {pos} + {neg}"))?;
    Ok(format!("{pos} accepted and {neg} rejected as expected"))
}

// 2

fn distribution_exactness() -> Result<String, String> {
    let mode = CalculusMode::Prob;
    let half = BigRational::new(1.into(), 2.into());
    let coin = eval_big(&parse("tt (+) ff", mode).unwrap(), mode).map_err(|e| e.to_string())?;
    ensure(
        coin.len() == 2 && coin.get(&Term::Bool(true)) == half && coin.get(&Term::Bool(false)) == half,
        || format!("tt (+) ff: {coin:?}"),
    )?;
    let omega = eval_big(&Term::Omega, mode).map_err(|e| e.to_string())?;
    ensure(omega.is_empty(), || format!("omega: {omega:?}"))?;
    let cfg = RunConfig::default();
    let out = cmd_eval(&corpus("basics/coin.lin"), &cfg);
    ensure(out.stdout.trim() == "tt: 1/2, ff: 1/2, mass 1", || format!("eval coin: {out:?}"))?;
    let out = cmd_eval(&corpus("basics/omega.lin"), &cfg);
    ensure(out.stdout.trim() == "mass 0", || format!("eval omega: {out:?}"))?;

    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut steps = 0;
    for _ in 0..200 {
        let (t, ty) = random_closed(&mut rng, mode, 10);
        let big = eval_big(&t, mode).map_err(|e| e.to_string())?.map(|v| v.canonical());
        let small = normalize_by_steps(&t, mode).map_err(|e| e.to_string())?.map(|v| v.canonical());
        ensure(big.approx_eq(&small, 0.0), || format!("{t}: big {big:?}, small {small:?}"))?;
        let mut frontier = vec![t.clone()];
        while let Some(e) = frontier.pop() {
            check_type(&TypingContext::empty(), &e, &ty, mode, &GateTable::builtin())
                .map_err(|err| format!("{e} lost type {ty}: {err}"))?;
            if let StepResult::Step(d) = step(&e, mode).map_err(|e| e.to_string())? {
                steps += 1;
                frontier.extend(d.support().cloned());
            }
        }
    }
    Ok(format!("200 programs, {steps} typed steps"))
}

// 3

/// Dense `2^n x 2^n` operator of `gate` on `targets`, built entry by entry.
fn dense_operator(gate: &linbis_core::quantum::Gate, vars: &[Name], targets: &[Name]) -> Vec<Vec<Complex64>> {
    let n = vars.len();
    let bit = |i: usize, v: &Name| {
        let k = vars.iter().position(|w| w == v).unwrap();
        (i >> (n - 1 - k)) & 1
    };
    let sub = |i: usize| targets.iter().fold(0, |acc, t| (acc << 1) | bit(i, t));
    let same_rest = |i: usize, j: usize| vars.iter().filter(|v| !targets.contains(v)).all(|v| bit(i, v) == bit(j, v));
    let dim = 1 << n;
    (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| if same_rest(i, j) { gate.entry(sub(i), sub(j)) } else { Complex64::new(0.0, 0.0) })
                .collect()
        })
        .collect()
}

fn mat_vec(m: &[Vec<Complex64>], v: &[Complex64]) -> Vec<Complex64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

fn close(a: &[Complex64], b: &[Complex64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() <= QUANTUM_TOL)
}

/// Projection of qubit `k` onto `b`, renormalized, with the qubit removed.
fn dense_projection(v: &[Complex64], n: usize, k: usize, b: bool) -> (f64, Vec<Complex64>) {
    let keep = |i: usize| ((i >> (n - 1 - k)) & 1 == 1) == b;
    let p: f64 = v.iter().enumerate().filter(|(i, _)| keep(*i)).map(|(_, a)| a.norm_sqr()).sum();
    let out = v.iter().enumerate().filter(|(i, _)| keep(*i)).map(|(_, a)| a / p.sqrt()).collect();
    (p, out)
}

fn quantum_laws() -> Result<String, String> {
    let gates = GateTable::builtin();
    let names: Vec<&str> = gates.names().collect();
    let mut rng = StdRng::seed_from_u64(0x9b17);
    let mut applied = 0;
    for seq in 0..100 {
        let n = rng.gen_range(1..=4);
        let vars: Vec<Name> = (0..n).map(|i| Name::from(format!("q{i}"))).collect();
        let init: Vec<(Name, bool)> = vars.iter().map(|v| (v.clone(), rng.gen_bool(0.5))).collect();
        let mut reg = QuantumRegister::basis(&init).map_err(|e| e.to_string())?;
        let mut dense: Vec<Complex64> = reg.amplitudes().to_vec();
        for _ in 0..rng.gen_range(1..=12) {
            let usable: Vec<&&str> = names.iter().filter(|g| gates.arity(g).is_some_and(|a| a <= n)).collect();
            let gate = gates.get(usable.choose(&mut rng).unwrap()).unwrap();
            let mut targets = vars.clone();
            targets.shuffle(&mut rng);
            targets.truncate(gate.arity);
            reg = reg.apply_unitary(gate, &targets).map_err(|e| e.to_string())?;
            dense = mat_vec(&dense_operator(gate, &vars, &targets), &dense);
            applied += 1;
            ensure((reg.norm_sqr() - 1.0).abs() <= QUANTUM_TOL, || format!("sequence {seq}: norm {}", reg.norm_sqr()))?;
            ensure(close(reg.amplitudes(), &dense), || format!("sequence {seq}: {} differs from the matrix oracle", gate.name))?;
        }
        for (k, v) in vars.iter().enumerate() {
            let (pt, pf) = (reg.measure_prob(v, true).unwrap(), reg.measure_prob(v, false).unwrap());
            ensure((pt + pf - 1.0).abs() <= QUANTUM_TOL, || format!("sequence {seq}: outcomes sum to {}", pt + pf))?;
            for b in [true, false] {
                let (p, want) = dense_projection(&dense, n, k, b);
                if p <= 1e-6 {
                    continue;
                }
                let proj = reg.project(v, b).map_err(|e| e.to_string())?;
                ensure((proj.norm_sqr() - 1.0).abs() <= QUANTUM_TOL, || format!("projection norm {}", proj.norm_sqr()))?;
                ensure(close(proj.amplitudes(), &want), || format!("sequence {seq}: projection of {v} differs"))?;
            }
        }
        let h = gates.get("H").unwrap();
        let t = vars.choose(&mut rng).unwrap().clone();
        let hh = reg.apply_unitary(h, &[t.clone()]).and_then(|r| r.apply_unitary(h, &[t])).map_err(|e| e.to_string())?;
        ensure(close(hh.amplitudes(), reg.amplitudes()), || format!("sequence {seq}: H H is not the identity"))?;
    }

    let (a, b) = (Name::from("a"), Name::from("b"));
    let bell = QuantumRegister::basis(&[(a.clone(), false), (b.clone(), false)])
        .and_then(|r| r.apply_unitary(gates.get("H").unwrap(), &[a.clone()]))
        .and_then(|r| r.apply_unitary(gates.get("CNOT").unwrap(), &[a.clone(), b.clone()]))
        .map_err(|e| e.to_string())?;
    for outcome in [true, false] {
        let p = bell.measure_prob(&a, outcome).unwrap();
        ensure((p - 0.5).abs() <= QUANTUM_TOL, || format!("Bell outcome {outcome}: {p}"))?;
        let (_, want) = dense_projection(bell.amplitudes(), 2, 0, outcome);
        let post = bell.project(&a, outcome).map_err(|e| e.to_string())?;
        ensure(close(post.amplitudes(), &want), || format!("Bell collapse on {outcome}"))?;
        let q = post.measure_prob(&b, outcome).unwrap();
        ensure((q - 1.0).abs() <= QUANTUM_TOL, || format!("Bell partner agrees with probability {q}"))?;
    }

    let out = cmd_eval(&corpus("basics/hadamard.lin"), &RunConfig::default());
    let probs: BTreeMap<String, f64> = out
        .stdout
        .trim()
        .split(", ")
        .filter_map(|e| e.split_once(": "))
        .filter(|(k, _)| *k != "mass")
        .filter_map(|(k, v)| Some((k.to_string(), v.parse().ok()?)))
        .collect();
    ensure(
        probs.len() == 2 && probs.values().all(|p| (p - 0.5).abs() <= QUANTUM_TOL),
        || format!("meas(H<new(ff)>): {}", out.stdout.trim()),
    )?;
    Ok(format!("100 sequences, {applied} gates on up to 4 qubits"))
}

// 4

fn lts_determinism() -> Result<String, String> {
    let mode = CalculusMode::Det;
    let calc = Classical::new(mode);
    let gates = GateTable::builtin();
    let mut rng = StdRng::seed_from_u64(0xde7);
    let (mut states, mut moves) = (0, 0);
    for _ in 0..200 {
        let (t, ty) = random_closed(&mut rng, mode, 8);
        let basis = TestBasis::auto(&ty, mode, &gates, 3).map_err(|e| e.to_string())?;
        let ex = explore(&calc, &basis, &[LmcState::of_term(t.clone(), ty)], Some(6), MAX_STATES)
            .map_err(|e| e.to_string())?;
        for (s, state) in ex.states.iter().enumerate().filter(|(s, _)| ex.expanded[*s]) {
            states += 1;
            for (label, dist) in transitions(&calc, &basis, state).map_err(|e| e.to_string())? {
                moves += 1;
                let succ: Vec<_> = dist.iter().collect();
                ensure(
                    succ.len() <= 1 && succ.iter().all(|(_, p)| p.is_one()),
                    || format!("{state} --{label}--> {} successors", succ.len()),
                )?;
            }
            for (_, row) in ex.lmc.row(s) {
                ensure(row.len() <= 1 && row.iter().all(|(_, p)| p.is_one()), || format!("chain row of {state}"))?;
            }
        }
    }
    Ok(format!("200 programs, {states} states, {moves} labelled moves"))
}

// 5

fn counterexample() -> Result<String, String> {
    let (e, f) = (corpus("ex5-counterexample/e.lin"), corpus("ex5-counterexample/f.lin"));
    let cfg = RunConfig { depth: 3, basis_file: Some(corpus("ex5-counterexample/basis.json")), ..RunConfig::default() };
    let game = cmd_bisim(&[e.clone(), f.clone()], &cfg);
    ensure(game.code == 1 && game.stdout.starts_with("DISTINGUISHED"), || format!("bisim: {game:?}"))?;
    ensure(game.stdout.contains("arg tt : bool"), || format!("trace does not apply tt: {}", game.stdout))?;

    // The trace replays against the same one-entry basis.
    let mode = CalculusMode::Prob;
    let ty = Type::arrow(Type::Bool, Type::Bool);
    let file: BasisFile = serde_json::from_str(&std::fs::read_to_string(corpus("ex5-counterexample/basis.json")).unwrap())
        .map_err(|e| e.to_string())?;
    let basis = TestBasis::from_file(&file, &ty, mode, &GateTable::builtin(), false).map_err(|e| e.to_string())?;
    let calc = Classical::new(mode);
    let load = |p: &Path| parse(&std::fs::read_to_string(p).unwrap(), mode).unwrap();
    let res = game_distinguish(&calc, &basis, &QuantumClosure::pure(load(&e)), &QuantumClosure::pure(load(&f)), &ty, 3)
        .map_err(|e| e.to_string())?;
    let GameResult::Distinguished { trace, rounds, .. } = res else {
        return Err("game did not distinguish".into());
    };
    replay(&calc, &basis, &trace)?;

    let search = cmd_ctx_search(&e, &f, &RunConfig { ctx_bound: CTX_BOUND, ..RunConfig::default() });
    ensure(
        search.code == 0 && search.stdout.starts_with(&format!("NONE-UP-TO {CTX_BOUND}")),
        || format!("ctx-search: {search:?}"),
    )?;
    let examined = search.stdout.lines().nth(1).unwrap_or("").trim().to_string();
    Ok(format!("distinguished in {rounds} rounds with basis {{tt}}; no context up to size {CTX_BOUND} ({examined})"))
}

// 6

fn example_pairs() -> Result<String, String> {
    let cfg = RunConfig::default();
    let mut notes = Vec::new();
    for (dir, tol) in [("ex3-andor", 0.0), ("ex4-xflip", QUANTUM_TOL)] {
        let rel = cmd_bisim(&[], &RunConfig { relation: Some(corpus(&format!("{dir}/relation.json"))), tol, ..cfg.clone() });
        ensure(rel.code == 0 && rel.stdout.starts_with("HOLDS"), || format!("{dir} relation: {rel:?}"))?;
        let game = cmd_bisim(&[corpus(&format!("{dir}/e.lin")), corpus(&format!("{dir}/f.lin"))], &RunConfig { depth: 6, tol, ..cfg.clone() });
        ensure(
            game.code == 0 && game.stdout.starts_with("INDISTINGUISHABLE-UP-TO depth=6"),
            || format!("{dir} game: {game:?}"),
        )?;
        notes.push(format!("{dir}: {}", rel.stdout.lines().next().unwrap_or("")));
    }
    Ok(notes.join("; "))
}

// 7

fn random_lmc(rng: &mut StdRng) -> FiniteLmc<String, BigRational> {
    let n = rng.gen_range(1..=12);
    let labels = rng.gen_range(1..=3);
    let mut lmc = FiniteLmc::new();
    for s in 0..n {
        lmc.add_state(format!("s{s}"));
    }
    // A small pool of target shapes makes bisimilar states common.
    let weights = [(1, 1), (1, 2), (1, 3), (1, 4), (2, 3)];
    for s in 0..n {
        for l in 0..labels {
            if rng.gen_bool(0.3) {
                continue;
            }
            let label = lmc.label_id(&format!("l{l}"));
            let mut left = BigRational::one();
            let mut succ = Vec::new();
            for _ in 0..rng.gen_range(0..=3) {
                let (a, b) = *weights.choose(rng).unwrap();
                let w = BigRational::new(a.into(), b.into()).min(left.clone());
                left -= &w;
                if !w.is_zero() {
                    succ.push((rng.gen_range(0..n), w));
                }
            }
            lmc.set_row(s, label, succ);
        }
    }
    lmc
}

fn finite_laws() -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(0x1a3c);
    let (mut merged, mut symmetric_ok) = (0, 0);
    for i in 0..50 {
        let lmc = random_lmc(&mut rng);
        let n = lmc.len();
        let blocks = partition_refine(&lmc, 0.0);
        let pairs: Vec<(usize, usize)> = blocks.iter().flat_map(|b| b.windows(2).map(|w| (w[0], w[1]))).collect();
        merged += pairs.len();
        ensure(check_bisimulation(&lmc, &pairs, 0.0).holds(), || format!("chain {i}: partition is not a bisimulation"))?;
        let sim = largest_simulation(&lmc, 0.0).map_err(|e| e.to_string())?;
        let block_of = |s: usize| blocks.iter().position(|b| b.contains(&s)).unwrap();
        for s in 0..n {
            for t in 0..n {
                ensure(
                    (sim[s][t] && sim[t][s]) == (block_of(s) == block_of(t)),
                    || format!("chain {i}: s{s}, s{t} similarity and partition disagree"),
                )?;
            }
        }
        for _ in 0..20 {
            let mut rel: Vec<(usize, usize)> = Vec::new();
            if rng.gen_bool(0.5) && !pairs.is_empty() {
                rel.extend(pairs.choose_multiple(&mut rng, 2).copied());
            }
            for _ in 0..rng.gen_range(0..=2) {
                rel.push((rng.gen_range(0..n), rng.gen_range(0..n)));
            }
            let sym: Vec<(usize, usize)> = rel.iter().flat_map(|&(a, b)| [(a, b), (b, a)]).collect();
            if check_simulation(&lmc, &sym, 0.0).map_err(|e| e.to_string())?.holds() {
                symmetric_ok += 1;
                ensure(check_bisimulation(&lmc, &sym, 0.0).holds(), || format!("chain {i}: symmetric simulation {sym:?} is not a bisimulation"))?;
            }
        }
    }
    Ok(format!("50 chains, {merged} merged pairs, {symmetric_ok} symmetric simulations checked"))
}

// 8

/// Pairs of term states of a verified candidate relation, as closed
/// programs with their type.
fn verified_pairs<C: Calculus>(calc: &C, dir: &str, mode: CalculusMode) -> Result<Vec<(Term, Term, Type)>, String> {
    let rel: RelationFile = serde_json::from_str(&std::fs::read_to_string(corpus(&format!("{dir}/relation.json"))).unwrap())
        .map_err(|e| e.to_string())?;
    let ty = Type::parse(&rel.ty).map_err(|e| e.to_string())?;
    let gates = GateTable::builtin();
    let basis = TestBasis::auto(&ty, mode, &gates, linbis_core::bisim::DEFAULT_BASIS_SIZE).map_err(|e| e.to_string())?;
    let opts = ParseOptions::new(mode);
    let mut pairs = Vec::new();
    for (a, b) in &rel.pairs {
        let (s, t) = (
            LmcState::of_term(parse_with(a, &opts).unwrap(), ty.clone()),
            LmcState::of_term(parse_with(b, &opts).unwrap(), ty.clone()),
        );
        pairs.extend(lockstep_relation(calc, &basis, &s, &t, 100_000).map_err(|e| e.to_string())?);
    }
    ensure(check_candidate(calc, &basis, &pairs).map_err(|e| e.to_string())?.holds(), || format!("{dir}: relation fails"))?;
    Ok(pairs
        .into_iter()
        .filter(|(s, t)| s.closure.register.is_empty() && t.closure.register.is_empty())
        .map(|(s, t)| (s.closure.term, t.closure.term, s.ty))
        .collect())
}

fn soundness() -> Result<String, String> {
    let mut checked = 0;
    let mut examined = 0;
    let sets = [
        ("ex3-andor", CalculusMode::Det, verified_pairs(&Classical::new(CalculusMode::Det), "ex3-andor", CalculusMode::Det)?),
        (
            "ex4-xflip",
            CalculusMode::Quantum,
            verified_pairs(&Quantum::new(GateTable::builtin()), "ex4-xflip", CalculusMode::Quantum)?,
        ),
    ];
    for (dir, mode, pairs) in &sets {
        for (k, (e, f, ty)) in pairs.iter().enumerate() {
            // The related roots come first; they get the larger bound.
            let bound = if k == 0 { SOUNDNESS_BOUND } else { SOUNDNESS_PAIR_BOUND };
            let cfg = SearchConfig { program_ty: Some(ty.clone()), ..SearchConfig::new(*mode, bound) };
            match search_separating_context(e, f, &cfg).map_err(|err| format!("{dir}: {e} vs {f}: {err}"))? {
                SearchOutcome::NoneUpTo { examined: n, .. } => examined += n,
                SearchOutcome::Separating { context, .. } => {
                    return Err(format!("{dir}: verified pair {e} / {f} separated by {context}"));
                }
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} verified pairs, {examined} contexts, none separating"))
}
