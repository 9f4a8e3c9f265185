// SPDX-License-Identifier: Apache-2.0

//! Bounded refutation game: bisimilarity approximants over the explored
//! fragment, with a replayable distinguishing trace.

use serde_json::{json, Value};

use super::finite::{first_mismatch, refine_once};
use super::{explore, transitions, BisimError, Calculus, Label, LmcState, TestBasis, MAX_STATES};
use crate::quantum::QuantumClosure;
use crate::semantics::{Probability, Support};
use crate::typecheck::Type;

/// One link of a distinguishing trace: under `label`, `left` and `right`
/// give different probability to `class`. Consecutive steps follow the
/// transitions of the previous step's label.
#[derive(Debug, Clone)]
pub struct TraceStep<P> {
    pub left: LmcState,
    pub right: LmcState,
    pub label: Label,
    pub class: Vec<LmcState>,
    pub p_left: P,
    pub p_right: P,
}

#[derive(Debug, Clone)]
pub enum GameResult<P> {
    Distinguished { rounds: usize, trace: Vec<TraceStep<P>>, fingerprint: String },
    IndistinguishableUpTo { depth: usize, states: usize, fingerprint: String },
}

impl<P: Probability> GameResult<P> {
    pub fn is_distinguished(&self) -> bool {
        matches!(self, GameResult::Distinguished { .. })
    }

    pub fn to_json(&self, basis: &TestBasis) -> Value {
        match self {
            GameResult::Distinguished { rounds, trace, fingerprint } => json!({
                "verdict": "distinguished",
                "rounds": rounds,
                "basis": fingerprint,
                "trace": trace.iter().map(|s| json!({
                    "left": s.left.to_string(),
                    "right": s.right.to_string(),
                    "label": basis.describe(&s.label),
                    "class": s.class.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                    "p_left": s.p_left.to_string(),
                    "p_right": s.p_right.to_string(),
                })).collect::<Vec<_>>(),
            }),
            GameResult::IndistinguishableUpTo { depth, states, fingerprint } => json!({
                "verdict": "indistinguishable-up-to",
                "depth": depth,
                "states": states,
                "basis": fingerprint,
            }),
        }
    }
}

/// Plays `depth` rounds (an evaluation followed by an observation each)
/// from `(e, A)` and `(f, A)`. Refinement runs for `2 * depth` rounds
/// over states within `2 * depth` transitions, which is exactly the
/// information the approximant of that order depends on.
pub fn game_distinguish<C: Calculus>(
    calc: &C,
    basis: &TestBasis,
    e: &QuantumClosure,
    f: &QuantumClosure,
    ty: &Type,
    depth: usize,
) -> Result<GameResult<C::P>, BisimError> {
    let rounds = 2 * depth;
    let roots = [LmcState::term(e.clone(), ty.clone()), LmcState::term(f.clone(), ty.clone())];
    let ex = explore(calc, basis, &roots, Some(rounds), MAX_STATES)?;
    let (a, b) = (ex.index_of(&roots[0]).expect("root"), ex.index_of(&roots[1]).expect("root"));
    let tol = calc.tolerance();
    let mut history = vec![vec![0; ex.lmc.len()]];
    for _ in 0..rounds {
        let last = history.last().expect("round 0");
        let next = refine_once(&ex.lmc, last, tol);
        let stable = next == *last;
        history.push(next);
        if stable || history.last().unwrap()[a] != history.last().unwrap()[b] {
            break;
        }
    }
    let fingerprint = basis.fingerprint();
    let last = history.last().expect("round 0");
    if last[a] == last[b] {
        return Ok(GameResult::IndistinguishableUpTo { depth, states: ex.lmc.len(), fingerprint });
    }

    let split = |s: usize, t: usize| history.iter().position(|h| h[s] != h[t]).expect("states are split");
    let mut trace = Vec::new();
    let (mut s, mut t) = (a, b);
    loop {
        let r = split(s, t);
        let before = &history[r - 1];
        let (label, block, ps, pt) = first_mismatch(&ex.lmc.signature(s, before), &ex.lmc.signature(t, before), tol)
            .expect("split states differ on some class");
        let class: Vec<usize> = (0..ex.lmc.len()).filter(|&u| before[u] == block).collect();
        trace.push(TraceStep {
            left: ex.states[s].clone(),
            right: ex.states[t].clone(),
            label: ex.lmc.label(label).clone(),
            class: class.iter().map(|&u| ex.states[u].clone()).collect(),
            p_left: ps.clone(),
            p_right: pt.clone(),
        });
        // Continue with a successor inside the class from the side with more
        // mass there and one outside it from the other side.
        let left_heavy = pt.approx_le(&ps, tol);
        let (heavy, light) = if left_heavy { (s, t) } else { (t, s) };
        let inside = ex.lmc.successors(heavy, label).iter().map(|(u, _)| *u).find(|u| before[*u] == block);
        let outside = ex.lmc.successors(light, label).iter().map(|(u, _)| *u).find(|u| before[*u] != block);
        match (inside, outside) {
            (Some(u), Some(v)) if r > 1 => (s, t) = if left_heavy { (u, v) } else { (v, u) },
            _ => break,
        }
    }
    Ok(GameResult::Distinguished { rounds: split(a, b), trace, fingerprint })
}

/// Recomputes every step of a trace from the transition function and
/// checks the recorded probabilities, the mismatch, and that each step
/// follows from the previous one.
pub fn replay<C: Calculus>(calc: &C, basis: &TestBasis, trace: &[TraceStep<C::P>]) -> Result<(), String> {
    let tol = calc.tolerance();
    let dist_of = |s: &LmcState, label: &Label| -> Result<crate::semantics::Distribution<LmcState, C::P>, String> {
        let ts = transitions(calc, basis, s).map_err(|e| e.to_string())?;
        Ok(ts.into_iter().find(|(l, _)| l == label).map(|(_, d)| d).unwrap_or_default())
    };
    if trace.is_empty() {
        return Err("empty trace".into());
    }
    for (i, step) in trace.iter().enumerate() {
        let (dl, dr) = (dist_of(&step.left, &step.label)?, dist_of(&step.right, &step.label)?);
        let mass = |d: &crate::semantics::Distribution<LmcState, C::P>| {
            d.iter().filter(|(u, _)| step.class.iter().any(|c| c.same(u))).fold(C::P::zero(), |acc, (_, p)| acc.add(p))
        };
        let (pl, pr) = (mass(&dl), mass(&dr));
        if !pl.approx_eq(&step.p_left, tol) || !pr.approx_eq(&step.p_right, tol) {
            return Err(format!("step {i}: recomputed {pl} vs {pr}, recorded {} vs {}", step.p_left, step.p_right));
        }
        if pl.approx_eq(&pr, tol) {
            return Err(format!("step {i}: no mismatch ({pl} on both sides)"));
        }
        if let Some(next) = trace.get(i + 1) {
            if dl.get(&next.left).is_negligible() || dr.get(&next.right).is_negligible() {
                return Err(format!("step {}: not reached from step {i}", i + 1));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bisim::{BasisFile, Classical};
    use crate::quantum::GateTable;
    use crate::syntax::{parse, CalculusMode, Term};

    #[test]
    fn constants_are_told_apart_in_one_round() {
        let calc = Classical::new(CalculusMode::Det);
        let basis = TestBasis::auto(&Type::Bool, CalculusMode::Det, &GateTable::builtin(), 3).unwrap();
        let (e, f) = (QuantumClosure::pure(Term::Bool(true)), QuantumClosure::pure(Term::Bool(false)));
        let res = game_distinguish(&calc, &basis, &e, &f, &Type::Bool, 1).unwrap();
        let GameResult::Distinguished { trace, rounds, .. } = &res else { panic!("{res:?}") };
        assert_eq!(*rounds, 2);
        assert_eq!(trace.len(), 2);
        assert_eq!(trace[0].label, Label::Eval);
        assert_eq!(trace[1].label, Label::TT);
        assert_eq!(trace[1].p_left.to_string(), "1");
        assert_eq!(trace[1].p_right.to_string(), "0");
        replay(&calc, &basis, trace).unwrap();
    }

    #[test]
    fn choice_inside_or_outside_the_abstraction() {
        let mode = CalculusMode::Prob;
        let calc = Classical::new(mode);
        let ty = Type::arrow(Type::Bool, Type::Bool);
        let file: BasisFile = serde_json::from_str(r#"{"args": {"bool": ["tt"]}}"#).unwrap();
        let basis = TestBasis::from_file(&file, &ty, mode, &GateTable::builtin(), true).unwrap();
        let e = parse(r"\x:bool. weak x in (tt (+) ff)", mode).unwrap();
        let f = parse(r"(\x:bool. weak x in tt) (+) (\x:bool. weak x in ff)", mode).unwrap();
        let (e, f) = (QuantumClosure::pure(e), QuantumClosure::pure(f));
        assert!(!game_distinguish(&calc, &basis, &e, &f, &ty, 1).unwrap().is_distinguished());
        let res = game_distinguish(&calc, &basis, &e, &f, &ty, 3).unwrap();
        let GameResult::Distinguished { trace, .. } = &res else { panic!("{res:?}") };
        assert_eq!(trace[0].label, Label::Eval);
        replay(&calc, &basis, trace).unwrap();
        let same = game_distinguish(&calc, &basis, &e, &e, &ty, 3).unwrap();
        assert!(!same.is_distinguished());
    }

    #[test]
    fn tampered_traces_do_not_replay() {
        let calc = Classical::new(CalculusMode::Det);
        let basis = TestBasis::auto(&Type::Bool, CalculusMode::Det, &GateTable::builtin(), 3).unwrap();
        let (e, f) = (QuantumClosure::pure(Term::Bool(true)), QuantumClosure::pure(Term::Bool(false)));
        let GameResult::Distinguished { mut trace, .. } = game_distinguish(&calc, &basis, &e, &f, &Type::Bool, 2).unwrap()
        else {
            panic!()
        };
        trace[1].p_left = <num_rational::BigRational as Probability>::half();
        assert!(replay(&calc, &basis, &trace).is_err());
    }
}
