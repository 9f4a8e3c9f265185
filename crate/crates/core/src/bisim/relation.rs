// SPDX-License-Identifier: Apache-2.0

//! Candidate relations over terms: files, lockstep derivation and checks.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::finite::{check_bisimulation, check_simulation, Verdict};
use super::{explore, transitions, BisimError, Calculus, LmcState, TestBasis, MAX_STATES};
use crate::semantics::{Probability, Support};
use crate::syntax::{Name, Term};
use crate::typecheck::{Type, TypingContext};

/// `{"type": "A", "pairs": [["e", "f"], ...]}`. Terms are parsed in the
/// calculus the check runs in; every pair is read as two term states of
/// type `A`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationFile {
    #[serde(rename = "type")]
    pub ty: String,
    pub pairs: Vec<(String, String)>,
    /// Add the pairs reached by matching deterministic moves.
    #[serde(default)]
    pub lockstep: bool,
    /// Calculus the pairs are written in; `det` when absent.
    #[serde(default)]
    pub mode: Option<crate::syntax::CalculusMode>,
}

#[derive(Debug, Clone)]
pub enum TermVerdict<P> {
    Holds {
        relation_size: usize,
        state_count: usize,
    },
    Fails {
        left: LmcState,
        right: LmcState,
        label: String,
        class: Vec<LmcState>,
        p_left: P,
        p_right: P,
    },
}

impl<P: Probability> TermVerdict<P> {
    pub fn holds(&self) -> bool {
        matches!(self, TermVerdict::Holds { .. })
    }

    pub fn to_json(&self) -> Value {
        match self {
            TermVerdict::Holds { relation_size, state_count } => {
                json!({"verdict": "holds", "relation_size": relation_size, "states": state_count})
            }
            TermVerdict::Fails { left, right, label, class, p_left, p_right } => json!({
                "verdict": "fails",
                "left": left.to_string(),
                "right": right.to_string(),
                "label": label,
                "class": class.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                "p_left": p_left.to_string(),
                "p_right": p_right.to_string(),
            }),
        }
    }
}

/// Pairs reached from `(s, t)` by equal labels whose distributions on both
/// sides are Dirac. Non-Dirac moves are left to the reflexive part of the
/// closure: they are matched only when both sides reach identical states.
pub fn lockstep_relation<C: Calculus>(
    calc: &C,
    basis: &TestBasis,
    s: &LmcState,
    t: &LmcState,
    max_pairs: usize,
) -> Result<Vec<(LmcState, LmcState)>, BisimError> {
    let mut out: Vec<(LmcState, LmcState)> = Vec::new();
    let mut queue = VecDeque::from([(s.clone(), t.clone())]);
    while let Some((a, b)) = queue.pop_front() {
        if out.iter().any(|(x, y)| x.same(&a) && y.same(&b)) {
            continue;
        }
        if out.len() >= max_pairs {
            return Err(BisimError::TooManyStates(max_pairs));
        }
        let (ta, tb) = (transitions(calc, basis, &a)?, transitions(calc, basis, &b)?);
        out.push((a.clone(), b.clone()));
        for (label, da) in ta {
            let Some((_, db)) = tb.iter().find(|(l, _)| *l == label) else { continue };
            if let ([(x, p)], [(y, q)]) = (da.iter().collect::<Vec<_>>().as_slice(), db.iter().collect::<Vec<_>>().as_slice()) {
                if p.approx_eq(&C::P::one(), 0.0) && q.approx_eq(&C::P::one(), 0.0) && !x.same(y) {
                    queue.push_back(((*x).clone(), (*y).clone()));
                }
            }
        }
    }
    Ok(out)
}

fn check_types(pairs: &[(LmcState, LmcState)]) -> Result<(), BisimError> {
    for (a, b) in pairs {
        if a.ty != b.ty {
            return Err(BisimError::TypeMismatch { left: a.ty.clone(), right: b.ty.clone() });
        }
    }
    Ok(())
}

fn verdict_for<C: Calculus>(
    ex: &super::Explored<C::P>,
    basis: &TestBasis,
    v: Verdict<C::P>,
) -> TermVerdict<C::P> {
    match v {
        Verdict::Holds { relation_size, state_count } => TermVerdict::Holds { relation_size, state_count },
        Verdict::Fails(w) => TermVerdict::Fails {
            left: ex.states[w.left].clone(),
            right: ex.states[w.right].clone(),
            label: basis.describe(ex.lmc.label(w.label)),
            class: w.class.iter().map(|&u| ex.states[u].clone()).collect(),
            p_left: w.p_left,
            p_right: w.p_right,
        },
    }
}

fn indexed<P: Probability>(ex: &super::Explored<P>, pairs: &[(LmcState, LmcState)]) -> Vec<(usize, usize)> {
    pairs
        .iter()
        .map(|(a, b)| (ex.index_of(a).expect("explored"), ex.index_of(b).expect("explored")))
        .collect()
}

fn roots(pairs: &[(LmcState, LmcState)]) -> Vec<LmcState> {
    pairs.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect()
}

/// Whether the equivalence closure of `pairs`, over everything reachable
/// from them, is a bisimulation with respect to `basis`.
pub fn check_candidate<C: Calculus>(
    calc: &C,
    basis: &TestBasis,
    pairs: &[(LmcState, LmcState)],
) -> Result<TermVerdict<C::P>, BisimError> {
    check_types(pairs)?;
    let ex = explore(calc, basis, &roots(pairs), None, MAX_STATES)?;
    let v = check_bisimulation(&ex.lmc, &indexed(&ex, pairs), calc.tolerance());
    Ok(verdict_for::<C>(&ex, basis, v))
}

/// Whether the preorder closure of the ordered `pairs` is a simulation.
pub fn check_candidate_simulation<C: Calculus>(
    calc: &C,
    basis: &TestBasis,
    pairs: &[(LmcState, LmcState)],
) -> Result<TermVerdict<C::P>, BisimError> {
    check_types(pairs)?;
    let ex = explore(calc, basis, &roots(pairs), None, MAX_STATES)?;
    let v = check_simulation(&ex.lmc, &indexed(&ex, pairs), calc.tolerance())?;
    Ok(verdict_for::<C>(&ex, basis, v))
}

/// The open extension, finitized: every closing substitution of basis
/// values for the variables of `ctx`. The basis must cover the variable
/// types, e.g. by building it for [`open_type`].
pub fn close_open_pair(
    ctx: &TypingContext,
    e: &Term,
    f: &Term,
    basis: &TestBasis,
) -> Result<Vec<(Term, Term)>, BisimError> {
    let mut out = vec![(e.clone(), f.clone())];
    for (x, ty) in ctx.vars() {
        let values = basis.args(ty)?;
        let mut next = Vec::new();
        for (a, b) in &out {
            for v in values {
                if !v.register.is_empty() {
                    continue;
                }
                next.push((a.subst(x, &v.term), b.subst(x, &v.term)));
            }
        }
        out = next;
    }
    Ok(out)
}

/// `A1 -o ... -o An -o A` for `ctx = x1:A1, ..., xn:An`.
pub fn open_type(ctx: &TypingContext, ty: &Type) -> Type {
    let vars: Vec<(&Name, &Type)> = ctx.vars().collect();
    vars.iter().rev().fold(ty.clone(), |acc, (_, t)| Type::arrow((*t).clone(), acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bisim::{Classical, Quantum};
    use crate::quantum::{GateTable, QuantumClosure};
    use crate::syntax::{parse, CalculusMode};

    fn state(src: &str, mode: CalculusMode, ty: &Type) -> LmcState {
        LmcState::of_term(parse(src, mode).unwrap(), ty.clone())
    }

    #[test]
    fn identity_holds_and_constants_fail() {
        let calc = Classical::new(CalculusMode::Det);
        let basis = TestBasis::auto(&Type::Bool, CalculusMode::Det, &GateTable::builtin(), 3).unwrap();
        let tt = state("tt", CalculusMode::Det, &Type::Bool);
        let ff = state("ff", CalculusMode::Det, &Type::Bool);
        assert!(check_candidate(&calc, &basis, &[(tt.clone(), tt.clone())]).unwrap().holds());
        let failing_label = |pairs: &[(LmcState, LmcState)]| match check_candidate(&calc, &basis, pairs).unwrap() {
            TermVerdict::Fails { label, p_left, p_right, .. } => {
                assert_ne!(p_left, p_right);
                label
            }
            v => panic!("{v:?}"),
        };
        assert_eq!(failing_label(&[(tt, ff)]), "eval");
        let value = |b| LmcState::value(QuantumClosure::pure(Term::Bool(b)), Type::Bool);
        assert_eq!(failing_label(&[(value(true), value(false))]), "tt");
    }

    #[test]
    fn divergence_is_simulated_by_anything() {
        let calc = Classical::new(CalculusMode::Det);
        let basis = TestBasis::auto(&Type::Bool, CalculusMode::Det, &GateTable::builtin(), 3).unwrap();
        let om = state("omega", CalculusMode::Det, &Type::Bool);
        let tt = state("tt", CalculusMode::Det, &Type::Bool);
        assert!(check_candidate_simulation(&calc, &basis, &[(om.clone(), tt.clone())]).unwrap().holds());
        let back = check_candidate_simulation(&calc, &basis, &[(tt, om)]).unwrap();
        match back {
            TermVerdict::Fails { label, .. } => assert_eq!(label, "eval"),
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn lockstep_relation_for_the_qubit_flip() {
        let calc = Quantum::new(GateTable::builtin());
        let ty = Type::arrow(Type::Qbit, Type::Bool);
        let basis = TestBasis::auto(&ty, CalculusMode::Quantum, &GateTable::builtin(), 3).unwrap();
        let e = state(r"\x:qbit. if meas(x) then ff else tt", CalculusMode::Quantum, &ty);
        let f = state(r"\x:qbit. meas(X<x>)", CalculusMode::Quantum, &ty);
        let rel = lockstep_relation(&calc, &basis, &e, &f, 1000).unwrap();
        assert_eq!(rel.len(), 2 + basis.args(&Type::Qbit).unwrap().len());
        assert!(check_candidate(&calc, &basis, &rel).unwrap().holds());
        let g = state(r"\x:qbit. meas(x)", CalculusMode::Quantum, &ty);
        let bad = lockstep_relation(&calc, &basis, &e, &g, 1000).unwrap();
        assert!(!check_candidate(&calc, &basis, &bad).unwrap().holds());
    }

    #[test]
    fn open_terms_are_closed_with_basis_values() {
        let ctx = TypingContext::empty().with_var("z", Type::Bool);
        let basis = TestBasis::auto(&open_type(&ctx, &Type::Bool), CalculusMode::Det, &GateTable::builtin(), 3).unwrap();
        let e = parse("if z then ff else tt", CalculusMode::Det).unwrap();
        let f = parse("not z", CalculusMode::Det).unwrap();
        let closed = close_open_pair(&ctx, &e, &f, &basis).unwrap();
        assert_eq!(closed.len(), 2);
        let calc = Classical::new(CalculusMode::Det);
        let pairs: Vec<_> = closed
            .into_iter()
            .map(|(a, b)| (LmcState::term(QuantumClosure::pure(a), Type::Bool), LmcState::of_term(b, Type::Bool)))
            .collect();
        assert!(check_candidate(&calc, &basis, &pairs).unwrap().holds());
    }
}
