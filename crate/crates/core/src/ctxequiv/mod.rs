// SPDX-License-Identifier: Apache-2.0

//! Bounded search for contexts that separate two terms.

mod enumerate;

pub use enumerate::Enumerator;

use std::fmt;

use num_rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::quantum::{observe_quantum, GateTable, QuantumError};
use crate::semantics::{observe, EvalError, Probability};
use crate::syntax::{CalculusMode, Name, Term};
use crate::typecheck::{check_type, common_type, typecheck_with_gates, Type, TypeError, TypingContext};

#[derive(Debug, Error)]
pub enum CtxError {
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error("the two terms have different types: {left} and {right}")]
    TypeMismatch { left: Type, right: Type },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error("hole contexts with quantum variables are not enumerated")]
    QuantumHoleContext,
}

/// Plug `e` into the hole of `c`. Capture of the hole's variables is intended.
pub fn fill(c: &Term, e: &Term) -> Term {
    c.plug(e)
}

/// Every context of size at most `bound`, ordered by size and then by
/// generation order.
pub fn enumerate_contexts(
    hole_ctx: &TypingContext,
    hole_ty: &Type,
    result_ty: &Type,
    bound: usize,
    mode: CalculusMode,
    gates: &GateTable,
) -> Result<Vec<Term>, CtxError> {
    let mut en = context_enumerator(hole_ctx, hole_ty, result_ty, mode, gates)?;
    let mut out = Vec::new();
    for n in 1..=bound {
        out.extend(en.contexts(result_ty, n).iter().cloned());
    }
    Ok(out)
}

fn context_enumerator(
    hole_ctx: &TypingContext,
    hole_ty: &Type,
    result_ty: &Type,
    mode: CalculusMode,
    gates: &GateTable,
) -> Result<Enumerator, CtxError> {
    if hole_ctx.qvars().next().is_some() {
        return Err(CtxError::QuantumHoleContext);
    }
    let delta: Vec<(Name, Type)> = hole_ctx.vars().map(|(n, t)| (n.clone(), t.clone())).collect();
    Ok(Enumerator::for_contexts(mode, &delta, hole_ty, result_ty, gates))
}

/// Probability of termination of a program.
#[derive(Debug, Clone, PartialEq)]
pub enum Observation {
    Exact(BigRational),
    Approx(f64),
}

impl Observation {
    fn differs(&self, other: &Observation, tol: f64) -> bool {
        match (self, other) {
            (Observation::Exact(a), Observation::Exact(b)) => a != b,
            (a, b) => (a.to_f64() - b.to_f64()).abs() > tol,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Observation::Exact(r) => r.to_f64(),
            Observation::Approx(x) => *x,
        }
    }
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observation::Exact(r) => write!(f, "{r}"),
            Observation::Approx(x) => write!(f, "{x:.6}"),
        }
    }
}

impl Serialize for Observation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub mode: CalculusMode,
    pub bound: usize,
    /// Type of the observed program; ground by default.
    pub result_ty: Type,
    pub gates: GateTable,
    pub tol: f64,
    /// Type of the compared programs; inferred when absent.
    pub program_ty: Option<Type>,
}

impl SearchConfig {
    pub fn new(mode: CalculusMode, bound: usize) -> Self {
        SearchConfig { mode, bound, result_ty: Type::Bool, gates: GateTable::builtin(), tol: crate::quantum::TOLERANCE, program_ty: None }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum SearchOutcome {
    Separating {
        #[serde(serialize_with = "crate::ctxequiv::ser_term")]
        context: Term,
        size: usize,
        left: Observation,
        right: Observation,
        examined: usize,
    },
    NoneUpTo {
        bound: usize,
        examined: usize,
    },
}

pub(crate) fn ser_term<S: serde::Serializer>(t: &Term, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&t.to_string())
}

/// Observe a closed program at ground type.
pub fn observe_in(e: &Term, mode: CalculusMode, gates: &GateTable) -> Result<Observation, CtxError> {
    Ok(match mode {
        CalculusMode::Quantum => Observation::Approx(observe_quantum(e, gates)?),
        _ => Observation::Exact(observe(e, mode)?),
    })
}

/// Smallest context (then first in generation order) whose termination
/// probability differs on `e` and `f`. Runs on the current rayon pool.
pub fn search_separating_context(e: &Term, f: &Term, cfg: &SearchConfig) -> Result<SearchOutcome, CtxError> {
    let empty = TypingContext::empty();
    let ty = match &cfg.program_ty {
        Some(ty) => {
            check_type(&empty, e, ty, cfg.mode, &cfg.gates)?;
            check_type(&empty, f, ty, cfg.mode, &cfg.gates)?;
            ty.clone()
        }
        None => match common_type(e, f, cfg.mode, &cfg.gates)? {
            Some(ty) => ty,
            None => {
                let left = typecheck_with_gates(&empty, e, cfg.mode, &cfg.gates)?;
                let right = typecheck_with_gates(&empty, f, cfg.mode, &cfg.gates)?;
                return Err(CtxError::TypeMismatch { left, right });
            }
        },
    };
    // Alpha-equivalent programs fill every context identically.
    if e.alpha_eq(f) {
        return Ok(SearchOutcome::NoneUpTo { bound: cfg.bound, examined: 0 });
    }
    let mut en = context_enumerator(&empty, &ty, &cfg.result_ty, cfg.mode, &cfg.gates)?;
    let mut examined = 0;
    for size in 1..=cfg.bound {
        let contexts = en.contexts(&cfg.result_ty, size);
        let hit = contexts
            .par_iter()
            .map(|c| -> Result<Option<(Term, Observation, Observation)>, CtxError> {
                let l = observe_in(&fill(c, e), cfg.mode, &cfg.gates)?;
                let r = observe_in(&fill(c, f), cfg.mode, &cfg.gates)?;
                Ok(l.differs(&r, cfg.tol).then(|| (c.clone(), l, r)))
            })
            .find_map_first(|res| match res {
                Ok(None) => None,
                other => Some(other),
            });
        match hit {
            Some(Ok(Some((context, left, right)))) => {
                let pos = contexts.iter().position(|c| *c == context).unwrap_or(0);
                return Ok(SearchOutcome::Separating { context, size, left, right, examined: examined + pos + 1 });
            }
            Some(Err(err)) => return Err(err),
            _ => examined += contexts.len(),
        }
    }
    Ok(SearchOutcome::NoneUpTo { bound: cfg.bound, examined })
}
