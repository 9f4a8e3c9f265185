// SPDX-License-Identifier: Apache-2.0

//! Distribution semantics of the deterministic and probabilistic calculi.
//!
//! [`eval_big`] is the big-step judgement `e ⇓ E`, computed by structural
//! recursion. [`step`] is call-by-value, left-to-right one-step reduction
//! lifted to distributions. Both produce canonical (alpha-normalized)
//! terms, so equal distributions compare equal.

mod distribution;

use num_rational::BigRational;
use serde::Serialize;
use thiserror::Error;

use crate::syntax::{CalculusMode, Name, Term};

pub use distribution::{rational, Distribution, Probability, Support, FLOAT_EPSILON};

pub type Dist = Distribution<Term, BigRational>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("evaluation is stuck at `{0}`")]
    Stuck(String),
    #[error("{construct} cannot be evaluated without a quantum register")]
    NeedsRegister { construct: &'static str },
    #[error("free variable `{0}` reached during evaluation")]
    FreeVariable(Name),
}

/// `e ⇓ E` for closed, well-typed `e`.
pub fn eval_big(e: &Term, mode: CalculusMode) -> Result<Dist, EvalError> {
    let _ = mode;
    big(e)
}

fn big(e: &Term) -> Result<Dist, EvalError> {
    match e {
        v if v.is_value() => {
            if let Term::Var(x) = v {
                return Err(EvalError::FreeVariable(x.clone()));
            }
            Ok(Dist::dirac(v.canonical()))
        }
        Term::Omega => Ok(Dist::empty()),
        Term::App(fun, arg) => {
            let funs = big(fun)?;
            let args = big(arg)?;
            let mut out = Dist::empty();
            for (lam, p) in funs.iter() {
                let Term::Lam(x, _, body) = lam else {
                    return Err(EvalError::Stuck(e.to_string()));
                };
                for (v, q) in args.iter() {
                    let r = big(&body.subst(x, v))?;
                    out.add_scaled(&r, &p.mul(q));
                }
            }
            Ok(out)
        }
        Term::If(c, t, g) => {
            let conds = big(c)?;
            let mut out = Dist::empty();
            for (b, p) in conds.iter() {
                let branch = match b {
                    Term::Bool(true) => t,
                    Term::Bool(false) => g,
                    _ => return Err(EvalError::Stuck(e.to_string())),
                };
                out.add_scaled(&big(branch)?, p);
            }
            Ok(out)
        }
        Term::LetPair(s, x, y, body) => {
            let pairs = big(s)?;
            let mut out = Dist::empty();
            for (pv, p) in pairs.iter() {
                let Term::Pair(v, w) = pv else {
                    return Err(EvalError::Stuck(e.to_string()));
                };
                let inst = body.subst_many(&[(x.clone(), (**v).clone()), (y.clone(), (**w).clone())]);
                out.add_scaled(&big(&inst)?, p);
            }
            Ok(out)
        }
        Term::Choice(l, r) => {
            let mut out = big(l)?.scaled(&BigRational::half());
            out.add_scaled(&big(r)?, &BigRational::half());
            Ok(out)
        }
        Term::Meas(_) => Err(EvalError::NeedsRegister { construct: "meas" }),
        Term::New(_) => Err(EvalError::NeedsRegister { construct: "new" }),
        Term::Unitary(..) => Err(EvalError::NeedsRegister { construct: "unitary gate" }),
        _ => Err(EvalError::Stuck(e.to_string())),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepResult {
    ValueReached,
    Step(Dist),
}

/// One call-by-value step. Redexes are found left to right.
pub fn step(e: &Term, mode: CalculusMode) -> Result<StepResult, EvalError> {
    let _ = mode;
    if e.is_value() {
        return Ok(StepResult::ValueReached);
    }
    let d = step_raw(e)?;
    Ok(StepResult::Step(d.map(|t| t.canonical())))
}

fn lift(d: Dist, rebuild: impl Fn(Term) -> Term) -> Dist {
    d.map(|t| rebuild(t.clone()))
}

fn step_raw(e: &Term) -> Result<Dist, EvalError> {
    match e {
        Term::Omega => Ok(Dist::empty()),
        Term::Choice(l, r) => {
            let mut d = Dist::empty();
            d.add((**l).clone(), BigRational::half());
            d.add((**r).clone(), BigRational::half());
            Ok(d)
        }
        Term::App(f, a) if !f.is_value() => {
            let a = (**a).clone();
            Ok(lift(step_raw(f)?, move |f2| Term::app(f2, a.clone())))
        }
        Term::App(f, a) if !a.is_value() => {
            let f = (**f).clone();
            Ok(lift(step_raw(a)?, move |a2| Term::app(f.clone(), a2)))
        }
        Term::App(f, a) => match &**f {
            Term::Lam(x, _, body) => Ok(Dist::dirac(body.subst(x, a))),
            _ => Err(EvalError::Stuck(e.to_string())),
        },
        Term::If(c, t, g) => match &**c {
            Term::Bool(true) => Ok(Dist::dirac((**t).clone())),
            Term::Bool(false) => Ok(Dist::dirac((**g).clone())),
            c if !c.is_value() => {
                let (t, g) = ((**t).clone(), (**g).clone());
                Ok(lift(step_raw(c)?, move |c2| Term::ite(c2, t.clone(), g.clone())))
            }
            _ => Err(EvalError::Stuck(e.to_string())),
        },
        Term::LetPair(s, x, y, body) => match &**s {
            Term::Pair(v, w) if s.is_value() => Ok(Dist::dirac(
                body.subst_many(&[(x.clone(), (**v).clone()), (y.clone(), (**w).clone())]),
            )),
            s if !s.is_value() => {
                let (x, y, body) = (x.clone(), y.clone(), (**body).clone());
                Ok(lift(step_raw(s)?, move |s2| {
                    Term::LetPair(Box::new(s2), x.clone(), y.clone(), Box::new(body.clone()))
                }))
            }
            _ => Err(EvalError::Stuck(e.to_string())),
        },
        Term::Meas(_) => Err(EvalError::NeedsRegister { construct: "meas" }),
        Term::New(_) => Err(EvalError::NeedsRegister { construct: "new" }),
        Term::Unitary(..) => Err(EvalError::NeedsRegister { construct: "unitary gate" }),
        Term::Var(x) => Err(EvalError::FreeVariable(x.clone())),
        _ => Err(EvalError::Stuck(e.to_string())),
    }
}

/// Iterates [`step`] until only values remain. Agrees with [`eval_big`].
pub fn normalize_by_steps(e: &Term, mode: CalculusMode) -> Result<Dist, EvalError> {
    let mut frontier = Dist::dirac(e.canonical());
    let mut values = Dist::empty();
    while !frontier.is_empty() {
        let mut next = Dist::empty();
        for (t, p) in frontier.iter() {
            match step(t, mode)? {
                StepResult::ValueReached => values.add(t.clone(), p.clone()),
                StepResult::Step(d) => next.add_scaled(&d, p),
            }
        }
        frontier = next;
    }
    Ok(values)
}

/// Probability of convergence: the total mass of `⟦e⟧`.
pub fn observe(e: &Term, mode: CalculusMode) -> Result<BigRational, EvalError> {
    Ok(eval_big(e, mode)?.mass())
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceEvent {
    pub step: usize,
    pub term: String,
    /// `"reduce"` for a term that steps further, `"value"` for a final value.
    pub label: &'static str,
    pub probability: String,
}

/// Step-by-step reduction trace of the whole distribution.
pub fn trace(e: &Term, mode: CalculusMode) -> Result<Vec<TraceEvent>, EvalError> {
    let mut out = Vec::new();
    let mut frontier = Dist::dirac(e.canonical());
    let mut k = 0;
    while !frontier.is_empty() {
        let mut next = Dist::empty();
        for (t, p) in frontier.iter() {
            let result = step(t, mode)?;
            let label = match &result {
                StepResult::ValueReached => "value",
                StepResult::Step(_) => "reduce",
            };
            out.push(TraceEvent { step: k, term: t.to_string(), label, probability: p.to_string() });
            if let StepResult::Step(d) = result {
                next.add_scaled(&d, p);
            }
        }
        frontier = next;
        k += 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    fn prob(s: &str) -> Term {
        parse(s, CalculusMode::Prob).unwrap()
    }

    fn dist(entries: &[(&str, i64, i64)]) -> Dist {
        entries
            .iter()
            .map(|(t, n, d)| (prob(t).canonical(), rational(*n, *d)))
            .collect()
    }

    #[test]
    fn choice_rule() {
        let d = eval_big(&prob("tt (+) ff"), CalculusMode::Prob).unwrap();
        assert_eq!(d, dist(&[("tt", 1, 2), ("ff", 1, 2)]));
    }

    #[test]
    fn divergence_and_values() {
        assert!(eval_big(&Term::Omega, CalculusMode::Det).unwrap().is_empty());
        let id = prob(r"\x:bool. x");
        assert_eq!(eval_big(&id, CalculusMode::Det).unwrap(), Dist::dirac(id.canonical()));
    }

    #[test]
    fn nested_choice_and_application() {
        // Two applications of the choice rule: 1/2 * 1/2 each.
        let d = eval_big(&prob("(tt (+) ff) (+) omega"), CalculusMode::Prob).unwrap();
        assert_eq!(d, dist(&[("tt", 1, 4), ("ff", 1, 4)]));
        let d = eval_big(&prob(r"(\x:bool. x) (tt (+) omega)"), CalculusMode::Prob).unwrap();
        assert_eq!(d, dist(&[("tt", 1, 2)]));
    }

    #[test]
    fn alpha_equivalent_values_merge() {
        let d = eval_big(&prob(r"(\x:bool. x) (+) (\y:bool. y)"), CalculusMode::Prob).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.mass(), rational(1, 1));
    }

    #[test]
    fn small_steps() {
        let s = step(&prob(r"(\x:bool. x) tt"), CalculusMode::Det).unwrap();
        assert_eq!(s, StepResult::Step(Dist::dirac(Term::Bool(true))));
        let s = step(&prob("tt (+) ff"), CalculusMode::Prob).unwrap();
        assert_eq!(s, StepResult::Step(dist(&[("tt", 1, 2), ("ff", 1, 2)])));
        let s = step(&prob("let <a, b> = <tt, ff> in if a then b else (if b then ff else ff)"), CalculusMode::Det)
            .unwrap();
        let want = prob("if tt then ff else (if ff then ff else ff)");
        assert_eq!(s, StepResult::Step(Dist::dirac(want.canonical())));
        assert_eq!(step(&Term::Omega, CalculusMode::Det).unwrap(), StepResult::Step(Dist::empty()));
        assert_eq!(step(&Term::Bool(true), CalculusMode::Det).unwrap(), StepResult::ValueReached);
    }

    #[test]
    fn steps_agree_with_big_step() {
        for src in [
            "tt (+) ff",
            "omega",
            r"\x:bool. x",
            "(tt (+) ff) (+) omega",
            r"(\x:bool. x) (tt (+) omega)",
            r"(\f:bool -o bool. f tt) ((\x:bool. x) (+) (\x:bool. if x then ff else tt))",
        ] {
            let e = prob(src);
            assert_eq!(
                normalize_by_steps(&e, CalculusMode::Prob).unwrap(),
                eval_big(&e, CalculusMode::Prob).unwrap(),
                "{src}"
            );
        }
    }

    #[test]
    fn observation() {
        assert_eq!(observe(&prob("tt (+) omega"), CalculusMode::Prob).unwrap(), rational(1, 2));
        assert_eq!(observe(&Term::Bool(true), CalculusMode::Det).unwrap(), rational(1, 1));
        assert_eq!(observe(&Term::Omega, CalculusMode::Det).unwrap(), rational(0, 1));
    }

    #[test]
    fn weakening_behaves_like_body() {
        for b in ["tt", "ff"] {
            let e = prob(&format!(r"(\x:bool. weak x in (tt (+) ff)) {b}"));
            assert_eq!(eval_big(&e, CalculusMode::Prob).unwrap(), dist(&[("tt", 1, 2), ("ff", 1, 2)]));
        }
        let e = prob(r"(\x:bool. weak x in omega) tt");
        assert!(eval_big(&e, CalculusMode::Det).unwrap().is_empty());
    }

    #[test]
    fn diverging_pair_component() {
        let e = parse("<omega, tt>", CalculusMode::Det).unwrap();
        assert!(eval_big(&e, CalculusMode::Det).unwrap().is_empty());
    }

    #[test]
    fn trace_ends_with_values() {
        let t = trace(&prob(r"(\x:bool. x) (tt (+) ff)"), CalculusMode::Prob).unwrap();
        let values: Vec<_> = t.iter().filter(|e| e.label == "value").collect();
        assert_eq!(values.len(), 2);
        assert!(values.iter().all(|e| e.probability == "1/2"));
    }
}
