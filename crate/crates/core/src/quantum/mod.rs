// SPDX-License-Identifier: Apache-2.0

//! Quantum registers and the closure semantics of the quantum calculus.
//!
//! A closure `[Q, e]` pairs a register with a term whose quantum
//! variables live in the register. Evaluation yields a float-weighted
//! distribution of value closures. Closures are identified up to
//! renaming of quantum variables, reordering of the register and global
//! phase (see [`canonicalize_closure`]).

mod gates;
mod register;

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::semantics::{Distribution, Support};
use crate::syntax::{parse, CalculusMode, Name, Term};

pub use gates::{Gate, GateError, GateSpec, GateTable};
pub use register::QuantumRegister;

/// Tolerance for amplitude and probability comparisons.
pub const TOLERANCE: f64 = 1e-9;

/// Measurement outcomes at or below this probability are dropped.
pub const BRANCH_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error("quantum variable `{0}` is not in the register")]
    UnknownVariable(Name),
    #[error("quantum variable `{0}` occurs twice")]
    DuplicateVariable(Name),
    #[error("measuring `{var}` cannot give {outcome}: probability is zero")]
    ZeroProbabilityBranch { var: Name, outcome: bool },
    #[error("gate `{gate}` takes {expected} qubits, got {found}")]
    ArityMismatch {
        gate: String,
        expected: usize,
        found: usize,
    },
    #[error("unknown gate `{0}`")]
    UnknownGate(Name),
    #[error("{vars} variables need {} amplitudes, found {amplitudes}", 1usize << vars)]
    BadDimension { vars: usize, amplitudes: usize },
    #[error("register is not normalized (squared norm {0})")]
    NotNormalized(f64),
    #[error("quantum evaluation is stuck at `{0}`")]
    Stuck(String),
    #[error("malformed closure: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumClosure {
    pub register: QuantumRegister,
    pub term: Term,
}

impl QuantumClosure {
    pub fn new(register: QuantumRegister, term: Term) -> Result<Self, QuantumError> {
        for r in term.quantum_vars() {
            if !register.contains(&r) {
                return Err(QuantumError::UnknownVariable(r));
            }
        }
        Ok(QuantumClosure { register, term })
    }

    /// `[empty, e]`.
    pub fn pure(term: Term) -> Self {
        QuantumClosure { register: QuantumRegister::empty(), term }
    }

    pub fn is_value(&self) -> bool {
        self.term.is_value()
    }

    pub fn canonical(&self) -> Self {
        canonicalize_closure(self)
    }

    /// Equality of canonical forms, amplitudes within `tol`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let (a, b) = (self.canonical(), other.canonical());
        a.term == b.term && a.register.approx_eq(&b.register, tol)
    }

    pub fn to_json(&self) -> ClosureDump {
        ClosureDump {
            vars: self.register.vars().iter().map(|v| v.to_string()).collect(),
            amplitudes: self.register.amplitudes().iter().map(|a| [a.re, a.im]).collect(),
            term: self.term.to_string(),
        }
    }

    pub fn from_json(dump: &ClosureDump) -> Result<Self, QuantumError> {
        let term = parse(&dump.term, CalculusMode::Quantum)
            .map_err(|e| QuantumError::Malformed(e.to_string()))?;
        let vars = dump.vars.iter().map(|v| Name::new(v)).collect();
        let amps = dump.amplitudes.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
        QuantumClosure::new(QuantumRegister::from_parts(vars, amps)?, term)
    }
}

/// JSON form of a closure: `{vars, amplitudes: [[re, im], ...], term}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosureDump {
    pub vars: Vec<String>,
    pub amplitudes: Vec<[f64; 2]>,
    pub term: String,
}

impl Support for QuantumClosure {
    /// Both sides are expected in canonical form.
    fn same(&self, other: &Self) -> bool {
        self.term == other.term && self.register.approx_eq(&other.register, TOLERANCE)
    }
}

fn fmt_amp(a: Complex64) -> String {
    if a.im.abs() <= TOLERANCE {
        format!("{:.6}", a.re)
    } else if a.re.abs() <= TOLERANCE {
        format!("{:.6}i", a.im)
    } else {
        format!("({:.6}{:+.6}i)", a.re, a.im)
    }
}

impl fmt::Display for QuantumClosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.register.is_empty() {
            return write!(f, "{}", self.term);
        }
        let n = self.register.len();
        let names: Vec<String> = self.register.vars().iter().map(|v| v.to_string()).collect();
        write!(f, "[")?;
        let mut first = true;
        for (i, a) in self.register.amplitudes().iter().enumerate() {
            if a.norm() <= TOLERANCE {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let bits: Vec<String> = (0..n)
                .map(|k| {
                    let b = (i >> (n - 1 - k)) & 1 == 1;
                    format!("{}={}", names[k], if b { "tt" } else { "ff" })
                })
                .collect();
            write!(f, "{}|{}>", fmt_amp(*a), bits.join(","))?;
        }
        write!(f, "; {}]", self.term)
    }
}

pub type ClosureDist = Distribution<QuantumClosure, f64>;

/// Canonical representative: quantum variables renamed `q0, q1, ...` in
/// order of first occurrence in the term (register-only variables follow
/// in register order), register permuted to match, global phase fixed,
/// and bound variables alpha-normalized.
pub fn canonicalize_closure(c: &QuantumClosure) -> QuantumClosure {
    let mut order = c.term.quantum_vars();
    for r in c.register.vars() {
        if !order.contains(r) {
            order.push(r.clone());
        }
    }
    let map: BTreeMap<Name, Name> = order
        .iter()
        .enumerate()
        .map(|(i, r)| (r.clone(), Name::from(format!("q{i}"))))
        .collect();
    let register = c
        .register
        .permute(&order)
        .expect("term variables are in the register")
        .rename(&|r| map[r].clone())
        .fix_phase();
    QuantumClosure { register, term: c.term.rename_qvars(&map).canonical() }
}

/// Flattens a tuple of quantum variables `<r1, <r2, ...>>`.
fn qvar_tuple(v: &Term, out: &mut Vec<Name>) -> bool {
    match v {
        Term::QVar(r) => {
            out.push(r.clone());
            true
        }
        Term::Pair(a, b) => qvar_tuple(a, out) && qvar_tuple(b, out),
        _ => false,
    }
}

type Branches = Vec<(QuantumRegister, Term, f64)>;

/// Fresh-name policy for `new`.
#[derive(Clone, Copy)]
enum Fresh {
    /// Monotone counter over the whole evaluation.
    Counter,
    /// Smallest `q<k>` not in the register.
    Smallest,
}

struct Machine<'g> {
    gates: &'g GateTable,
    counter: usize,
    fresh: Fresh,
}

impl Machine<'_> {
    fn fresh_name(&mut self, reg: &QuantumRegister) -> Name {
        let start = match self.fresh {
            Fresh::Counter => self.counter,
            Fresh::Smallest => 0,
        };
        let mut k = start;
        loop {
            let name = Name::from(format!("q{k}"));
            k += 1;
            if !reg.contains(&name) {
                if let Fresh::Counter = self.fresh {
                    self.counter = k;
                }
                return name;
            }
        }
    }

    /// The primitive quantum redexes: `new(b)`, `U(<r..>)`, `meas(r)`.
    fn primitive(&mut self, reg: &QuantumRegister, e: &Term) -> Result<Option<Branches>, QuantumError> {
        Ok(Some(match e {
            Term::New(b) => {
                let Term::Bool(b) = **b else { return Err(QuantumError::Stuck(e.to_string())) };
                let r = self.fresh_name(reg);
                vec![(reg.new_qubit(r.clone(), b)?, Term::QVar(r), 1.0)]
            }
            Term::Unitary(g, v) => {
                let gate = self.gates.get(g.as_str()).ok_or_else(|| QuantumError::UnknownGate(g.clone()))?;
                let mut targets = Vec::new();
                if !qvar_tuple(v, &mut targets) {
                    return Err(QuantumError::Stuck(e.to_string()));
                }
                vec![(reg.apply_unitary(gate, &targets)?, (**v).clone(), 1.0)]
            }
            Term::Meas(v) => {
                let Term::QVar(r) = &**v else { return Err(QuantumError::Stuck(e.to_string())) };
                let mut out = Vec::new();
                for b in [false, true] {
                    let p = reg.measure_prob(r, b)?;
                    if p > BRANCH_EPSILON {
                        out.push((reg.project(r, b)?, Term::Bool(b), p));
                    }
                }
                out
            }
            _ => return Ok(None),
        }))
    }

    fn big(&mut self, reg: &QuantumRegister, e: &Term) -> Result<Branches, QuantumError> {
        if e.is_value() {
            return Ok(vec![(reg.clone(), e.clone(), 1.0)]);
        }
        if let Some(b) = self.primitive(reg, e)? {
            return Ok(b);
        }
        let mut out = Vec::new();
        match e {
            Term::Omega => {}
            Term::App(fun, arg) => {
                for (q1, lam, p) in self.big(reg, fun)? {
                    let Term::Lam(x, _, body) = &lam else {
                        return Err(QuantumError::Stuck(e.to_string()));
                    };
                    for (q2, v, q) in self.big(&q1, arg)? {
                        for (q3, w, r) in self.big(&q2, &body.subst(x, &v))? {
                            out.push((q3, w, p * q * r));
                        }
                    }
                }
            }
            Term::If(c, t, g) => {
                for (q1, b, p) in self.big(reg, c)? {
                    let branch = match b {
                        Term::Bool(true) => t,
                        Term::Bool(false) => g,
                        _ => return Err(QuantumError::Stuck(e.to_string())),
                    };
                    for (q2, w, r) in self.big(&q1, branch)? {
                        out.push((q2, w, p * r));
                    }
                }
            }
            Term::LetPair(s, x, y, body) => {
                for (q1, pv, p) in self.big(reg, s)? {
                    let Term::Pair(v, w) = &pv else {
                        return Err(QuantumError::Stuck(e.to_string()));
                    };
                    let inst = body.subst_many(&[(x.clone(), (**v).clone()), (y.clone(), (**w).clone())]);
                    for (q2, u, r) in self.big(&q1, &inst)? {
                        out.push((q2, u, p * r));
                    }
                }
            }
            Term::Choice(l, r) => {
                for side in [l, r] {
                    for (q1, u, p) in self.big(reg, side)? {
                        out.push((q1, u, 0.5 * p));
                    }
                }
            }
            _ => return Err(QuantumError::Stuck(e.to_string())),
        }
        Ok(out)
    }

    fn step(&mut self, reg: &QuantumRegister, e: &Term) -> Result<Branches, QuantumError> {
        if let Some(b) = self.primitive(reg, e)? {
            return Ok(b);
        }
        let lift = |bs: Branches, rebuild: &dyn Fn(Term) -> Term| -> Branches {
            bs.into_iter().map(|(q, t, p)| (q, rebuild(t), p)).collect()
        };
        Ok(match e {
            Term::Omega => Vec::new(),
            Term::Choice(l, r) => {
                vec![(reg.clone(), (**l).clone(), 0.5), (reg.clone(), (**r).clone(), 0.5)]
            }
            Term::App(f, a) if !f.is_value() => lift(self.step(reg, f)?, &|f2| Term::app(f2, (**a).clone())),
            Term::App(f, a) if !a.is_value() => lift(self.step(reg, a)?, &|a2| Term::app((**f).clone(), a2)),
            Term::App(f, a) => match &**f {
                Term::Lam(x, _, body) => vec![(reg.clone(), body.subst(x, a), 1.0)],
                _ => return Err(QuantumError::Stuck(e.to_string())),
            },
            Term::If(c, t, g) => match &**c {
                Term::Bool(true) => vec![(reg.clone(), (**t).clone(), 1.0)],
                Term::Bool(false) => vec![(reg.clone(), (**g).clone(), 1.0)],
                c if !c.is_value() => {
                    lift(self.step(reg, c)?, &|c2| Term::ite(c2, (**t).clone(), (**g).clone()))
                }
                _ => return Err(QuantumError::Stuck(e.to_string())),
            },
            Term::LetPair(s, x, y, body) => match &**s {
                Term::Pair(v, w) if s.is_value() => vec![(
                    reg.clone(),
                    body.subst_many(&[(x.clone(), (**v).clone()), (y.clone(), (**w).clone())]),
                    1.0,
                )],
                s if !s.is_value() => lift(self.step(reg, s)?, &|s2| {
                    Term::LetPair(Box::new(s2), x.clone(), y.clone(), body.clone())
                }),
                _ => return Err(QuantumError::Stuck(e.to_string())),
            },
            _ => return Err(QuantumError::Stuck(e.to_string())),
        })
    }
}

fn collect(branches: Branches) -> ClosureDist {
    let mut d = ClosureDist::empty();
    for (register, term, p) in branches {
        d.add(canonicalize_closure(&QuantumClosure { register, term }), p);
    }
    d
}

/// Big-step evaluation `[Q, e] ⇓ E`, with support in canonical form.
pub fn eval_closure_big(c: &QuantumClosure, gates: &GateTable) -> Result<ClosureDist, QuantumError> {
    let mut m = Machine { gates, counter: 0, fresh: Fresh::Counter };
    Ok(collect(m.big(&c.register, &c.term)?))
}

#[derive(Debug, Clone)]
pub enum ClosureStep {
    ValueReached,
    Step(ClosureDist),
}

/// One call-by-value step of a closure.
pub fn step_closure(c: &QuantumClosure, gates: &GateTable) -> Result<ClosureStep, QuantumError> {
    if c.is_value() {
        return Ok(ClosureStep::ValueReached);
    }
    let mut m = Machine { gates, counter: 0, fresh: Fresh::Smallest };
    Ok(ClosureStep::Step(collect(m.step(&c.register, &c.term)?)))
}

/// Iterates [`step_closure`] to normal form.
pub fn normalize_closure_by_steps(c: &QuantumClosure, gates: &GateTable) -> Result<ClosureDist, QuantumError> {
    let mut frontier = ClosureDist::dirac(canonicalize_closure(c));
    let mut values = ClosureDist::empty();
    while !frontier.is_empty() {
        let mut next = ClosureDist::empty();
        for (cl, p) in frontier.iter() {
            match step_closure(cl, gates)? {
                ClosureStep::ValueReached => values.add(cl.clone(), *p),
                ClosureStep::Step(d) => next.add_scaled(&d, p),
            }
        }
        frontier = next;
    }
    Ok(values)
}

/// Convergence probability of `[empty, e]`.
pub fn observe_quantum(e: &Term, gates: &GateTable) -> Result<f64, QuantumError> {
    Ok(eval_closure_big(&QuantumClosure::pure(e.clone()), gates)?.mass())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn q(src: &str) -> QuantumClosure {
        QuantumClosure::pure(parse(src, CalculusMode::Quantum).unwrap())
    }

    fn eval(src: &str) -> ClosureDist {
        eval_closure_big(&q(src), &GateTable::builtin()).unwrap()
    }

    #[test]
    fn new_allocates_canonical_qubit() {
        let d = eval("new(tt)");
        assert_eq!(d.len(), 1);
        let (c, p) = d.iter().next().unwrap();
        assert_eq!(*p, 1.0);
        assert_eq!(c.term, Term::qvar("q0"));
        assert!(c.register.approx_eq(&QuantumRegister::basis(&[(Name::new("q0"), true)]).unwrap(), 1e-12));
    }

    #[test]
    fn measuring_a_superposition() {
        let d = eval("meas(H<new(ff)>)");
        assert_eq!(d.len(), 2);
        for b in [true, false] {
            let p = d.get(&QuantumClosure::pure(Term::Bool(b)));
            assert!((p - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn negated_measurement_of_fresh_ff() {
        let d = eval(r"(\x:qbit. if meas(x) then ff else tt) new(ff)");
        assert_eq!(d.len(), 1);
        assert!((d.get(&QuantumClosure::pure(Term::Bool(true))) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn canonical_forms() {
        let r7 = Name::new("r7");
        let c = QuantumClosure::new(QuantumRegister::basis(&[(r7.clone(), true)]).unwrap(), Term::QVar(r7)).unwrap();
        let can = canonicalize_closure(&c);
        assert_eq!(can.term, Term::qvar("q0"));
        assert_eq!(can.register.vars(), &[Name::new("q0")]);

        let i = Complex64::new(0.0, 1.0);
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let a = QuantumRegister::from_parts(vec![Name::new("a")], vec![h, h]).unwrap();
        let b = QuantumRegister::from_parts(vec![Name::new("b")], vec![h * i, h * i]).unwrap();
        let ca = QuantumClosure::new(a, Term::qvar("a")).unwrap();
        let cb = QuantumClosure::new(b, Term::qvar("b")).unwrap();
        assert!(ca.approx_eq(&cb, 1e-9));

        // Register order is irrelevant once the term fixes the naming.
        let ab = QuantumRegister::basis(&[(Name::new("a"), true), (Name::new("b"), false)]).unwrap();
        let ba = ab.permute(&[Name::new("b"), Name::new("a")]).unwrap();
        let t = Term::pair(Term::qvar("b"), Term::qvar("a"));
        let c1 = QuantumClosure::new(ab, t.clone()).unwrap();
        let c2 = QuantumClosure::new(ba, t).unwrap();
        assert!(c1.approx_eq(&c2, 1e-12));
        assert_eq!(c1.canonical().register.vars(), &[Name::new("q0"), Name::new("q1")]);
    }

    #[test]
    fn small_steps_agree_with_big_steps() {
        for src in [
            "meas(H<new(ff)>)",
            r"(\x:qbit. if meas(x) then ff else tt) new(ff)",
            r"(\p:qbit * qbit. let <a, b> = CNOT<p> in <meas(a), meas(b)>) <H<new(ff)>, new(ff)>",
            r"\x:qbit. meas(X<x>)",
            "omega",
        ] {
            let c = q(src);
            let big = eval_closure_big(&c, &GateTable::builtin()).unwrap();
            let small = normalize_closure_by_steps(&c, &GateTable::builtin()).unwrap();
            assert!(big.approx_eq(&small, 1e-9), "{src}: {big} vs {small}");
        }
    }

    #[test]
    fn bell_pair_measurement_correlates() {
        let d = eval(r"(\p:qbit * qbit. let <a, b> = CNOT<p> in <meas(a), meas(b)>) <H<new(ff)>, new(ff)>");
        assert_eq!(d.len(), 2);
        let tt = QuantumClosure::pure(Term::pair(Term::Bool(true), Term::Bool(true)));
        assert!((d.get(&tt) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn beta_step_keeps_register() {
        let r = QuantumRegister::basis(&[(Name::new("q0"), true)]).unwrap();
        let e = parse(r"(\x:qbit. x) #q0", CalculusMode::Quantum).unwrap();
        let c = QuantumClosure::new(r.clone(), e).unwrap();
        let ClosureStep::Step(d) = step_closure(&c, &GateTable::builtin()).unwrap() else { panic!() };
        let (next, p) = d.iter().next().unwrap();
        assert_eq!(*p, 1.0);
        assert!(next.register.approx_eq(&r, 1e-12));
        assert!(matches!(
            step_closure(&q("omega"), &GateTable::builtin()).unwrap(),
            ClosureStep::Step(d) if d.is_empty()
        ));
    }

    #[test]
    fn closure_json_round_trip() {
        let d = eval("H<new(tt)>");
        let (c, _) = d.iter().next().unwrap();
        let dump = c.to_json();
        let text = serde_json::to_string(&dump).unwrap();
        let back = QuantumClosure::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert!(back.approx_eq(c, 1e-12));
    }
}
