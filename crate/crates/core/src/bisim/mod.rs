// SPDX-License-Identifier: Apache-2.0

//! Terms as labelled Markov chains, and (bi)simulation on them.
//!
//! A state is a term or a distinguished value together with its type. A
//! term state evaluates (`eval`); a value state interacts according to its
//! type: booleans show themselves, functions take arguments, pairs are
//! taken apart by destructors and qubits are handed to tests. Arguments,
//! destructors and qubit tests are drawn from a finite [`TestBasis`].
//!
//! Classical states carry an empty register, so one state type serves all
//! three calculi.

mod basis;
mod finite;
mod game;
mod relation;

pub use basis::{BasisFile, Destructor, QbitTest, TestBasis, DEFAULT_BASIS_SIZE};
pub use finite::{
    check_bisimulation, check_simulation, largest_simulation, lmc_from_json, partition_refine, FiniteLmc, LmcFile,
    Verdict, Witness, MAX_SUBSET_SUPPORT,
};
pub use game::{game_distinguish, replay, GameResult, TraceStep};
pub use relation::{
    check_candidate, check_candidate_simulation, close_open_pair, lockstep_relation, open_type, RelationFile, TermVerdict,
};

use std::collections::HashMap;
use std::fmt;

use num_rational::BigRational;
use rayon::prelude::*;
use thiserror::Error;

use crate::quantum::{eval_closure_big, GateTable, QuantumClosure, QuantumError, TOLERANCE};
use crate::semantics::{eval_big, Distribution, EvalError, Probability, Support};
use crate::syntax::{CalculusMode, Name, ParseError, Term};
use crate::typecheck::{Type, TypeError};

#[derive(Debug, Error)]
pub enum BisimError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("test basis has no {what} for type {ty}")]
    BasisMissing { what: &'static str, ty: String },
    #[error("basis entry `{entry}` does not have type {ty}: {reason}")]
    BasisEntry { entry: String, ty: String, reason: String },
    #[error("related states have different types: {left} and {right}")]
    TypeMismatch { left: Type, right: Type },
    #[error("exploration exceeded {0} states")]
    TooManyStates(usize),
    #[error("successor support of size {0} is too large for subset enumeration")]
    SupportTooLarge(usize),
    #[error("row ({state}, {label}) has mass {mass} > 1")]
    BadRow { state: String, label: String, mass: String },
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("bad probability `{0}`")]
    BadProbability(String),
    #[error("malformed state `{0}`")]
    Malformed(String),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StateKind {
    Term,
    Value,
}

/// `(e, A)` or `(v^, A)`. The payload is a canonical closure.
#[derive(Debug, Clone, PartialEq)]
pub struct LmcState {
    pub kind: StateKind,
    pub closure: QuantumClosure,
    pub ty: Type,
}

impl LmcState {
    pub fn term(closure: QuantumClosure, ty: Type) -> Self {
        LmcState { kind: StateKind::Term, closure: closure.canonical(), ty }
    }

    pub fn value(closure: QuantumClosure, ty: Type) -> Self {
        debug_assert!(closure.is_value());
        LmcState { kind: StateKind::Value, closure: closure.canonical(), ty }
    }

    pub fn of_term(e: Term, ty: Type) -> Self {
        LmcState::term(QuantumClosure::pure(e), ty)
    }

    fn key(&self) -> (StateKind, Type, Term) {
        (self.kind, self.ty.clone(), self.closure.term.clone())
    }
}

impl Support for LmcState {
    fn same(&self, other: &Self) -> bool {
        self.kind == other.kind && self.ty == other.ty && self.closure.same(&other.closure)
    }
}

impl fmt::Display for LmcState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hat = if self.kind == StateKind::Value { "^" } else { "" };
        if self.closure.register.is_empty() {
            write!(f, "({hat}{}, {})", self.closure.term, self.ty)
        } else {
            write!(f, "({hat}{}, {})", self.closure, self.ty)
        }
    }
}

/// Labels of the chain. Basis-drawn labels refer to entries of the
/// [`TestBasis`] by position; [`TestBasis::describe`] renders them.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    TypeOf(Type),
    Eval,
    ValueTypeOf(Type),
    TT,
    FF,
    Arg { ty: Type, index: usize },
    Destruct { left: Type, right: Type, index: usize },
    QbitTest { index: usize },
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::TypeOf(a) => write!(f, "type {a}"),
            Label::Eval => f.write_str("eval"),
            Label::ValueTypeOf(a) => write!(f, "value-type {a}"),
            Label::TT => f.write_str("tt"),
            Label::FF => f.write_str("ff"),
            Label::Arg { ty, index } => write!(f, "arg {ty} #{index}"),
            Label::Destruct { left, right, index } => write!(f, "destruct ({left}, {right}) #{index}"),
            Label::QbitTest { index } => write!(f, "qbit-test #{index}"),
        }
    }
}

/// The evaluation a chain is built over, fixing the probability domain.
pub trait Calculus: Sync {
    type P: Probability;
    fn mode(&self) -> CalculusMode;
    fn gates(&self) -> &GateTable;
    fn tolerance(&self) -> f64;
    /// `[[c]]`, as a distribution over canonical value closures.
    fn eval(&self, c: &QuantumClosure) -> Result<Distribution<QuantumClosure, Self::P>, BisimError>;
}

/// Deterministic and probabilistic calculi, exact rationals.
#[derive(Debug, Clone)]
pub struct Classical {
    pub mode: CalculusMode,
    gates: GateTable,
}

impl Classical {
    pub fn new(mode: CalculusMode) -> Self {
        assert!(!mode.allows_quantum(), "use Quantum for the quantum calculus");
        Classical { mode, gates: GateTable::builtin() }
    }
}

impl Calculus for Classical {
    type P = BigRational;
    fn mode(&self) -> CalculusMode {
        self.mode
    }
    fn gates(&self) -> &GateTable {
        &self.gates
    }
    fn tolerance(&self) -> f64 {
        0.0
    }
    fn eval(&self, c: &QuantumClosure) -> Result<Distribution<QuantumClosure, BigRational>, BisimError> {
        let dist = eval_big(&c.term, self.mode)?;
        Ok(dist.iter().map(|(v, p)| (QuantumClosure::pure(v.canonical()), p.clone())).collect())
    }
}

/// Quantum calculus over closures, float probabilities within `tol`.
#[derive(Debug, Clone)]
pub struct Quantum {
    pub gates: GateTable,
    pub tol: f64,
}

impl Quantum {
    pub fn new(gates: GateTable) -> Self {
        Quantum { gates, tol: TOLERANCE }
    }
}

impl Calculus for Quantum {
    type P = f64;
    fn mode(&self) -> CalculusMode {
        CalculusMode::Quantum
    }
    fn gates(&self) -> &GateTable {
        &self.gates
    }
    fn tolerance(&self) -> f64 {
        self.tol
    }
    fn eval(&self, c: &QuantumClosure) -> Result<Distribution<QuantumClosure, f64>, BisimError> {
        let dist = eval_closure_big(c, &self.gates)?;
        Ok(dist.iter().map(|(v, p)| (v.canonical(), *p)).collect())
    }
}

pub type StateDist<P> = Distribution<LmcState, P>;

/// Outgoing transitions of `s`, in a fixed label order.
pub fn transitions<C: Calculus>(
    calc: &C,
    basis: &TestBasis,
    s: &LmcState,
) -> Result<Vec<(Label, StateDist<C::P>)>, BisimError> {
    let mut out = Vec::new();
    let here = || StateDist::dirac(s.clone());
    match s.kind {
        StateKind::Term => {
            out.push((Label::TypeOf(s.ty.clone()), here()));
            let dist = if s.closure.is_value() {
                StateDist::dirac(LmcState::value(s.closure.clone(), s.ty.clone()))
            } else {
                calc.eval(&s.closure)?.iter().map(|(v, p)| (LmcState::value(v.clone(), s.ty.clone()), p.clone())).collect()
            };
            out.push((Label::Eval, dist));
        }
        StateKind::Value => {
            out.push((Label::ValueTypeOf(s.ty.clone()), here()));
            let reg = &s.closure.register;
            match (&s.ty, &s.closure.term) {
                (Type::Bool, Term::Bool(true)) => out.push((Label::TT, here())),
                (Type::Bool, Term::Bool(false)) => out.push((Label::FF, here())),
                (Type::Arrow(a, b), Term::Lam(x, _, body)) => {
                    for (index, w) in basis.args(a)?.iter().enumerate() {
                        let (reg, w) = merge(reg, w)?;
                        let next = QuantumClosure::new(reg, body.subst(x, &w))?;
                        out.push((Label::Arg { ty: (**a).clone(), index }, StateDist::dirac(LmcState::term(next, (**b).clone()))));
                    }
                }
                (Type::Tensor(a, b), Term::Pair(v, w)) => {
                    for (index, d) in basis.destructors(a, b)?.iter().enumerate() {
                        let (reg, body) = merge(reg, &d.body)?;
                        let term = body.subst_many(&[(d.left.clone(), (**v).clone()), (d.right.clone(), (**w).clone())]);
                        let next = QuantumClosure::new(reg, term)?;
                        let label = Label::Destruct { left: (**a).clone(), right: (**b).clone(), index };
                        out.push((label, StateDist::dirac(LmcState::term(next, d.result.clone()))));
                    }
                }
                (Type::Qbit, Term::QVar(r)) => {
                    for (index, t) in basis.qbit_tests()?.iter().enumerate() {
                        let (reg, body) = merge(reg, &t.body)?;
                        let next = QuantumClosure::new(reg, body.subst(&t.var, &Term::QVar(r.clone())))?;
                        out.push((Label::QbitTest { index }, StateDist::dirac(LmcState::term(next, t.result.clone()))));
                    }
                }
                _ => return Err(BisimError::Malformed(s.to_string())),
            }
        }
    }
    Ok(out)
}

/// `Q (x) W`, with `W`'s variables renamed apart from `Q`'s. Returns the
/// merged register and `W`'s renamed term.
fn merge(q: &crate::quantum::QuantumRegister, w: &QuantumClosure) -> Result<(crate::quantum::QuantumRegister, Term), BisimError> {
    if w.register.is_empty() {
        return Ok((q.clone(), w.term.clone()));
    }
    let mut map = std::collections::BTreeMap::new();
    let mut k = 0;
    for r in w.register.vars() {
        let fresh = loop {
            let n = Name::from(format!("q{k}"));
            k += 1;
            if !q.contains(&n) {
                break n;
            }
        };
        map.insert(r.clone(), fresh);
    }
    let renamed = w.register.rename(&|r| map[r].clone());
    Ok((q.tensor(&renamed)?, w.term.rename_qvars(&map)))
}

/// Reachable fragment of the chain.
#[derive(Debug, Clone)]
pub struct Explored<P> {
    pub lmc: FiniteLmc<Label, P>,
    pub states: Vec<LmcState>,
    /// Breadth-first distance from the nearest root.
    pub depth: Vec<usize>,
    /// Whether the state's transitions were computed.
    pub expanded: Vec<bool>,
    index: HashMap<(StateKind, Type, Term), Vec<usize>>,
}

impl<P: Probability> Explored<P> {
    pub fn index_of(&self, s: &LmcState) -> Option<usize> {
        let key = s.key();
        self.index.get(&key)?.iter().copied().find(|&i| self.states[i].same(s))
    }

    fn intern(&mut self, s: LmcState, depth: usize) -> (usize, bool) {
        if let Some(i) = self.index_of(&s) {
            return (i, false);
        }
        let i = self.lmc.add_state(s.to_string());
        self.index.entry(s.key()).or_default().push(i);
        self.states.push(s);
        self.depth.push(depth);
        self.expanded.push(false);
        (i, true)
    }
}

/// Default ceiling on explored states.
pub const MAX_STATES: usize = 200_000;

/// Breadth-first exploration from `roots`. States at distance
/// `max_depth` are recorded but not expanded. Transitions of one layer
/// are computed in parallel and merged in order, so the result does not
/// depend on scheduling.
pub fn explore<C: Calculus>(
    calc: &C,
    basis: &TestBasis,
    roots: &[LmcState],
    max_depth: Option<usize>,
    max_states: usize,
) -> Result<Explored<C::P>, BisimError> {
    let mut ex = Explored {
        lmc: FiniteLmc::new(),
        states: Vec::new(),
        depth: Vec::new(),
        expanded: Vec::new(),
        index: HashMap::new(),
    };
    let mut frontier = Vec::new();
    for r in roots {
        let (i, new) = ex.intern(r.clone(), 0);
        if new {
            frontier.push(i);
        }
    }
    let mut depth = 0;
    while !frontier.is_empty() && max_depth.is_none_or(|d| depth < d) {
        let rows: Vec<_> = frontier.par_iter().map(|&i| transitions(calc, basis, &ex.states[i])).collect();
        let mut next = Vec::new();
        for (&i, row) in frontier.iter().zip(rows) {
            for (label, dist) in row? {
                let l = ex.lmc.label_id(&label);
                let mut succ = Vec::new();
                for (t, p) in dist.iter() {
                    let (j, new) = ex.intern(t.clone(), depth + 1);
                    if new {
                        next.push(j);
                    }
                    succ.push((j, p.clone()));
                }
                ex.lmc.set_row(i, l, succ);
            }
            ex.expanded[i] = true;
            if ex.states.len() > max_states {
                return Err(BisimError::TooManyStates(max_states));
            }
        }
        frontier = next;
        depth += 1;
    }
    Ok(ex)
}
