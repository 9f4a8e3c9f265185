// SPDX-License-Identifier: Apache-2.0

//! Abstract syntax shared by the three calculi.
//!
//! A single [`Term`] type covers the deterministic core, probabilistic
//! choice and the quantum constructs; [`CalculusMode`] decides which
//! constructors a program may use. Pairs are *value* pairs: pairs of
//! arbitrary terms only exist as sugar (see [`desugar_pair`]).

mod lexer;
mod parser;
mod print;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::typecheck::Type;

pub use lexer::Pos;
pub use parser::{parse, parse_type, parse_with, ParseError, ParseOptions};

/// Variable or quantum-variable name.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Name(Arc<str>);

impl Name {
    pub fn new(s: &str) -> Name {
        Name(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Name {
    fn from(s: &str) -> Name {
        Name::new(s)
    }
}

impl From<String> for Name {
    fn from(s: String) -> Name {
        Name(Arc::from(s))
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Which calculus a program is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CalculusMode {
    Det,
    Prob,
    Quantum,
}

impl CalculusMode {
    pub fn allows_choice(self) -> bool {
        self == CalculusMode::Prob
    }

    pub fn allows_quantum(self) -> bool {
        self == CalculusMode::Quantum
    }
}

impl fmt::Display for CalculusMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CalculusMode::Det => "det",
            CalculusMode::Prob => "prob",
            CalculusMode::Quantum => "quantum",
        })
    }
}

impl std::str::FromStr for CalculusMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "det" => Ok(CalculusMode::Det),
            "prob" => Ok(CalculusMode::Prob),
            "quantum" => Ok(CalculusMode::Quantum),
            other => Err(format!("unknown mode `{other}` (expected det, prob or quantum)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Name),
    Bool(bool),
    Lam(Name, Type, Box<Term>),
    App(Box<Term>, Box<Term>),
    If(Box<Term>, Box<Term>, Box<Term>),
    /// `let <x, y> = scrutinee in body`
    LetPair(Box<Term>, Name, Name, Box<Term>),
    /// Value pair; both components are syntactic values.
    Pair(Box<Term>, Box<Term>),
    Omega,
    Choice(Box<Term>, Box<Term>),
    QVar(Name),
    Unitary(Name, Box<Term>),
    Meas(Box<Term>),
    New(Box<Term>),
    /// Context hole `[.]`.
    Hole,
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(Name::new(name))
    }

    pub fn qvar(name: &str) -> Term {
        Term::QVar(Name::new(name))
    }

    pub fn lam(name: &str, ty: Type, body: Term) -> Term {
        Term::Lam(Name::new(name), ty, Box::new(body))
    }

    pub fn app(fun: Term, arg: Term) -> Term {
        Term::App(Box::new(fun), Box::new(arg))
    }

    pub fn ite(cond: Term, then: Term, els: Term) -> Term {
        Term::If(Box::new(cond), Box::new(then), Box::new(els))
    }

    pub fn let_pair(scrutinee: Term, left: &str, right: &str, body: Term) -> Term {
        Term::LetPair(
            Box::new(scrutinee),
            Name::new(left),
            Name::new(right),
            Box::new(body),
        )
    }

    pub fn pair(left: Term, right: Term) -> Term {
        Term::Pair(Box::new(left), Box::new(right))
    }

    pub fn choice(left: Term, right: Term) -> Term {
        Term::Choice(Box::new(left), Box::new(right))
    }

    pub fn meas(arg: Term) -> Term {
        Term::Meas(Box::new(arg))
    }

    pub fn new_qubit(arg: Term) -> Term {
        Term::New(Box::new(arg))
    }

    pub fn unitary(gate: &str, arg: Term) -> Term {
        Term::Unitary(Name::new(gate), Box::new(arg))
    }

    pub fn is_value(&self) -> bool {
        match self {
            Term::Var(_) | Term::Bool(_) | Term::Lam(..) | Term::QVar(_) => true,
            Term::Pair(l, r) => l.is_value() && r.is_value(),
            _ => false,
        }
    }

    /// Number of AST nodes; type annotations do not count.
    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) | Term::Bool(_) | Term::Omega | Term::QVar(_) | Term::Hole => 1,
            Term::Lam(_, _, b) | Term::Unitary(_, b) | Term::Meas(b) | Term::New(b) => {
                1 + b.size()
            }
            Term::App(a, b) | Term::Pair(a, b) | Term::Choice(a, b) => 1 + a.size() + b.size(),
            Term::LetPair(s, _, _, b) => 1 + s.size() + b.size(),
            Term::If(c, t, e) => 1 + c.size() + t.size() + e.size(),
        }
    }

    pub fn children(&self) -> Vec<&Term> {
        match self {
            Term::Var(_) | Term::Bool(_) | Term::Omega | Term::QVar(_) | Term::Hole => vec![],
            Term::Lam(_, _, b) | Term::Unitary(_, b) | Term::Meas(b) | Term::New(b) => vec![b],
            Term::App(a, b) | Term::Pair(a, b) | Term::Choice(a, b) => vec![a, b],
            Term::LetPair(s, _, _, b) => vec![s, b],
            Term::If(c, t, e) => vec![c, t, e],
        }
    }

    /// Free classical variables.
    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    /// Free variables as a multiset (name -> occurrence count).
    pub fn free_var_counts(&self) -> BTreeMap<Name, usize> {
        fn go(t: &Term, bound: &mut Vec<Name>, out: &mut BTreeMap<Name, usize>) {
            match t {
                Term::Var(x) => {
                    if !bound.contains(x) {
                        *out.entry(x.clone()).or_default() += 1;
                    }
                }
                Term::Lam(x, _, b) => {
                    bound.push(x.clone());
                    go(b, bound, out);
                    bound.pop();
                }
                Term::LetPair(s, x, y, b) => {
                    go(s, bound, out);
                    bound.push(x.clone());
                    bound.push(y.clone());
                    go(b, bound, out);
                    bound.truncate(bound.len() - 2);
                }
                other => {
                    for c in other.children() {
                        go(c, bound, out);
                    }
                }
            }
        }
        let mut out = BTreeMap::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        match self {
            Term::Var(x) => {
                if !bound.contains(x) {
                    out.insert(x.clone());
                }
            }
            Term::Lam(x, _, b) => {
                bound.push(x.clone());
                b.collect_free(bound, out);
                bound.pop();
            }
            Term::LetPair(s, x, y, b) => {
                s.collect_free(bound, out);
                bound.push(x.clone());
                bound.push(y.clone());
                b.collect_free(bound, out);
                bound.truncate(bound.len() - 2);
            }
            other => {
                for c in other.children() {
                    c.collect_free(bound, out);
                }
            }
        }
    }

    /// Quantum variables in order of first occurrence (preorder, left to right).
    pub fn quantum_vars(&self) -> Vec<Name> {
        fn go(t: &Term, out: &mut Vec<Name>) {
            if let Term::QVar(r) = t {
                if !out.contains(r) {
                    out.push(r.clone());
                }
            }
            for c in t.children() {
                go(c, out);
            }
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out
    }

    /// Occurrences of each quantum variable.
    pub fn quantum_var_counts(&self) -> BTreeMap<Name, usize> {
        fn go(t: &Term, out: &mut BTreeMap<Name, usize>) {
            if let Term::QVar(r) = t {
                *out.entry(r.clone()).or_default() += 1;
            }
            for c in t.children() {
                go(c, out);
            }
        }
        let mut out = BTreeMap::new();
        go(self, &mut out);
        out
    }

    pub fn rename_qvars(&self, map: &BTreeMap<Name, Name>) -> Term {
        self.map_leaves(&mut |t| match t {
            Term::QVar(r) => map.get(r).map(|n| Term::QVar(n.clone())),
            _ => None,
        })
    }

    /// Rebuilds the term bottom-up, replacing leaves for which `f` returns `Some`.
    fn map_leaves(&self, f: &mut impl FnMut(&Term) -> Option<Term>) -> Term {
        if let Some(t) = f(self) {
            return t;
        }
        match self {
            Term::Var(_) | Term::Bool(_) | Term::Omega | Term::QVar(_) | Term::Hole => self.clone(),
            Term::Lam(x, ty, b) => Term::Lam(x.clone(), ty.clone(), Box::new(b.map_leaves(f))),
            Term::App(a, b) => Term::App(Box::new(a.map_leaves(f)), Box::new(b.map_leaves(f))),
            Term::Pair(a, b) => Term::Pair(Box::new(a.map_leaves(f)), Box::new(b.map_leaves(f))),
            Term::Choice(a, b) => {
                Term::Choice(Box::new(a.map_leaves(f)), Box::new(b.map_leaves(f)))
            }
            Term::If(c, t, e) => Term::If(
                Box::new(c.map_leaves(f)),
                Box::new(t.map_leaves(f)),
                Box::new(e.map_leaves(f)),
            ),
            Term::LetPair(s, x, y, b) => Term::LetPair(
                Box::new(s.map_leaves(f)),
                x.clone(),
                y.clone(),
                Box::new(b.map_leaves(f)),
            ),
            Term::Unitary(g, b) => Term::Unitary(g.clone(), Box::new(b.map_leaves(f))),
            Term::Meas(b) => Term::Meas(Box::new(b.map_leaves(f))),
            Term::New(b) => Term::New(Box::new(b.map_leaves(f))),
        }
    }

    pub fn hole_count(&self) -> usize {
        match self {
            Term::Hole => 1,
            other => other.children().iter().map(|c| c.hole_count()).sum(),
        }
    }

    pub fn contains_choice(&self) -> bool {
        matches!(self, Term::Choice(..)) || self.children().iter().any(|c| c.contains_choice())
    }

    /// First quantum construct found, by its surface name.
    pub fn quantum_construct(&self) -> Option<&'static str> {
        match self {
            Term::QVar(_) => Some("quantum variable"),
            Term::Unitary(..) => Some("unitary gate"),
            Term::Meas(_) => Some("meas"),
            Term::New(_) => Some("new"),
            other => other.children().iter().find_map(|c| c.quantum_construct()),
        }
    }

    /// Name of the first constructor not allowed in `mode`, if any.
    pub fn mode_violation(&self, mode: CalculusMode) -> Option<&'static str> {
        if !mode.allows_choice() && self.contains_choice() {
            return Some("probabilistic choice (+)");
        }
        if !mode.allows_quantum() {
            return self.quantum_construct();
        }
        None
    }

    /// Replaces the hole by `filler`. Binders of the context may capture
    /// free variables of the filler.
    pub fn plug(&self, filler: &Term) -> Term {
        self.map_leaves(&mut |t| match t {
            Term::Hole => Some(filler.clone()),
            _ => None,
        })
    }

    /// Capture-avoiding substitution of the value `v` for `x`.
    pub fn subst(&self, x: &Name, v: &Term) -> Term {
        self.subst_many(&[(x.clone(), v.clone())])
    }

    /// Simultaneous capture-avoiding substitution.
    pub fn subst_many(&self, sub: &[(Name, Term)]) -> Term {
        if sub.is_empty() {
            return self.clone();
        }
        let mut avoid = HashSet::new();
        for (_, v) in sub {
            avoid.extend(v.free_vars());
        }
        let map: Vec<(Name, &Term)> = sub.iter().map(|(x, v)| (x.clone(), v)).collect();
        subst_go(self, &map, &avoid)
    }

    /// Canonical representative of the alpha-equivalence class: bound
    /// variables are renamed `v0, v1, ...` in binding order, skipping any
    /// name that occurs free.
    pub fn canonical(&self) -> Term {
        let free = self.free_vars();
        let mut counter = 0usize;
        let mut env: Vec<(Name, Name)> = Vec::new();
        canon_go(self, &free, &mut counter, &mut env)
    }

    pub fn alpha_eq(&self, other: &Term) -> bool {
        self == other || self.canonical() == other.canonical()
    }

    /// Renames binders so that every binder in the term is distinct and
    /// distinct from every free variable. The first binder with a given
    /// name keeps it.
    pub fn uniquify_binders(&self) -> Term {
        let mut used: HashSet<Name> = self.free_vars().into_iter().collect();
        let mut env = Vec::new();
        uniq_go(self, &mut used, &mut env)
    }

    pub fn pretty(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::fmt_term(self, f)
    }
}

impl Serialize for Term {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// A fresh variant of `base` not contained in `avoid`.
pub fn fresh_name(base: &Name, avoid: &impl Fn(&Name) -> bool) -> Name {
    let stem = base.as_str().trim_end_matches(|c: char| c.is_ascii_digit());
    let stem = if stem.is_empty() { "x" } else { stem };
    (1..)
        .map(|i| Name::from(format!("{stem}{i}")))
        .find(|n| !avoid(n))
        .expect("infinitely many candidate names")
}

fn subst_go(t: &Term, map: &[(Name, &Term)], avoid: &HashSet<Name>) -> Term {
    match t {
        Term::Var(y) => match map.iter().find(|(x, _)| x == y) {
            Some((_, v)) => (*v).clone(),
            None => t.clone(),
        },
        Term::Lam(y, ty, body) => {
            let inner: Vec<(Name, &Term)> =
                map.iter().filter(|(x, _)| x != y).cloned().collect();
            if inner.is_empty() {
                return t.clone();
            }
            let (y2, body2) = rename_if_captured(y, body, &inner, avoid);
            Term::Lam(y2, ty.clone(), Box::new(subst_go(&body2, &inner, avoid)))
        }
        Term::LetPair(s, y1, y2, body) => {
            let s2 = subst_go(s, map, avoid);
            let inner: Vec<(Name, &Term)> = map
                .iter()
                .filter(|(x, _)| x != y1 && x != y2)
                .cloned()
                .collect();
            if inner.is_empty() {
                return Term::LetPair(Box::new(s2), y1.clone(), y2.clone(), body.clone());
            }
            let (n1, b1) = rename_if_captured(y1, body, &inner, avoid);
            let (n2, b2) = rename_if_captured(y2, &b1, &inner, avoid);
            Term::LetPair(Box::new(s2), n1, n2, Box::new(subst_go(&b2, &inner, avoid)))
        }
        Term::Bool(_) | Term::Omega | Term::QVar(_) | Term::Hole => t.clone(),
        Term::App(a, b) => Term::app(subst_go(a, map, avoid), subst_go(b, map, avoid)),
        Term::Pair(a, b) => Term::pair(subst_go(a, map, avoid), subst_go(b, map, avoid)),
        Term::Choice(a, b) => Term::choice(subst_go(a, map, avoid), subst_go(b, map, avoid)),
        Term::If(c, th, el) => Term::ite(
            subst_go(c, map, avoid),
            subst_go(th, map, avoid),
            subst_go(el, map, avoid),
        ),
        Term::Unitary(g, b) => Term::Unitary(g.clone(), Box::new(subst_go(b, map, avoid))),
        Term::Meas(b) => Term::meas(subst_go(b, map, avoid)),
        Term::New(b) => Term::new_qubit(subst_go(b, map, avoid)),
    }
}

/// Renames binder `y` in `body` when it would capture a free variable of a
/// substituted value.
fn rename_if_captured(
    y: &Name,
    body: &Term,
    map: &[(Name, &Term)],
    avoid: &HashSet<Name>,
) -> (Name, Term) {
    if !avoid.contains(y) {
        return (y.clone(), (*body).clone());
    }
    let body_free = body.free_vars();
    if !map.iter().any(|(x, _)| body_free.contains(x)) {
        return (y.clone(), (*body).clone());
    }
    let fresh = fresh_name(y, &|n: &Name| {
        avoid.contains(n) || body_free.contains(n) || map.iter().any(|(x, _)| x == n)
    });
    let renamed = body.subst(y, &Term::Var(fresh.clone()));
    (fresh, renamed)
}

fn canon_go(t: &Term, free: &BTreeSet<Name>, counter: &mut usize, env: &mut Vec<(Name, Name)>) -> Term {
    let next = |counter: &mut usize| loop {
        let n = Name::from(format!("v{}", *counter));
        *counter += 1;
        if !free.contains(&n) {
            break n;
        }
    };
    match t {
        Term::Var(x) => match env.iter().rev().find(|(old, _)| old == x) {
            Some((_, new)) => Term::Var(new.clone()),
            None => t.clone(),
        },
        Term::Lam(x, ty, b) => {
            let n = next(counter);
            env.push((x.clone(), n.clone()));
            let b2 = canon_go(b, free, counter, env);
            env.pop();
            Term::Lam(n, ty.clone(), Box::new(b2))
        }
        Term::LetPair(s, x, y, b) => {
            let s2 = canon_go(s, free, counter, env);
            let nx = next(counter);
            let ny = next(counter);
            env.push((x.clone(), nx.clone()));
            env.push((y.clone(), ny.clone()));
            let b2 = canon_go(b, free, counter, env);
            env.truncate(env.len() - 2);
            Term::LetPair(Box::new(s2), nx, ny, Box::new(b2))
        }
        Term::Bool(_) | Term::Omega | Term::QVar(_) | Term::Hole => t.clone(),
        Term::App(a, b) => {
            let a2 = canon_go(a, free, counter, env);
            Term::app(a2, canon_go(b, free, counter, env))
        }
        Term::Pair(a, b) => {
            let a2 = canon_go(a, free, counter, env);
            Term::pair(a2, canon_go(b, free, counter, env))
        }
        Term::Choice(a, b) => {
            let a2 = canon_go(a, free, counter, env);
            Term::choice(a2, canon_go(b, free, counter, env))
        }
        Term::If(c, th, el) => {
            let c2 = canon_go(c, free, counter, env);
            let t2 = canon_go(th, free, counter, env);
            Term::ite(c2, t2, canon_go(el, free, counter, env))
        }
        Term::Unitary(g, b) => Term::Unitary(g.clone(), Box::new(canon_go(b, free, counter, env))),
        Term::Meas(b) => Term::meas(canon_go(b, free, counter, env)),
        Term::New(b) => Term::new_qubit(canon_go(b, free, counter, env)),
    }
}

fn uniq_go(t: &Term, used: &mut HashSet<Name>, env: &mut Vec<(Name, Name)>) -> Term {
    let bind = |x: &Name, used: &mut HashSet<Name>| {
        let n = if used.contains(x) {
            fresh_name(x, &|n: &Name| used.contains(n))
        } else {
            x.clone()
        };
        used.insert(n.clone());
        n
    };
    match t {
        Term::Var(x) => match env.iter().rev().find(|(old, _)| old == x) {
            Some((_, new)) => Term::Var(new.clone()),
            None => t.clone(),
        },
        Term::Lam(x, ty, b) => {
            let n = bind(x, used);
            env.push((x.clone(), n.clone()));
            let b2 = uniq_go(b, used, env);
            env.pop();
            Term::Lam(n, ty.clone(), Box::new(b2))
        }
        Term::LetPair(s, x, y, b) => {
            let s2 = uniq_go(s, used, env);
            let nx = bind(x, used);
            let ny = bind(y, used);
            env.push((x.clone(), nx.clone()));
            env.push((y.clone(), ny.clone()));
            let b2 = uniq_go(b, used, env);
            env.truncate(env.len() - 2);
            Term::LetPair(Box::new(s2), nx, ny, Box::new(b2))
        }
        Term::Bool(_) | Term::Omega | Term::QVar(_) | Term::Hole => t.clone(),
        Term::App(a, b) => {
            let a2 = uniq_go(a, used, env);
            Term::app(a2, uniq_go(b, used, env))
        }
        Term::Pair(a, b) => {
            let a2 = uniq_go(a, used, env);
            Term::pair(a2, uniq_go(b, used, env))
        }
        Term::Choice(a, b) => {
            let a2 = uniq_go(a, used, env);
            Term::choice(a2, uniq_go(b, used, env))
        }
        Term::If(c, th, el) => {
            let c2 = uniq_go(c, used, env);
            let t2 = uniq_go(th, used, env);
            Term::ite(c2, t2, uniq_go(el, used, env))
        }
        Term::Unitary(g, b) => Term::Unitary(g.clone(), Box::new(uniq_go(b, used, env))),
        Term::Meas(b) => Term::meas(uniq_go(b, used, env)),
        Term::New(b) => Term::new_qubit(uniq_go(b, used, env)),
    }
}

/// How [`desugar_pair`] treats components that are already values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSugar {
    /// Always expand to `(\x.\y.<x,y>) e f`.
    Always,
    /// Build the value pair directly when both components are values.
    ValuesDirect,
}

/// Pair of arbitrary terms: `<e, f> = (\x:A. \y:B. <x, y>) e f`.
///
/// The component types annotate the binders of the expansion.
pub fn desugar_pair(e: Term, f: Term, left_ty: Type, right_ty: Type, sugar: PairSugar) -> Term {
    if sugar == PairSugar::ValuesDirect && e.is_value() && f.is_value() {
        return Term::pair(e, f);
    }
    let mut avoid = e.free_vars();
    avoid.extend(f.free_vars());
    let x = fresh_name(&Name::new("x"), &|n: &Name| avoid.contains(n));
    avoid.insert(x.clone());
    let y = fresh_name(&Name::new("y"), &|n: &Name| avoid.contains(n));
    let builder = Term::Lam(
        x.clone(),
        left_ty,
        Box::new(Term::Lam(
            y.clone(),
            right_ty,
            Box::new(Term::pair(Term::Var(x), Term::Var(y))),
        )),
    );
    Term::app(Term::app(builder, e), f)
}

/// Boolean weakening: `weak x in e = if x then e else e`.
pub fn desugar_weak(x: &Name, e: Term) -> Term {
    Term::If(Box::new(Term::Var(x.clone())), Box::new(e.clone()), Box::new(e))
}
