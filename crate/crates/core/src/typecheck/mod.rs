// SPDX-License-Identifier: Apache-2.0

//! Linear type checking.
//!
//! Checking is syntax-directed. Each judgement returns the set of context
//! entries it consumed, and the caller verifies exact coverage: application,
//! let, pairs and choice split the context, while the two branches of a
//! conditional share theirs. `omega` may silently absorb any leftover
//! entries (`G |- omega : A` holds for every `G`), and its type is a
//! unification variable; unconstrained variables default to `bool`.

mod types;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::quantum::GateTable;
use crate::syntax::{CalculusMode, Name, Term};

pub use types::Type;

/// Assignment of types to classical variables plus a set of quantum
/// variables (implicitly of type `qbit`).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypingContext {
    vars: BTreeMap<Name, Type>,
    qvars: BTreeSet<Name>,
}

impl TypingContext {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn with_var(mut self, name: &str, ty: Type) -> Self {
        self.insert(Name::new(name), ty).expect("duplicate binding");
        self
    }

    pub fn with_qvar(mut self, name: &str) -> Self {
        self.insert_qvar(Name::new(name)).expect("duplicate binding");
        self
    }

    pub fn insert(&mut self, name: Name, ty: Type) -> Result<(), TypeError> {
        if self.vars.contains_key(&name) || self.qvars.contains(&name) {
            return Err(TypeError::DuplicateBinding(name));
        }
        self.vars.insert(name, ty);
        Ok(())
    }

    pub fn insert_qvar(&mut self, name: Name) -> Result<(), TypeError> {
        if self.vars.contains_key(&name) || self.qvars.contains(&name) {
            return Err(TypeError::DuplicateBinding(name));
        }
        self.qvars.insert(name);
        Ok(())
    }

    pub fn remove(&mut self, name: &Name) -> bool {
        self.vars.remove(name).is_some() || self.qvars.remove(name)
    }

    pub fn vars(&self) -> impl Iterator<Item = (&Name, &Type)> {
        self.vars.iter()
    }

    pub fn qvars(&self) -> impl Iterator<Item = &Name> {
        self.qvars.iter()
    }

    pub fn len(&self) -> usize {
        self.vars.len() + self.qvars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("variable `{0}` is never used")]
    UnusedVariable(Name),
    #[error("variable `{0}` is used more than once")]
    DuplicatedUse(Name),
    #[error("type mismatch at `{location}`: expected {expected}, found {found}")]
    TypeMismatch {
        expected: String,
        found: String,
        location: String,
    },
    #[error("unknown gate `{0}` (no arity registered)")]
    UnknownGateArity(Name),
    #[error("unbound variable `{0}`")]
    UnboundVariable(Name),
    #[error("unbound quantum variable `#{0}`")]
    UnboundQuantumVariable(Name),
    #[error("duplicate binding for `{0}` in typing context")]
    DuplicateBinding(Name),
    #[error("{construct} is not allowed in {mode} mode")]
    Mode {
        construct: &'static str,
        mode: CalculusMode,
    },
    #[error("operand of {construct} must be a value, found `{location}`")]
    NotAValue {
        construct: &'static str,
        location: String,
    },
    #[error("context has more than one hole")]
    MultipleHoles,
    #[error("context has no hole")]
    NoHole,
    #[error("hole found outside of a context")]
    HoleOutsideContext,
    #[error("hole variable `{0}` is not in scope with the declared type")]
    HoleVariable(Name),
}

impl TypeError {
    /// Stable variant name, for reports and test corpora.
    pub fn kind(&self) -> &'static str {
        match self {
            TypeError::UnusedVariable(_) => "UnusedVariable",
            TypeError::DuplicatedUse(_) => "DuplicatedUse",
            TypeError::TypeMismatch { .. } => "TypeMismatch",
            TypeError::UnknownGateArity(_) => "UnknownGateArity",
            TypeError::UnboundVariable(_) => "UnboundVariable",
            TypeError::UnboundQuantumVariable(_) => "UnboundQuantumVariable",
            TypeError::DuplicateBinding(_) => "DuplicateBinding",
            TypeError::Mode { .. } => "Mode",
            TypeError::NotAValue { .. } => "NotAValue",
            TypeError::MultipleHoles => "MultipleHoles",
            TypeError::NoHole => "NoHole",
            TypeError::HoleOutsideContext => "HoleOutsideContext",
            TypeError::HoleVariable(_) => "HoleVariable",
        }
    }
}

/// A typing derivation, for debugging output.
#[derive(Debug, Clone, Serialize)]
pub struct Derivation {
    pub rule: &'static str,
    pub term: String,
    #[serde(rename = "type")]
    pub ty: Type,
    pub premises: Vec<Derivation>,
}

/// Infers the type of `e` under `ctx`, enforcing exact linear usage.
pub fn typecheck(ctx: &TypingContext, e: &Term, mode: CalculusMode) -> Result<Type, TypeError> {
    Checker::new(mode, &GateTable::builtin()).run(ctx, e, None, None).map(|(t, _)| t)
}

/// As [`typecheck`], with user-supplied gate arities.
pub fn typecheck_with_gates(
    ctx: &TypingContext,
    e: &Term,
    mode: CalculusMode,
    gates: &GateTable,
) -> Result<Type, TypeError> {
    Checker::new(mode, gates).run(ctx, e, None, None).map(|(t, _)| t)
}

/// Checks `e` against an expected type (needed for terms such as `omega`
/// whose type is otherwise unconstrained).
pub fn check_type(
    ctx: &TypingContext,
    e: &Term,
    expected: &Type,
    mode: CalculusMode,
    gates: &GateTable,
) -> Result<(), TypeError> {
    Checker::new(mode, gates)
        .run(ctx, e, Some(expected), None)
        .map(|_| ())
}

/// A type both closed programs have. Inference alone is not enough when
/// one side is unconstrained (`omega` infers as `bool`), so each inferred
/// type is also tried against the other program. `Ok(None)` when the
/// programs are well typed but share no type.
pub fn common_type(e: &Term, f: &Term, mode: CalculusMode, gates: &GateTable) -> Result<Option<Type>, TypeError> {
    let empty = TypingContext::empty();
    let left = typecheck_with_gates(&empty, e, mode, gates)?;
    let right = typecheck_with_gates(&empty, f, mode, gates)?;
    Ok(if left == right || check_type(&empty, f, &left, mode, gates).is_ok() {
        Some(left)
    } else if check_type(&empty, e, &right, mode, gates).is_ok() {
        Some(right)
    } else {
        None
    })
}

/// Typing derivation of `ctx |- e : A`.
pub fn derivation(
    ctx: &TypingContext,
    e: &Term,
    mode: CalculusMode,
    gates: &GateTable,
) -> Result<Derivation, TypeError> {
    let mut checker = Checker::new(mode, gates);
    checker.record = true;
    checker.run(ctx, e, None, None).map(|(_, d)| d.expect("derivation recorded"))
}

/// Type `B` such that `|- C[hole_ctx |- hole_ty] : B`.
pub fn typecheck_context_hole(
    c: &Term,
    hole_ctx: &TypingContext,
    hole_ty: &Type,
    mode: CalculusMode,
) -> Result<Type, TypeError> {
    check_context(&TypingContext::empty(), c, hole_ctx, hole_ty, mode, &GateTable::builtin())
}

/// General context judgement `ctx |- C[hole_ctx |- hole_ty] : B`.
pub fn check_context(
    ctx: &TypingContext,
    c: &Term,
    hole_ctx: &TypingContext,
    hole_ty: &Type,
    mode: CalculusMode,
    gates: &GateTable,
) -> Result<Type, TypeError> {
    match c.hole_count() {
        0 => return Err(TypeError::NoHole),
        1 => {}
        _ => return Err(TypeError::MultipleHoles),
    }
    Checker::new(mode, gates)
        .run(ctx, c, None, Some((hole_ctx, hole_ty)))
        .map(|(t, _)| t)
}

/// Non-linear type synthesis used while elaborating surface sugar.
/// Variables with unknown types get unification variables.
pub(crate) fn infer_loose(
    env: &[(Name, Option<Type>)],
    e: &Term,
    mode: CalculusMode,
    gates: &GateTable,
) -> Option<Type> {
    let mut checker = Checker::new(mode, gates);
    checker.linear = false;
    let mut scope = Vec::new();
    for (name, ty) in env {
        let mty = match ty {
            Some(t) => MType::from(t),
            None => checker.fresh(),
        };
        scope.push(Binding { name: name.clone(), ty: mty, quantum: false });
    }
    let (ty, _, _) = checker.synth(&mut scope, e).ok()?;
    Some(checker.zonk_default(&ty))
}

#[derive(Debug, Clone, PartialEq)]
enum MType {
    Bool,
    Qbit,
    Arrow(Box<MType>, Box<MType>),
    Tensor(Box<MType>, Box<MType>),
    Meta(usize),
}

impl From<&Type> for MType {
    fn from(t: &Type) -> MType {
        match t {
            Type::Bool => MType::Bool,
            Type::Qbit => MType::Qbit,
            Type::Arrow(a, b) => MType::Arrow(Box::new(a.as_ref().into()), Box::new(b.as_ref().into())),
            Type::Tensor(a, b) => {
                MType::Tensor(Box::new(a.as_ref().into()), Box::new(b.as_ref().into()))
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Binding {
    name: Name,
    ty: MType,
    quantum: bool,
}

/// Context entries consumed by a subterm. `absorbs` is set when an
/// `omega` in weakening position can swallow further entries.
#[derive(Debug, Clone, Default)]
struct Usage {
    must: BTreeSet<usize>,
    absorbs: bool,
}

struct Checker<'g> {
    mode: CalculusMode,
    gates: &'g GateTable,
    metas: Vec<Option<MType>>,
    linear: bool,
    record: bool,
    hole: Option<(TypingContext, Type)>,
}

type Synth = (MType, Usage, Option<RawDeriv>);

struct RawDeriv {
    rule: &'static str,
    term: String,
    ty: MType,
    premises: Vec<RawDeriv>,
}

impl<'g> Checker<'g> {
    fn new(mode: CalculusMode, gates: &'g GateTable) -> Self {
        Checker {
            mode,
            gates,
            metas: Vec::new(),
            linear: true,
            record: false,
            hole: None,
        }
    }

    fn run(
        &mut self,
        ctx: &TypingContext,
        e: &Term,
        expected: Option<&Type>,
        hole: Option<(&TypingContext, &Type)>,
    ) -> Result<(Type, Option<Derivation>), TypeError> {
        if let Some((hctx, hty)) = hole {
            self.hole = Some((hctx.clone(), hty.clone()));
        }
        let mut scope = Vec::new();
        for (name, ty) in &ctx.vars {
            self.check_type_mode(ty)?;
            scope.push(Binding { name: name.clone(), ty: ty.into(), quantum: false });
        }
        for name in &ctx.qvars {
            if !self.mode.allows_quantum() {
                return Err(TypeError::Mode { construct: "quantum variable", mode: self.mode });
            }
            scope.push(Binding { name: name.clone(), ty: MType::Qbit, quantum: true });
        }
        let (ty, usage, deriv) = self.synth(&mut scope, e)?;
        if let Some(want) = expected {
            self.unify(&MType::from(want), &ty, e)?;
        }
        if !usage.absorbs {
            for (i, b) in scope.iter().enumerate() {
                if !usage.must.contains(&i) {
                    return Err(TypeError::UnusedVariable(b.name.clone()));
                }
            }
        }
        let ty = self.zonk_default(&ty);
        let deriv = deriv.map(|d| self.finish(d));
        Ok((ty, deriv))
    }

    fn finish(&self, d: RawDeriv) -> Derivation {
        Derivation {
            rule: d.rule,
            term: d.term,
            ty: self.zonk_default(&d.ty),
            premises: d.premises.into_iter().map(|p| self.finish(p)).collect(),
        }
    }

    fn check_type_mode(&self, ty: &Type) -> Result<(), TypeError> {
        if ty.mentions_qbit() && !self.mode.allows_quantum() {
            return Err(TypeError::Mode { construct: "type qbit", mode: self.mode });
        }
        Ok(())
    }

    fn fresh(&mut self) -> MType {
        self.metas.push(None);
        MType::Meta(self.metas.len() - 1)
    }

    fn resolve(&self, t: &MType) -> MType {
        match t {
            MType::Meta(i) => match &self.metas[*i] {
                Some(inner) => self.resolve(inner),
                None => t.clone(),
            },
            other => other.clone(),
        }
    }

    fn occurs(&self, m: usize, t: &MType) -> bool {
        match self.resolve(t) {
            MType::Meta(j) => j == m,
            MType::Arrow(a, b) | MType::Tensor(a, b) => self.occurs(m, &a) || self.occurs(m, &b),
            _ => false,
        }
    }

    fn unify_inner(&mut self, a: &MType, b: &MType) -> bool {
        let (a, b) = (self.resolve(a), self.resolve(b));
        match (&a, &b) {
            (MType::Meta(i), MType::Meta(j)) if i == j => true,
            (MType::Meta(i), other) | (other, MType::Meta(i)) => {
                if self.occurs(*i, other) {
                    return false;
                }
                self.metas[*i] = Some(other.clone());
                true
            }
            (MType::Bool, MType::Bool) | (MType::Qbit, MType::Qbit) => true,
            (MType::Arrow(a1, b1), MType::Arrow(a2, b2))
            | (MType::Tensor(a1, b1), MType::Tensor(a2, b2)) => {
                self.unify_inner(a1, a2) && self.unify_inner(b1, b2)
            }
            _ => false,
        }
    }

    fn unify(&mut self, expected: &MType, found: &MType, at: &Term) -> Result<(), TypeError> {
        if self.unify_inner(expected, found) {
            Ok(())
        } else {
            Err(TypeError::TypeMismatch {
                expected: self.show(expected),
                found: self.show(found),
                location: snippet(at),
            })
        }
    }

    fn show(&self, t: &MType) -> String {
        fn go(c: &Checker<'_>, t: &MType, prec: u8, out: &mut String) {
            match c.resolve(t) {
                MType::Bool => out.push_str("bool"),
                MType::Qbit => out.push_str("qbit"),
                MType::Meta(i) => out.push_str(&format!("?{i}")),
                MType::Arrow(a, b) => {
                    if prec > 0 {
                        out.push('(');
                    }
                    go(c, &a, 1, out);
                    out.push_str(" -o ");
                    go(c, &b, 0, out);
                    if prec > 0 {
                        out.push(')');
                    }
                }
                MType::Tensor(a, b) => {
                    if prec > 1 {
                        out.push('(');
                    }
                    go(c, &a, 2, out);
                    out.push_str(" * ");
                    go(c, &b, 1, out);
                    if prec > 1 {
                        out.push(')');
                    }
                }
            }
        }
        let mut s = String::new();
        go(self, t, 0, &mut s);
        s
    }

    fn zonk_default(&self, t: &MType) -> Type {
        match self.resolve(t) {
            MType::Bool | MType::Meta(_) => Type::Bool,
            MType::Qbit => Type::Qbit,
            MType::Arrow(a, b) => Type::arrow(self.zonk_default(&a), self.zonk_default(&b)),
            MType::Tensor(a, b) => Type::tensor(self.zonk_default(&a), self.zonk_default(&b)),
        }
    }

    fn disjoint(&self, scope: &[Binding], a: &Usage, b: &Usage) -> Result<Usage, TypeError> {
        if self.linear {
            if let Some(i) = a.must.intersection(&b.must).next() {
                return Err(TypeError::DuplicatedUse(scope[*i].name.clone()));
            }
        }
        Ok(Usage {
            must: a.must.union(&b.must).copied().collect(),
            absorbs: a.absorbs || b.absorbs,
        })
    }

    fn bind_used(&self, scope: &[Binding], usage: &mut Usage, index: usize) -> Result<(), TypeError> {
        if !usage.must.remove(&index) && !usage.absorbs && self.linear {
            return Err(TypeError::UnusedVariable(scope[index].name.clone()));
        }
        Ok(())
    }

    fn require_value(&self, construct: &'static str, v: &Term) -> Result<(), TypeError> {
        if v.is_value() || !self.linear {
            Ok(())
        } else {
            Err(TypeError::NotAValue { construct, location: snippet(v) })
        }
    }

    fn deriv(&self, rule: &'static str, e: &Term, ty: &MType, premises: Vec<Option<RawDeriv>>) -> Option<RawDeriv> {
        if !self.record {
            return None;
        }
        Some(RawDeriv {
            rule,
            term: e.to_string(),
            ty: ty.clone(),
            premises: premises.into_iter().flatten().collect(),
        })
    }

    fn synth(&mut self, scope: &mut Vec<Binding>, e: &Term) -> Result<Synth, TypeError> {
        match e {
            Term::Var(x) => {
                let i = scope
                    .iter()
                    .rposition(|b| !b.quantum && &b.name == x)
                    .ok_or_else(|| TypeError::UnboundVariable(x.clone()))?;
                let ty = scope[i].ty.clone();
                let d = self.deriv("var", e, &ty, vec![]);
                Ok((ty, Usage { must: [i].into(), absorbs: false }, d))
            }
            Term::QVar(r) => {
                if !self.mode.allows_quantum() {
                    return Err(TypeError::Mode { construct: "quantum variable", mode: self.mode });
                }
                let i = scope
                    .iter()
                    .rposition(|b| b.quantum && &b.name == r)
                    .ok_or_else(|| TypeError::UnboundQuantumVariable(r.clone()))?;
                let d = self.deriv("qvar", e, &MType::Qbit, vec![]);
                Ok((MType::Qbit, Usage { must: [i].into(), absorbs: false }, d))
            }
            Term::Bool(_) => {
                let d = self.deriv("const", e, &MType::Bool, vec![]);
                Ok((MType::Bool, Usage::default(), d))
            }
            Term::Omega => {
                let ty = self.fresh();
                let d = self.deriv("omega", e, &ty, vec![]);
                Ok((ty, Usage { must: BTreeSet::new(), absorbs: true }, d))
            }
            Term::Hole if self.hole.is_none() && !self.linear => {
                let ty = self.fresh();
                Ok((ty, Usage::default(), None))
            }
            Term::Hole => {
                let (hctx, hty) = self.hole.clone().ok_or(TypeError::HoleOutsideContext)?;
                let mut must = BTreeSet::new();
                for (name, ty) in hctx.vars() {
                    let i = scope
                        .iter()
                        .rposition(|b| !b.quantum && &b.name == name)
                        .ok_or_else(|| TypeError::HoleVariable(name.clone()))?;
                    let bty = scope[i].ty.clone();
                    if !self.unify_inner(&bty, &MType::from(ty)) {
                        return Err(TypeError::HoleVariable(name.clone()));
                    }
                    must.insert(i);
                }
                for name in hctx.qvars() {
                    let i = scope
                        .iter()
                        .rposition(|b| b.quantum && &b.name == name)
                        .ok_or_else(|| TypeError::HoleVariable(name.clone()))?;
                    must.insert(i);
                }
                let ty = MType::from(&hty);
                let d = self.deriv("hole", e, &ty, vec![]);
                Ok((ty, Usage { must, absorbs: false }, d))
            }
            Term::Lam(x, ann, body) => {
                self.check_type_mode(ann)?;
                let dom = MType::from(ann);
                scope.push(Binding { name: x.clone(), ty: dom.clone(), quantum: false });
                let index = scope.len() - 1;
                let result = self.synth(scope, body);
                let (cod, mut usage, bd) = match result {
                    Ok(r) => r,
                    Err(err) => {
                        scope.pop();
                        return Err(err);
                    }
                };
                let bound = self.bind_used(scope, &mut usage, index);
                scope.pop();
                bound?;
                let ty = MType::Arrow(Box::new(dom), Box::new(cod));
                let d = self.deriv("abs", e, &ty, vec![bd]);
                Ok((ty, usage, d))
            }
            Term::App(f, a) => {
                let (fty, u1, d1) = self.synth(scope, f)?;
                let (aty, u2, d2) = self.synth(scope, a)?;
                let usage = self.disjoint(scope, &u1, &u2)?;
                let res = self.fresh();
                let want = MType::Arrow(Box::new(aty), Box::new(res.clone()));
                self.unify(&want, &fty, f)?;
                let d = self.deriv("app", e, &res, vec![d1, d2]);
                Ok((res, usage, d))
            }
            Term::If(c, t, g) => {
                let (cty, uc, dc) = self.synth(scope, c)?;
                self.unify(&MType::Bool, &cty, c)?;
                let (tty, ut, dt) = self.synth(scope, t)?;
                let (gty, ug, dg) = self.synth(scope, g)?;
                self.unify(&tty, &gty, g)?;
                let branches = self.share(scope, &ut, &ug)?;
                let usage = self.disjoint(scope, &uc, &branches)?;
                let d = self.deriv("if", e, &tty, vec![dc, dt, dg]);
                Ok((tty, usage, d))
            }
            Term::LetPair(s, x, y, body) => {
                let (sty, us, ds) = self.synth(scope, s)?;
                let (lx, ly) = (self.fresh(), self.fresh());
                let want = MType::Tensor(Box::new(lx.clone()), Box::new(ly.clone()));
                self.unify(&want, &sty, s)?;
                scope.push(Binding { name: x.clone(), ty: lx, quantum: false });
                scope.push(Binding { name: y.clone(), ty: ly, quantum: false });
                let (ix, iy) = (scope.len() - 2, scope.len() - 1);
                let inner = (|| {
                    let (bty, mut ub, db) = self.synth(scope, body)?;
                    self.bind_used(scope, &mut ub, ix)?;
                    self.bind_used(scope, &mut ub, iy)?;
                    Ok::<_, TypeError>((bty, ub, db))
                })();
                scope.truncate(scope.len() - 2);
                let (bty, ub, db) = inner?;
                let usage = self.disjoint(scope, &us, &ub)?;
                let d = self.deriv("let", e, &bty, vec![ds, db]);
                Ok((bty, usage, d))
            }
            Term::Pair(v, w) => {
                self.require_value("pair", v)?;
                self.require_value("pair", w)?;
                let (vt, uv, dv) = self.synth(scope, v)?;
                let (wt, uw, dw) = self.synth(scope, w)?;
                let usage = self.disjoint(scope, &uv, &uw)?;
                let ty = MType::Tensor(Box::new(vt), Box::new(wt));
                let d = self.deriv("pair", e, &ty, vec![dv, dw]);
                Ok((ty, usage, d))
            }
            Term::Choice(a, b) => {
                if !self.mode.allows_choice() {
                    return Err(TypeError::Mode { construct: "probabilistic choice (+)", mode: self.mode });
                }
                let (at, ua, da) = self.synth(scope, a)?;
                let (bt, ub, db) = self.synth(scope, b)?;
                let usage = self.disjoint(scope, &ua, &ub)?;
                self.unify(&at, &bt, b)?;
                let d = self.deriv("choice", e, &at, vec![da, db]);
                Ok((at, usage, d))
            }
            Term::Meas(v) => {
                self.quantum_only("meas")?;
                self.require_value("meas", v)?;
                let (vt, uv, dv) = self.synth(scope, v)?;
                self.unify(&MType::Qbit, &vt, v)?;
                let d = self.deriv("meas", e, &MType::Bool, vec![dv]);
                Ok((MType::Bool, uv, d))
            }
            Term::New(v) => {
                self.quantum_only("new")?;
                self.require_value("new", v)?;
                let (vt, uv, dv) = self.synth(scope, v)?;
                self.unify(&MType::Bool, &vt, v)?;
                let d = self.deriv("new", e, &MType::Qbit, vec![dv]);
                Ok((MType::Qbit, uv, d))
            }
            Term::Unitary(g, v) => {
                self.quantum_only("unitary gate")?;
                let n = self
                    .gates
                    .arity(g.as_str())
                    .ok_or_else(|| TypeError::UnknownGateArity(g.clone()))?;
                self.require_value("unitary gate", v)?;
                let (vt, uv, dv) = self.synth(scope, v)?;
                let ty = MType::from(&Type::qbits(n));
                self.unify(&ty, &vt, v)?;
                let d = self.deriv("unitary", e, &ty, vec![dv]);
                Ok((ty, uv, d))
            }
        }
    }

    fn quantum_only(&self, construct: &'static str) -> Result<(), TypeError> {
        if self.mode.allows_quantum() {
            Ok(())
        } else {
            Err(TypeError::Mode { construct, mode: self.mode })
        }
    }

    /// Both branches of a conditional are typed under the same context.
    fn share(&self, scope: &[Binding], ut: &Usage, ug: &Usage) -> Result<Usage, TypeError> {
        if !self.linear {
            return Ok(Usage {
                must: ut.must.union(&ug.must).copied().collect(),
                absorbs: ut.absorbs || ug.absorbs,
            });
        }
        let missing = |have: &Usage, want: &Usage| -> Option<usize> {
            want.must.difference(&have.must).next().copied()
        };
        match (ut.absorbs, ug.absorbs) {
            (true, true) => Ok(Usage {
                must: ut.must.union(&ug.must).copied().collect(),
                absorbs: true,
            }),
            (true, false) => match missing(ug, ut) {
                Some(i) => Err(TypeError::UnusedVariable(scope[i].name.clone())),
                None => Ok(ug.clone()),
            },
            (false, true) => match missing(ut, ug) {
                Some(i) => Err(TypeError::UnusedVariable(scope[i].name.clone())),
                None => Ok(ut.clone()),
            },
            (false, false) => {
                if let Some(i) = missing(ut, ug).or_else(|| missing(ug, ut)) {
                    Err(TypeError::UnusedVariable(scope[i].name.clone()))
                } else {
                    Ok(ut.clone())
                }
            }
        }
    }
}

fn snippet(t: &Term) -> String {
    let s = t.to_string();
    if s.chars().count() > 60 {
        let cut: String = s.chars().take(57).collect();
        format!("{cut}...")
    } else {
        s
    }
}
