// SPDX-License-Identifier: Apache-2.0

//! Random well-typed closed terms, for property tests.
//!
//! Generation is type-directed and tracks the linear context: every
//! variable put in scope is consumed exactly once, either by an
//! elimination form or by `omega`. Non-value operands are wrapped in
//! beta-redexes, the same shape the parser produces for surface sugar.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::syntax::{CalculusMode, Name, Term};
use crate::typecheck::Type;

/// Random type with at most `depth` nested connectives.
pub fn random_type<R: Rng>(rng: &mut R, mode: CalculusMode, depth: usize) -> Type {
    let leaf = |rng: &mut R| {
        if mode.allows_quantum() && rng.gen_bool(0.3) {
            Type::Qbit
        } else {
            Type::Bool
        }
    };
    if depth == 0 || rng.gen_bool(0.4) {
        return leaf(rng);
    }
    let a = random_type(rng, mode, depth - 1);
    let b = random_type(rng, mode, depth - 1);
    if rng.gen_bool(0.6) {
        Type::arrow(a, b)
    } else {
        Type::tensor(a, b)
    }
}

/// Closed term of type `ty`; `budget` roughly bounds the number of
/// non-trivial constructors.
pub fn random_term<R: Rng>(rng: &mut R, mode: CalculusMode, ty: &Type, budget: usize) -> Term {
    Gen { rng, mode, next: 0 }.term(Vec::new(), ty, budget)
}

/// Closed term of a random type.
pub fn random_closed<R: Rng>(rng: &mut R, mode: CalculusMode, budget: usize) -> (Term, Type) {
    let ty = random_type(rng, mode, 2);
    (random_term(rng, mode, &ty, budget), ty)
}

type Ctx = Vec<(Name, Type)>;

struct Gen<'r, R> {
    rng: &'r mut R,
    mode: CalculusMode,
    next: usize,
}

impl<R: Rng> Gen<'_, R> {
    fn fresh(&mut self) -> Name {
        self.next += 1;
        Name::from(format!("v{}", self.next))
    }

    fn small_type(&mut self) -> Type {
        random_type(self.rng, self.mode, 1)
    }

    fn split(&mut self, ctx: Ctx) -> (Ctx, Ctx) {
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for entry in ctx {
            if self.rng.gen_bool(0.5) {
                a.push(entry);
            } else {
                b.push(entry);
            }
        }
        (a, b)
    }

    fn redex(&mut self, ctx: Ctx, body_ty: &Type, arg_ty: Type, arg: Term, budget: usize) -> Term {
        let x = self.fresh();
        let mut inner = ctx;
        inner.push((x.clone(), arg_ty.clone()));
        let body = self.term(inner, body_ty, budget);
        Term::app(Term::Lam(x, arg_ty, Box::new(body)), arg)
    }

    fn term(&mut self, ctx: Ctx, ty: &Type, budget: usize) -> Term {
        if budget == 0 {
            return self.finish(ctx, ty);
        }
        let b = budget - 1;
        let quantum = self.mode.allows_quantum();
        match self.rng.gen_range(0..10) {
            0 => self.finish(ctx, ty),
            1 if self.rng.gen_bool(0.3) => Term::Omega,
            1 | 2 => self.intro(ctx, ty, b),
            3 => {
                let a = self.small_type();
                let (c1, c2) = self.split(ctx);
                let arg = self.term(c2, &a, b / 2);
                self.redex(c1, ty, a, arg, b / 2)
            }
            4 => {
                let (c1, c2) = self.split(ctx);
                let cond = self.term(c1, &Type::Bool, b / 3);
                let then = self.term(c2.clone(), ty, b / 3);
                let els = self.term(c2, ty, b / 3);
                Term::ite(cond, then, els)
            }
            5 => {
                let (a, bt) = (self.small_type(), self.small_type());
                let (c1, c2) = self.split(ctx);
                let scrut = self.term(c1, &Type::tensor(a.clone(), bt.clone()), b / 2);
                let (x, y) = (self.fresh(), self.fresh());
                let mut inner = c2;
                inner.push((x.clone(), a));
                inner.push((y.clone(), bt));
                Term::LetPair(Box::new(scrut), x, y, Box::new(self.term(inner, ty, b / 2)))
            }
            6 if self.mode.allows_choice() => {
                let (c1, c2) = self.split(ctx);
                Term::choice(self.term(c1, ty, b / 2), self.term(c2, ty, b / 2))
            }
            7 if quantum && *ty == Type::Bool => {
                let m = self.fresh();
                let arg = self.term(ctx, &Type::Qbit, b);
                Term::app(Term::Lam(m.clone(), Type::Qbit, Box::new(Term::meas(Term::Var(m)))), arg)
            }
            7 if quantum && *ty == Type::Qbit => {
                let g = self.fresh();
                let gate = *["H", "X", "Z", "S", "T"].choose(self.rng).unwrap();
                let arg = self.term(ctx, &Type::Qbit, b);
                Term::app(Term::Lam(g.clone(), Type::Qbit, Box::new(Term::unitary(gate, Term::Var(g)))), arg)
            }
            7 if quantum && ty.qbit_power() == Some(2) => {
                let g = self.fresh();
                let arg = self.term(ctx, ty, b);
                Term::app(Term::Lam(g.clone(), ty.clone(), Box::new(Term::unitary("CNOT", Term::Var(g)))), arg)
            }
            _ if !ctx.is_empty() => self.elim(ctx, ty, b),
            _ => self.intro(ctx, ty, b),
        }
    }

    fn intro(&mut self, ctx: Ctx, ty: &Type, budget: usize) -> Term {
        match ty {
            Type::Arrow(a, b) => {
                let x = self.fresh();
                let mut inner = ctx;
                inner.push((x.clone(), (**a).clone()));
                Term::Lam(x, (**a).clone(), Box::new(self.term(inner, b, budget)))
            }
            Type::Tensor(a, b) => {
                // (\x. (\y. <x, y>) e2) e1
                let (c1, c2) = self.split(ctx);
                let (x, y) = (self.fresh(), self.fresh());
                let e1 = self.term(c1, a, budget / 2);
                let e2 = self.term(c2, b, budget / 2);
                let inner = Term::app(
                    Term::Lam(y.clone(), (**b).clone(), Box::new(Term::pair(Term::Var(x.clone()), Term::Var(y)))),
                    e2,
                );
                Term::app(Term::Lam(x, (**a).clone(), Box::new(inner)), e1)
            }
            _ if !ctx.is_empty() => self.elim(ctx, ty, budget),
            _ => self.finish(ctx, ty),
        }
    }

    /// Smallest-effort completion: consume the context, then build a value.
    fn finish(&mut self, ctx: Ctx, ty: &Type) -> Term {
        if ctx.is_empty() {
            return self.closed_value(ty);
        }
        if ctx.len() == 1 && ctx[0].1 == *ty {
            return Term::Var(ctx[0].0.clone());
        }
        self.elim(ctx, ty, 0)
    }

    fn closed_value(&mut self, ty: &Type) -> Term {
        match ty {
            Type::Bool => Term::Bool(self.rng.gen_bool(0.5)),
            Type::Qbit => Term::new_qubit(Term::Bool(self.rng.gen_bool(0.5))),
            Type::Arrow(a, b) => {
                let x = self.fresh();
                let body = self.finish(vec![(x.clone(), (**a).clone())], b);
                Term::Lam(x, (**a).clone(), Box::new(body))
            }
            Type::Tensor(..) => self.intro(Vec::new(), ty, 0),
        }
    }

    fn elim(&mut self, mut ctx: Ctx, ty: &Type, budget: usize) -> Term {
        let i = self.rng.gen_range(0..ctx.len());
        let (x, xty) = ctx.remove(i);
        match xty {
            Type::Bool => {
                let then = self.term(ctx.clone(), ty, budget / 2);
                let els = self.term(ctx, ty, budget / 2);
                Term::ite(Term::Var(x), then, els)
            }
            Type::Tensor(a, b) => {
                let (y, z) = (self.fresh(), self.fresh());
                ctx.push((y.clone(), *a));
                ctx.push((z.clone(), *b));
                Term::LetPair(Box::new(Term::Var(x)), y, z, Box::new(self.term(ctx, ty, budget)))
            }
            Type::Arrow(a, b) => {
                let arg = self.term(Vec::new(), &a, budget / 2);
                self.redex(ctx, ty, *b, Term::app(Term::Var(x), arg), budget / 2)
            }
            Type::Qbit => self.redex(ctx, ty, Type::Bool, Term::meas(Term::Var(x)), budget),
        }
    }
}
