// SPDX-License-Identifier: Apache-2.0

//! Recursive-descent parser for the surface syntax.
//!
//! Grammar, loosest first:
//!
//! ```text
//! expr   ::= \x:T. expr | if expr then expr else expr
//!          | let <x, y> = expr in expr | weak x in expr | choice
//! choice ::= app ((+) app)*
//! app    ::= atom atom* [binder-form]
//! atom   ::= x | #r | tt | ff | omega | [.] | (expr) | <expr, expr>
//!          | meas(expr) | new(expr) | Gate<expr, ..., expr>
//! ```
//!
//! Non-value operands of pairs, gates, `meas` and `new` are let-expanded
//! into beta-redexes, which needs the operand type; that type is found by
//! a non-linear inference pass over the binders seen so far.

use thiserror::Error;

use super::lexer::{tokenize, Pos, Tok};
use super::{desugar_pair, desugar_weak, CalculusMode, Name, PairSugar, Term};
use crate::quantum::GateTable;
use crate::typecheck::{infer_loose, Type};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{pos}: {message}")]
    Syntax { pos: Pos, message: String },
    #[error("{construct} is not allowed in {mode} mode")]
    Mode {
        construct: &'static str,
        mode: CalculusMode,
    },
}

impl ParseError {
    pub(crate) fn syntax(pos: Pos, message: impl Into<String>) -> ParseError {
        ParseError::Syntax { pos, message: message.into() }
    }
}

#[derive(Debug, Clone)]
pub struct ParseOptions {
    pub mode: CalculusMode,
    pub gates: GateTable,
    pub pair_sugar: PairSugar,
    /// Inline `and`, `or`, `not`, `dup` and `id` when they are unbound.
    pub prelude: bool,
}

impl ParseOptions {
    pub fn new(mode: CalculusMode) -> Self {
        ParseOptions {
            mode,
            gates: GateTable::builtin(),
            pair_sugar: PairSugar::ValuesDirect,
            prelude: true,
        }
    }
}

pub fn parse(src: &str, mode: CalculusMode) -> Result<Term, ParseError> {
    parse_with(src, &ParseOptions::new(mode))
}

pub fn parse_with(src: &str, opts: &ParseOptions) -> Result<Term, ParseError> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, at: 0, opts, scope: Vec::new() };
    let term = p.expr()?;
    p.expect(&Tok::Eof)?;
    if let Some(construct) = term.mode_violation(opts.mode) {
        return Err(ParseError::Mode { construct, mode: opts.mode });
    }
    Ok(term.uniquify_binders())
}

pub fn parse_type(src: &str) -> Result<Type, ParseError> {
    let opts = ParseOptions::new(CalculusMode::Quantum);
    let mut p = Parser { toks: tokenize(src)?, at: 0, opts: &opts, scope: Vec::new() };
    let ty = p.ty()?;
    p.expect(&Tok::Eof)?;
    Ok(ty)
}

const PRELUDE: &[(&str, &str)] = &[
    ("id", r"\a:bool. a"),
    ("not", r"\a:bool. if a then ff else tt"),
    ("and", r"\a:bool. \b:bool. if a then b else (if b then ff else ff)"),
    ("or", r"\a:bool. \b:bool. if a then (if b then tt else tt) else b"),
    ("dup", r"\a:bool. if a then <tt, tt> else <ff, ff>"),
];

fn prelude_term(name: &str) -> Option<Term> {
    let (_, src) = PRELUDE.iter().find(|(n, _)| *n == name)?;
    let mut opts = ParseOptions::new(CalculusMode::Det);
    opts.prelude = false;
    Some(parse_with(src, &opts).expect("prelude parses"))
}

struct Parser<'o> {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    opts: &'o ParseOptions,
    /// Binders in scope with their types when known.
    scope: Vec<(Name, Option<Type>)>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: &Tok) -> Result<(), ParseError> {
        if self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&want.describe()))
        }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        ParseError::syntax(self.pos(), format!("expected {wanted}, found {}", self.peek().describe()))
    }

    fn ident(&mut self) -> Result<Name, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(Name::from(s))
            }
            _ => Err(self.unexpected("a variable name")),
        }
    }

    fn ty(&mut self) -> Result<Type, ParseError> {
        let left = self.ty_tensor()?;
        if self.peek() == &Tok::Lolli {
            self.bump();
            return Ok(Type::arrow(left, self.ty()?));
        }
        Ok(left)
    }

    fn ty_tensor(&mut self) -> Result<Type, ParseError> {
        let left = self.ty_atom()?;
        if self.peek() == &Tok::Star {
            self.bump();
            return Ok(Type::tensor(left, self.ty_tensor()?));
        }
        Ok(left)
    }

    fn ty_atom(&mut self) -> Result<Type, ParseError> {
        match self.bump() {
            Tok::BoolTy => Ok(Type::Bool),
            Tok::QbitTy => Ok(Type::Qbit),
            Tok::LParen => {
                let t = self.ty()?;
                self.expect(&Tok::RParen)?;
                Ok(t)
            }
            _ => {
                self.at -= 1;
                Err(self.unexpected("a type"))
            }
        }
    }

    fn starts_binder_form(&self) -> bool {
        matches!(self.peek(), Tok::Lambda | Tok::If | Tok::Let | Tok::Weak)
    }

    fn starts_atom(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Ident(_)
                | Tok::QIdent(_)
                | Tok::Tt
                | Tok::Ff
                | Tok::Omega
                | Tok::Hole
                | Tok::LParen
                | Tok::LAngle
                | Tok::Meas
                | Tok::New
        )
    }

    fn expr(&mut self) -> Result<Term, ParseError> {
        match self.peek() {
            Tok::Lambda => {
                self.bump();
                let x = self.ident()?;
                self.expect(&Tok::Colon)?;
                let ty = self.ty()?;
                self.expect(&Tok::Dot)?;
                self.scope.push((x.clone(), Some(ty.clone())));
                let body = self.expr();
                self.scope.pop();
                Ok(Term::Lam(x, ty, Box::new(body?)))
            }
            Tok::If => {
                self.bump();
                let c = self.expr()?;
                self.expect(&Tok::Then)?;
                let t = self.expr()?;
                self.expect(&Tok::Else)?;
                let e = self.expr()?;
                Ok(Term::ite(c, t, e))
            }
            Tok::Let => {
                self.bump();
                self.expect(&Tok::LAngle)?;
                let x = self.ident()?;
                self.expect(&Tok::Comma)?;
                let y = self.ident()?;
                self.expect(&Tok::RAngle)?;
                self.expect(&Tok::Eq)?;
                let s = self.expr()?;
                self.expect(&Tok::In)?;
                let (tx, ty) = match self.infer(&s) {
                    Some(Type::Tensor(a, b)) => (Some(*a), Some(*b)),
                    _ => (None, None),
                };
                self.scope.push((x.clone(), tx));
                self.scope.push((y.clone(), ty));
                let body = self.expr();
                self.scope.truncate(self.scope.len() - 2);
                Ok(Term::LetPair(Box::new(s), x, y, Box::new(body?)))
            }
            Tok::Weak => {
                self.bump();
                let x = self.ident()?;
                self.expect(&Tok::In)?;
                let body = self.expr()?;
                Ok(desugar_weak(&x, body))
            }
            _ => self.choice(),
        }
    }

    fn choice(&mut self) -> Result<Term, ParseError> {
        let mut left = self.app()?;
        while self.peek() == &Tok::Choice {
            self.bump();
            let right = self.app()?;
            left = Term::choice(left, right);
        }
        Ok(left)
    }

    fn app(&mut self) -> Result<Term, ParseError> {
        if !self.starts_atom() {
            return Err(self.unexpected("a term"));
        }
        let mut head = self.atom()?;
        loop {
            if self.starts_atom() {
                let arg = self.atom()?;
                head = Term::app(head, arg);
            } else if self.starts_binder_form() {
                let arg = self.expr()?;
                return Ok(Term::app(head, arg));
            } else {
                return Ok(head);
            }
        }
    }

    fn atom(&mut self) -> Result<Term, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Ident(s) => {
                let gate = s.starts_with(|c: char| c.is_uppercase()) && self.peek() == &Tok::LAngle;
                if gate {
                    return self.gate(Name::from(s));
                }
                let name = Name::from(s);
                let bound = self.scope.iter().any(|(n, _)| n == &name);
                if !bound && self.opts.prelude {
                    if let Some(t) = prelude_term(name.as_str()) {
                        return Ok(t);
                    }
                }
                Ok(Term::Var(name))
            }
            Tok::QIdent(s) => Ok(Term::QVar(Name::from(s))),
            Tok::Tt => Ok(Term::Bool(true)),
            Tok::Ff => Ok(Term::Bool(false)),
            Tok::Omega => Ok(Term::Omega),
            Tok::Hole => Ok(Term::Hole),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(&Tok::RParen)?;
                Ok(e)
            }
            Tok::LAngle => {
                let e = self.expr()?;
                self.expect(&Tok::Comma)?;
                let f = self.expr()?;
                self.expect(&Tok::RAngle)?;
                self.pair(e, f, pos)
            }
            Tok::Meas => {
                let arg = self.parenthesized()?;
                Ok(self.wrap_operand(arg, Type::Qbit, "m", Term::meas))
            }
            Tok::New => {
                let arg = self.parenthesized()?;
                Ok(self.wrap_operand(arg, Type::Bool, "b", Term::new_qubit))
            }
            _ => {
                self.at -= 1;
                Err(self.unexpected("a term"))
            }
        }
    }

    fn parenthesized(&mut self) -> Result<Term, ParseError> {
        self.expect(&Tok::LParen)?;
        let e = self.expr()?;
        self.expect(&Tok::RParen)?;
        Ok(e)
    }

    fn gate(&mut self, name: Name) -> Result<Term, ParseError> {
        let pos = self.pos();
        self.expect(&Tok::LAngle)?;
        let mut args = vec![self.expr()?];
        while self.peek() == &Tok::Comma {
            self.bump();
            args.push(self.expr()?);
        }
        self.expect(&Tok::RAngle)?;
        let mut tuple = args.pop().expect("at least one gate operand");
        while let Some(prev) = args.pop() {
            tuple = self.pair(prev, tuple, pos)?;
        }
        let operand_ty = match self.opts.gates.arity(name.as_str()) {
            Some(n) => Type::qbits(n),
            None => self.infer(&tuple).unwrap_or(Type::Qbit),
        };
        Ok(self.wrap_operand(tuple, operand_ty, "g", |v| Term::Unitary(name.clone(), Box::new(v))))
    }

    /// `op(e)` for a non-value `e` becomes `(\m:A. op(m)) e`.
    fn wrap_operand(&self, arg: Term, ty: Type, var: &str, op: impl Fn(Term) -> Term) -> Term {
        if arg.is_value() {
            return op(arg);
        }
        Term::app(Term::lam(var, ty, op(Term::var(var))), arg)
    }

    fn pair(&mut self, e: Term, f: Term, pos: Pos) -> Result<Term, ParseError> {
        if self.opts.pair_sugar == PairSugar::ValuesDirect && e.is_value() && f.is_value() {
            return Ok(Term::pair(e, f));
        }
        let left = self
            .infer(&e)
            .ok_or_else(|| ParseError::syntax(pos, format!("cannot infer the type of pair component `{e}`")))?;
        let right = self
            .infer(&f)
            .ok_or_else(|| ParseError::syntax(pos, format!("cannot infer the type of pair component `{f}`")))?;
        Ok(desugar_pair(e, f, left, right, self.opts.pair_sugar))
    }

    fn infer(&self, e: &Term) -> Option<Type> {
        infer_loose(&self.scope, e, CalculusMode::Quantum, &self.opts.gates)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(s: &str) -> Term {
        parse(s, CalculusMode::Det).unwrap()
    }

    #[test]
    fn application_is_left_associative() {
        let e = det("f g h");
        assert_eq!(e, Term::app(Term::app(Term::var("f"), Term::var("g")), Term::var("h")));
    }

    #[test]
    fn choice_binds_loosest() {
        let e = parse("f tt (+) ff (+) tt", CalculusMode::Prob).unwrap();
        let want = Term::choice(
            Term::choice(Term::app(Term::var("f"), Term::Bool(true)), Term::Bool(false)),
            Term::Bool(true),
        );
        assert_eq!(e, want);
    }

    #[test]
    fn types_parse_with_precedence() {
        let t = parse_type("bool * bool -o bool -o bool").unwrap();
        let want = Type::arrow(
            Type::tensor(Type::Bool, Type::Bool),
            Type::arrow(Type::Bool, Type::Bool),
        );
        assert_eq!(t, want);
        assert_eq!(parse_type("bool ⊗ qbit ⊸ qbit").unwrap().to_string(), "bool * qbit -o qbit");
    }

    #[test]
    fn lambda_body_extends_right() {
        let e = det(r"\x:bool. if x then ff else tt");
        assert!(matches!(e, Term::Lam(_, _, ref b) if matches!(**b, Term::If(..))));
    }

    #[test]
    fn pair_of_values_is_a_value() {
        assert_eq!(det("<tt, ff>"), Term::pair(Term::Bool(true), Term::Bool(false)));
    }

    #[test]
    fn pair_of_computations_is_expanded() {
        let e = det(r"<(\x:bool. x) tt, ff>");
        let Term::App(head, right) = &e else { panic!("{e}") };
        assert_eq!(**right, Term::Bool(false));
        let Term::App(builder, _) = &**head else { panic!() };
        let Term::Lam(_, ty, _) = &**builder else { panic!() };
        assert_eq!(*ty, Type::Bool);
    }

    #[test]
    fn prelude_inlines_unless_shadowed() {
        let e = det("and tt ff");
        assert!(matches!(e, Term::App(ref f, _) if matches!(**f, Term::App(ref g, _) if matches!(**g, Term::Lam(..)))));
        let shadowed = det(r"\and:bool. and");
        assert_eq!(shadowed, Term::lam("and", Type::Bool, Term::var("and")));
    }

    #[test]
    fn quantum_surface() {
        let e = parse("meas(H<new(ff)>)", CalculusMode::Quantum).unwrap();
        // Both operands are computations, so each is wrapped in a redex.
        assert!(matches!(e, Term::App(..)));
        let direct = parse("CNOT<#a, #b>", CalculusMode::Quantum).unwrap();
        assert_eq!(
            direct,
            Term::unitary("CNOT", Term::pair(Term::qvar("a"), Term::qvar("b")))
        );
    }

    #[test]
    fn mode_errors() {
        assert!(matches!(
            parse("tt (+) ff", CalculusMode::Det),
            Err(ParseError::Mode { .. })
        ));
        assert!(matches!(
            parse("meas(#r)", CalculusMode::Prob),
            Err(ParseError::Mode { .. })
        ));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse("if tt then\n  ff", CalculusMode::Det).unwrap_err();
        let ParseError::Syntax { pos, .. } = err else { panic!() };
        assert_eq!(pos.line, 2);
    }
}
