// SPDX-License-Identifier: Apache-2.0

//! Typed, linear, memoized enumeration of terms and contexts.
//!
//! `gen(scope, mask, A, n, hole)` produces every term of exactly `n` nodes
//! and type `A` whose typing context is exactly the scope entries selected
//! by `mask`, with `hole` saying whether the term contains the single
//! hole. Typing is enforced while generating: context splits for
//! application, let, pairs and choice; shared branch contexts for `if`;
//! `omega` absorbs whatever it is given.
//!
//! Argument types of applications and scrutinee types of `let` are drawn
//! from a finite type universe, which keeps the search space finite.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use crate::quantum::GateTable;
use crate::syntax::{CalculusMode, Name, Term};
use crate::typecheck::Type;

type Key = (Vec<(Name, Type)>, u64, Type, usize, bool);

pub struct Enumerator {
    mode: CalculusMode,
    universe: Vec<Type>,
    hole_ctx: Vec<(Name, Type)>,
    hole_ty: Option<Type>,
    gates: Vec<(Name, usize)>,
    memo: HashMap<Key, Arc<Vec<Term>>>,
}

impl Enumerator {
    /// Enumerator for hole-free terms. The universe is the subterm
    /// closure of `seeds` plus `bool` and `bool * bool` (and the one- and
    /// two-qubit types in quantum mode).
    pub fn new(mode: CalculusMode, seeds: &[Type], gates: &GateTable) -> Self {
        let mut universe = Vec::new();
        let mut base = vec![Type::Bool];
        base.extend(seeds.iter().cloned());
        base.push(Type::tensor(Type::Bool, Type::Bool));
        if mode.allows_quantum() {
            base.push(Type::Qbit);
            base.push(Type::qbits(2));
        }
        for t in &base {
            t.subterms(&mut universe);
        }
        let gates = if mode.allows_quantum() {
            gates.names().map(|g| (Name::new(g), gates.arity(g).unwrap())).collect()
        } else {
            Vec::new()
        };
        Enumerator { mode, universe, hole_ctx: Vec::new(), hole_ty: None, gates, memo: HashMap::new() }
    }

    /// Enumerator for contexts `C[hole_ctx |- hole_ty] : result`.
    pub fn for_contexts(
        mode: CalculusMode,
        hole_ctx: &[(Name, Type)],
        hole_ty: &Type,
        result: &Type,
        gates: &GateTable,
    ) -> Self {
        let mut seeds = vec![hole_ty.clone(), result.clone()];
        seeds.extend(hole_ctx.iter().map(|(_, t)| t.clone()));
        let mut e = Enumerator::new(mode, &seeds, gates);
        e.hole_ctx = hole_ctx.to_vec();
        e.hole_ty = Some(hole_ty.clone());
        e
    }

    pub fn universe(&self) -> &[Type] {
        &self.universe
    }

    /// Closed terms of exactly `size` nodes.
    pub fn closed_terms(&mut self, ty: &Type, size: usize) -> Arc<Vec<Term>> {
        self.gen(&[], 0, ty, size, false)
    }

    /// Closed values of type `ty` with at most `max_size` nodes, smallest first.
    pub fn closed_values(&mut self, ty: &Type, max_size: usize) -> Vec<Term> {
        let mut out = Vec::new();
        for n in 1..=max_size {
            out.extend(self.closed_terms(ty, n).iter().filter(|t| t.is_value()).cloned());
        }
        out
    }

    /// Terms of type `ty` using every variable of `scope` exactly once.
    pub fn open_terms(&mut self, scope: &[(Name, Type)], ty: &Type, size: usize) -> Arc<Vec<Term>> {
        let mask = (1u64 << scope.len()) - 1;
        self.gen(scope, mask, ty, size, false)
    }

    /// Contexts of exactly `size` nodes with result type `result`.
    pub fn contexts(&mut self, result: &Type, size: usize) -> Arc<Vec<Term>> {
        assert!(self.hole_ty.is_some(), "enumerator was not built for contexts");
        self.gen(&[], 0, result, size, true)
    }

    fn binder_names(&self, scope: &[(Name, Type)], ty: &Type, level: usize) -> Vec<Name> {
        let mut names = vec![Name::from(format!("x{level}"))];
        for (n, t) in &self.hole_ctx {
            if t == ty && !scope.iter().any(|(m, _)| m == n) {
                names.push(n.clone());
            }
        }
        names
    }

    /// Mask of scope entries the hole consumes, if the hole is typeable here.
    fn hole_mask(&self, scope: &[(Name, Type)]) -> Option<u64> {
        let mut mask = 0u64;
        for (n, t) in &self.hole_ctx {
            let i = scope.iter().rposition(|(m, _)| m == n)?;
            if &scope[i].1 != t {
                return None;
            }
            mask |= 1 << i;
        }
        Some(mask)
    }

    pub fn gen(&mut self, scope: &[(Name, Type)], mask: u64, ty: &Type, size: usize, hole: bool) -> Arc<Vec<Term>> {
        if size == 0 {
            return Arc::new(Vec::new());
        }
        let key = (scope.to_vec(), mask, ty.clone(), size, hole);
        if let Some(hit) = self.memo.get(&key) {
            return hit.clone();
        }
        let mut out = Out::default();
        if size == 1 {
            self.atoms(scope, mask, ty, hole, &mut out);
        } else {
            self.composites(scope, mask, ty, size, hole, &mut out);
        }
        let result = Arc::new(out.terms);
        self.memo.insert(key, result.clone());
        result
    }

    fn atoms(&mut self, scope: &[(Name, Type)], mask: u64, ty: &Type, hole: bool, out: &mut Out) {
        if hole {
            if self.hole_ty.as_ref() == Some(ty) && self.hole_mask(scope) == Some(mask) {
                out.push(Term::Hole);
            }
            return;
        }
        if mask.count_ones() == 1 {
            let i = mask.trailing_zeros() as usize;
            // A shadowed entry cannot be referenced.
            let visible = scope.iter().rposition(|(m, _)| m == &scope[i].0) == Some(i);
            if visible && &scope[i].1 == ty {
                out.push(Term::Var(scope[i].0.clone()));
            }
        }
        if mask == 0 && *ty == Type::Bool {
            out.push(Term::Bool(true));
            out.push(Term::Bool(false));
        }
        out.push(Term::Omega);
    }

    fn composites(&mut self, scope: &[(Name, Type)], mask: u64, ty: &Type, size: usize, hole: bool, out: &mut Out) {
        let level = scope.len();
        let splits = |hole: bool| -> Vec<(bool, bool)> {
            if hole {
                vec![(true, false), (false, true)]
            } else {
                vec![(false, false)]
            }
        };

        if let Type::Arrow(dom, cod) = ty {
            for x in self.binder_names(scope, dom, level) {
                let mut inner = scope.to_vec();
                inner.push((x.clone(), (**dom).clone()));
                for body in self.gen(&inner, mask | (1 << level), cod, size - 1, hole).iter() {
                    out.push(Term::Lam(x.clone(), (**dom).clone(), Box::new(body.clone())));
                }
            }
        }

        for s1 in 1..size - 1 {
            let s2 = size - 1 - s1;
            for a in self.universe.clone() {
                let fty = Type::arrow(a.clone(), ty.clone());
                for m1 in submasks(mask) {
                    for (h1, h2) in splits(hole) {
                        let funs = self.gen(scope, m1, &fty, s1, h1);
                        if funs.is_empty() {
                            continue;
                        }
                        let args = self.gen(scope, mask ^ m1, &a, s2, h2);
                        for f in funs.iter() {
                            for v in args.iter() {
                                out.push(Term::app(f.clone(), v.clone()));
                            }
                        }
                    }
                }
            }
        }

        for sc in 1..size - 1 {
            for st in 1..size - sc - 1 {
                let se = size - 1 - sc - st;
                for m1 in submasks(mask) {
                    let holes: Vec<[bool; 3]> = if hole {
                        vec![[true, false, false], [false, true, false], [false, false, true]]
                    } else {
                        vec![[false; 3]]
                    };
                    for [hc, ht, he] in holes {
                        let conds = self.gen(scope, m1, &Type::Bool, sc, hc);
                        if conds.is_empty() {
                            continue;
                        }
                        let thens = self.gen(scope, mask ^ m1, ty, st, ht);
                        let elses = self.gen(scope, mask ^ m1, ty, se, he);
                        for c in conds.iter() {
                            for t in thens.iter() {
                                for e in elses.iter() {
                                    out.push(Term::ite(c.clone(), t.clone(), e.clone()));
                                }
                            }
                        }
                    }
                }
            }
        }

        let tensors: Vec<(Type, Type)> = self
            .universe
            .iter()
            .filter_map(|t| match t {
                Type::Tensor(a, b) => Some(((**a).clone(), (**b).clone())),
                _ => None,
            })
            .collect();
        for ss in 1..size - 1 {
            let sb = size - 1 - ss;
            for (a, b) in &tensors {
                let pair_ty = Type::tensor(a.clone(), b.clone());
                for m1 in submasks(mask) {
                    for (h1, h2) in splits(hole) {
                        let scruts = self.gen(scope, m1, &pair_ty, ss, h1);
                        if scruts.is_empty() {
                            continue;
                        }
                        for x in self.binder_names(scope, a, level) {
                            let mut with_x = scope.to_vec();
                            with_x.push((x.clone(), a.clone()));
                            for y in self.binder_names(&with_x, b, level + 1) {
                                let mut inner = with_x.clone();
                                inner.push((y.clone(), b.clone()));
                                let body_mask = (mask ^ m1) | (1 << level) | (1 << (level + 1));
                                let bodies = self.gen(&inner, body_mask, ty, sb, h2);
                                for s in scruts.iter() {
                                    for body in bodies.iter() {
                                        out.push(Term::LetPair(
                                            Box::new(s.clone()),
                                            x.clone(),
                                            y.clone(),
                                            Box::new(body.clone()),
                                        ));
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }

        if let (Type::Tensor(a, b), false) = (ty, hole) {
            for s1 in 1..size - 1 {
                let s2 = size - 1 - s1;
                for m1 in submasks(mask) {
                    let lefts = self.gen(scope, m1, a, s1, false);
                    let rights = self.gen(scope, mask ^ m1, b, s2, false);
                    for v in lefts.iter().filter(|t| t.is_value()) {
                        for w in rights.iter().filter(|t| t.is_value()) {
                            out.push(Term::pair(v.clone(), w.clone()));
                        }
                    }
                }
            }
        }

        if self.mode.allows_choice() {
            for s1 in 1..size - 1 {
                let s2 = size - 1 - s1;
                for m1 in submasks(mask) {
                    for (h1, h2) in splits(hole) {
                        let lefts = self.gen(scope, m1, ty, s1, h1);
                        if lefts.is_empty() {
                            continue;
                        }
                        let rights = self.gen(scope, mask ^ m1, ty, s2, h2);
                        for l in lefts.iter() {
                            for r in rights.iter() {
                                out.push(Term::choice(l.clone(), r.clone()));
                            }
                        }
                    }
                }
            }
        }

        if self.mode.allows_quantum() && !hole {
            let values = |en: &mut Enumerator, t: &Type| -> Vec<Term> {
                en.gen(scope, mask, t, size - 1, false).iter().filter(|v| v.is_value()).cloned().collect()
            };
            if *ty == Type::Bool {
                for v in values(self, &Type::Qbit) {
                    out.push(Term::meas(v));
                }
            }
            if *ty == Type::Qbit {
                for v in values(self, &Type::Bool) {
                    out.push(Term::new_qubit(v));
                }
            }
            for (g, n) in self.gates.clone() {
                if ty.qbit_power() == Some(n) {
                    for v in values(self, ty) {
                        out.push(Term::Unitary(g.clone(), Box::new(v)));
                    }
                }
            }
        }
    }
}

/// Subsets of `mask` in increasing numeric order.
fn submasks(mask: u64) -> impl Iterator<Item = u64> {
    let mut next = Some(0u64);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == mask { None } else { Some(cur.wrapping_sub(mask) & mask) };
        Some(cur)
    })
}

#[derive(Default)]
struct Out {
    terms: Vec<Term>,
    seen: HashSet<Term>,
}

impl Out {
    fn push(&mut self, t: Term) {
        if self.seen.insert(t.canonical()) {
            self.terms.push(t);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;
    use crate::typecheck::{check_type, typecheck_context_hole, TypingContext};

    #[test]
    fn submask_order() {
        let v: Vec<u64> = submasks(0b101).collect();
        assert_eq!(v, vec![0b000, 0b001, 0b100, 0b101]);
        assert_eq!(submasks(0).collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn generated_terms_typecheck() {
        let bb = Type::arrow(Type::Bool, Type::Bool);
        let mut en = Enumerator::new(CalculusMode::Prob, &[bb.clone()], &GateTable::builtin());
        for n in 1..=6 {
            for t in en.closed_terms(&bb, n).iter() {
                assert_eq!(t.size(), n);
                let ok = check_type(&TypingContext::empty(), t, &bb, CalculusMode::Prob, &GateTable::builtin());
                assert!(ok.is_ok(), "{t}");
            }
        }
    }

    #[test]
    fn contexts_have_one_hole_and_type() {
        let mut en = Enumerator::for_contexts(CalculusMode::Det, &[], &Type::Bool, &Type::Bool, &GateTable::builtin());
        let mut found = false;
        for n in 1..=5 {
            for c in en.contexts(&Type::Bool, n).iter() {
                assert_eq!(c.hole_count(), 1);
                assert_eq!(
                    typecheck_context_hole(c, &TypingContext::empty(), &Type::Bool, CalculusMode::Det),
                    Ok(Type::Bool),
                    "{c}"
                );
                found |= c.to_string() == "if [.] then tt else omega";
            }
        }
        assert!(found);
        assert_eq!(en.contexts(&Type::Bool, 1).as_slice(), &[Term::Hole]);
    }

    #[test]
    fn quantum_terms() {
        let mut en = Enumerator::new(CalculusMode::Quantum, &[], &GateTable::builtin());
        let scope = [(Name::new("x"), Type::Qbit)];
        let tests = en.open_terms(&scope, &Type::Bool, 2);
        assert!(tests.contains(&Term::meas(Term::var("x"))));
        let flip = parse("\\y:qbit. meas(X<y>)", CalculusMode::Quantum).unwrap();
        let Term::Lam(_, _, body) = flip else { panic!() };
        let body = body.subst(&Name::new("y"), &Term::var("x"));
        assert!(en.open_terms(&scope, &Type::Bool, body.size()).iter().any(|t| t.alpha_eq(&body)), "{body}");
    }
}
