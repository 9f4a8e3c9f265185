// SPDX-License-Identifier: Apache-2.0

//! Finite test basis standing in for the infinite label alphabet.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{BisimError, Label};
use crate::ctxequiv::Enumerator;
use crate::quantum::{ClosureDump, GateTable, QuantumClosure, QuantumRegister};
use crate::syntax::{parse_with, CalculusMode, Name, ParseOptions, Term};
use crate::typecheck::{check_type, Type, TypingContext};

/// Default size bound for enumerated basis entries.
pub const DEFAULT_BASIS_SIZE: usize = 5;

/// Per-type ceiling on enumerated entries; the first ones in size order
/// are kept.
const ENTRY_CAP: usize = 48;

/// Destructor `body` with free variables `left : A`, `right : B`, of type `result`.
#[derive(Debug, Clone, PartialEq)]
pub struct Destructor {
    pub left: Name,
    pub right: Name,
    pub result: Type,
    pub body: QuantumClosure,
}

/// Test for a qubit: `body` with free `var : qbit`, of type `result`.
#[derive(Debug, Clone, PartialEq)]
pub struct QbitTest {
    pub var: Name,
    pub result: Type,
    pub body: QuantumClosure,
}

#[derive(Debug, Clone)]
pub struct TestBasis {
    args: BTreeMap<Type, Vec<QuantumClosure>>,
    destructors: BTreeMap<(Type, Type), Vec<Destructor>>,
    qbit_tests: Option<Vec<QbitTest>>,
}

/// JSON basis description. Missing types are filled in automatically
/// unless `strict` is set.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisFile {
    #[serde(default)]
    pub strict: bool,
    #[serde(default)]
    pub size: Option<usize>,
    #[serde(default)]
    pub args: BTreeMap<String, Vec<EntrySpec>>,
    #[serde(default)]
    pub destructors: Vec<DestructorSpec>,
    #[serde(default)]
    pub qbit_tests: Option<Vec<QbitTestSpec>>,
}

/// A term, or a closure dump for entries that own qubits.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EntrySpec {
    Term(String),
    Closure(ClosureDump),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DestructorSpec {
    pub left: String,
    pub right: String,
    pub result: String,
    pub body: EntrySpec,
    #[serde(default = "default_x")]
    pub x: String,
    #[serde(default = "default_y")]
    pub y: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QbitTestSpec {
    pub result: String,
    pub body: EntrySpec,
    #[serde(default = "default_x")]
    pub x: String,
}

fn default_x() -> String {
    "x".into()
}

fn default_y() -> String {
    "y".into()
}

struct Builder<'a> {
    mode: CalculusMode,
    gates: &'a GateTable,
    size: usize,
    strict: bool,
    en: Enumerator,
    basis: TestBasis,
}

impl TestBasis {
    /// Enumerated basis covering every label reachable from states of type `ty`.
    pub fn auto(ty: &Type, mode: CalculusMode, gates: &GateTable, size: usize) -> Result<TestBasis, BisimError> {
        Self::from_file(&BasisFile { size: Some(size), ..BasisFile::default() }, ty, mode, gates, false)
    }

    /// Basis from a file. With `strict` (or the file's own `strict`), a
    /// type the file does not cover is an error; otherwise it is enumerated.
    pub fn from_file(
        file: &BasisFile,
        ty: &Type,
        mode: CalculusMode,
        gates: &GateTable,
        strict: bool,
    ) -> Result<TestBasis, BisimError> {
        let mut b = Builder {
            mode,
            gates,
            size: file.size.unwrap_or(DEFAULT_BASIS_SIZE),
            strict: strict || file.strict,
            en: Enumerator::new(mode, std::slice::from_ref(ty), gates),
            basis: TestBasis { args: BTreeMap::new(), destructors: BTreeMap::new(), qbit_tests: None },
        };
        b.load(file)?;
        b.cover(ty)?;
        Ok(b.basis)
    }

    /// Arguments for functions with domain `ty`.
    pub fn args(&self, ty: &Type) -> Result<&[QuantumClosure], BisimError> {
        self.args
            .get(ty)
            .map(Vec::as_slice)
            .ok_or_else(|| BisimError::BasisMissing { what: "arguments", ty: ty.to_string() })
    }

    pub fn destructors(&self, a: &Type, b: &Type) -> Result<&[Destructor], BisimError> {
        self.destructors.get(&(a.clone(), b.clone())).map(Vec::as_slice).ok_or_else(|| {
            BisimError::BasisMissing { what: "destructors", ty: Type::tensor(a.clone(), b.clone()).to_string() }
        })
    }

    pub fn qbit_tests(&self) -> Result<&[QbitTest], BisimError> {
        self.qbit_tests.as_deref().ok_or_else(|| BisimError::BasisMissing { what: "tests", ty: "qbit".into() })
    }

    /// Number of entries of every kind.
    pub fn len(&self) -> usize {
        self.args.values().map(Vec::len).sum::<usize>()
            + self.destructors.values().map(Vec::len).sum::<usize>()
            + self.qbit_tests.as_ref().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Short hash identifying the basis contents.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        let dump = |c: &QuantumClosure| serde_json::to_string(&c.to_json()).expect("closure dumps serialize");
        for (ty, vs) in &self.args {
            for v in vs {
                h.update(format!("arg {ty} {}\n", dump(v)));
            }
        }
        for ((a, b), ds) in &self.destructors {
            for d in ds {
                h.update(format!("destruct {a} {b} {} {} {} {}\n", d.left, d.right, d.result, dump(&d.body)));
            }
        }
        for t in self.qbit_tests.iter().flatten() {
            h.update(format!("test {} {} {}\n", t.var, t.result, dump(&t.body)));
        }
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Human-readable label, with basis entries spelled out.
    pub fn describe(&self, label: &Label) -> String {
        let show = |c: &QuantumClosure| {
            if c.register.is_empty() {
                c.term.to_string()
            } else {
                c.to_string()
            }
        };
        match label {
            Label::Arg { ty, index } => match self.args.get(ty).and_then(|v| v.get(*index)) {
                Some(c) => format!("arg {} : {ty}", show(c)),
                None => label.to_string(),
            },
            Label::Destruct { left, right, index } => {
                match self.destructors.get(&(left.clone(), right.clone())).and_then(|v| v.get(*index)) {
                    Some(d) => format!("destruct <{}, {}> => {}", d.left, d.right, show(&d.body)),
                    None => label.to_string(),
                }
            }
            Label::QbitTest { index } => match self.qbit_tests.as_ref().and_then(|v| v.get(*index)) {
                Some(t) => format!("test {} => {}", t.var, show(&t.body)),
                None => label.to_string(),
            },
            other => other.to_string(),
        }
    }

    /// The basis as a file, round-trippable through [`TestBasis::from_file`].
    pub fn to_file(&self) -> BasisFile {
        let entry = |c: &QuantumClosure| {
            if c.register.is_empty() {
                EntrySpec::Term(c.term.to_string())
            } else {
                EntrySpec::Closure(c.to_json())
            }
        };
        BasisFile {
            strict: true,
            size: None,
            args: self.args.iter().map(|(t, vs)| (t.to_string(), vs.iter().map(entry).collect())).collect(),
            destructors: self
                .destructors
                .iter()
                .flat_map(|((a, b), ds)| {
                    ds.iter().map(move |d| DestructorSpec {
                        left: a.to_string(),
                        right: b.to_string(),
                        result: d.result.to_string(),
                        body: entry(&d.body),
                        x: d.left.to_string(),
                        y: d.right.to_string(),
                    })
                })
                .collect(),
            qbit_tests: self.qbit_tests.as_ref().map(|ts| {
                ts.iter()
                    .map(|t| QbitTestSpec { result: t.result.to_string(), body: entry(&t.body), x: t.var.to_string() })
                    .collect()
            }),
        }
    }
}

impl Builder<'_> {
    fn parse_entry(&self, spec: &EntrySpec) -> Result<QuantumClosure, BisimError> {
        match spec {
            EntrySpec::Term(text) => {
                let opts = ParseOptions { gates: self.gates.clone(), ..ParseOptions::new(self.mode) };
                Ok(QuantumClosure::pure(parse_with(text, &opts)?))
            }
            EntrySpec::Closure(dump) => Ok(QuantumClosure::from_json(dump)?),
        }
    }

    fn check(&self, c: &QuantumClosure, scope: &[(Name, Type)], ty: &Type) -> Result<(), BisimError> {
        let mut ctx = TypingContext::empty();
        for (n, t) in scope {
            ctx.insert(n.clone(), t.clone())?;
        }
        for r in c.register.vars() {
            ctx.insert_qvar(r.clone())?;
        }
        check_type(&ctx, &c.term, ty, self.mode, self.gates).map_err(|e| BisimError::BasisEntry {
            entry: c.term.to_string(),
            ty: ty.to_string(),
            reason: e.to_string(),
        })
    }

    fn load(&mut self, file: &BasisFile) -> Result<(), BisimError> {
        for (ty, entries) in &file.args {
            let ty = Type::parse(ty)?;
            let mut vs = Vec::new();
            for e in entries {
                let c = self.parse_entry(e)?;
                self.check(&c, &[], &ty)?;
                if !c.is_value() {
                    return Err(BisimError::BasisEntry {
                        entry: c.term.to_string(),
                        ty: ty.to_string(),
                        reason: "arguments must be values".into(),
                    });
                }
                vs.push(c.canonical());
            }
            self.basis.args.insert(ty, vs);
        }
        for d in &file.destructors {
            let (a, b, result) = (Type::parse(&d.left)?, Type::parse(&d.right)?, Type::parse(&d.result)?);
            let (x, y) = (Name::new(&d.x), Name::new(&d.y));
            let body = self.parse_entry(&d.body)?;
            self.check(&body, &[(x.clone(), a.clone()), (y.clone(), b.clone())], &result)?;
            self.basis.destructors.entry((a, b)).or_default().push(Destructor { left: x, right: y, result, body });
        }
        if let Some(tests) = &file.qbit_tests {
            let mut out = Vec::new();
            for t in tests {
                let (result, var) = (Type::parse(&t.result)?, Name::new(&t.x));
                let body = self.parse_entry(&t.body)?;
                self.check(&body, &[(var.clone(), Type::Qbit)], &result)?;
                out.push(QbitTest { var, result, body });
            }
            self.basis.qbit_tests = Some(out);
        }
        Ok(())
    }

    fn missing(&self, what: &'static str, ty: &Type) -> BisimError {
        BisimError::BasisMissing { what, ty: ty.to_string() }
    }

    /// Makes sure every label reachable from a value of type `ty` is covered.
    fn cover(&mut self, ty: &Type) -> Result<(), BisimError> {
        match ty {
            Type::Bool => Ok(()),
            Type::Arrow(a, b) => {
                if !self.basis.args.contains_key(&**a) {
                    if self.strict {
                        return Err(self.missing("arguments", a));
                    }
                    let vs = self.auto_args(a)?;
                    self.basis.args.insert((**a).clone(), vs);
                }
                self.cover(b)
            }
            Type::Tensor(a, b) => {
                let key = ((**a).clone(), (**b).clone());
                if !self.basis.destructors.contains_key(&key) {
                    if self.strict {
                        return Err(self.missing("destructors", ty));
                    }
                    let scope = [(Name::new("x"), (**a).clone()), (Name::new("y"), (**b).clone())];
                    let ds = self
                        .open_tests(&scope)
                        .into_iter()
                        .map(|body| Destructor {
                            left: Name::new("x"),
                            right: Name::new("y"),
                            result: Type::Bool,
                            body: QuantumClosure::pure(body),
                        })
                        .collect();
                    self.basis.destructors.insert(key.clone(), ds);
                }
                let results: Vec<Type> = self.basis.destructors[&key].iter().map(|d| d.result.clone()).collect();
                results.iter().try_for_each(|r| self.cover(r))
            }
            Type::Qbit => {
                if self.basis.qbit_tests.is_none() {
                    if self.strict {
                        return Err(self.missing("tests", ty));
                    }
                    let tests = self
                        .open_tests(&[(Name::new("x"), Type::Qbit)])
                        .into_iter()
                        .map(|body| QbitTest { var: Name::new("x"), result: Type::Bool, body: QuantumClosure::pure(body) })
                        .collect();
                    self.basis.qbit_tests = Some(tests);
                }
                let results: Vec<Type> = self.basis.qbit_tests.iter().flatten().map(|t| t.result.clone()).collect();
                results.iter().try_for_each(|r| self.cover(r))
            }
        }
    }

    /// Boolean-valued terms over `scope`, smallest first.
    fn open_tests(&mut self, scope: &[(Name, Type)]) -> Vec<Term> {
        let mut out = Vec::new();
        for n in 1..=self.size {
            out.extend(self.en.open_terms(scope, &Type::Bool, n).iter().cloned());
            if out.len() >= ENTRY_CAP {
                break;
            }
        }
        out.truncate(ENTRY_CAP);
        out
    }

    fn auto_args(&mut self, ty: &Type) -> Result<Vec<QuantumClosure>, BisimError> {
        let mut out = match ty {
            Type::Qbit => qubit_states(),
            Type::Tensor(a, b) if ty.mentions_qbit() => {
                let (left, right) = (self.auto_args(a)?, self.auto_args(b)?);
                let mut out = Vec::new();
                for v in &left {
                    for w in &right {
                        let (reg, w_term) = super::merge(&v.register, w)?;
                        out.push(QuantumClosure::new(reg, Term::pair(v.term.clone(), w_term))?.canonical());
                    }
                }
                if **a == Type::Qbit && **b == Type::Qbit {
                    out.push(bell_pair());
                }
                out
            }
            _ => {
                let mut out = Vec::new();
                for n in 1..=self.size {
                    let terms = self.en.closed_terms(ty, n);
                    out.extend(terms.iter().filter(|t| t.is_value()).map(|t| QuantumClosure::pure(t.clone()).canonical()));
                    if out.len() >= ENTRY_CAP {
                        break;
                    }
                }
                out
            }
        };
        out.truncate(ENTRY_CAP);
        Ok(out)
    }
}

fn one_qubit(amps: [f64; 2]) -> QuantumClosure {
    let q = Name::new("q0");
    let reg = QuantumRegister::from_parts(vec![q.clone()], amps.iter().map(|&a| Complex64::new(a, 0.0)).collect())
        .expect("normalized one-qubit state");
    QuantumClosure::new(reg, Term::QVar(q)).expect("variable in register").canonical()
}

/// `|tt>`, `|ff>`, `H|ff>` and `H|tt>`. Amplitude index 1 is `tt`.
fn qubit_states() -> Vec<QuantumClosure> {
    vec![
        one_qubit([0.0, 1.0]),
        one_qubit([1.0, 0.0]),
        one_qubit([FRAC_1_SQRT_2, FRAC_1_SQRT_2]),
        one_qubit([FRAC_1_SQRT_2, -FRAC_1_SQRT_2]),
    ]
}

/// `(|ff ff> + |tt tt>)/sqrt 2` as the pair `<q0, q1>`.
fn bell_pair() -> QuantumClosure {
    let (a, b) = (Name::new("q0"), Name::new("q1"));
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let reg = QuantumRegister::from_parts(vec![a.clone(), b.clone()], vec![h, zero, zero, h]).expect("Bell state");
    QuantumClosure::new(reg, Term::pair(Term::QVar(a), Term::QVar(b))).expect("variables in register").canonical()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boolean_basis_is_the_two_constants() {
        let ty = Type::arrow(Type::Bool, Type::Bool);
        let b = TestBasis::auto(&ty, CalculusMode::Det, &GateTable::builtin(), 5).unwrap();
        let args: Vec<String> = b.args(&Type::Bool).unwrap().iter().map(|c| c.term.to_string()).collect();
        assert_eq!(args, ["tt", "ff"]);
    }

    #[test]
    fn function_arguments_are_well_typed_values() {
        let bb = Type::arrow(Type::Bool, Type::Bool);
        let ty = Type::arrow(bb.clone(), Type::Bool);
        let b = TestBasis::auto(&ty, CalculusMode::Det, &GateTable::builtin(), 5).unwrap();
        let args = b.args(&bb).unwrap();
        for expected in ["\\x:bool. x", "\\x:bool. if x then ff else tt"] {
            let t = crate::syntax::parse(expected, CalculusMode::Det).unwrap();
            assert!(args.iter().any(|c| c.term.alpha_eq(&t)), "{expected}");
        }
        for c in args {
            assert!(c.is_value());
            check_type(&TypingContext::empty(), &c.term, &bb, CalculusMode::Det, &GateTable::builtin()).unwrap();
        }
    }

    #[test]
    fn strict_files_must_cover_every_type() {
        let file: BasisFile = serde_json::from_str(r#"{"strict": true, "args": {"bool": ["tt"]}}"#).unwrap();
        let ty = Type::arrow(Type::Bool, Type::tensor(Type::Bool, Type::Bool));
        let err = TestBasis::from_file(&file, &ty, CalculusMode::Det, &GateTable::builtin(), false).unwrap_err();
        assert!(matches!(err, BisimError::BasisMissing { what: "destructors", .. }));
    }

    #[test]
    fn ill_typed_entries_are_rejected() {
        let file: BasisFile = serde_json::from_str(r#"{"args": {"bool": ["\\x:bool. x"]}}"#).unwrap();
        let ty = Type::arrow(Type::Bool, Type::Bool);
        assert!(TestBasis::from_file(&file, &ty, CalculusMode::Det, &GateTable::builtin(), false).is_err());
    }

    #[test]
    fn quantum_pairs_include_an_entangled_state() {
        let ty = Type::arrow(Type::qbits(2), Type::Bool);
        let b = TestBasis::auto(&ty, CalculusMode::Quantum, &GateTable::builtin(), 3).unwrap();
        let pairs = b.args(&Type::qbits(2)).unwrap();
        assert_eq!(pairs.len(), 17);
        assert!(pairs.contains(&bell_pair()));
    }

    #[test]
    fn fingerprint_tracks_contents_and_files_round_trip() {
        let ty = Type::arrow(Type::Bool, Type::Bool);
        let b = TestBasis::auto(&ty, CalculusMode::Det, &GateTable::builtin(), 5).unwrap();
        let file: BasisFile = serde_json::from_str(r#"{"args": {"bool": ["tt"]}}"#).unwrap();
        let small = TestBasis::from_file(&file, &ty, CalculusMode::Det, &GateTable::builtin(), false).unwrap();
        assert_ne!(b.fingerprint(), small.fingerprint());
        assert_eq!(b.fingerprint().len(), 16);
        let again = TestBasis::from_file(&b.to_file(), &ty, CalculusMode::Det, &GateTable::builtin(), true).unwrap();
        assert_eq!(again.fingerprint(), b.fingerprint());
        let q = Type::arrow(Type::Qbit, Type::Bool);
        let qb = TestBasis::auto(&q, CalculusMode::Quantum, &GateTable::builtin(), 3).unwrap();
        let qagain = TestBasis::from_file(&qb.to_file(), &q, CalculusMode::Quantum, &GateTable::builtin(), true).unwrap();
        assert_eq!(qagain.fingerprint(), qb.fingerprint());
    }
}
