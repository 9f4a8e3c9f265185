// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Types of the linear calculi. `Qbit` is only legal in quantum mode.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Bool,
    Qbit,
    /// Linear implication `A -o B`.
    Arrow(Box<Type>, Box<Type>),
    /// Tensor product `A * B`.
    Tensor(Box<Type>, Box<Type>),
}

impl Type {
    pub fn arrow(dom: Type, cod: Type) -> Type {
        Type::Arrow(Box::new(dom), Box::new(cod))
    }

    pub fn tensor(left: Type, right: Type) -> Type {
        Type::Tensor(Box::new(left), Box::new(right))
    }

    /// Right-nested tensor of `n >= 1` qubits.
    pub fn qbits(n: usize) -> Type {
        assert!(n >= 1, "qbit tensor power must be at least 1");
        let mut ty = Type::Qbit;
        for _ in 1..n {
            ty = Type::tensor(Type::Qbit, ty);
        }
        ty
    }

    /// Returns `n` if this type is `qbit^n` (right-nested).
    pub fn qbit_power(&self) -> Option<usize> {
        match self {
            Type::Qbit => Some(1),
            Type::Tensor(l, r) if **l == Type::Qbit => r.qbit_power().map(|n| n + 1),
            _ => None,
        }
    }

    pub fn mentions_qbit(&self) -> bool {
        match self {
            Type::Bool => false,
            Type::Qbit => true,
            Type::Arrow(a, b) | Type::Tensor(a, b) => a.mentions_qbit() || b.mentions_qbit(),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Type::Bool | Type::Qbit => 1,
            Type::Arrow(a, b) | Type::Tensor(a, b) => 1 + a.size() + b.size(),
        }
    }

    /// All subterms of this type, including itself.
    pub fn subterms(&self, out: &mut Vec<Type>) {
        if !out.contains(self) {
            out.push(self.clone());
        }
        if let Type::Arrow(a, b) | Type::Tensor(a, b) = self {
            a.subterms(out);
            b.subterms(out);
        }
    }

    pub fn parse(text: &str) -> Result<Type, crate::syntax::ParseError> {
        crate::syntax::parse_type(text)
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        match self {
            Type::Bool => write!(f, "bool"),
            Type::Qbit => write!(f, "qbit"),
            Type::Arrow(a, b) => {
                if prec > 0 {
                    write!(f, "(")?;
                }
                a.fmt_prec(f, 1)?;
                write!(f, " -o ")?;
                b.fmt_prec(f, 0)?;
                if prec > 0 {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Type::Tensor(a, b) => {
                if prec > 1 {
                    write!(f, "(")?;
                }
                a.fmt_prec(f, 2)?;
                write!(f, " * ")?;
                b.fmt_prec(f, 1)?;
                if prec > 1 {
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl Serialize for Type {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Type {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Type::parse(&text).map_err(serde::de::Error::custom)
    }
}
