// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Probability weights. Exact rationals for the classical calculi, floats
/// for quantum evaluation where `1/sqrt 2` amplitudes rule rationals out.
pub trait Probability: Clone + PartialEq + fmt::Debug + fmt::Display + Send + Sync + 'static {
    fn zero() -> Self;
    fn one() -> Self;
    fn half() -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    /// Zero, up to the representation's tolerance.
    fn is_negligible(&self) -> bool;
    fn approx_eq(&self, other: &Self, tol: f64) -> bool;
    /// `self <= other`, up to tolerance.
    fn approx_le(&self, other: &Self, tol: f64) -> bool;
    fn to_f64(&self) -> f64;
    /// Parses `a/b` or a decimal literal.
    fn parse(text: &str) -> Option<Self>;
}

impl Probability for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn half() -> Self {
        BigRational::new(1.into(), 2.into())
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn is_negligible(&self) -> bool {
        self.is_zero()
    }
    fn approx_eq(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }
    fn approx_le(&self, other: &Self, _tol: f64) -> bool {
        self <= other
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn parse(text: &str) -> Option<Self> {
        let text = text.trim();
        let r = match text.parse::<BigRational>() {
            Ok(r) => r,
            Err(_) => parse_decimal(text)?,
        };
        (!r.is_negative()).then_some(r)
    }
}

/// Exact value of a decimal literal such as `0.125` or `2.5e-1`.
fn parse_decimal(text: &str) -> Option<BigRational> {
    let (mantissa, exp) = match text.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    let digits = format!("{int}{frac}");
    if !digits.trim_start_matches(['-', '+']).chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let num: num_bigint::BigInt = digits.parse().ok()?;
    let shift = exp - frac.len() as i32;
    let ten = BigRational::from_integer(10.into());
    let scale = if shift >= 0 { ten.pow(shift) } else { ten.pow(-shift).recip() };
    Some(BigRational::from_integer(num) * scale)
}

/// Probabilities below this are treated as absent in float arithmetic.
pub const FLOAT_EPSILON: f64 = 1e-12;

impl Probability for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn half() -> Self {
        0.5
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn is_negligible(&self) -> bool {
        self.abs() <= FLOAT_EPSILON
    }
    fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        (self - other).abs() <= tol
    }
    fn approx_le(&self, other: &Self, tol: f64) -> bool {
        *self <= other + tol
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn parse(text: &str) -> Option<Self> {
        let text = text.trim();
        if let Some((a, b)) = text.split_once('/') {
            let (a, b): (f64, f64) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
            return Some(a / b);
        }
        text.parse().ok()
    }
}

/// Identity of distribution support elements. Implementations compare
/// canonical forms, so callers must canonicalize before inserting.
pub trait Support: Clone + fmt::Debug {
    fn same(&self, other: &Self) -> bool;
}

impl Support for crate::syntax::Term {
    fn same(&self, other: &Self) -> bool {
        self == other
    }
}

/// Finite-support subdistribution. Entries keep insertion order; zero
/// weights are never stored.
#[derive(Clone, PartialEq)]
pub struct Distribution<S, P> {
    entries: Vec<(S, P)>,
}

impl<S: Support, P: Probability> Default for Distribution<S, P> {
    fn default() -> Self {
        Self::empty()
    }
}

impl<S: Support, P: Probability> Distribution<S, P> {
    pub fn empty() -> Self {
        Distribution { entries: Vec::new() }
    }

    pub fn dirac(s: S) -> Self {
        Distribution { entries: vec![(s, P::one())] }
    }

    /// Adds weight `p` to `s`, merging with an existing equal element.
    pub fn add(&mut self, s: S, p: P) {
        if p.is_negligible() {
            return;
        }
        match self.entries.iter_mut().find(|(t, _)| t.same(&s)) {
            Some((_, q)) => *q = q.add(&p),
            None => self.entries.push((s, p)),
        }
    }

    /// `self += weight * other`.
    pub fn add_scaled(&mut self, other: &Distribution<S, P>, weight: &P) {
        for (s, p) in &other.entries {
            self.add(s.clone(), p.mul(weight));
        }
    }

    pub fn scaled(&self, weight: &P) -> Self {
        let mut out = Self::empty();
        out.add_scaled(self, weight);
        out
    }

    pub fn get(&self, s: &S) -> P {
        self.entries
            .iter()
            .find(|(t, _)| t.same(s))
            .map(|(_, p)| p.clone())
            .unwrap_or_else(P::zero)
    }

    pub fn mass(&self) -> P {
        self.entries.iter().fold(P::zero(), |acc, (_, p)| acc.add(p))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&S, &P)> {
        self.entries.iter().map(|(s, p)| (s, p))
    }

    pub fn support(&self) -> impl Iterator<Item = &S> {
        self.entries.iter().map(|(s, _)| s)
    }

    pub fn into_entries(self) -> Vec<(S, P)> {
        self.entries
    }

    pub fn map<T: Support>(&self, mut f: impl FnMut(&S) -> T) -> Distribution<T, P> {
        let mut out = Distribution::empty();
        for (s, p) in &self.entries {
            out.add(f(s), p.clone());
        }
        out
    }

    /// Same support and weights within `tol` (exact for rationals).
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.entries.iter().all(|(s, p)| other.get(s).approx_eq(p, tol))
            && other.entries.iter().all(|(s, p)| self.get(s).approx_eq(p, tol))
    }
}

impl<S: Support, P: Probability> FromIterator<(S, P)> for Distribution<S, P> {
    fn from_iter<I: IntoIterator<Item = (S, P)>>(iter: I) -> Self {
        let mut d = Self::empty();
        for (s, p) in iter {
            d.add(s, p);
        }
        d
    }
}

impl<S: fmt::Display, P: fmt::Display> fmt::Display for Distribution<S, P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (s, p)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{s}: {p}")?;
        }
        f.write_str("}")
    }
}

impl<S: fmt::Debug, P: fmt::Display> fmt::Debug for Distribution<S, P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.entries.iter().map(|(s, p)| (s, p.to_string())))
            .finish()
    }
}

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(num.into(), den.into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Term;

    #[test]
    fn merging_and_mass() {
        let mut d: Distribution<Term, BigRational> = Distribution::empty();
        d.add(Term::Bool(true), rational(1, 4));
        d.add(Term::Bool(false), rational(1, 4));
        d.add(Term::Bool(true), rational(1, 4));
        assert_eq!(d.len(), 2);
        assert_eq!(d.get(&Term::Bool(true)), rational(1, 2));
        assert_eq!(d.mass(), rational(3, 4));
        d.add(Term::Omega, rational(0, 1));
        assert_eq!(d.len(), 2);
    }

    #[test]
    fn parse_probabilities() {
        assert_eq!(<BigRational as Probability>::parse("3/8"), Some(rational(3, 8)));
        assert_eq!(<BigRational as Probability>::parse("0.5"), Some(rational(1, 2)));
        assert_eq!(<f64 as Probability>::parse("1/4"), Some(0.25));
        assert_eq!(<BigRational as Probability>::parse("0.1"), Some(rational(1, 10)));
        assert_eq!(<BigRational as Probability>::parse("2.5e-1"), Some(rational(1, 4)));
        assert_eq!(<BigRational as Probability>::parse("-0.5"), None);
        assert_eq!(<BigRational as Probability>::parse("abc"), None);
    }

    #[test]
    fn approximate_equality_is_symmetric() {
        let a: Distribution<Term, f64> = [(Term::Bool(true), 0.5)].into_iter().collect();
        let b: Distribution<Term, f64> =
            [(Term::Bool(true), 0.5 + 1e-12), (Term::Bool(false), 1e-13)].into_iter().collect();
        assert!(a.approx_eq(&b, 1e-9));
        let c: Distribution<Term, f64> = [(Term::Bool(false), 0.5)].into_iter().collect();
        assert!(!a.approx_eq(&c, 1e-9));
    }
}
