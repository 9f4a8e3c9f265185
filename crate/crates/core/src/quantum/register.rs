// SPDX-License-Identifier: Apache-2.0

use num_complex::Complex64;

use super::gates::Gate;
use super::{QuantumError, TOLERANCE};
use crate::syntax::Name;

/// Dense state vector over an ordered list of quantum variables.
///
/// Basis index bit `n - 1 - k` holds the value of `vars[k]`, so the first
/// variable is the most significant bit. `tt` is bit value 1.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumRegister {
    vars: Vec<Name>,
    amps: Vec<Complex64>,
}

impl QuantumRegister {
    /// The empty system: no variables, amplitude vector `[1]`.
    pub fn empty() -> Self {
        QuantumRegister { vars: Vec::new(), amps: vec![Complex64::new(1.0, 0.0)] }
    }

    /// Computational basis state `|r1<-b1, ..., rn<-bn>`.
    pub fn basis(assignment: &[(Name, bool)]) -> Result<Self, QuantumError> {
        let mut reg = QuantumRegister::empty();
        for (r, b) in assignment {
            reg = reg.new_qubit(r.clone(), *b)?;
        }
        Ok(reg)
    }

    pub fn from_parts(vars: Vec<Name>, amps: Vec<Complex64>) -> Result<Self, QuantumError> {
        if amps.len() != 1 << vars.len() {
            return Err(QuantumError::BadDimension { vars: vars.len(), amplitudes: amps.len() });
        }
        for (i, v) in vars.iter().enumerate() {
            if vars[..i].contains(v) {
                return Err(QuantumError::DuplicateVariable(v.clone()));
            }
        }
        let reg = QuantumRegister { vars, amps };
        let norm = reg.norm_sqr();
        if (norm - 1.0).abs() > TOLERANCE {
            return Err(QuantumError::NotNormalized(norm));
        }
        Ok(reg)
    }

    pub fn vars(&self) -> &[Name] {
        &self.vars
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn contains(&self, r: &Name) -> bool {
        self.vars.contains(r)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn position(&self, r: &Name) -> Result<usize, QuantumError> {
        self.vars
            .iter()
            .position(|v| v == r)
            .ok_or_else(|| QuantumError::UnknownVariable(r.clone()))
    }

    fn shift(&self, k: usize) -> usize {
        self.vars.len() - 1 - k
    }

    /// Appends a fresh qubit in state `b` as the least significant bit.
    pub fn new_qubit(&self, r: Name, b: bool) -> Result<Self, QuantumError> {
        if self.contains(&r) {
            return Err(QuantumError::DuplicateVariable(r));
        }
        let zero = Complex64::new(0.0, 0.0);
        let mut amps = vec![zero; self.amps.len() * 2];
        for (i, a) in self.amps.iter().enumerate() {
            amps[2 * i + usize::from(b)] = *a;
        }
        let mut vars = self.vars.clone();
        vars.push(r);
        Ok(QuantumRegister { vars, amps })
    }

    /// Probability of observing `b` when measuring `r`.
    pub fn measure_prob(&self, r: &Name, b: bool) -> Result<f64, QuantumError> {
        let k = self.position(r)?;
        let s = self.shift(k);
        Ok(self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| ((i >> s) & 1 == 1) == b)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Post-measurement register: `r` is removed and the surviving
    /// amplitudes are rescaled by `p^(-1/2)`.
    pub fn project(&self, r: &Name, b: bool) -> Result<Self, QuantumError> {
        let p = self.measure_prob(r, b)?;
        if p <= super::BRANCH_EPSILON {
            return Err(QuantumError::ZeroProbabilityBranch { var: r.clone(), outcome: b });
        }
        let k = self.position(r)?;
        let s = self.shift(k);
        let scale = p.sqrt().recip();
        let mut amps = Vec::with_capacity(self.amps.len() / 2);
        for j in 0..self.amps.len() / 2 {
            let high = j >> s;
            let low = j & ((1 << s) - 1);
            let i = (high << (s + 1)) | (usize::from(b) << s) | low;
            amps.push(self.amps[i] * scale);
        }
        let mut vars = self.vars.clone();
        vars.remove(k);
        Ok(QuantumRegister { vars, amps })
    }

    /// Applies `gate` to the listed qubits (first listed = most significant
    /// operand bit) and the identity elsewhere.
    pub fn apply_unitary(&self, gate: &Gate, targets: &[Name]) -> Result<Self, QuantumError> {
        if targets.len() != gate.arity {
            return Err(QuantumError::ArityMismatch {
                gate: gate.name.clone(),
                expected: gate.arity,
                found: targets.len(),
            });
        }
        let mut shifts = Vec::with_capacity(targets.len());
        for (i, r) in targets.iter().enumerate() {
            if targets[..i].contains(r) {
                return Err(QuantumError::DuplicateVariable(r.clone()));
            }
            shifts.push(self.shift(self.position(r)?));
        }
        let m = targets.len();
        let sub_of = |i: usize| -> usize {
            shifts.iter().fold(0, |acc, s| (acc << 1) | ((i >> s) & 1))
        };
        let with_sub = |i: usize, sub: usize| -> usize {
            let mut j = i;
            for (t, s) in shifts.iter().enumerate() {
                let bit = (sub >> (m - 1 - t)) & 1;
                j = (j & !(1 << s)) | (bit << s);
            }
            j
        };
        let mut amps = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (i, a) in self.amps.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let col = sub_of(i);
            for row in 0..gate.dim() {
                let u = gate.entry(row, col);
                if u.norm_sqr() != 0.0 {
                    amps[with_sub(i, row)] += u * a;
                }
            }
        }
        Ok(QuantumRegister { vars: self.vars.clone(), amps })
    }

    /// `self (x) other`; variable sets must be disjoint.
    pub fn tensor(&self, other: &QuantumRegister) -> Result<Self, QuantumError> {
        if let Some(r) = other.vars.iter().find(|r| self.contains(r)) {
            return Err(QuantumError::DuplicateVariable(r.clone()));
        }
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        let mut vars = self.vars.clone();
        vars.extend(other.vars.iter().cloned());
        Ok(QuantumRegister { vars, amps })
    }

    pub fn rename(&self, map: &impl Fn(&Name) -> Name) -> Self {
        QuantumRegister { vars: self.vars.iter().map(map).collect(), amps: self.amps.clone() }
    }

    /// Reorders the variables to `order` (a permutation of `vars`),
    /// permuting amplitudes accordingly.
    pub fn permute(&self, order: &[Name]) -> Result<Self, QuantumError> {
        if order.len() != self.vars.len() {
            return Err(QuantumError::BadDimension { vars: order.len(), amplitudes: self.amps.len() });
        }
        let n = order.len();
        let mut old_shift = Vec::with_capacity(n);
        for r in order {
            old_shift.push(self.shift(self.position(r)?));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (j, slot) in amps.iter_mut().enumerate() {
            let mut i = 0;
            for (k, s) in old_shift.iter().enumerate() {
                let bit = (j >> (n - 1 - k)) & 1;
                i |= bit << s;
            }
            *slot = self.amps[i];
        }
        Ok(QuantumRegister { vars: order.to_vec(), amps })
    }

    /// Multiplies by a global phase so the first non-negligible amplitude
    /// is real and positive.
    pub fn fix_phase(&self) -> Self {
        let Some(lead) = self.amps.iter().find(|a| a.norm() > TOLERANCE) else {
            return self.clone();
        };
        let phase = lead.conj() / lead.norm();
        QuantumRegister { vars: self.vars.clone(), amps: self.amps.iter().map(|a| a * phase).collect() }
    }

    /// Same variables in the same order, amplitudes within `tol`.
    pub fn approx_eq(&self, other: &QuantumRegister, tol: f64) -> bool {
        self.vars == other.vars
            && self.amps.iter().zip(&other.amps).all(|(a, b)| (a - b).norm() <= tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::GateTable;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn n(s: &str) -> Name {
        Name::new(s)
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn plus() -> QuantumRegister {
        QuantumRegister::from_parts(vec![n("q0")], vec![c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)]).unwrap()
    }

    fn bell() -> QuantumRegister {
        let h = c(FRAC_1_SQRT_2);
        QuantumRegister::from_parts(vec![n("q0"), n("q1")], vec![h, c(0.0), c(0.0), h]).unwrap()
    }

    #[test]
    fn new_qubit_creates_basis_states() {
        let r = QuantumRegister::empty().new_qubit(n("q0"), true).unwrap();
        assert_eq!(r.amplitudes(), &[c(0.0), c(1.0)]);
        // Tensoring |+> with |ff>: amplitudes land on the even indices.
        let two = plus().new_qubit(n("q1"), false).unwrap();
        let want = [c(FRAC_1_SQRT_2), c(0.0), c(FRAC_1_SQRT_2), c(0.0)];
        assert!(two.amplitudes().iter().zip(want).all(|(a, b)| (a - b).norm() < 1e-12));
        assert!((two.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn measurement_probabilities() {
        let r = QuantumRegister::basis(&[(n("q0"), true)]).unwrap();
        assert_eq!(r.measure_prob(&n("q0"), true).unwrap(), 1.0);
        assert_eq!(r.measure_prob(&n("q0"), false).unwrap(), 0.0);
        assert!((plus().measure_prob(&n("q0"), true).unwrap() - 0.5).abs() < 1e-12);
        assert!((bell().measure_prob(&n("q0"), true).unwrap() - 0.5).abs() < 1e-12);
        assert!(matches!(r.measure_prob(&n("zz"), true), Err(QuantumError::UnknownVariable(_))));
    }

    #[test]
    fn projections() {
        let r = QuantumRegister::basis(&[(n("q0"), true)]).unwrap();
        assert_eq!(r.project(&n("q0"), true).unwrap(), QuantumRegister::empty());
        let p = plus().project(&n("q0"), true).unwrap();
        assert!(p.approx_eq(&QuantumRegister::empty(), 1e-12));
        let collapsed = bell().project(&n("q0"), true).unwrap();
        let want = QuantumRegister::basis(&[(n("q1"), true)]).unwrap();
        assert!(collapsed.approx_eq(&want, 1e-12));
        assert!(matches!(
            r.project(&n("q0"), false),
            Err(QuantumError::ZeroProbabilityBranch { .. })
        ));
    }

    #[test]
    fn gate_application() {
        let gates = GateTable::builtin();
        let ff = QuantumRegister::basis(&[(n("q0"), false)]).unwrap();
        let flipped = ff.apply_unitary(gates.get("X").unwrap(), &[n("q0")]).unwrap();
        assert_eq!(flipped, QuantumRegister::basis(&[(n("q0"), true)]).unwrap());

        let h = gates.get("H").unwrap();
        let twice = plus().apply_unitary(h, &[n("q0")]).unwrap().apply_unitary(h, &[n("q0")]).unwrap();
        assert!(twice.approx_eq(&plus(), 1e-12));

        let tf = QuantumRegister::basis(&[(n("q0"), true), (n("q1"), false)]).unwrap();
        let out = tf.apply_unitary(gates.get("CNOT").unwrap(), &[n("q0"), n("q1")]).unwrap();
        assert!(out.approx_eq(&QuantumRegister::basis(&[(n("q0"), true), (n("q1"), true)]).unwrap(), 1e-12));
        // Operand order matters: q1 controls here and is ff.
        let out = tf.apply_unitary(gates.get("CNOT").unwrap(), &[n("q1"), n("q0")]).unwrap();
        assert!(out.approx_eq(&tf, 1e-12));
    }

    #[test]
    fn permutation_round_trip() {
        let r = QuantumRegister::basis(&[(n("a"), true), (n("b"), false), (n("c"), true)]).unwrap();
        let p = r.permute(&[n("c"), n("a"), n("b")]).unwrap();
        assert_eq!(p, QuantumRegister::basis(&[(n("c"), true), (n("a"), true), (n("b"), false)]).unwrap());
        assert_eq!(p.permute(r.vars()).unwrap(), r);
    }

    #[test]
    fn phase_normalization() {
        let i = Complex64::new(0.0, 1.0);
        let a = QuantumRegister::from_parts(vec![n("q0")], vec![c(FRAC_1_SQRT_2) * i, c(FRAC_1_SQRT_2)]).unwrap();
        let fixed = a.fix_phase();
        assert!(fixed.approx_eq(&QuantumRegister::from_parts(vec![n("q0")], vec![c(FRAC_1_SQRT_2), -i * FRAC_1_SQRT_2]).unwrap(), 1e-12));
    }
}
