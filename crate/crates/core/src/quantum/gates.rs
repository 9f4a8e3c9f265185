// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::TOLERANCE;

/// An `n`-qubit unitary, stored as a `2^n x 2^n` row-major matrix. The
/// first operand qubit is the most significant index bit and `tt` is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub name: String,
    pub arity: usize,
    matrix: Vec<Complex64>,
}

impl Gate {
    pub fn new(name: &str, arity: usize, matrix: Vec<Complex64>) -> Result<Gate, GateError> {
        if arity == 0 {
            return Err(GateError::BadArity { name: name.to_string() });
        }
        let dim = 1usize << arity;
        if matrix.len() != dim * dim {
            return Err(GateError::BadDimension {
                name: name.to_string(),
                expected: dim * dim,
                found: matrix.len(),
            });
        }
        let gate = Gate { name: name.to_string(), arity, matrix };
        let deviation = gate.unitarity_deviation();
        if deviation > TOLERANCE {
            return Err(GateError::NotUnitary { name: name.to_string(), deviation });
        }
        Ok(gate)
    }

    pub fn dim(&self) -> usize {
        1 << self.arity
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[row * self.dim() + col]
    }

    /// Largest entry of `|U^dagger U - I|`.
    pub fn unitarity_deviation(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    acc += self.entry(k, i).conj() * self.entry(k, j);
                }
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((acc - Complex64::new(want, 0.0)).norm());
            }
        }
        worst
    }
}

#[derive(Debug, Error)]
pub enum GateError {
    #[error("gate `{name}` must act on at least one qubit")]
    BadArity { name: String },
    #[error("gate `{name}` needs {expected} matrix entries, found {found}")]
    BadDimension {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("gate `{name}` is not unitary (deviation {deviation:e})")]
    NotUnitary { name: String, deviation: f64 },
    #[error("gate `{0}` does not start with an uppercase letter")]
    BadName(String),
    #[error("malformed gate file: {0}")]
    Json(#[from] serde_json::Error),
}

/// Gate file entry: `{name, arity, matrix: [[re, im], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GateSpec {
    pub name: String,
    pub arity: usize,
    pub matrix: Vec<[f64; 2]>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GateFile {
    One(GateSpec),
    Many(Vec<GateSpec>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateTable {
    gates: BTreeMap<String, Gate>,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

impl GateTable {
    pub fn empty() -> Self {
        GateTable { gates: BTreeMap::new() }
    }

    /// X, Z, H, S, T and CNOT.
    pub fn builtin() -> Self {
        let (o, l) = (c(0.0, 0.0), c(1.0, 0.0));
        let h = c(FRAC_1_SQRT_2, 0.0);
        let t = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        let defs: Vec<(&str, usize, Vec<Complex64>)> = vec![
            ("X", 1, vec![o, l, l, o]),
            ("Z", 1, vec![l, o, o, -l]),
            ("H", 1, vec![h, h, h, -h]),
            ("S", 1, vec![l, o, o, c(0.0, 1.0)]),
            ("T", 1, vec![l, o, o, t]),
            (
                "CNOT",
                2,
                vec![l, o, o, o, o, l, o, o, o, o, o, l, o, o, l, o],
            ),
        ];
        let mut table = GateTable::empty();
        for (name, arity, m) in defs {
            table.insert(Gate::new(name, arity, m).expect("builtin gates are unitary"));
        }
        table
    }

    pub fn insert(&mut self, gate: Gate) {
        self.gates.insert(gate.name.clone(), gate);
    }

    pub fn get(&self, name: &str) -> Option<&Gate> {
        self.gates.get(name)
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.gates.get(name).map(|g| g.arity)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.gates.keys().map(String::as_str)
    }

    /// Adds the gates of a JSON gate file (one object or an array).
    pub fn load_json(&mut self, text: &str) -> Result<(), GateError> {
        let specs = match serde_json::from_str::<GateFile>(text)? {
            GateFile::One(s) => vec![s],
            GateFile::Many(v) => v,
        };
        for spec in specs {
            if !spec.name.starts_with(|ch: char| ch.is_uppercase()) {
                return Err(GateError::BadName(spec.name));
            }
            let matrix = spec.matrix.iter().map(|[re, im]| c(*re, *im)).collect();
            self.insert(Gate::new(&spec.name, spec.arity, matrix)?);
        }
        Ok(())
    }
}

impl Default for GateTable {
    fn default() -> Self {
        GateTable::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_are_unitary() {
        let t = GateTable::builtin();
        for name in ["X", "Z", "H", "S", "T", "CNOT"] {
            assert!(t.get(name).unwrap().unitarity_deviation() < 1e-12, "{name}");
        }
        assert_eq!(t.arity("CNOT"), Some(2));
        assert_eq!(t.arity("Y"), None);
    }

    #[test]
    fn gate_files() {
        let mut t = GateTable::builtin();
        t.load_json(r#"{"name": "Y", "arity": 1, "matrix": [[0,0],[0,-1],[0,1],[0,0]]}"#)
            .unwrap();
        assert_eq!(t.arity("Y"), Some(1));
        let bad = t.load_json(r#"[{"name": "B", "arity": 1, "matrix": [[1,0],[1,0],[0,0],[1,0]]}]"#);
        assert!(matches!(bad, Err(GateError::NotUnitary { .. })));
        let short = t.load_json(r#"{"name": "B", "arity": 1, "matrix": [[1,0]]}"#);
        assert!(matches!(short, Err(GateError::BadDimension { .. })));
    }
}
