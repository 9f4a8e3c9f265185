// SPDX-License-Identifier: Apache-2.0

//! Printing in the concrete syntax accepted by the parser.

use std::fmt::{self, Formatter};

use super::Term;

const EXPR: u8 = 0;
const CHOICE: u8 = 1;
const APP: u8 = 2;
const ATOM: u8 = 3;

pub(crate) fn fmt_term(t: &Term, f: &mut Formatter<'_>) -> fmt::Result {
    go(t, EXPR, f)
}

fn go(t: &Term, prec: u8, f: &mut Formatter<'_>) -> fmt::Result {
    let binder = matches!(t, Term::Lam(..) | Term::If(..) | Term::LetPair(..));
    let needs = match t {
        _ if binder => prec > EXPR,
        Term::Choice(..) => prec > CHOICE,
        Term::App(..) => prec > APP,
        _ => false,
    };
    if needs {
        f.write_str("(")?;
    }
    match t {
        Term::Var(x) => write!(f, "{x}")?,
        Term::QVar(r) => write!(f, "#{r}")?,
        Term::Bool(true) => f.write_str("tt")?,
        Term::Bool(false) => f.write_str("ff")?,
        Term::Omega => f.write_str("omega")?,
        Term::Hole => f.write_str("[.]")?,
        Term::Lam(x, ty, b) => {
            write!(f, "\\{x}:{ty}. ")?;
            go(b, EXPR, f)?;
        }
        Term::If(c, th, el) => {
            f.write_str("if ")?;
            go(c, EXPR, f)?;
            f.write_str(" then ")?;
            go(th, EXPR, f)?;
            f.write_str(" else ")?;
            go(el, EXPR, f)?;
        }
        Term::LetPair(s, x, y, b) => {
            write!(f, "let <{x}, {y}> = ")?;
            go(s, EXPR, f)?;
            f.write_str(" in ")?;
            go(b, EXPR, f)?;
        }
        Term::App(a, b) => {
            go(a, APP, f)?;
            f.write_str(" ")?;
            go(b, ATOM, f)?;
        }
        Term::Choice(a, b) => {
            go(a, CHOICE, f)?;
            f.write_str(" (+) ")?;
            go(b, APP, f)?;
        }
        Term::Pair(a, b) => {
            f.write_str("<")?;
            go(a, EXPR, f)?;
            f.write_str(", ")?;
            go(b, EXPR, f)?;
            f.write_str(">")?;
        }
        Term::Unitary(g, v) => {
            write!(f, "{g}<")?;
            go(v, EXPR, f)?;
            f.write_str(">")?;
        }
        Term::Meas(v) => {
            f.write_str("meas(")?;
            go(v, EXPR, f)?;
            f.write_str(")")?;
        }
        Term::New(v) => {
            f.write_str("new(")?;
            go(v, EXPR, f)?;
            f.write_str(")")?;
        }
    }
    if needs {
        f.write_str(")")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::{parse, CalculusMode};

    fn round_trip(src: &str, mode: CalculusMode) {
        let e = parse(src, mode).unwrap();
        let printed = e.to_string();
        let again = parse(&printed, mode).unwrap_or_else(|err| panic!("{printed}: {err}"));
        assert!(again.alpha_eq(&e), "{src} printed as {printed}");
    }

    #[test]
    fn printing_round_trips() {
        for src in [
            r"\x:bool -o bool. \y:bool. x y",
            r"(\x:bool. x) (if tt then ff else tt)",
            r"let <a, b> = <tt, ff> in if a then b else (if b then ff else ff)",
            r"f (\x:bool. x) tt",
            "omega",
        ] {
            round_trip(src, CalculusMode::Det);
        }
        round_trip(r"(\x:bool. x) (+) (\y:bool. y) (+) tt", CalculusMode::Prob);
        round_trip(r"tt (+) (ff (+) tt)", CalculusMode::Prob);
        round_trip(r"\q:qbit * qbit. CNOT<q>", CalculusMode::Quantum);
        round_trip(r"meas(H<new(tt)>)", CalculusMode::Quantum);
    }
}
