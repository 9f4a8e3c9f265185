// SPDX-License-Identifier: Apache-2.0

use super::parser::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    /// `#r`, a quantum variable.
    QIdent(String),
    Tt,
    Ff,
    Omega,
    If,
    Then,
    Else,
    Let,
    In,
    Weak,
    Meas,
    New,
    BoolTy,
    QbitTy,
    Lambda,
    Colon,
    Dot,
    LParen,
    RParen,
    LAngle,
    RAngle,
    Comma,
    Eq,
    Choice,
    Lolli,
    Star,
    Hole,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::QIdent(s) => format!("quantum variable `#{s}`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.lexeme()),
        }
    }

    fn lexeme(&self) -> &'static str {
        match self {
            Tok::Tt => "tt",
            Tok::Ff => "ff",
            Tok::Omega => "omega",
            Tok::If => "if",
            Tok::Then => "then",
            Tok::Else => "else",
            Tok::Let => "let",
            Tok::In => "in",
            Tok::Weak => "weak",
            Tok::Meas => "meas",
            Tok::New => "new",
            Tok::BoolTy => "bool",
            Tok::QbitTy => "qbit",
            Tok::Lambda => "\\",
            Tok::Colon => ":",
            Tok::Dot => ".",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LAngle => "<",
            Tok::RAngle => ">",
            Tok::Comma => ",",
            Tok::Eq => "=",
            Tok::Choice => "(+)",
            Tok::Lolli => "-o",
            Tok::Star => "*",
            Tok::Hole => "[.]",
            Tok::Ident(_) | Tok::QIdent(_) | Tok::Eof => "",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl std::fmt::Display for Pos {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let (mut line, mut col) = (1, 1);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        let starts = |s: &str| {
            let s: Vec<char> = s.chars().collect();
            chars[i..].starts_with(&s)
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if starts("--") {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (tok, len) = if starts("(+)") {
            (Tok::Choice, 3)
        } else if starts("[.]") || starts("[·]") {
            (Tok::Hole, 3)
        } else if starts("-o") {
            (Tok::Lolli, 2)
        } else {
            match c {
                '\\' | 'λ' => (Tok::Lambda, 1),
                ':' => (Tok::Colon, 1),
                '.' => (Tok::Dot, 1),
                '(' => (Tok::LParen, 1),
                ')' => (Tok::RParen, 1),
                '<' | '⟨' => (Tok::LAngle, 1),
                '>' | '⟩' => (Tok::RAngle, 1),
                ',' => (Tok::Comma, 1),
                '=' => (Tok::Eq, 1),
                '*' | '⊗' => (Tok::Star, 1),
                '⊸' => (Tok::Lolli, 1),
                '⊕' => (Tok::Choice, 1),
                'Ω' => (Tok::Omega, 1),
                '#' => {
                    let start = i + 1;
                    let mut j = start;
                    while j < chars.len() && is_ident_char(chars[j]) {
                        j += 1;
                    }
                    if j == start {
                        return Err(ParseError::syntax(pos, "expected a name after `#`"));
                    }
                    (Tok::QIdent(chars[start..j].iter().collect()), j - i)
                }
                c if c.is_alphabetic() || c == '_' => {
                    let mut j = i;
                    while j < chars.len() && is_ident_char(chars[j]) {
                        j += 1;
                    }
                    let word: String = chars[i..j].iter().collect();
                    let tok = match word.as_str() {
                        "tt" => Tok::Tt,
                        "ff" => Tok::Ff,
                        "omega" => Tok::Omega,
                        "if" => Tok::If,
                        "then" => Tok::Then,
                        "else" => Tok::Else,
                        "let" => Tok::Let,
                        "in" => Tok::In,
                        "weak" => Tok::Weak,
                        "meas" => Tok::Meas,
                        "new" => Tok::New,
                        "bool" => Tok::BoolTy,
                        "qbit" => Tok::QbitTy,
                        _ => Tok::Ident(word),
                    };
                    (tok, j - i)
                }
                other => {
                    return Err(ParseError::syntax(pos, format!("unexpected character `{other}`")))
                }
            }
        };
        out.push((tok, pos));
        i += len;
        col += len;
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}
