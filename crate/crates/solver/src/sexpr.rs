//! Minimal s-expression reader for SMT-LIB scripts: symbols, integer
//! numerals and parenthesized lists, with `;` line comments.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexpr {
    Sym(String),
    Int(i64),
    List(Vec<Sexpr>),
}

impl Sexpr {
    pub fn as_sym(&self) -> Option<&str> {
        match self {
            Sexpr::Sym(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexpr]> {
        match self {
            Sexpr::List(items) => Some(items),
            _ => None,
        }
    }
}

impl fmt::Display for Sexpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexpr::Sym(s) => f.write_str(s),
            Sexpr::Int(i) => write!(f, "{i}"),
            Sexpr::List(items) => {
                f.write_str("(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub message: String,
    pub offset: usize,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (at byte {})", self.message, self.offset)
    }
}

impl std::error::Error for ParseError {}

/// Parses a whole input into its top-level s-expressions.
pub fn parse_all(input: &str) -> Result<Vec<Sexpr>, ParseError> {
    let bytes = input.as_bytes();
    let mut pos = 0usize;
    let mut out = Vec::new();
    loop {
        skip_trivia(bytes, &mut pos);
        if pos >= bytes.len() {
            return Ok(out);
        }
        out.push(parse_one(bytes, &mut pos)?);
    }
}

fn skip_trivia(bytes: &[u8], pos: &mut usize) {
    while *pos < bytes.len() {
        match bytes[*pos] {
            b' ' | b'\t' | b'\r' | b'\n' => *pos += 1,
            b';' => {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
            }
            _ => return,
        }
    }
}

fn parse_one(bytes: &[u8], pos: &mut usize) -> Result<Sexpr, ParseError> {
    skip_trivia(bytes, pos);
    if *pos >= bytes.len() {
        return Err(ParseError { message: "unexpected end of input".into(), offset: *pos });
    }
    match bytes[*pos] {
        b'(' => {
            *pos += 1;
            let mut items = Vec::new();
            loop {
                skip_trivia(bytes, pos);
                if *pos >= bytes.len() {
                    return Err(ParseError { message: "unclosed list".into(), offset: *pos });
                }
                if bytes[*pos] == b')' {
                    *pos += 1;
                    return Ok(Sexpr::List(items));
                }
                items.push(parse_one(bytes, pos)?);
            }
        }
        b')' => Err(ParseError { message: "unmatched ')'".into(), offset: *pos }),
        _ => {
            let start = *pos;
            while *pos < bytes.len() && !matches!(bytes[*pos], b' ' | b'\t' | b'\r' | b'\n' | b'(' | b')' | b';') {
                *pos += 1;
            }
            let token = core::str::from_utf8(&bytes[start..*pos])
                .map_err(|_| ParseError { message: "invalid utf-8 in token".into(), offset: start })?;
            if let Ok(i) = token.parse::<i64>() {
                Ok(Sexpr::Int(i))
            } else {
                Ok(Sexpr::Sym(token.to_string()))
            }
        }
    }
}
