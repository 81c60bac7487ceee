//! Recursive-descent parser for the concrete formula syntax.
//!
//! Grammar (lowest precedence first):
//!
//! ```text
//! formula := iff
//! iff     := imp ( "<->" imp )?          // non-associative
//! imp     := or  ( "->" imp )?           // right-associative
//! or      := and ( "|" or )?             // right-associative
//! and     := prefix ( "&" and )?         // right-associative
//! prefix  := "~" prefix | "K" prefix | "Kh" prefix | atom
//! atom    := ident | "true" | "false" | "(" formula ")"
//! ident   := [a-z][a-zA-Z0-9_]*          // K, Kh, true, false reserved
//! ```
//!
//! `|`, `->`, `<->`, `true`, and `false` are abbreviations; the parser
//! returns their primitive expansions, so the AST only ever contains the
//! five primitive constructors. A chain `p <-> q <-> r` is rejected;
//! parenthesize one side.

use super::{Formula, FALSUM_PROP};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at byte {position}: expected {expected}")]
    Syntax { position: usize, expected: String },
    #[error("reserved or invalid word `{word}` at byte {position}")]
    ReservedWord { position: usize, word: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Tilde,
    Amp,
    Pipe,
    Arrow,
    DoubleArrow,
    LParen,
    RParen,
    K,
    Kh,
    True,
    False,
    Ident(String),
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Tilde => "`~`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::DoubleArrow => "`<->`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::K => "`K`".into(),
            Tok::Kh => "`Kh`".into(),
            Tok::True => "`true`".into(),
            Tok::False => "`false`".into(),
            Tok::Ident(s) => format!("`{s}`"),
        }
    }
}

fn is_word_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_'
}

fn is_ident(word: &str) -> bool {
    let mut bytes = word.bytes();
    match bytes.next() {
        Some(c) if c.is_ascii_lowercase() => bytes.all(is_word_char),
        _ => false,
    }
}

fn lex(input: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = input.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let start = i;
        match bytes[i] {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'~' => {
                toks.push((start, Tok::Tilde));
                i += 1;
            }
            b'&' => {
                toks.push((start, Tok::Amp));
                i += 1;
            }
            b'|' => {
                toks.push((start, Tok::Pipe));
                i += 1;
            }
            b'(' => {
                toks.push((start, Tok::LParen));
                i += 1;
            }
            b')' => {
                toks.push((start, Tok::RParen));
                i += 1;
            }
            b'-' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    toks.push((start, Tok::Arrow));
                    i += 2;
                } else {
                    return Err(ParseError::Syntax {
                        position: start,
                        expected: "`->`".into(),
                    });
                }
            }
            b'<' => {
                if bytes.get(i + 1) == Some(&b'-') && bytes.get(i + 2) == Some(&b'>') {
                    toks.push((start, Tok::DoubleArrow));
                    i += 3;
                } else {
                    return Err(ParseError::Syntax {
                        position: start,
                        expected: "`<->`".into(),
                    });
                }
            }
            c if is_word_char(c) => {
                let mut j = i;
                while j < bytes.len() && is_word_char(bytes[j]) {
                    j += 1;
                }
                let word = &input[i..j];
                // `Kh` before `K`: maximal-munch word lexing means `Khp`
                // is a single (invalid) word, never `K` + `hp`.
                let tok = match word {
                    "Kh" => Tok::Kh,
                    "K" => Tok::K,
                    "true" => Tok::True,
                    "false" => Tok::False,
                    FALSUM_PROP => Tok::Ident(word.to_string()),
                    w if is_ident(w) => Tok::Ident(w.to_string()),
                    w => {
                        return Err(ParseError::ReservedWord {
                            position: start,
                            word: w.to_string(),
                        })
                    }
                };
                toks.push((start, tok));
                i = j;
            }
            _ => {
                return Err(ParseError::Syntax {
                    position: start,
                    expected: "a formula token".into(),
                })
            }
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    input_len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn position(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|(p, _)| *p)
            .unwrap_or(self.input_len)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, expected: &str) -> ParseError {
        ParseError::Syntax {
            position: self.position(),
            expected: expected.into(),
        }
    }

    fn iff(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.imp()?;
        if self.peek() == Some(&Tok::DoubleArrow) {
            self.bump();
            let rhs = self.imp()?;
            if self.peek() == Some(&Tok::DoubleArrow) {
                return Err(self.err("`<->` is non-associative; parenthesize one side"));
            }
            return Ok(Formula::iff(lhs, rhs));
        }
        Ok(lhs)
    }

    fn imp(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.or()?;
        if self.peek() == Some(&Tok::Arrow) {
            self.bump();
            let rhs = self.imp()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.and()?;
        if self.peek() == Some(&Tok::Pipe) {
            self.bump();
            let rhs = self.or()?;
            return Ok(Formula::or(lhs, rhs));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.prefix()?;
        if self.peek() == Some(&Tok::Amp) {
            self.bump();
            let rhs = self.and()?;
            return Ok(Formula::and(lhs, rhs));
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(Tok::Tilde) => {
                self.bump();
                Ok(Formula::not(self.prefix()?))
            }
            Some(Tok::K) => {
                self.bump();
                Ok(Formula::k(self.prefix()?))
            }
            Some(Tok::Kh) => {
                self.bump();
                Ok(Formula::kh(self.prefix()?))
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        match self.bump() {
            Some(Tok::Ident(name)) => Ok(Formula::Prop(name)),
            Some(Tok::True) => Ok(Formula::verum()),
            Some(Tok::False) => Ok(Formula::falsum()),
            Some(Tok::LParen) => {
                let inner = self.iff()?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(inner),
                    Some(t) => Err(ParseError::Syntax {
                        position: self.toks[self.pos - 1].0,
                        expected: format!("`)`, found {}", t.describe()),
                    }),
                    None => Err(ParseError::Syntax {
                        position: self.input_len,
                        expected: "`)`".into(),
                    }),
                }
            }
            Some(t) => Err(ParseError::Syntax {
                position: self.toks[self.pos - 1].0,
                expected: format!("a formula, found {}", t.describe()),
            }),
            None => Err(ParseError::Syntax {
                position: self.input_len,
                expected: "a formula".into(),
            }),
        }
    }
}

/// Parses the concrete syntax into a primitive-constructor AST.
pub fn parse(input: &str) -> Result<Formula, ParseError> {
    let toks = lex(input)?;
    let mut p = Parser {
        toks,
        pos: 0,
        input_len: input.len(),
    };
    let f = p.iff()?;
    match p.peek() {
        None => Ok(f),
        Some(t) => Err(ParseError::Syntax {
            position: p.position(),
            expected: format!("end of input, found {}", t.describe()),
        }),
    }
}
