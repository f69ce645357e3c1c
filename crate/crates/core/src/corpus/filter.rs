//! Token-selection expressions.
//!
//! ```text
//! expr  := or
//! or    := and (("||" | "OR") and)*
//! and   := atom (("&&" | "AND") atom)*
//! atom  := "(" expr ")" | "*" | field op value
//! field := "token" | POS | SYNCAT | SENSE | NER | TOKEN_INDEX   (case-insensitive)
//! op    := "==" (equality) | "^=" (prefix)
//! value := double-quoted string with \" and \\ escapes, or a bare word
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{Dataset, FeatureKind, TokenOccurrence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchOp {
    Equals,
    Prefix,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Field {
    Token,
    Feature(FeatureKind),
    /// A name that is not a feature kind at all; rejected when evaluated.
    Unknown(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Filter {
    All,
    Match { field: Field, op: MatchOp, value: String },
    And(Box<Filter>, Box<Filter>),
    Or(Box<Filter>, Box<Filter>),
}

impl Filter {
    pub fn token_eq(value: impl Into<String>) -> Self {
        Filter::Match {
            field: Field::Token,
            op: MatchOp::Equals,
            value: value.into(),
        }
    }

    pub fn feature_eq(kind: FeatureKind, value: impl Into<String>) -> Self {
        Filter::Match {
            field: Field::Feature(kind),
            op: MatchOp::Equals,
            value: value.into(),
        }
    }

    pub fn and(self, other: Filter) -> Self {
        Filter::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Filter) -> Self {
        Filter::Or(Box::new(self), Box::new(other))
    }

    /// Fails on the first field the dataset cannot answer.
    fn check_fields(&self, dataset: &Dataset) -> Result<()> {
        match self {
            Filter::All => Ok(()),
            Filter::Match { field, .. } => match field {
                Field::Token => Ok(()),
                Field::Unknown(name) => Err(Error::UnknownFeature(name.clone())),
                Field::Feature(kind) if dataset.has_feature(*kind) => Ok(()),
                Field::Feature(kind) => Err(Error::UnknownFeature(kind.to_string())),
            },
            Filter::And(a, b) | Filter::Or(a, b) => {
                a.check_fields(dataset)?;
                b.check_fields(dataset)
            }
        }
    }

    pub fn matches(&self, occ: &TokenOccurrence) -> bool {
        match self {
            Filter::All => true,
            Filter::Match { field, op, value } => {
                let subject = match field {
                    Field::Token => Some(occ.token.clone()),
                    Field::Feature(FeatureKind::TokenIndex) => Some(occ.token_index.to_string()),
                    Field::Feature(kind) => occ.annotations.get(kind).cloned(),
                    Field::Unknown(_) => None,
                };
                subject.is_some_and(|s| match op {
                    MatchOp::Equals => s == *value,
                    MatchOp::Prefix => s.starts_with(value.as_str()),
                })
            }
            Filter::And(a, b) => a.matches(occ) && b.matches(occ),
            Filter::Or(a, b) => a.matches(occ) || b.matches(occ),
        }
    }
}

/// Ids of all occurrences accepted by `filter`, ascending.
pub fn filter_occurrences(dataset: &Dataset, filter: &Filter) -> Result<Vec<usize>> {
    filter.check_fields(dataset)?;
    Ok(dataset
        .occurrences
        .iter()
        .filter(|o| filter.matches(o))
        .map(|o| o.id)
        .collect())
}

impl fmt::Display for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Filter::All => write!(f, "*"),
            Filter::Match { field, op, value } => {
                let name = match field {
                    Field::Token => "token".to_string(),
                    Field::Feature(k) => k.to_string(),
                    Field::Unknown(s) => s.clone(),
                };
                let op = match op {
                    MatchOp::Equals => "==",
                    MatchOp::Prefix => "^=",
                };
                let escaped = value.replace('\\', "\\\\").replace('"', "\\\"");
                write!(f, "{name} {op} \"{escaped}\"")
            }
            Filter::And(a, b) => write!(f, "({a} && {b})"),
            Filter::Or(a, b) => write!(f, "({a} || {b})"),
        }
    }
}

impl FromStr for Filter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let tokens = lex(s)?;
        if tokens.is_empty() {
            return Ok(Filter::All);
        }
        let mut p = Parser { tokens, pos: 0 };
        let expr = p.or()?;
        if p.pos != p.tokens.len() {
            return Err(Error::FilterSyntax(format!(
                "unexpected {:?} after expression",
                p.tokens[p.pos]
            )));
        }
        Ok(expr)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Str(String),
    Eq,
    Prefix,
    And,
    Or,
    LParen,
    RParen,
    Star,
}

fn lex(s: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let mut chars = s.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '(' => {
                chars.next();
                out.push(Tok::LParen);
            }
            ')' => {
                chars.next();
                out.push(Tok::RParen);
            }
            '*' => {
                chars.next();
                out.push(Tok::Star);
            }
            '=' | '^' | '&' | '|' => {
                chars.next();
                let next = chars.next();
                let tok = match (c, next) {
                    ('=', Some('=')) => Tok::Eq,
                    ('^', Some('=')) => Tok::Prefix,
                    ('&', Some('&')) => Tok::And,
                    ('|', Some('|')) => Tok::Or,
                    _ => return Err(Error::FilterSyntax(format!("bad operator near '{c}'"))),
                };
                out.push(tok);
            }
            '"' => {
                chars.next();
                let mut lit = String::new();
                loop {
                    match chars.next() {
                        None => return Err(Error::FilterSyntax("unterminated string".into())),
                        Some('"') => break,
                        Some('\\') => match chars.next() {
                            Some(e @ ('"' | '\\')) => lit.push(e),
                            other => {
                                return Err(Error::FilterSyntax(format!(
                                    "bad escape {other:?}"
                                )))
                            }
                        },
                        Some(ch) => lit.push(ch),
                    }
                }
                out.push(Tok::Str(lit));
            }
            _ => {
                let mut word = String::new();
                while let Some(&ch) = chars.peek() {
                    if ch.is_whitespace() || "()\"=^&|*".contains(ch) {
                        break;
                    }
                    word.push(ch);
                    chars.next();
                }
                out.push(match word.as_str() {
                    "AND" | "and" => Tok::And,
                    "OR" | "or" => Tok::Or,
                    _ => Tok::Word(word),
                });
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn or(&mut self) -> Result<Filter> {
        let mut lhs = self.and()?;
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            lhs = lhs.or(self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Filter> {
        let mut lhs = self.atom()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            lhs = lhs.and(self.atom()?);
        }
        Ok(lhs)
    }

    fn atom(&mut self) -> Result<Filter> {
        match self.next() {
            Some(Tok::LParen) => {
                let inner = self.or()?;
                match self.next() {
                    Some(Tok::RParen) => Ok(inner),
                    other => Err(Error::FilterSyntax(format!("expected ')', got {other:?}"))),
                }
            }
            Some(Tok::Star) => Ok(Filter::All),
            Some(Tok::Word(name)) => {
                let field = if name.eq_ignore_ascii_case("token") {
                    Field::Token
                } else {
                    match name.parse::<FeatureKind>() {
                        Ok(FeatureKind::Ngram) | Err(_) => Field::Unknown(name),
                        Ok(kind) => Field::Feature(kind),
                    }
                };
                let op = match self.next() {
                    Some(Tok::Eq) => MatchOp::Equals,
                    Some(Tok::Prefix) => MatchOp::Prefix,
                    other => {
                        return Err(Error::FilterSyntax(format!(
                            "expected '==' or '^=', got {other:?}"
                        )))
                    }
                };
                let value = match self.next() {
                    Some(Tok::Str(s)) | Some(Tok::Word(s)) => s,
                    other => {
                        return Err(Error::FilterSyntax(format!("expected a value, got {other:?}")))
                    }
                };
                Ok(Filter::Match { field, op, value })
            }
            other => Err(Error::FilterSyntax(format!("unexpected {other:?}"))),
        }
    }
}
