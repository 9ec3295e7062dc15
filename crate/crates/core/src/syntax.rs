//! Tokenizer and predicate grammar shared by the global query language and
//! the three local dialects.

use std::fmt;

use thiserror::Error;

use crate::constraints::{CompareOp, Literal};
use crate::query::{Atom, Predicate};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at {position}: {message}")]
pub struct SyntaxError {
    /// Byte offset into the input.
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Token {
    Slash,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Dot,
    Op(CompareOp),
    Ident(String),
    Int(i64),
    Str(String),
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Slash => f.write_str("'/'"),
            Token::LBracket => f.write_str("'['"),
            Token::RBracket => f.write_str("']'"),
            Token::LParen => f.write_str("'('"),
            Token::RParen => f.write_str("')'"),
            Token::Dot => f.write_str("'.'"),
            Token::Op(op) => write!(f, "'{op}'"),
            Token::Ident(name) => write!(f, "identifier {name:?}"),
            Token::Int(v) => write!(f, "integer {v}"),
            Token::Str(s) => write!(f, "string {s:?}"),
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Splits `input` into tokens with their byte offsets. String literals may
/// use either quote character; the quote is escaped by doubling it.
pub(crate) fn tokenize(input: &str) -> Result<Vec<(Token, usize)>, SyntaxError> {
    let mut tokens = Vec::new();
    let mut chars = input.char_indices().peekable();
    let err = |position: usize, message: String| SyntaxError { position, message };

    while let Some(&(pos, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        let single = match c {
            '/' => Some(Token::Slash),
            '[' => Some(Token::LBracket),
            ']' => Some(Token::RBracket),
            '(' => Some(Token::LParen),
            ')' => Some(Token::RParen),
            '.' => Some(Token::Dot),
            '=' => Some(Token::Op(CompareOp::Eq)),
            _ => None,
        };
        if let Some(tok) = single {
            chars.next();
            tokens.push((tok, pos));
            continue;
        }
        match c {
            '!' => {
                chars.next();
                match chars.next() {
                    Some((_, '=')) => tokens.push((Token::Op(CompareOp::Ne), pos)),
                    _ => return Err(err(pos, "expected '=' after '!'".into())),
                }
            }
            '<' | '>' => {
                chars.next();
                let op = match (c, chars.peek().map(|&(_, n)| n)) {
                    ('<', Some('=')) => Some(CompareOp::Le),
                    ('>', Some('=')) => Some(CompareOp::Ge),
                    ('<', Some('>')) => Some(CompareOp::Ne),
                    _ => None,
                };
                let op = match op {
                    Some(op) => {
                        chars.next();
                        op
                    }
                    None if c == '<' => CompareOp::Lt,
                    None => CompareOp::Gt,
                };
                tokens.push((Token::Op(op), pos));
            }
            '"' | '\'' => {
                let quote = c;
                chars.next();
                let mut value = String::new();
                loop {
                    match chars.next() {
                        Some((_, ch)) if ch == quote => {
                            if chars.peek().map(|&(_, n)| n) == Some(quote) {
                                chars.next();
                                value.push(quote);
                            } else {
                                break;
                            }
                        }
                        Some((_, ch)) => value.push(ch),
                        None => return Err(err(pos, "unterminated string literal".into())),
                    }
                }
                tokens.push((Token::Str(value), pos));
            }
            '-' | '0'..='9' => {
                let mut text = String::new();
                if c == '-' {
                    chars.next();
                    text.push('-');
                }
                while let Some(&(_, d)) = chars.peek() {
                    if d.is_ascii_digit() {
                        text.push(d);
                        chars.next();
                    } else {
                        break;
                    }
                }
                if text == "-" {
                    return Err(err(pos, "expected digits after '-'".into()));
                }
                if let Some(&(p, n)) = chars.peek() {
                    if is_ident_continue(n) {
                        return Err(err(p, format!("unexpected character {n:?} in number")));
                    }
                }
                let v = text
                    .parse::<i64>()
                    .map_err(|_| err(pos, format!("integer {text} out of range")))?;
                tokens.push((Token::Int(v), pos));
            }
            c if is_ident_start(c) => {
                let mut name = String::new();
                while let Some(&(_, n)) = chars.peek() {
                    if is_ident_continue(n) {
                        name.push(n);
                        chars.next();
                    } else {
                        break;
                    }
                }
                tokens.push((Token::Ident(name), pos));
            }
            other => return Err(err(pos, format!("unexpected character {other:?}"))),
        }
    }
    Ok(tokens)
}

pub(crate) struct Parser<'a> {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    input: &'a str,
}

impl<'a> Parser<'a> {
    pub(crate) fn new(input: &'a str) -> Result<Self, SyntaxError> {
        Ok(Self {
            tokens: tokenize(input)?,
            pos: 0,
            input,
        })
    }

    pub(crate) fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map_or(self.input.len(), |&(_, p)| p)
    }

    pub(crate) fn error(&self, message: impl Into<String>) -> SyntaxError {
        SyntaxError {
            position: self.offset(),
            message: message.into(),
        }
    }

    fn describe_current(&self) -> String {
        self.peek()
            .map_or_else(|| "end of input".to_string(), |t| t.to_string())
    }

    pub(crate) fn expect(&mut self, expected: &Token) -> Result<(), SyntaxError> {
        if self.peek() == Some(expected) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!(
                "expected {expected}, found {}",
                self.describe_current()
            )))
        }
    }

    pub(crate) fn eat(&mut self, expected: &Token) -> bool {
        if self.peek() == Some(expected) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub(crate) fn at_keyword(&self, keyword: &str) -> bool {
        matches!(self.peek(), Some(Token::Ident(name)) if name.eq_ignore_ascii_case(keyword))
    }

    pub(crate) fn eat_keyword(&mut self, keyword: &str) -> bool {
        if self.at_keyword(keyword) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub(crate) fn expect_keyword(&mut self, keyword: &str) -> Result<(), SyntaxError> {
        if self.eat_keyword(keyword) {
            Ok(())
        } else {
            Err(self.error(format!(
                "expected keyword {keyword}, found {}",
                self.describe_current()
            )))
        }
    }

    pub(crate) fn ident(&mut self, what: &str) -> Result<String, SyntaxError> {
        match self.peek() {
            Some(Token::Ident(name)) => {
                let name = name.clone();
                self.pos += 1;
                Ok(name)
            }
            _ => Err(self.error(format!(
                "expected {what}, found {}",
                self.describe_current()
            ))),
        }
    }

    pub(crate) fn expect_end(&self) -> Result<(), SyntaxError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(self.error(format!("unexpected {t} after end of query"))),
        }
    }

    fn literal(&mut self) -> Result<Literal, SyntaxError> {
        let lit = match self.peek() {
            Some(Token::Int(v)) => Literal::Int(*v),
            Some(Token::Str(s)) => Literal::Text(s.clone()),
            _ => {
                return Err(self.error(format!(
                    "expected literal, found {}",
                    self.describe_current()
                )))
            }
        };
        self.pos += 1;
        Ok(lit)
    }

    /// predicate := conj (`or` conj)* ; conj := term (`and` term)* ;
    /// term := `(` predicate `)` | attr op literal.
    ///
    /// `attr` parses one attribute reference, which differs per dialect.
    pub(crate) fn predicate(
        &mut self,
        attr: &dyn Fn(&mut Parser<'a>) -> Result<String, SyntaxError>,
    ) -> Result<Predicate, SyntaxError> {
        let mut terms = vec![self.conjunction(attr)?];
        while self.eat_keyword("or") {
            terms.push(self.conjunction(attr)?);
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Predicate::Or(terms)
        })
    }

    fn conjunction(
        &mut self,
        attr: &dyn Fn(&mut Parser<'a>) -> Result<String, SyntaxError>,
    ) -> Result<Predicate, SyntaxError> {
        let mut terms = vec![self.term(attr)?];
        while self.eat_keyword("and") {
            terms.push(self.term(attr)?);
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Predicate::And(terms)
        })
    }

    fn term(
        &mut self,
        attr: &dyn Fn(&mut Parser<'a>) -> Result<String, SyntaxError>,
    ) -> Result<Predicate, SyntaxError> {
        if self.eat(&Token::LParen) {
            let inner = self.predicate(attr)?;
            self.expect(&Token::RParen)?;
            return Ok(inner);
        }
        let name = attr(self)?;
        let op = match self.peek() {
            Some(Token::Op(op)) => *op,
            _ => {
                return Err(self.error(format!(
                    "expected comparison operator, found {}",
                    self.describe_current()
                )))
            }
        };
        self.pos += 1;
        let literal = self.literal()?;
        Ok(Predicate::Atom(Atom {
            attr: name,
            op,
            literal,
        }))
    }
}

/// Plain attribute name.
pub(crate) fn bare_attr(p: &mut Parser<'_>) -> Result<String, SyntaxError> {
    p.ident("attribute name")
}

/// Style knobs for rendering a predicate in one of the concrete grammars.
pub(crate) struct RenderStyle<'s> {
    pub and: &'s str,
    pub or: &'s str,
    pub op_spacing: bool,
    pub quote: char,
    pub attr_prefix: &'s str,
}

pub(crate) fn render_literal(lit: &Literal, quote: char) -> String {
    match lit {
        Literal::Int(v) => v.to_string(),
        Literal::Text(s) => {
            let doubled: String = [quote, quote].iter().collect();
            format!("{quote}{}{quote}", s.replace(quote, &doubled))
        }
    }
}

/// Renders a predicate; compound children are parenthesized so the output
/// re-parses to the same tree.
pub(crate) fn render_predicate(pred: &Predicate, style: &RenderStyle<'_>) -> String {
    match pred {
        Predicate::Atom(atom) => {
            let lit = render_literal(&atom.literal, style.quote);
            if style.op_spacing {
                format!("{}{} {} {lit}", style.attr_prefix, atom.attr, atom.op)
            } else {
                format!("{}{}{}{lit}", style.attr_prefix, atom.attr, atom.op)
            }
        }
        Predicate::And(children) | Predicate::Or(children) => {
            let sep = if matches!(pred, Predicate::And(_)) {
                style.and
            } else {
                style.or
            };
            children
                .iter()
                .map(|child| match child {
                    Predicate::Atom(_) => render_predicate(child, style),
                    _ => format!("({})", render_predicate(child, style)),
                })
                .collect::<Vec<_>>()
                .join(&format!(" {sep} "))
        }
    }
}
