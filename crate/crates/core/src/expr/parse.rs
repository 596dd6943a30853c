//! Recursive-descent parser for the statement grammar.
//!
//! ```text
//! statement  := expr REL expr "on" domain
//! expr       := term (("+" | "-") term)*
//! term       := unary (("*" | "/") unary)*
//! unary      := "-"? factor
//! factor     := atom ("^" INT)?
//! atom       := NUMBER | IDENT | IDENT "(" expr ("," expr)* ")" | "(" expr ")"
//! domain     := constraint ("," constraint)*
//! constraint := IDENT (">" | ">=" | "<" | "<=") NUMBER | IDENT "in" "R" | IDENT "notin" "Z"
//! NUMBER     := INT | INT "/" INT | decimal
//! ```
//!
//! `INT "/" INT` is read as a single rational literal only where a term
//! starts and the second integer is not raised to a power, so `x/2/3` keeps
//! its left-associative reading while `4/15` stays an exact constant.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use super::{Bound, Domain, Expr, Relation, Statement};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: expected {expected}, found {found}")]
    Syntax {
        offset: usize,
        expected: String,
        found: String,
    },
    #[error("undeclared variable `{name}`")]
    UndeclaredVariable { name: String },
    #[error("invalid domain for `{name}`: {reason}")]
    InvalidDomain { name: String, reason: String },
}

impl ParseError {
    pub fn offset(&self) -> Option<usize> {
        match self {
            ParseError::Syntax { offset, .. } => Some(*offset),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Decimal(BigRational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Ge,
    Gt,
    Le,
    Lt,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Int(v) => format!("`{v}`"),
            Tok::Decimal(_) => "decimal literal".to_string(),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Ge => "`>=`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Le => "`<=`".into(),
            Tok::Lt => "`<`".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let int_part = &src[start..i];
            if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
                i += 1;
                let frac_start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let frac = &src[frac_start..i];
                let num: BigInt = format!("{int_part}{frac}").parse().expect("digits");
                let den = BigInt::from(10u32).pow(frac.len() as u32);
                out.push((start, Tok::Decimal(BigRational::new(num, den))));
            } else {
                out.push((start, Tok::Int(int_part.parse().expect("digits"))));
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
            continue;
        }
        let two = bytes.get(i + 1).copied();
        let tok = match (c, two) {
            (b'>', Some(b'=')) => {
                i += 1;
                Tok::Ge
            }
            (b'<', Some(b'=')) => {
                i += 1;
                Tok::Le
            }
            (b'>', _) => Tok::Gt,
            (b'<', _) => Tok::Lt,
            (b'+', _) => Tok::Plus,
            (b'-', _) => Tok::Minus,
            (b'*', _) => Tok::Star,
            (b'/', _) => Tok::Slash,
            (b'^', _) => Tok::Caret,
            (b'(', _) => Tok::LParen,
            (b')', _) => Tok::RParen,
            (b',', _) => Tok::Comma,
            _ => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    offset: i,
                    expected: "a token".into(),
                    found: format!("`{ch}`"),
                });
            }
        };
        i += 1;
        out.push((start, tok));
    }
    Ok(out)
}

const FUNCTIONS: &[&str] = &[
    "floor", "frac", "sqrt", "cbrt", "root4", "abs", "exp", "sin", "cos", "min", "max",
];

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Parser {
            toks: lex(src)?,
            pos: 0,
            len: src.len(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.len, |(o, _)| *o)
    }

    fn error<T>(&self, expected: &str) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            offset: self.offset(),
            expected: expected.to_string(),
            found: self
                .peek()
                .map_or_else(|| "end of input".to_string(), Tok::describe),
        })
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ParseError> {
        if self.eat(&t) {
            Ok(())
        } else {
            self.error(what)
        }
    }

    fn expect_ident(&mut self, word: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == word => {
                self.pos += 1;
                Ok(())
            }
            _ => self.error(&format!("`{word}`")),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(&Tok::Plus) {
                lhs = lhs + self.term()?;
            } else if self.eat(&Tok::Minus) {
                lhs = lhs - self.term()?;
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary(true)?;
        loop {
            if self.eat(&Tok::Star) {
                lhs = lhs * self.unary(false)?;
            } else if self.eat(&Tok::Slash) {
                lhs = lhs / self.unary(false)?;
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self, term_start: bool) -> Result<Expr, ParseError> {
        if self.eat(&Tok::Minus) {
            Ok(Expr::Neg(Box::new(self.factor(term_start)?)))
        } else {
            self.factor(term_start)
        }
    }

    fn factor(&mut self, term_start: bool) -> Result<Expr, ParseError> {
        let base = self.atom(term_start)?;
        if self.eat(&Tok::Caret) {
            match self.peek().cloned() {
                Some(Tok::Int(k)) => {
                    let k: u32 = k.try_into().or_else(|_| self.error("a small exponent"))?;
                    self.pos += 1;
                    Ok(Expr::Pow(Box::new(base), k))
                }
                _ => self.error("a nonnegative integer exponent"),
            }
        } else {
            Ok(base)
        }
    }

    fn rational_literal_ahead(&self) -> bool {
        matches!(self.peek(), Some(Tok::Int(_)))
            && matches!(self.peek_at(1), Some(Tok::Slash))
            && matches!(self.peek_at(2), Some(Tok::Int(_)))
            && !matches!(self.peek_at(3), Some(Tok::Caret))
    }

    fn atom(&mut self, term_start: bool) -> Result<Expr, ParseError> {
        if term_start && self.rational_literal_ahead() {
            let offset = self.offset();
            let (Some(Tok::Int(n)), Some(Tok::Int(d))) =
                (self.peek().cloned(), self.peek_at(2).cloned())
            else {
                unreachable!("checked by rational_literal_ahead")
            };
            if d.is_zero() {
                return Err(ParseError::Syntax {
                    offset,
                    expected: "a nonzero denominator".into(),
                    found: "`0`".into(),
                });
            }
            self.pos += 3;
            return Ok(Expr::Const(BigRational::new(n, d)));
        }
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                Ok(Expr::Const(BigRational::from_integer(n)))
            }
            Some(Tok::Decimal(r)) => {
                self.pos += 1;
                Ok(Expr::Const(r))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                if matches!(self.peek_at(1), Some(Tok::LParen)) {
                    if !FUNCTIONS.contains(&name.as_str()) {
                        return self.error("a known function");
                    }
                    self.pos += 2;
                    let mut args = vec![self.expr()?];
                    while self.eat(&Tok::Comma) {
                        args.push(self.expr()?);
                    }
                    let close = self.offset();
                    self.expect(Tok::RParen, "`,` or `)`")?;
                    build_call(&name, args).ok_or(ParseError::Syntax {
                        offset: close,
                        expected: format!("exactly one argument to `{name}`"),
                        found: "several".into(),
                    })
                } else if name == "on" || name == "in" || name == "notin" {
                    self.error("an expression")
                } else {
                    self.pos += 1;
                    Ok(Expr::Var(name))
                }
            }
            _ => self.error("an expression"),
        }
    }

    fn relation(&mut self) -> Result<Relation, ParseError> {
        let r = match self.peek() {
            Some(Tok::Ge) => Relation::Ge,
            Some(Tok::Gt) => Relation::Gt,
            Some(Tok::Le) => Relation::Le,
            Some(Tok::Lt) => Relation::Lt,
            _ => return self.error("a relation (`>=`, `>`, `<=`, `<`)"),
        };
        self.pos += 1;
        Ok(r)
    }

    fn number(&mut self) -> Result<BigRational, ParseError> {
        let negative = self.eat(&Tok::Minus);
        let v = match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                if self.peek() == Some(&Tok::Slash) {
                    if let Some(Tok::Int(d)) = self.peek_at(1).cloned() {
                        if d.is_zero() {
                            return self.error("a nonzero denominator");
                        }
                        self.pos += 2;
                        BigRational::new(n, d)
                    } else {
                        self.pos += 1;
                        return self.error("an integer denominator");
                    }
                } else {
                    BigRational::from_integer(n)
                }
            }
            Some(Tok::Decimal(r)) => {
                self.pos += 1;
                r
            }
            _ => return self.error("a number"),
        };
        Ok(if negative { -v } else { v })
    }

    fn domain(&mut self) -> Result<Domain, ParseError> {
        let mut domain = Domain::default();
        loop {
            let name = match self.peek().cloned() {
                Some(Tok::Ident(n)) => n,
                _ => return self.error("a variable name"),
            };
            self.pos += 1;
            let op = self.peek().cloned();
            match op {
                Some(Tok::Gt | Tok::Ge | Tok::Lt | Tok::Le) => {
                    self.pos += 1;
                    let value = self.number()?;
                    let closed = matches!(op, Some(Tok::Ge | Tok::Le));
                    let entry = domain.entry(&name);
                    let slot = if matches!(op, Some(Tok::Gt | Tok::Ge)) {
                        &mut entry.lower
                    } else {
                        &mut entry.upper
                    };
                    if slot.is_some() {
                        return Err(ParseError::InvalidDomain {
                            name,
                            reason: "bound given twice".into(),
                        });
                    }
                    *slot = Some(Bound { value, closed });
                    if !entry.is_sane() {
                        return Err(ParseError::InvalidDomain {
                            name,
                            reason: "lower bound not below upper bound".into(),
                        });
                    }
                }
                Some(Tok::Ident(kw)) if kw == "in" => {
                    self.pos += 1;
                    self.expect_ident("R")?;
                    domain.entry(&name).real_line = true;
                }
                Some(Tok::Ident(kw)) if kw == "notin" => {
                    self.pos += 1;
                    self.expect_ident("Z")?;
                    domain.entry(&name).exclude_integers = true;
                }
                _ => return self.error("`>`, `>=`, `<`, `<=`, `in` or `notin`"),
            }
            if !self.eat(&Tok::Comma) {
                return Ok(domain);
            }
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        if self.pos < self.toks.len() {
            self.error("end of input")
        } else {
            Ok(())
        }
    }
}

fn build_call(name: &str, mut args: Vec<Expr>) -> Option<Expr> {
    let one = |args: &mut Vec<Expr>| {
        if args.len() == 1 {
            args.pop().map(Box::new)
        } else {
            None
        }
    };
    Some(match name {
        "min" => Expr::Min(args),
        "max" => Expr::Max(args),
        "floor" => Expr::Floor(one(&mut args)?),
        "frac" => Expr::Frac(one(&mut args)?),
        "sqrt" => Expr::Root(one(&mut args)?, 2),
        "cbrt" => Expr::Root(one(&mut args)?, 3),
        "root4" => Expr::Root(one(&mut args)?, 4),
        "abs" => Expr::Abs(one(&mut args)?),
        "exp" => Expr::Exp(one(&mut args)?),
        "sin" => Expr::Sin(one(&mut args)?),
        "cos" => Expr::Cos(one(&mut args)?),
        _ => return None,
    })
}

/// Parses a bare expression (no relation, no domain).
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    p.finish()?;
    Ok(e)
}

pub fn parse_statement(src: &str) -> Result<Statement, ParseError> {
    let mut p = Parser::new(src)?;
    let lhs = p.expr()?;
    let relation = p.relation()?;
    let rhs = p.expr()?;
    p.expect_ident("on")?;
    let domain = p.domain()?;
    p.finish()?;
    let stmt = Statement {
        lhs,
        rhs,
        relation,
        domain,
    };
    if let Some(name) = stmt.undeclared().into_iter().next() {
        return Err(ParseError::UndeclaredVariable { name });
    }
    Ok(stmt)
}
