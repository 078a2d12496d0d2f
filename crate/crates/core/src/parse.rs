//! Recursive-descent expression parser.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?          // right-associative
//! atom   := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Identifiers are `t`, `q1..qN`, `qd1..qdN`, `qdd1..qddN`, or declared
//! parameter names. Functions: `sin cos tan asin acos atan exp log sqrt
//! abs atan2`. Number literals (including decimal and exponent forms)
//! become exact rationals.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::expr::{Expr, Func};
use crate::num::Num;
use crate::sym::VariableSpace;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

/// A parse problem anchored to a byte span of the source.
#[derive(Clone, Debug)]
pub struct ParseDiagnostic {
    pub span: (usize, usize),
    pub message: String,
    pub severity: Severity,
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}: {}", self.span.0, self.span.1, self.message)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ParseDiagnostic {}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

type Spanned = (Tok, usize, usize);

impl<'a> Lexer<'a> {
    fn tokenize(src: &'a str) -> Result<Vec<Spanned>, ParseDiagnostic> {
        let mut lx = Lexer { src: src.as_bytes(), pos: 0 };
        let mut out = Vec::new();
        loop {
            lx.skip_ws();
            let start = lx.pos;
            if lx.pos >= lx.src.len() {
                out.push((Tok::End, start, start));
                return Ok(out);
            }
            let b = lx.src[lx.pos];
            let tok = match b {
                b'+' => {
                    lx.pos += 1;
                    Tok::Plus
                }
                b'-' => {
                    lx.pos += 1;
                    Tok::Minus
                }
                b'*' => {
                    lx.pos += 1;
                    Tok::Star
                }
                b'/' => {
                    lx.pos += 1;
                    Tok::Slash
                }
                b'^' => {
                    lx.pos += 1;
                    Tok::Caret
                }
                b'(' => {
                    lx.pos += 1;
                    Tok::LParen
                }
                b')' => {
                    lx.pos += 1;
                    Tok::RParen
                }
                b',' => {
                    lx.pos += 1;
                    Tok::Comma
                }
                b'0'..=b'9' | b'.' => lx.number(start)?,
                b'a'..=b'z' | b'A'..=b'Z' | b'_' => lx.ident(),
                _ => {
                    return Err(ParseDiagnostic {
                        span: (start, start + 1),
                        message: format!("unexpected character `{}`", &src[start..start + 1]),
                        severity: Severity::Error,
                    })
                }
            };
            out.push((tok, start, lx.pos));
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn take_digits(&mut self) -> usize {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        self.pos - start
    }

    fn number(&mut self, start: usize) -> Result<Tok, ParseDiagnostic> {
        let int_len = self.take_digits();
        let mut frac_digits = 0usize;
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            frac_digits = self.take_digits();
            if int_len == 0 && frac_digits == 0 {
                return Err(ParseDiagnostic {
                    span: (start, self.pos),
                    message: "malformed number".to_string(),
                    severity: Severity::Error,
                });
            }
        }
        // Optional exponent; back off if `e` is not followed by digits.
        let mut exp: i64 = 0;
        let before_exp = self.pos;
        if self.pos < self.src.len() && (self.src[self.pos] | 0x20) == b'e' {
            self.pos += 1;
            let mut sign = 1i64;
            if self.pos < self.src.len() && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-') {
                if self.src[self.pos] == b'-' {
                    sign = -1;
                }
                self.pos += 1;
            }
            let d0 = self.pos;
            if self.take_digits() == 0 {
                self.pos = before_exp;
            } else {
                let digits = core::str::from_utf8(&self.src[d0..self.pos]).unwrap();
                exp = sign
                    * digits.parse::<i64>().map_err(|_| ParseDiagnostic {
                        span: (start, self.pos),
                        message: "exponent out of range".to_string(),
                        severity: Severity::Error,
                    })?;
            }
        }
        let text = core::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let mantissa: String = text
            .chars()
            .take_while(|c| *c != 'e' && *c != 'E')
            .filter(|c| c.is_ascii_digit())
            .collect();
        let numer: BigInt = if mantissa.is_empty() {
            BigInt::zero()
        } else {
            mantissa.parse().unwrap()
        };
        let scale = exp - frac_digits as i64;
        let ten = BigInt::from(10);
        let mut value = BigRational::from_integer(numer);
        if scale > 0 {
            value *= BigRational::from_integer(ten.pow(scale as u32));
        } else if scale < 0 {
            value /= BigRational::from_integer(ten.pow((-scale) as u32));
        }
        let _ = BigRational::one();
        Ok(Tok::Num(value))
    }

    fn ident(&mut self) -> Tok {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        Tok::Ident(core::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string())
    }
}

fn func_by_name(name: &str) -> Option<(Option<Func>, usize)> {
    // `sqrt` has no Func: it normalizes to a rational power.
    Some(match name {
        "sin" => (Some(Func::Sin), 1),
        "cos" => (Some(Func::Cos), 1),
        "tan" => (Some(Func::Tan), 1),
        "asin" => (Some(Func::Asin), 1),
        "acos" => (Some(Func::Acos), 1),
        "atan" => (Some(Func::Atan), 1),
        "exp" => (Some(Func::Exp), 1),
        "log" => (Some(Func::Log), 1),
        "abs" => (Some(Func::Abs), 1),
        "atan2" => (Some(Func::Atan2), 2),
        "sqrt" => (None, 1),
        _ => return None,
    })
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    space: &'a VariableSpace,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> (usize, usize) {
        (self.toks[self.pos].1, self.toks[self.pos].2)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: String) -> ParseDiagnostic {
        ParseDiagnostic { span: self.span(), message, severity: Severity::Error }
    }

    fn expr(&mut self) -> Result<Expr, ParseDiagnostic> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    acc = Expr::add(acc, self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    acc = Expr::sub(acc, self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseDiagnostic> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    acc = Expr::mul(acc, self.unary()?);
                }
                Tok::Slash => {
                    self.bump();
                    acc = Expr::div(acc, self.unary()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseDiagnostic> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::neg(self.unary()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseDiagnostic> {
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exp = self.unary()?;
            return Ok(Expr::pow(base, exp));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseDiagnostic> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::num(Num::from_rational(v)))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.error("expected `)`".to_string()));
                }
                self.bump();
                Ok(inner)
            }
            Tok::Ident(name) => {
                let ident_span = self.span();
                self.bump();
                if *self.peek() == Tok::LParen {
                    let (func, arity) = func_by_name(&name).ok_or_else(|| ParseDiagnostic {
                        span: ident_span,
                        message: format!("unknown function `{name}`"),
                        severity: Severity::Error,
                    })?;
                    self.bump();
                    let mut args = vec![self.expr()?];
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        args.push(self.expr()?);
                    }
                    if *self.peek() != Tok::RParen {
                        return Err(self.error("expected `)`".to_string()));
                    }
                    self.bump();
                    if args.len() != arity {
                        return Err(ParseDiagnostic {
                            span: ident_span,
                            message: format!(
                                "`{name}` takes {arity} argument(s), got {}",
                                args.len()
                            ),
                            severity: Severity::Error,
                        });
                    }
                    Ok(match func {
                        Some(f) => Expr::call(f, args),
                        None => Expr::sqrt(args.into_iter().next().unwrap()),
                    })
                } else {
                    match self.space.resolve(&name) {
                        Some(sym) => Ok(Expr::sym(sym)),
                        None => Err(ParseDiagnostic {
                            span: ident_span,
                            message: format!("unknown identifier `{name}`"),
                            severity: Severity::Error,
                        }),
                    }
                }
            }
            Tok::End => Err(self.error("unexpected end of input".to_string())),
            other => Err(self.error(format!("unexpected token {other:?}"))),
        }
    }
}

/// Parses `source` against the declared variable space.
pub fn parse(source: &str, space: &VariableSpace) -> Result<Expr, Vec<ParseDiagnostic>> {
    let toks = Lexer::tokenize(source).map_err(|d| vec![d])?;
    let mut p = Parser { toks, pos: 0, space };
    let e = p.expr().map_err(|d| vec![d])?;
    if *p.peek() != Tok::End {
        return Err(vec![p.error("trailing input".to_string())]);
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplify::simplify;

    fn space1() -> VariableSpace {
        VariableSpace::new(1, &["k"]).unwrap()
    }

    #[test]
    fn kinetic_term() {
        let sp = space1();
        let e = parse("qd1^2/2", &sp).unwrap();
        let expect = Expr::div(Expr::powi(Expr::vel(0), 2), Expr::int(2));
        assert_eq!(simplify(&e), simplify(&expect));
    }

    #[test]
    fn product_with_function() {
        let sp = space1();
        let e = parse("sin(q1)*t", &sp).unwrap();
        let expect = Expr::mul(Expr::sin(Expr::coord(0)), Expr::time());
        assert_eq!(simplify(&e), simplify(&expect));
    }

    #[test]
    fn out_of_range_coordinate() {
        let sp = space1();
        let err = parse("q2", &sp).unwrap_err();
        assert!(err[0].message.contains("q2"));
        assert_eq!(err[0].span, (0, 2));
    }

    #[test]
    fn unknown_identifier_names_the_culprit() {
        let sp = space1();
        let err = parse("q1 + bogus", &sp).unwrap_err();
        assert!(err[0].message.contains("bogus"));
        assert_eq!(err[0].span, (5, 10));
    }

    #[test]
    fn malformed_syntax_has_span() {
        let sp = space1();
        let err = parse("q1 + * 2", &sp).unwrap_err();
        assert_eq!(err[0].span.0, 5);
    }

    #[test]
    fn power_is_right_associative() {
        let sp = space1();
        let e = parse("q1^2^3", &sp).unwrap();
        let expect = Expr::pow(Expr::coord(0), Expr::powi(Expr::int(2), 3));
        assert_eq!(simplify(&e), simplify(&expect));
    }

    #[test]
    fn unary_minus_in_exponent() {
        let sp = space1();
        let e = parse("q1^-1", &sp).unwrap();
        assert_eq!(simplify(&e), simplify(&Expr::powi(Expr::coord(0), -1)));
    }

    #[test]
    fn decimal_and_exponent_literals_are_exact() {
        let sp = space1();
        let e = parse("0.5", &sp).unwrap();
        assert_eq!(e, Expr::ratio(1, 2));
        let e2 = parse("1.5e-2", &sp).unwrap();
        assert_eq!(e2, Expr::ratio(3, 200));
        let e3 = parse("2e3", &sp).unwrap();
        assert_eq!(e3, Expr::int(2000));
    }

    #[test]
    fn sqrt_normalizes_to_half_power() {
        let sp = space1();
        let e = parse("sqrt(q1)", &sp).unwrap();
        assert_eq!(e, Expr::pow(Expr::coord(0), Expr::ratio(1, 2)));
    }

    #[test]
    fn atan2_arity_enforced() {
        let sp = space1();
        assert!(parse("atan2(q1)", &sp).is_err());
        assert!(parse("atan2(q1, qd1)", &sp).is_ok());
        assert!(parse("sin(q1, t)", &sp).is_err());
    }

    #[test]
    fn whitespace_is_insignificant() {
        let sp = space1();
        let a = parse("q1+qd1  * k", &sp).unwrap();
        let b = parse("q1 + qd1*k", &sp).unwrap();
        assert_eq!(simplify(&a), simplify(&b));
    }
}
