//! The shared expression grammar.
//!
//! Integers, rational literals `p/q`, parameters and variables as
//! identifiers, `+ - * / ^` with integer exponents, parentheses. Printing
//! goes through [`RatExpr::to_grammar`]; `parse(print(e)) == e` holds
//! bit-exactly on canonical values.

use crate::error::{EngineError, Result};
use crate::poly::Q;
use crate::ratexpr::RatExpr;
use crate::vars::var;
use num::BigInt;

pub fn parse(input: &str) -> Result<RatExpr> {
    let tokens = lex(input)?;
    let mut p = Parser { tokens, pos: 0 };
    let e = p.expr()?;
    if p.pos != p.tokens.len() {
        return Err(EngineError::Parse(format!(
            "trailing input at token {} in {input:?}",
            p.pos
        )));
    }
    Ok(e)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn lex(s: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let bytes: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                out.push(Tok::Star);
                i += 1;
            }
            '/' => {
                out.push(Tok::Slash);
                i += 1;
            }
            '^' => {
                out.push(Tok::Caret);
                i += 1;
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let lit: String = bytes[start..i].iter().collect();
                out.push(Tok::Int(lit.parse().map_err(|_| {
                    EngineError::Parse(format!("bad integer {lit:?}"))
                })?));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                    i += 1;
                }
                out.push(Tok::Ident(bytes[start..i].iter().collect()));
            }
            _ => return Err(EngineError::Parse(format!("unexpected character {c:?}"))),
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
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<RatExpr> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<RatExpr> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    acc = acc.mul(&self.unary()?);
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let d = self.unary()?;
                    if d.is_zero() {
                        return Err(EngineError::Parse("division by zero".into()));
                    }
                    acc = acc.div(&d);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<RatExpr> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(self.unary()?.neg())
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<RatExpr> {
        let base = self.atom()?;
        if let Some(Tok::Caret) = self.peek() {
            self.pos += 1;
            let mut sign = 1i32;
            while let Some(Tok::Minus) = self.peek() {
                self.pos += 1;
                sign = -sign;
            }
            match self.next() {
                Some(Tok::Int(n)) => {
                    let e: i32 = n.to_string().parse().map_err(|_| {
                        EngineError::Parse(format!("exponent {n} out of range"))
                    })?;
                    if sign < 0 && base.is_zero() {
                        return Err(EngineError::Parse("zero to a negative power".into()));
                    }
                    Ok(base.pow(sign * e))
                }
                t => Err(EngineError::Parse(format!("expected integer exponent, got {t:?}"))),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<RatExpr> {
        match self.next() {
            Some(Tok::Int(n)) => Ok(RatExpr::from_q(Q::from_integer(n))),
            Some(Tok::Ident(name)) => Ok(RatExpr::var(var(&name))),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                match self.next() {
                    Some(Tok::RParen) => Ok(e),
                    t => Err(EngineError::Parse(format!("expected ')', got {t:?}"))),
                }
            }
            t => Err(EngineError::Parse(format!("unexpected token {t:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_basics() {
        let e = parse("1/2 + z^2 - 3*z").unwrap();
        let z = parse("z").unwrap();
        let expect = RatExpr::from_q(Q::new(1.into(), 2.into()))
            .add(&z.mul(&z))
            .sub(&z.mul(&RatExpr::int(3)));
        assert_eq!(e, expect);
    }

    #[test]
    fn negative_exponent() {
        let e = parse("z^-2").unwrap();
        let expect = RatExpr::one().div(&parse("z^2").unwrap());
        assert_eq!(e, expect);
    }

    #[test]
    fn print_parse_round_trip() {
        let cases = [
            "z^2 - 2*u",
            "(z^3 - 3*u*z)/(z - 1)",
            "-1/2",
            "(z1 - z2)/((z1 + z2)^2*(u - 3))",
            "0",
            "7",
        ];
        for c in cases {
            let e = parse(c).unwrap();
            let printed = e.to_grammar();
            let back = parse(&printed).unwrap();
            assert_eq!(e, back, "round trip failed for {c} -> {printed}");
            assert_eq!(printed, back.to_grammar());
        }
    }
}
