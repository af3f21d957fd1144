//! Parser for the canonical text encoding of polynomials and scalars.
//!
//! Accepts sums/products/quotients of integers, `T`, `w` (the generator of
//! F_q over F_p), parentheses and non-negative integer powers. The printed
//! form of every `Poly` and `Scalar` parses back to the same value.

use std::sync::Arc;

use super::field::Field;
use super::poly::Poly;
use super::scalar::Scalar;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(u64),
    T,
    W,
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
    let b = s.as_bytes();
    let mut i = 0;
    while i < b.len() {
        let ch = b[i] as char;
        match ch {
            ' ' | '\t' => {}
            '0'..='9' => {
                let start = i;
                while i + 1 < b.len() && b[i + 1].is_ascii_digit() {
                    i += 1;
                }
                let n = s[start..=i].parse::<u64>().map_err(|e| Error::Parse(e.to_string()))?;
                out.push(Tok::Int(n));
            }
            'T' | 't' => out.push(Tok::T),
            'w' => out.push(Tok::W),
            '+' => out.push(Tok::Plus),
            '-' => out.push(Tok::Minus),
            '*' => out.push(Tok::Star),
            '/' => out.push(Tok::Slash),
            '^' => out.push(Tok::Caret),
            '(' => out.push(Tok::LParen),
            ')' => out.push(Tok::RParen),
            _ => return Err(Error::Parse(format!("unexpected character {ch:?} in {s:?}"))),
        }
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    field: &'a Arc<Field>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Scalar> {
        let mut acc = self.term()?;
        while let Some(t) = self.peek() {
            match t {
                Tok::Plus => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                Tok::Minus => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Scalar> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    acc = &acc * &self.unary()?;
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    acc = acc.div(&self.unary()?)?;
                }
                Some(Tok::LParen) | Some(Tok::T) | Some(Tok::W) => {
                    acc = &acc * &self.unary()?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Scalar> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            return Ok(-&self.unary()?);
        }
        let base = self.atom()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            match self.next() {
                Some(Tok::Int(e)) => return base.pow(e as i64),
                other => return Err(Error::Parse(format!("expected exponent, got {other:?}"))),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Scalar> {
        let f = self.field;
        match self.next() {
            Some(Tok::Int(n)) => Ok(Scalar::from_int(f, (n % f.p() as u64) as i64)),
            Some(Tok::T) => Ok(Scalar::t(f)),
            Some(Tok::W) => {
                if f.is_prime_field() {
                    return Err(Error::Parse("w is only meaningful when r > 1".into()));
                }
                Ok(Scalar::from_fq(f, f.generator_w()))
            }
            Some(Tok::LParen) => {
                let v = self.expr()?;
                match self.next() {
                    Some(Tok::RParen) => Ok(v),
                    other => Err(Error::Parse(format!("expected ')', got {other:?}"))),
                }
            }
            other => Err(Error::Parse(format!("unexpected token {other:?}"))),
        }
    }
}

pub fn parse_scalar(field: &Arc<Field>, s: &str) -> Result<Scalar> {
    let toks = lex(s)?;
    if toks.is_empty() {
        return Err(Error::Parse("empty expression".into()));
    }
    let mut p = Parser { toks, pos: 0, field };
    let v = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(Error::Parse(format!("trailing input in {s:?}")));
    }
    Ok(v)
}

pub fn parse_poly(field: &Arc<Field>, s: &str) -> Result<Poly> {
    let v = parse_scalar(field, s)?;
    match v.as_poly() {
        Some(p) => Ok(p.clone()),
        None => Err(Error::Parse(format!("{s:?} is not a polynomial"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::field::FieldSpec;

    #[test]
    fn round_trip_samples() {
        let f = Field::prime(3).unwrap();
        for s in ["T^3+2*T+1", "0", "1/T", "(T+1)/T^3", "2/(T^2+1)", "T^9+2*T^3"] {
            let x = parse_scalar(&f, s).unwrap();
            assert_eq!(x.to_text(), s);
        }
        assert_eq!(parse_poly(&f, "T - 1").unwrap().to_text(), "T+2");
        assert_eq!(parse_poly(&f, "(T+1)^2").unwrap().to_text(), "T^2+2*T+1");
        assert!(parse_poly(&f, "1/T").is_err());
    }

    #[test]
    fn round_trip_f9() {
        let f = Field::new(FieldSpec::new(3, 2)).unwrap();
        let x = parse_scalar(&f, "(w+1)*T^2+w/(T+2*w)").unwrap();
        assert_eq!(parse_scalar(&f, &x.to_text()).unwrap(), x);
    }
}
