//! Recursive-descent parser for the ASCII polynomial syntax:
//! integers, variables `x<index>`, `+ - * ^` and parentheses.

use num_bigint::BigInt;
use num_traits::One;

use super::{Monomial, PolyError, Polynomial};

const MAX_EXPONENT: u32 = 4096;

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

/// Parses text such as `2*x0^2 + 2*x1^2 - 1`.
pub fn parse_polynomial(text: &str) -> Result<Polynomial, PolyError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    p.skip_ws();
    if p.peek().is_none() {
        return Err(p.error("empty input"));
    }
    let out = p.expr()?;
    p.skip_ws();
    if p.peek().is_some() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(out)
}

impl<'a> Parser<'a> {
    fn error(&self, msg: &str) -> PolyError {
        PolyError::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Polynomial, PolyError> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc = &acc + &self.term()?;
            } else if self.eat(b'-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial, PolyError> {
        let mut acc = self.unary()?;
        while self.eat(b'*') {
            acc = &acc * &self.unary()?;
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Polynomial, PolyError> {
        if self.eat(b'-') {
            return Ok(-self.unary()?);
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Polynomial, PolyError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            self.skip_ws();
            let start = self.pos;
            let digits = self.digits();
            let exp: u32 = digits
                .parse()
                .map_err(|_| PolyError::Parse {
                    pos: start,
                    msg: "expected exponent".into(),
                })?;
            if exp > MAX_EXPONENT {
                return Err(PolyError::Parse {
                    pos: start,
                    msg: format!("exponent above {MAX_EXPONENT}"),
                });
            }
            return Ok(base.pow(exp));
        }
        Ok(base)
    }

    fn digits(&mut self) -> String {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn atom(&mut self) -> Result<Polynomial, PolyError> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(inner)
            }
            Some(b'x') | Some(b'X') => {
                self.pos += 1;
                let start = self.pos;
                let digits = self.digits();
                let id: usize = digits.parse().map_err(|_| PolyError::Parse {
                    pos: start,
                    msg: "expected variable index after 'x'".into(),
                })?;
                Ok(Polynomial::from_terms([(Monomial::var(id), BigInt::one())]))
            }
            Some(c) if c.is_ascii_digit() => {
                let digits = self.digits();
                let n: BigInt = digits.parse().expect("ascii digits");
                Ok(Polynomial::constant(n))
            }
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }
}
