//! Polynomial field expressions: `x0..x{4n-1}`, rational and decimal
//! constants, `+ - * / ^` and parentheses. Division is by constants only.

use std::fmt;

use num_rational::Rational64;
use num_traits::{One, Zero};
use qpot::field::Polynomial;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// Byte offset into the expression.
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at offset {}: {}", self.offset, self.message)
    }
}

impl std::error::Error for ParseError {}

/// Parse `expr` as a polynomial on `H^n`.
pub fn parse_field(expr: &str, n: usize) -> Result<Polynomial, ParseError> {
    if n == 0 {
        return Err(ParseError {
            offset: 0,
            message: "dimension must be at least 1".into(),
        });
    }
    let mut p = Parser { src: expr.as_bytes(), pos: 0, n };
    let out = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error(format!("unexpected {:?}", p.src[p.pos] as char)));
    }
    Ok(out)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    n: usize,
}

impl Parser<'_> {
    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn arith(&self, at: usize, r: qpot::Result<Polynomial>) -> Result<Polynomial, ParseError> {
        r.map_err(|e| ParseError {
            offset: at,
            message: e.to_string(),
        })
    }

    fn expr(&mut self) -> Result<Polynomial, ParseError> {
        let mut acc = self.term()?;
        while let Some(op @ (b'+' | b'-')) = self.peek() {
            let at = self.pos;
            self.pos += 1;
            let rhs = self.term()?;
            acc = if op == b'+' {
                self.arith(at, acc.checked_add(&rhs))?
            } else {
                self.arith(at, acc.checked_sub(&rhs))?
            };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Polynomial, ParseError> {
        let mut acc = self.unary()?;
        while let Some(op @ (b'*' | b'/')) = self.peek() {
            let at = self.pos;
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            let rhs = self.unary()?;
            acc = if op == b'*' {
                self.arith(at, acc.checked_mul(&rhs))?
            } else {
                let c = constant_value(&rhs).ok_or_else(|| ParseError {
                    offset: start,
                    message: "division by a non-constant".into(),
                })?;
                if c.is_zero() {
                    return Err(ParseError {
                        offset: start,
                        message: "division by zero".into(),
                    });
                }
                self.arith(at, acc.scaled(c.recip()))?
            };
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Polynomial, ParseError> {
        match self.peek() {
            Some(b'-') => {
                let at = self.pos;
                self.pos += 1;
                let v = self.unary()?;
                self.arith(at, v.scaled(-Rational64::one()))
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Polynomial, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            let at = self.pos;
            self.pos += 1;
            self.skip_ws();
            let k = self.integer()?;
            let k = u32::try_from(k).map_err(|_| ParseError {
                offset: at,
                message: "exponent too large".into(),
            })?;
            return self.arith(at, base.checked_pow(k));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<u64, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected an integer"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| ParseError {
                offset: start,
                message: "integer out of range".into(),
            })
    }

    fn atom(&mut self) -> Result<Polynomial, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(b'x') => {
                let at = self.pos;
                self.pos += 1;
                let k = self.integer()?;
                let vars = 4 * self.n as u64;
                if k >= vars {
                    return Err(ParseError {
                        offset: at,
                        message: format!("variable x{k} out of range (n = {} has x0..x{})", self.n, vars - 1),
                    });
                }
                self.arith(at, Polynomial::var(self.n, k as usize))
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let c = self.number()?;
                Ok(Polynomial::constant(self.n, c))
            }
            Some(c) => Err(self.error(format!("unexpected {:?}", c as char))),
            None => Err(self.error("unexpected end of expression")),
        }
    }

    /// `123`, `1.25` or `.5`, read exactly.
    fn number(&mut self) -> Result<Rational64, ParseError> {
        let start = self.pos;
        let mut digits: i64 = 0;
        let mut scale: i64 = 1;
        let mut seen_dot = false;
        let mut any = false;
        while let Some(&c) = self.src.get(self.pos) {
            if c == b'.' && !seen_dot {
                seen_dot = true;
            } else if c.is_ascii_digit() {
                any = true;
                digits = digits
                    .checked_mul(10)
                    .and_then(|d| d.checked_add((c - b'0') as i64))
                    .ok_or_else(|| self.error("constant has too many digits"))?;
                if seen_dot {
                    scale = scale
                        .checked_mul(10)
                        .ok_or_else(|| self.error("constant has too many digits"))?;
                }
            } else {
                break;
            }
            self.pos += 1;
        }
        if !any {
            return Err(ParseError {
                offset: start,
                message: "malformed number".into(),
            });
        }
        Ok(Rational64::new(digits, scale))
    }
}

fn constant_value(p: &Polynomial) -> Option<Rational64> {
    let mut value = Rational64::zero();
    for (e, c) in p.terms() {
        if e.iter().any(|&k| k > 0) {
            return None;
        }
        value += *c;
    }
    Some(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use qpot::field::{norm_squared, ScalarField};

    #[test]
    fn norm_squared_parses() {
        let p = parse_field("x0^2+x1^2+x2^2+x3^2", 1).unwrap();
        assert_eq!(p, norm_squared(1));
    }

    #[test]
    fn precedence_and_rationals() {
        let p = parse_field("1/2*x0^2 - 0.25*(x1 + 2)*x1", 1).unwrap();
        let x = [2.0, 1.0, 0.0, 0.0];
        assert_eq!(p.eval(&x), 0.5 * 4.0 - 0.25 * 3.0);
        assert_eq!(parse_field("-x0^2", 1).unwrap().eval(&x), -4.0);
        assert_eq!(parse_field("2^3", 1).unwrap().eval(&x), 8.0);
    }

    #[test]
    fn errors_carry_offsets() {
        assert_eq!(parse_field("x0^", 1).unwrap_err().offset, 3);
        assert_eq!(parse_field("x0 + x4", 1).unwrap_err().offset, 5);
        assert!(parse_field("x0 + x4", 2).is_ok());
        assert_eq!(parse_field("(x0", 1).unwrap_err().offset, 3);
        assert_eq!(parse_field("x0 / x1", 1).unwrap_err().offset, 5);
        assert_eq!(parse_field("x0 x1", 1).unwrap_err().offset, 3);
        assert!(parse_field("1/0", 1).is_err());
        assert!(parse_field("", 1).is_err());
    }
}
