//! Text syntax for mixed polynomials.
//!
//! ```text
//! expr    = term , { ( "+" | "-" ) , term } ;
//! term    = [ "+" | "-" ] , product ;
//! product = power , { [ "*" | "/" ] , power } ;
//! power   = unary , [ "^" , natural ] ;
//! unary   = "~" , unary | atom ;
//! atom    = number | "i" | "u" | "v" | "conj" , "(" , expr , ")" | "(" , expr , ")" ;
//! number  = digit , { digit } , [ "." , digit , { digit } ] ;
//! ```
//!
//! Juxtaposition multiplies (`3i`, `2u^2`), `/` only divides by non-zero constants.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::gauss::{fmt_rational, GaussRat};
use crate::mixedpoly::{ExactPoly, Monomial, MixedPoly, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at position {position}: expected {expected}")]
    SyntaxError { position: usize, expected: String },
    #[error("the polynomial is zero")]
    EmptyPolynomial,
}

/// Parses an expression; the zero polynomial is rejected.
pub fn parse_poly(src: &str) -> Result<ExactPoly, ParseError> {
    let p = parse_poly_allow_zero(src)?;
    if p.is_zero() {
        return Err(ParseError::EmptyPolynomial);
    }
    Ok(p)
}

/// Parses an expression, accepting the zero polynomial.
pub fn parse_poly_allow_zero(src: &str) -> Result<ExactPoly, ParseError> {
    let mut p = Parser { chars: src.chars().collect(), pos: 0 };
    p.skip_ws();
    if p.at_end() {
        return Err(p.error("a term"));
    }
    let out = p.expr()?;
    p.skip_ws();
    if !p.at_end() {
        return Err(p.error("an operator or end of input"));
    }
    Ok(out)
}

/// Parses a constant such as `2`, `-1/2` or `3-4i`.
pub fn parse_coefficient(src: &str) -> Result<GaussRat, ParseError> {
    let p = parse_poly_allow_zero(src)?;
    match p.terms().len() {
        0 => Ok(GaussRat::zero()),
        1 => match p.coeff(&Monomial::ONE) {
            Some(c) => Ok(c.clone()),
            None => Err(ParseError::SyntaxError { position: 0, expected: "a constant".into() }),
        },
        _ => Err(ParseError::SyntaxError { position: 0, expected: "a constant".into() }),
    }
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn error(&self, expected: &str) -> ParseError {
        ParseError::SyntaxError { position: self.pos, expected: expected.to_string() }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.chars.len()
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("'{c}'")))
        }
    }

    fn expr(&mut self) -> Result<ExactPoly, ParseError> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                let t = self.product()?;
                acc = &acc + &t;
            } else if self.eat('-') {
                let t = self.product()?;
                acc = &acc - &t;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<ExactPoly, ParseError> {
        if self.eat('-') {
            Ok(-self.product()?)
        } else {
            self.eat('+');
            self.product()
        }
    }

    fn starts_atom(&mut self) -> bool {
        self.skip_ws();
        matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == '(' || c == '~' || c == 'u' || c == 'v' || c == 'i' || c == 'c')
    }

    fn product(&mut self) -> Result<ExactPoly, ParseError> {
        let mut acc = self.power()?;
        loop {
            if self.eat('*') {
                let rhs = self.power()?;
                acc = &acc * &rhs;
            } else if self.eat('/') {
                let at = self.pos;
                let rhs = self.power()?;
                let c = match (rhs.terms().len(), rhs.coeff(&Monomial::ONE)) {
                    (1, Some(c)) => c.clone(),
                    _ => {
                        return Err(ParseError::SyntaxError {
                            position: at,
                            expected: "a non-zero constant divisor".into(),
                        })
                    }
                };
                let inv = c.inv().expect("stored coefficients are non-zero");
                acc = acc.scale(&inv);
            } else if self.starts_atom() {
                let rhs = self.power()?;
                acc = &acc * &rhs;
            } else {
                return Ok(acc);
            }
        }
    }

    fn power(&mut self) -> Result<ExactPoly, ParseError> {
        let base = self.unary()?;
        if self.eat('^') {
            self.skip_ws();
            let at = self.pos;
            let mut n: u32 = 0;
            let mut digits = 0;
            while let Some(c) = self.peek().filter(|c| c.is_ascii_digit()) {
                n = n
                    .checked_mul(10)
                    .and_then(|n| n.checked_add(c.to_digit(10).unwrap()))
                    .ok_or_else(|| ParseError::SyntaxError { position: at, expected: "a smaller exponent".into() })?;
                digits += 1;
                self.pos += 1;
            }
            if digits == 0 || n == 0 {
                return Err(ParseError::SyntaxError { position: at, expected: "a positive integer exponent".into() });
            }
            return Ok(base.pow(n));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<ExactPoly, ParseError> {
        if self.eat('~') {
            return Ok(self.unary()?.conj());
        }
        self.atom()
    }

    fn keyword(&mut self, word: &str) -> bool {
        let w: Vec<char> = word.chars().collect();
        let end = self.pos + w.len();
        if end <= self.chars.len() && self.chars[self.pos..end] == w[..] {
            let next = self.chars.get(end).copied();
            if !matches!(next, Some(c) if c.is_ascii_alphanumeric() || c == '_') || word.len() == 1 {
                self.pos = end;
                return true;
            }
        }
        false
    }

    fn atom(&mut self) -> Result<ExactPoly, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c.is_ascii_digit() => self.number(),
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(_) if self.keyword("conj") => {
                self.expect('(')?;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e.conj())
            }
            Some('u') => {
                self.pos += 1;
                Ok(MixedPoly::var(Var::U))
            }
            Some('v') => {
                self.pos += 1;
                Ok(MixedPoly::var(Var::V))
            }
            Some('i') => {
                self.pos += 1;
                Ok(MixedPoly::constant(GaussRat::i()))
            }
            _ => Err(self.error("a number, variable, 'conj(' or '('")),
        }
    }

    fn number(&mut self) -> Result<ExactPoly, ParseError> {
        let mut digits = String::new();
        while let Some(c) = self.peek().filter(|c| c.is_ascii_digit()) {
            digits.push(c);
            self.pos += 1;
        }
        let mut value = BigRational::from_integer(digits.parse::<BigInt>().expect("digits"));
        if self.peek() == Some('.') {
            self.pos += 1;
            let mut frac = String::new();
            while let Some(c) = self.peek().filter(|c| c.is_ascii_digit()) {
                frac.push(c);
                self.pos += 1;
            }
            if frac.is_empty() {
                return Err(self.error("a digit after '.'"));
            }
            let den = num_traits::pow(BigInt::from(10), frac.len());
            value += BigRational::new(frac.parse::<BigInt>().expect("digits"), den);
        }
        Ok(MixedPoly::constant(GaussRat::real(value)))
    }
}

fn monomial_text(m: &Monomial) -> String {
    let mut parts = Vec::new();
    for (var, name) in [(Var::U, "u"), (Var::Ubar, "conj(u)"), (Var::V, "v"), (Var::Vbar, "conj(v)")] {
        match m.exp(var) {
            0 => {}
            1 => parts.push(name.to_string()),
            e => parts.push(format!("{name}^{e}")),
        }
    }
    parts.join("*")
}

/// Canonical text: terms in decreasing `(u, ū, v, v̄)` exponent order, only `conj(...)`.
pub fn format_poly(p: &ExactPoly) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (idx, (m, c)) in p.terms().iter().rev().enumerate() {
        let mono = monomial_text(m);
        let (negative, body) = if c.is_real() || c.re.is_zero() {
            let neg = if c.is_real() { c.re.is_negative() } else { c.im.is_negative() };
            let mag = if neg { -c.clone() } else { c.clone() };
            let text = if mag.is_real() {
                if mag.re.is_one() && !mono.is_empty() {
                    String::new()
                } else {
                    fmt_rational(&mag.re)
                }
            } else if mag.im.is_one() {
                "i".to_string()
            } else {
                format!("{}i", fmt_rational(&mag.im))
            };
            (neg, text)
        } else {
            (false, format!("({c})"))
        };
        let body = match (body.is_empty(), mono.is_empty()) {
            (true, _) => mono,
            (false, true) => body,
            (false, false) => format!("{body}*{mono}"),
        };
        match (idx, negative) {
            (0, false) => out.push_str(&body),
            (0, true) => {
                out.push('-');
                out.push_str(&body);
            }
            (_, false) => {
                out.push_str(" + ");
                out.push_str(&body);
            }
            (_, true) => {
                out.push_str(" - ");
                out.push_str(&body);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const EX21: &str = "u^8 + v^3*u^2 + conj(v)^5*u - 2*(v^7 + conj(v)^7)";

    #[test]
    fn parses_the_running_example() {
        let p = parse_poly(EX21).unwrap();
        let support = p.support();
        assert_eq!(support, vec![(0, 7), (1, 5), (2, 3), (8, 0)]);
        assert_eq!(p.coeff(&Monomial::new(0, 0, 7, 0)), Some(&GaussRat::int(-2)));
        assert_eq!(p.coeff(&Monomial::new(0, 0, 0, 7)), Some(&GaussRat::int(-2)));
        assert_eq!(p.len(), 5);
    }

    #[test]
    fn zero_is_rejected() {
        assert_eq!(parse_poly("0"), Err(ParseError::EmptyPolynomial));
        assert_eq!(parse_poly("u - u"), Err(ParseError::EmptyPolynomial));
    }

    #[test]
    fn single_mixed_term() {
        let p = parse_poly("u*conj(u)").unwrap();
        assert_eq!(p.terms().len(), 1);
        assert_eq!(p.coeff(&Monomial::new(1, 1, 0, 0)), Some(&GaussRat::int(1)));
        assert_eq!(parse_poly("u*~u").unwrap(), p);
    }

    #[test]
    fn canonical_text() {
        assert_eq!(format_poly(&parse_poly("-v^3 + u^2").unwrap()), "u^2 - v^3");
        let c = parse_poly("(2+3i)*u").unwrap();
        assert_eq!(format_poly(&c), "(2+3i)*u");
        assert_eq!(format_poly(&parse_poly("2+3i").unwrap()), "(2+3i)");
        let p = parse_poly(EX21).unwrap();
        assert_eq!(parse_poly(&format_poly(&p)).unwrap(), p);
    }

    #[test]
    fn literals() {
        assert_eq!(parse_coefficient("3/4").unwrap(), GaussRat::ratio(3, 4));
        assert_eq!(parse_coefficient("0.25").unwrap(), GaussRat::ratio(1, 4));
        let z = parse_coefficient("1/2-3/4i").unwrap();
        assert_eq!(z, GaussRat::new(BigRational::new(1.into(), 2.into()), BigRational::new((-3).into(), 4.into())));
        assert_eq!(parse_coefficient("-i").unwrap(), -GaussRat::i());
    }

    #[test]
    fn errors_carry_positions() {
        match parse_poly("u^2 + * v") {
            Err(ParseError::SyntaxError { position, .. }) => assert_eq!(position, 6),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_poly("u^0"), Err(ParseError::SyntaxError { position: 2, .. })));
        assert!(matches!(parse_poly("u / v"), Err(ParseError::SyntaxError { .. })));
        assert!(matches!(parse_poly("(u"), Err(ParseError::SyntaxError { position: 2, .. })));
        assert!(matches!(parse_poly("w"), Err(ParseError::SyntaxError { position: 0, .. })));
        assert!(matches!(parse_poly(""), Err(ParseError::SyntaxError { position: 0, .. })));
    }

    #[test]
    fn conjugation_of_groups() {
        let a = parse_poly("conj((1+i)*u*v^2)").unwrap();
        let b = parse_poly("(1-i)*conj(u)*conj(v)^2").unwrap();
        assert_eq!(a, b);
    }
}
