//! Recursive-descent parser for potential expressions.
//!
//! ```text
//! expr   := term (("+"|"-") term)*
//! term   := factor (("*"|"/") factor)*
//! factor := "-" factor | base ("^" uint)?
//! base   := number | "pi" | "q" | "sin(" expr ")" | "cos(" expr ")" | "(" expr ")"
//! ```
//!
//! Numbers are integers or decimals and are read exactly. Trig arguments must
//! reduce to `c·q`; divisors must be invertible constants.

use num_bigint::BigInt;
use num_rational::BigRational;
use thiserror::Error;

use super::{Coefficient, RingElem, Trig};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("nonlinear trig argument at {pos}")]
    NonlinearTrigArgument { pos: usize },
    #[error("division by non-constant at {pos}")]
    DivisionByNonConstant { pos: usize },
    #[error("division by zero at {pos}")]
    DivisionByZero { pos: usize },
    #[error("division by a constant with no inverse in the coefficient ring at {pos}")]
    NonInvertibleDivisor { pos: usize },
    #[error("negative exponent at {pos}")]
    NegativeExponent { pos: usize },
    #[error("incommensurate wavenumbers: all trig arguments must share one power of pi")]
    IncommensurateWavenumbers,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Sym(char),
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            out.push((start, Tok::Num(parse_decimal(&src[start..i], start)?)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else if "+-*/^()".contains(c) {
            out.push((i, Tok::Sym(c)));
            i += 1;
        } else {
            return Err(ParseError::Syntax {
                pos: i,
                msg: format!("unexpected character '{c}'"),
            });
        }
    }
    Ok(out)
}

fn parse_decimal(text: &str, pos: usize) -> Result<BigRational, ParseError> {
    let bad = || ParseError::Syntax {
        pos,
        msg: format!("malformed number '{text}'"),
    };
    let (int, frac) = match text.split_once('.') {
        Some((a, b)) => (a, b),
        None => (text, ""),
    };
    if (int.is_empty() && frac.is_empty()) || frac.contains('.') {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let numer: BigInt = digits.parse().map_err(|_| bad())?;
    let denom = num_traits::pow(BigInt::from(10), frac.len());
    Ok(BigRational::new(numer, denom))
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat_sym(c) {
            Ok(())
        } else {
            Err(ParseError::Syntax {
                pos: self.offset(),
                msg: format!("expected '{c}'"),
            })
        }
    }

    fn expr(&mut self) -> Result<RingElem, ParseError> {
        let mut acc = self.term()?;
        loop {
            if self.eat_sym('+') {
                acc = &acc + &self.term()?;
            } else if self.eat_sym('-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<RingElem, ParseError> {
        let mut acc = self.factor()?;
        loop {
            if self.eat_sym('*') {
                acc = &acc * &self.factor()?;
            } else if self.eat_sym('/') {
                let at = self.offset();
                let d = self.factor()?;
                if !d.is_constant() {
                    return Err(ParseError::DivisionByNonConstant { pos: at });
                }
                let c = d.constant_part();
                if c.is_zero() {
                    return Err(ParseError::DivisionByZero { pos: at });
                }
                let inv = c
                    .inverse()
                    .ok_or(ParseError::NonInvertibleDivisor { pos: at })?;
                acc = acc.scale(&inv);
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<RingElem, ParseError> {
        if self.eat_sym('-') {
            return Ok(-self.factor()?);
        }
        let base = self.base()?;
        if self.eat_sym('^') {
            let at = self.offset();
            match self.peek().cloned() {
                Some(Tok::Sym('-')) => return Err(ParseError::NegativeExponent { pos: at }),
                Some(Tok::Num(n)) if n.is_integer() => {
                    self.pos += 1;
                    let exp: u32 = n.to_integer().try_into().map_err(|_| ParseError::Syntax {
                        pos: at,
                        msg: "exponent too large".into(),
                    })?;
                    return Ok(base.pow(exp));
                }
                _ => {
                    return Err(ParseError::Syntax {
                        pos: at,
                        msg: "expected a nonnegative integer exponent".into(),
                    })
                }
            }
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<RingElem, ParseError> {
        let at = self.offset();
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(RingElem::constant(Coefficient::rational(n)))
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_sym(')')?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    "pi" => Ok(RingElem::constant(Coefficient::pi())),
                    "q" => Ok(RingElem::x_pow(1)),
                    "sin" | "cos" => {
                        self.expect_sym('(')?;
                        let arg_at = self.offset();
                        let arg = self.expr()?;
                        self.expect_sym(')')?;
                        let k = linear_wavenumber(&arg)
                            .ok_or(ParseError::NonlinearTrigArgument { pos: arg_at })?;
                        let trig = if name == "sin" { Trig::Sin } else { Trig::Cos };
                        Ok(RingElem::basis(Coefficient::one(), 0, trig, Some(k)))
                    }
                    other => Err(ParseError::Syntax {
                        pos: at,
                        msg: format!("unknown identifier '{other}'"),
                    }),
                }
            }
            Some(Tok::Sym(c)) => Err(ParseError::Syntax {
                pos: at,
                msg: format!("unexpected '{c}'"),
            }),
            None => Err(ParseError::Syntax {
                pos: at,
                msg: "unexpected end of input".into(),
            }),
        }
    }
}

/// `Some(c)` if `e == c·q` (including `e == 0`).
fn linear_wavenumber(e: &RingElem) -> Option<Coefficient> {
    if e.is_zero() {
        return Some(Coefficient::zero());
    }
    let mut it = e.terms();
    let (m, c) = it.next()?;
    if it.next().is_some() || m.xpow() != 1 || m.trig() != Trig::None {
        return None;
    }
    Some(c.clone())
}

/// Parses an expression without checking wavenumber commensurability.
pub fn parse_expr(text: &str) -> Result<RingElem, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(ParseError::Syntax {
            pos: p.offset(),
            msg: "trailing input".into(),
        });
    }
    Ok(e)
}

/// Parses a potential `V(q)` into canonical ring form.
///
/// All wavenumbers must be single `r·π^e` terms sharing the same `e`, so that
/// every ring element generated from the potential stays integrable.
pub fn parse_potential(text: &str) -> Result<RingElem, ParseError> {
    let e = parse_expr(text)?;
    check_commensurate(&e)?;
    Ok(e)
}

pub(crate) fn check_commensurate(e: &RingElem) -> Result<(), ParseError> {
    let mut pi_exp = None;
    for k in e.wavenumbers() {
        let (_, exp) = k.as_monomial().ok_or(ParseError::IncommensurateWavenumbers)?;
        match pi_exp {
            None => pi_exp = Some(exp),
            Some(prev) if prev != exp => return Err(ParseError::IncommensurateWavenumbers),
            _ => {}
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn goldstone() {
        let v = parse_potential("-q^2/2 + q^4/4").unwrap();
        assert_eq!(v, RingElem::polynomial([(2, r(-1, 2)), (4, r(1, 4))]));
    }

    #[test]
    fn zero() {
        assert!(parse_potential("0").unwrap().is_zero());
    }

    #[test]
    fn modulated_harmonic() {
        let v = parse_potential("q^2/2*(1 + 1/2*cos(2*pi*q))").unwrap();
        let two_pi = Coefficient::pi_term(r(2, 1), 1);
        let expected = &RingElem::polynomial([(2, r(1, 2))])
            + &RingElem::basis(Coefficient::ratio(1, 4), 2, Trig::Cos, Some(two_pi.clone()));
        assert_eq!(v, expected);
        let (m, _) = v.terms().find(|(m, _)| m.trig() == Trig::Cos).unwrap();
        assert_eq!(m.wavenumber(), Some(&two_pi));
    }

    #[test]
    fn decimals_are_exact() {
        assert_eq!(
            parse_potential("0.25*q").unwrap(),
            RingElem::polynomial([(1, r(1, 4))])
        );
    }

    #[test]
    fn error_kinds() {
        assert!(matches!(
            parse_potential("sin(q^2)"),
            Err(ParseError::NonlinearTrigArgument { .. })
        ));
        assert!(matches!(
            parse_potential("cos(q + 1)"),
            Err(ParseError::NonlinearTrigArgument { .. })
        ));
        assert!(matches!(
            parse_potential("1/q"),
            Err(ParseError::DivisionByNonConstant { pos: 2 })
        ));
        assert!(matches!(
            parse_potential("q^-2"),
            Err(ParseError::NegativeExponent { .. })
        ));
        assert!(matches!(
            parse_potential("q/0"),
            Err(ParseError::DivisionByZero { .. })
        ));
        assert!(matches!(
            parse_potential("q + * 2"),
            Err(ParseError::Syntax { pos: 4, .. })
        ));
        assert!(matches!(parse_potential("(q"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse_potential("x"), Err(ParseError::Syntax { pos: 0, .. })));
        assert!(matches!(
            parse_potential("cos(q) + cos(pi*q)"),
            Err(ParseError::IncommensurateWavenumbers)
        ));
    }

    #[test]
    fn unary_minus_binds_below_power() {
        assert_eq!(parse_potential("-q^2").unwrap(), -RingElem::x_pow(2));
        assert_eq!(parse_potential("(-q)^2").unwrap(), RingElem::x_pow(2));
    }

    #[test]
    fn trig_powers_reduce() {
        let e = parse_potential("sin(q)^2 + cos(q)^2").unwrap();
        assert_eq!(e, RingElem::one());
    }

    #[test]
    fn printing_round_trips() {
        for src in [
            "-q^2/2 + q^4/4",
            "q^2/2*(1 + 1/2*cos(2*pi*q))",
            "3/7*q^3*sin(q/pi^2) - pi^3*q",
            "(1 + pi)*q^5*cos(3/pi^2*q)",
            "0",
        ] {
            let e = parse_expr(src).unwrap();
            let shown = e.to_string();
            assert_eq!(parse_expr(&shown).unwrap(), e, "{src} -> {shown}");
        }
    }
}
