//! Named potentials used in examples and tests.

use num_rational::BigRational;

use crate::ring::{parse_expr, parse_potential, ParseError, RingElem};

pub const GOLDSTONE: &str = "-q^2/2 + q^4/4";
pub const QUARTIC: &str = "q^4/4";

/// Double well `-q²/2 + q⁴/4`.
pub fn goldstone() -> RingElem {
    parse_potential(GOLDSTONE).expect("valid potential")
}

/// Pure quartic `q⁴/4`.
pub fn quartic() -> RingElem {
    parse_potential(QUARTIC).expect("valid potential")
}

/// `q²/2 · (1 + a cos(2πq))`.
pub fn modulated_harmonic(a: &BigRational) -> RingElem {
    parse_potential(&modulated_source(a)).expect("valid potential")
}

fn modulated_source(a: impl std::fmt::Display) -> String {
    format!("q^2/2*(1 + ({a})*cos(2*pi*q))")
}

/// Resolves a named alias (`goldstone`, `quartic`, `modulated` or
/// `modulated:a=<rational>`) or parses `src` as an expression.
pub fn resolve(src: &str) -> Result<RingElem, ParseError> {
    let name = src.trim();
    match name {
        "goldstone" => return Ok(goldstone()),
        "quartic" => return Ok(quartic()),
        "modulated" => return Ok(modulated_harmonic(&BigRational::new(1.into(), 2.into()))),
        _ => {}
    }
    if let Some(a) = name.strip_prefix("modulated:a=") {
        let amp = parse_expr(a)?;
        if !amp.is_constant() {
            return Err(ParseError::Syntax {
                pos: src.find('=').map_or(0, |i| i + 1),
                msg: "modulation amplitude must be a constant".into(),
            });
        }
        return parse_potential(&modulated_source(a));
    }
    parse_potential(src)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aliases() {
        assert_eq!(resolve("goldstone").unwrap(), goldstone());
        assert_eq!(resolve(" quartic ").unwrap(), parse_potential("q^4/4").unwrap());
        assert_eq!(
            resolve("modulated:a=1/2").unwrap(),
            parse_potential("q^2/2 + q^2/4*cos(2*pi*q)").unwrap()
        );
        assert_eq!(resolve("modulated").unwrap(), resolve("modulated:a=0.5").unwrap());
        assert!(resolve("modulated:a=q").is_err());
        assert_eq!(resolve("q^2").unwrap(), parse_potential("q^2").unwrap());
    }
}
