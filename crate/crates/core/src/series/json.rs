//! JSON document for a [`WignerSeries`].
//!
//! Rationals are written as `"p/q"` (or `"p"`) strings in lowest terms, each
//! paired with its power of π. Loading rejects anything that is not already in
//! canonical form, so `to_json(from_json(s)) == s` for every accepted `s`.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::{Cell, Convention, SeriesError, SeriesTerm, WignerSeries};
use crate::ring::{fmt_rational, parse_potential, Coefficient, Monomial, RingElem, Trig};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeriesDoc {
    potential: String,
    order: usize,
    convention: Convention,
    x_ref: String,
    terms: Vec<Vec<CellDoc>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CellDoc {
    m: u32,
    j: u32,
    ringelem: Vec<MonomialDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MonomialDoc {
    xpow: u32,
    trig: Trig,
    wavenumber: Option<Vec<PiTermDoc>>,
    coefficient: Vec<PiTermDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PiTermDoc {
    pi: i32,
    r: String,
}

fn coefficient_doc(c: &Coefficient) -> Vec<PiTermDoc> {
    c.terms()
        .map(|(e, r)| PiTermDoc {
            pi: e,
            r: fmt_rational(r),
        })
        .collect()
}

fn invalid(msg: impl Into<String>) -> SeriesError {
    SeriesError::Invalid(msg.into())
}

fn parse_rational(text: &str) -> Result<BigRational, SeriesError> {
    let r: BigRational = text
        .parse()
        .map_err(|_| invalid(format!("bad rational '{text}'")))?;
    if fmt_rational(&r) != text {
        return Err(invalid(format!("rational '{text}' is not in lowest terms")));
    }
    Ok(r)
}

fn coefficient_from_doc(doc: &[PiTermDoc]) -> Result<Coefficient, SeriesError> {
    let mut prev = None;
    let mut pairs = Vec::with_capacity(doc.len());
    for t in doc {
        if prev.is_some_and(|p| p >= t.pi) {
            return Err(invalid("pi exponents must be strictly increasing"));
        }
        prev = Some(t.pi);
        let r = parse_rational(&t.r)?;
        if r == BigRational::default() {
            return Err(invalid("zero rational stored in coefficient"));
        }
        pairs.push((t.pi, r));
    }
    Ok(Coefficient::from_terms(pairs))
}

fn ring_doc(e: &RingElem) -> Vec<MonomialDoc> {
    e.terms()
        .map(|(m, c)| MonomialDoc {
            xpow: m.xpow(),
            trig: m.trig(),
            wavenumber: m.wavenumber().map(coefficient_doc),
            coefficient: coefficient_doc(c),
        })
        .collect()
}

fn ring_from_doc(doc: &[MonomialDoc]) -> Result<RingElem, SeriesError> {
    let mut out = RingElem::zero();
    let mut prev: Option<Monomial> = None;
    for md in doc {
        let k = md.wavenumber.as_deref().map(coefficient_from_doc).transpose()?;
        let canonical = Monomial::canonical(md.xpow, md.trig, k.clone());
        let m = match canonical {
            Some((1, m)) if m.trig() == md.trig && m.wavenumber() == k.as_ref() => m,
            _ => return Err(invalid("non-canonical monomial")),
        };
        if md.trig == Trig::None && md.wavenumber.is_some() {
            return Err(invalid("wavenumber on a plain power"));
        }
        if prev.as_ref().is_some_and(|p| p >= &m) {
            return Err(invalid("monomials out of order"));
        }
        let c = coefficient_from_doc(&md.coefficient)?;
        if c.is_zero() {
            return Err(invalid("zero coefficient"));
        }
        prev = Some(m.clone());
        out = &out + &RingElem::term(c, m);
    }
    Ok(out)
}

pub(super) fn to_json(s: &WignerSeries) -> String {
    let doc = SeriesDoc {
        potential: s.potential.to_string(),
        order: s.order(),
        convention: s.convention,
        x_ref: fmt_rational(&s.x_ref),
        terms: s
            .terms
            .iter()
            .map(|t| {
                t.cells()
                    .map(|(cell, c)| CellDoc {
                        m: cell.m,
                        j: cell.j,
                        ringelem: ring_doc(c),
                    })
                    .collect()
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("series document serializes")
}

pub(super) fn from_json(text: &str) -> Result<WignerSeries, SeriesError> {
    let doc: SeriesDoc = serde_json::from_str(text)?;
    let potential = parse_potential(&doc.potential)?;
    if potential.to_string() != doc.potential {
        return Err(invalid("potential is not in canonical printed form"));
    }
    if doc.terms.len() != doc.order + 1 {
        return Err(invalid(format!(
            "order {} but {} terms",
            doc.order,
            doc.terms.len()
        )));
    }
    let mut terms = Vec::with_capacity(doc.terms.len());
    for cells in &doc.terms {
        let mut t = SeriesTerm::zero();
        let mut prev = None;
        for cd in cells {
            let cell = Cell::new(cd.m, cd.j);
            if prev.is_some_and(|p| p >= cell) {
                return Err(invalid("cells out of order"));
            }
            prev = Some(cell);
            let c = ring_from_doc(&cd.ringelem)?;
            if c.is_zero() {
                return Err(invalid("empty cell"));
            }
            t.add_cell(cell, c);
        }
        terms.push(t);
    }
    Ok(WignerSeries {
        potential,
        convention: doc.convention,
        x_ref: parse_rational(&doc.x_ref)?,
        terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{build_series, BuildOptions};

    #[test]
    fn round_trip_is_bit_exact() {
        for (src, order) in [("-q^2/2 + q^4/4", 3), ("q^2/2*(1 + 1/2*cos(2*pi*q))", 2), ("0", 2)] {
            let v = parse_potential(src).unwrap();
            for conv in [Convention::Paper, Convention::Uniform] {
                let s = build_series(&v, order, &BuildOptions::with_convention(conv)).unwrap();
                let text = s.to_json();
                let back = WignerSeries::from_json(&text).unwrap();
                assert_eq!(back, s);
                assert_eq!(back.to_json(), text);
            }
        }
    }

    #[test]
    fn rejects_non_canonical_documents() {
        let v = parse_potential("-q^2/2 + q^4/4").unwrap();
        let text = build_series(&v, 1, &BuildOptions::default()).unwrap().to_json();
        let bad_rational = text.replacen("\"r\": \"1/8\"", "\"r\": \"2/16\"", 1);
        assert_ne!(bad_rational, text);
        assert!(WignerSeries::from_json(&bad_rational).is_err());
        let zero = text.replacen("\"r\": \"1/8\"", "\"r\": \"0\"", 1);
        assert!(WignerSeries::from_json(&zero).is_err());
        let wrong_order = text.replacen("\"order\": 1", "\"order\": 2", 1);
        assert!(WignerSeries::from_json(&wrong_order).is_err());
    }
}
