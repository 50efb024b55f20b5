use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact finite sum `Σ r_e · π^e` with rational `r_e` and integer `e`.
///
/// The empty map is zero; no stored rational is zero. `BigRational` keeps
/// every entry in lowest terms with a positive denominator.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coefficient {
    terms: BTreeMap<i32, BigRational>,
}

impl Coefficient {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::rational(BigRational::one())
    }

    pub fn rational(r: BigRational) -> Self {
        Self::pi_term(r, 0)
    }

    pub fn integer(n: i64) -> Self {
        Self::rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Self::rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    /// `r · π^e`.
    pub fn pi_term(r: BigRational, e: i32) -> Self {
        let mut terms = BTreeMap::new();
        if !r.is_zero() {
            terms.insert(e, r);
        }
        Self { terms }
    }

    pub fn pi() -> Self {
        Self::pi_term(BigRational::one(), 1)
    }

    /// Builds from `(π-exponent, rational)` pairs, merging duplicates.
    pub fn from_terms<I: IntoIterator<Item = (i32, BigRational)>>(it: I) -> Self {
        let mut out = Self::zero();
        for (e, r) in it {
            out.add_term(e, r);
        }
        out
    }

    fn add_term(&mut self, e: i32, r: BigRational) {
        if r.is_zero() {
            return;
        }
        let slot = self.terms.entry(e).or_insert_with(BigRational::zero);
        *slot += r;
        if slot.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms.get(&0).is_some_and(|r| r.is_one())
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, &BigRational)> + '_ {
        self.terms.iter().map(|(e, r)| (*e, r))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `Some((r, e))` when the coefficient is a single `r · π^e`.
    pub fn as_monomial(&self) -> Option<(&BigRational, i32)> {
        if self.terms.len() == 1 {
            self.terms.iter().next().map(|(e, r)| (r, *e))
        } else {
            None
        }
    }

    /// The rational value when no π-power other than `π^0` appears.
    pub fn as_rational(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => self.terms.get(&0).cloned(),
            _ => None,
        }
    }

    /// Sign of the term with the largest π-exponent; 0 for zero.
    pub fn signum(&self) -> i32 {
        match self.terms.iter().next_back() {
            None => 0,
            Some((_, r)) if r.is_negative() => -1,
            Some(_) => 1,
        }
    }

    /// Multiplicative inverse; only single-term coefficients are invertible
    /// inside this ring.
    pub fn inverse(&self) -> Option<Self> {
        let (r, e) = self.as_monomial()?;
        Some(Self::pi_term(r.recip(), -e))
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        if r.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(e, v)| (*e, v * r)).collect(),
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(e, r)| rational_to_f64(r) * std::f64::consts::PI.powi(*e))
            .sum()
    }
}

fn rational_to_f64(r: &BigRational) -> f64 {
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => r.to_f64().unwrap_or(f64::NAN),
    }
}

impl Add for &Coefficient {
    type Output = Coefficient;
    fn add(self, rhs: &Coefficient) -> Coefficient {
        let mut out = self.clone();
        for (e, r) in &rhs.terms {
            out.add_term(*e, r.clone());
        }
        out
    }
}

impl Sub for &Coefficient {
    type Output = Coefficient;
    fn sub(self, rhs: &Coefficient) -> Coefficient {
        let mut out = self.clone();
        for (e, r) in &rhs.terms {
            out.add_term(*e, -r.clone());
        }
        out
    }
}

impl Mul for &Coefficient {
    type Output = Coefficient;
    fn mul(self, rhs: &Coefficient) -> Coefficient {
        let mut out = Coefficient::zero();
        for (ea, ra) in &self.terms {
            for (eb, rb) in &rhs.terms {
                out.add_term(ea + eb, ra * rb);
            }
        }
        out
    }
}

impl Neg for &Coefficient {
    type Output = Coefficient;
    fn neg(self) -> Coefficient {
        Coefficient {
            terms: self.terms.iter().map(|(e, r)| (*e, -r.clone())).collect(),
        }
    }
}

impl Neg for Coefficient {
    type Output = Coefficient;
    fn neg(self) -> Coefficient {
        -&self
    }
}

/// Formats a rational the way the potential grammar reads it back.
pub(crate) fn fmt_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Writes `|r|·π^e` for a single term (sign handled by the caller).
pub(crate) fn fmt_abs_pi_term(r: &BigRational, e: i32) -> String {
    let a = r.abs();
    let base = fmt_rational(&a);
    match e {
        0 => base,
        1 if a.is_one() => "pi".to_string(),
        1 => format!("{base}*pi"),
        e if e > 0 && a.is_one() => format!("pi^{e}"),
        e if e > 0 => format!("{base}*pi^{e}"),
        -1 => format!("{base}/pi"),
        e => format!("{base}/pi^{}", -e),
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (e, r)) in self.terms.iter().rev().enumerate() {
            let neg = r.is_negative();
            match (i, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            write!(f, "{}", fmt_abs_pi_term(r, *e))?;
        }
        Ok(())
    }
}
