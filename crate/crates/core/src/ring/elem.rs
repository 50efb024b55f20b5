use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::coefficient::{fmt_abs_pi_term, Coefficient};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trig {
    None,
    Sin,
    Cos,
}

/// Basis function `x^n`, `x^n·sin(kx)` or `x^n·cos(kx)`.
///
/// Canonical: `wavenumber` is `None` iff `trig == Trig::None`, and a present
/// wavenumber is nonzero with positive leading sign.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    xpow: u32,
    trig: Trig,
    wavenumber: Option<Coefficient>,
}

impl Monomial {
    pub fn power(xpow: u32) -> Self {
        Self {
            xpow,
            trig: Trig::None,
            wavenumber: None,
        }
    }

    pub fn xpow(&self) -> u32 {
        self.xpow
    }

    pub fn trig(&self) -> Trig {
        self.trig
    }

    pub fn wavenumber(&self) -> Option<&Coefficient> {
        self.wavenumber.as_ref()
    }

    pub fn is_constant(&self) -> bool {
        self.xpow == 0 && self.trig == Trig::None
    }

    /// Canonicalizes `x^n·trig(k x)` into a signed multiple of a canonical
    /// monomial; `None` when the function is identically zero.
    pub fn canonical(xpow: u32, trig: Trig, k: Option<Coefficient>) -> Option<(i32, Monomial)> {
        let k = match (trig, k) {
            (Trig::None, _) => return Some((1, Monomial::power(xpow))),
            (_, None) => panic!("trigonometric monomial without wavenumber"),
            (_, Some(k)) => k,
        };
        match (trig, k.signum()) {
            (Trig::Sin, 0) => None,
            (Trig::Cos, 0) => Some((1, Monomial::power(xpow))),
            (t, s) => {
                let (sign, k) = if s < 0 {
                    (if t == Trig::Sin { -1 } else { 1 }, -k)
                } else {
                    (1, k)
                };
                Some((
                    sign,
                    Monomial {
                        xpow,
                        trig: t,
                        wavenumber: Some(k),
                    },
                ))
            }
        }
    }
}

/// Exact element of the ring spanned by `x^n`, `x^n sin(kx)`, `x^n cos(kx)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RingElem {
    terms: BTreeMap<Monomial, Coefficient>,
}

impl RingElem {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Coefficient::one())
    }

    pub fn constant(c: Coefficient) -> Self {
        Self::term(c, Monomial::power(0))
    }

    /// `x^n`.
    pub fn x_pow(n: u32) -> Self {
        Self::term(Coefficient::one(), Monomial::power(n))
    }

    /// `c · x^n · trig(k x)` in canonical form.
    pub fn basis(c: Coefficient, xpow: u32, trig: Trig, k: Option<Coefficient>) -> Self {
        let mut out = Self::zero();
        if let Some((sign, m)) = Monomial::canonical(xpow, trig, k) {
            out.add_term(m, if sign < 0 { -c } else { c });
        }
        out
    }

    pub fn term(c: Coefficient, m: Monomial) -> Self {
        let mut out = Self::zero();
        out.add_term(m, c);
        out
    }

    /// Builds a polynomial from `(power, rational)` pairs.
    pub fn polynomial<I: IntoIterator<Item = (u32, BigRational)>>(it: I) -> Self {
        let mut out = Self::zero();
        for (n, r) in it {
            out.add_term(Monomial::power(n), Coefficient::rational(r));
        }
        out
    }

    pub(crate) fn add_term(&mut self, m: Monomial, c: Coefficient) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(slot) => {
                let sum = &*slot + &c;
                if sum.is_zero() {
                    self.terms.remove(&m);
                } else {
                    *slot = sum;
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Coefficient)> + '_ {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> Option<&Coefficient> {
        self.terms.get(m)
    }

    pub fn is_polynomial(&self) -> bool {
        self.terms.keys().all(|m| m.trig == Trig::None)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(Monomial::is_constant)
    }

    /// Highest power of `x` appearing in any monomial.
    pub fn x_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.xpow).max()
    }

    /// Coefficient of the constant monomial `x^0`.
    pub fn constant_part(&self) -> Coefficient {
        self.terms
            .get(&Monomial::power(0))
            .cloned()
            .unwrap_or_default()
    }

    pub fn wavenumbers(&self) -> impl Iterator<Item = &Coefficient> + '_ {
        self.terms.keys().filter_map(|m| m.wavenumber.as_ref())
    }

    pub fn scale(&self, c: &Coefficient) -> Self {
        let mut out = Self::zero();
        if c.is_zero() {
            return out;
        }
        for (m, v) in &self.terms {
            out.add_term(m.clone(), v * c);
        }
        out
    }

    pub fn scale_rational(&self, r: &BigRational) -> Self {
        if r.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c.scale(r))).collect(),
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = Self::one();
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    pub fn ddx(&self) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            if m.xpow > 0 {
                let n = Coefficient::integer(m.xpow as i64);
                out.add_term(
                    Monomial {
                        xpow: m.xpow - 1,
                        ..m.clone()
                    },
                    c * &n,
                );
            }
            if let Some(k) = &m.wavenumber {
                // d/dx sin(kx) = k cos(kx), d/dx cos(kx) = -k sin(kx)
                let (trig, factor) = match m.trig {
                    Trig::Sin => (Trig::Cos, c * k),
                    Trig::Cos => (Trig::Sin, -(c * k)),
                    Trig::None => unreachable!(),
                };
                out.add_term(
                    Monomial {
                        xpow: m.xpow,
                        trig,
                        wavenumber: Some(k.clone()),
                    },
                    factor,
                );
            }
        }
        out
    }

    pub fn ddx_n(&self, n: usize) -> Self {
        let mut out = self.clone();
        for _ in 0..n {
            if out.is_zero() {
                break;
            }
            out = out.ddx();
        }
        out
    }

    /// Antiderivative with zero coefficient on the constant monomial.
    ///
    /// Panics if a trigonometric wavenumber has no inverse in the coefficient
    /// ring (a sum of distinct π-powers); potentials accepted by the parser
    /// never produce one.
    pub fn int_dx(&self) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            match &m.wavenumber {
                None => {
                    let r = BigRational::new(BigInt::one(), BigInt::from(m.xpow + 1));
                    out.add_term(Monomial::power(m.xpow + 1), c.scale(&r));
                }
                Some(k) => {
                    let inv = k.inverse().unwrap_or_else(|| {
                        panic!("wavenumber {k} is not invertible in the coefficient ring")
                    });
                    int_trig_monomial(&mut out, c.clone(), m.xpow, m.trig, k, &inv);
                }
            }
        }
        out
    }

    /// Exact value at `x = 0`.
    pub fn value_at_zero(&self) -> Coefficient {
        let mut out = Coefficient::zero();
        for (m, c) in &self.terms {
            if m.xpow == 0 && m.trig != Trig::Sin {
                out = &out + c;
            }
        }
        out
    }

    /// Exact value at a rational point; `None` if a trigonometric monomial
    /// would need evaluation away from zero.
    pub fn value_at_rational(&self, x: &BigRational) -> Option<Coefficient> {
        if x.is_zero() {
            return Some(self.value_at_zero());
        }
        let mut out = Coefficient::zero();
        for (m, c) in &self.terms {
            if m.trig != Trig::None {
                return None;
            }
            out = &out + &c.scale(&num_traits::pow(x.clone(), m.xpow as usize));
        }
        Some(out)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                let base = c.to_f64() * x.powi(m.xpow as i32);
                match (&m.trig, &m.wavenumber) {
                    (Trig::Sin, Some(k)) => base * (k.to_f64() * x).sin(),
                    (Trig::Cos, Some(k)) => base * (k.to_f64() * x).cos(),
                    _ => base,
                }
            })
            .sum()
    }

    /// Formats with the given variable name, in the potential grammar.
    pub fn display_with<'a>(&'a self, var: &'a str) -> impl fmt::Display + 'a {
        DisplayWith { elem: self, var }
    }
}

/// Integration by parts:
/// ∫x^n sin(kx) = -x^n cos(kx)/k + (n/k)∫x^{n-1} cos(kx),
/// ∫x^n cos(kx) =  x^n sin(kx)/k - (n/k)∫x^{n-1} sin(kx).
fn int_trig_monomial(
    out: &mut RingElem,
    c: Coefficient,
    xpow: u32,
    trig: Trig,
    k: &Coefficient,
    inv_k: &Coefficient,
) {
    let mut c = c;
    let mut n = xpow;
    let mut trig = trig;
    loop {
        let ck = &c * inv_k;
        let (lead_trig, lead, rest_sign) = match trig {
            Trig::Sin => (Trig::Cos, -ck.clone(), 1),
            Trig::Cos => (Trig::Sin, ck.clone(), -1),
            Trig::None => unreachable!(),
        };
        out.add_term(
            Monomial {
                xpow: n,
                trig: lead_trig,
                wavenumber: Some(k.clone()),
            },
            lead,
        );
        if n == 0 {
            break;
        }
        let factor = Coefficient::integer(rest_sign * n as i64);
        c = &ck * &factor;
        n -= 1;
        trig = lead_trig;
    }
}

fn mul_monomials(a: &Monomial, b: &Monomial) -> Vec<(i32, BigRational, Monomial)> {
    let xpow = a.xpow + b.xpow;
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let mut out = Vec::with_capacity(2);
    let mut push = |sign: i32, r: BigRational, trig: Trig, k: Option<Coefficient>| {
        if let Some((s, m)) = Monomial::canonical(xpow, trig, k) {
            out.push((sign * s, r, m));
        }
    };
    match (&a.wavenumber, &b.wavenumber) {
        (None, None) => push(1, BigRational::one(), Trig::None, None),
        (None, Some(k)) => push(1, BigRational::one(), b.trig, Some(k.clone())),
        (Some(k), None) => push(1, BigRational::one(), a.trig, Some(k.clone())),
        (Some(ka), Some(kb)) => {
            let sum = ka + kb;
            let diff = ka - kb;
            match (a.trig, b.trig) {
                // sin a sin b = [cos(a-b) - cos(a+b)]/2
                (Trig::Sin, Trig::Sin) => {
                    push(1, half.clone(), Trig::Cos, Some(diff));
                    push(-1, half, Trig::Cos, Some(sum));
                }
                // cos a cos b = [cos(a-b) + cos(a+b)]/2
                (Trig::Cos, Trig::Cos) => {
                    push(1, half.clone(), Trig::Cos, Some(diff));
                    push(1, half, Trig::Cos, Some(sum));
                }
                // sin a cos b = [sin(a+b) + sin(a-b)]/2
                (Trig::Sin, Trig::Cos) => {
                    push(1, half.clone(), Trig::Sin, Some(sum));
                    push(1, half, Trig::Sin, Some(diff));
                }
                (Trig::Cos, Trig::Sin) => {
                    push(1, half.clone(), Trig::Sin, Some(sum));
                    push(-1, half, Trig::Sin, Some(diff));
                }
                _ => unreachable!(),
            }
        }
    }
    out
}

impl Add for &RingElem {
    type Output = RingElem;
    fn add(self, rhs: &RingElem) -> RingElem {
        let (big, small) = if self.len() >= rhs.len() {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let mut out = big.clone();
        for (m, c) in &small.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &RingElem {
    type Output = RingElem;
    fn sub(self, rhs: &RingElem) -> RingElem {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }
}

impl Mul for &RingElem {
    type Output = RingElem;
    fn mul(self, rhs: &RingElem) -> RingElem {
        let mut out = RingElem::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                let prod = ca * cb;
                for (sign, r, m) in mul_monomials(ma, mb) {
                    let r = if sign < 0 { -r } else { r };
                    out.add_term(m, prod.scale(&r));
                }
            }
        }
        out
    }
}

impl Neg for &RingElem {
    type Output = RingElem;
    fn neg(self) -> RingElem {
        RingElem {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Neg for RingElem {
    type Output = RingElem;
    fn neg(self) -> RingElem {
        -&self
    }
}

impl From<Coefficient> for RingElem {
    fn from(c: Coefficient) -> Self {
        Self::constant(c)
    }
}

struct DisplayWith<'a> {
    elem: &'a RingElem,
    var: &'a str,
}

fn fmt_coefficient_factor(c: &Coefficient) -> (bool, String) {
    match c.as_monomial() {
        Some((r, e)) => (r.is_negative(), fmt_abs_pi_term(r, e)),
        None => {
            let neg = c.signum() < 0;
            let shown = if neg { -c } else { c.clone() };
            (neg, format!("({shown})"))
        }
    }
}

fn fmt_var_pow(var: &str, n: u32) -> String {
    match n {
        0 => String::new(),
        1 => var.to_string(),
        n => format!("{var}^{n}"),
    }
}

impl fmt::Display for DisplayWith<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.elem.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.elem.terms {
            let (neg, mag) = fmt_coefficient_factor(c);
            match (first, neg) {
                (true, true) => write!(f, "-")?,
                (true, false) => {}
                (false, true) => write!(f, " - ")?,
                (false, false) => write!(f, " + ")?,
            }
            first = false;
            let mut factors: Vec<String> = Vec::new();
            let unit = c.as_monomial().is_some_and(|(r, e)| e == 0 && r.abs().is_one());
            if !unit || m.is_constant() {
                factors.push(mag);
            }
            if m.xpow > 0 {
                factors.push(fmt_var_pow(self.var, m.xpow));
            }
            if let Some(k) = &m.wavenumber {
                let name = if m.trig == Trig::Sin { "sin" } else { "cos" };
                let (_, kmag) = fmt_coefficient_factor(k);
                let arg = if k.is_one() {
                    self.var.to_string()
                } else {
                    format!("{kmag}*{}", self.var)
                };
                factors.push(format!("{name}({arg})"));
            }
            let s = factors.join("*");
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl fmt::Display for RingElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display_with("q"))
    }
}
