//! Order-by-order construction of the semiclassical expansion
//! `f = Σ_l ħ^{2l} f_l(x, H)` of the stationary Wigner function.
//!
//! In the energy variable `H = p²/2 + V(x)` each correction obeys
//!
//! ```text
//! ∂f_l/∂x = Σ_{j=1..l} (-1/2)^j V^{(2j+1)}(x)
//!             Σ_{k=0..j} (H-V)^{j-k} / (4^k k! (2j-2k+1)!) ∂^{2j-k+1} f_{l-j} / ∂H^{2j-k+1}
//! ```
//!
//! so `f_l` follows from a quadrature in `x` alone with `H` held fixed. Every
//! `f_l` is kept as a linear combination of seed derivatives `f₀^{(j)}(H)`
//! with exact coefficients, which makes the result independent of the seed.

mod json;
mod term;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::ring::{Coefficient, ParseError, RingElem};

pub(crate) use term::HMinusV;
pub use term::{Cell, SeriesTerm};

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("resource limit exceeded: {count} monomials at order {order} (cap {cap})")]
    ResourceLimit {
        order: usize,
        count: usize,
        cap: usize,
    },
    #[error("reference point {0} needs exact trig values; use 0 for trigonometric potentials")]
    UnsupportedReference(String),
    #[error("potential: {0}")]
    Parse(#[from] ParseError),
    #[error("series document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("series document: {0}")]
    Invalid(String),
}

/// How the additive function of `H` left free at each order is fixed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    /// Closed-form `f_1` with no added function of `H`; higher orders are
    /// plain antiderivatives with zero constant monomial.
    #[default]
    Paper,
    /// Every `f_l`, `l ≥ 1`, vanishes identically at `x = x_ref`.
    Uniform,
}

impl std::str::FromStr for Convention {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" => Ok(Convention::Paper),
            "uniform" => Ok(Convention::Uniform),
            other => Err(format!("unknown convention '{other}' (expected paper|uniform)")),
        }
    }
}

impl std::fmt::Display for Convention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Convention::Paper => "paper",
            Convention::Uniform => "uniform",
        })
    }
}

/// Default cap on the total number of ring monomials in one series.
pub const DEFAULT_TERM_CAP: usize = 1_000_000;

#[derive(Clone, Debug)]
pub struct BuildOptions {
    pub convention: Convention,
    pub x_ref: BigRational,
    pub term_cap: usize,
    pub execution: Execution,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            convention: Convention::Paper,
            x_ref: BigRational::zero(),
            term_cap: DEFAULT_TERM_CAP,
            execution: Execution::default(),
        }
    }
}

impl BuildOptions {
    pub fn with_convention(convention: Convention) -> Self {
        Self {
            convention,
            ..Self::default()
        }
    }
}

/// The truncated expansion `f_0 ..= f_L` for one potential.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerSeries {
    pub potential: RingElem,
    pub convention: Convention,
    pub x_ref: BigRational,
    pub terms: Vec<SeriesTerm>,
}

impl WignerSeries {
    pub fn order(&self) -> usize {
        self.terms.len() - 1
    }

    pub fn term(&self, l: usize) -> &SeriesTerm {
        &self.terms[l]
    }

    pub fn monomial_count(&self) -> usize {
        self.terms.iter().map(SeriesTerm::monomial_count).sum()
    }

    pub fn max_j(&self) -> u32 {
        self.terms.iter().filter_map(SeriesTerm::max_j).max().unwrap_or(0)
    }

    /// Per-order listing with one line per `(H^m, f₀^{(j)})` cell.
    pub fn listing(&self) -> String {
        let mut out = format!(
            "V(x) = {}\nconvention = {}, order L = {}\n",
            self.potential.display_with("x"),
            self.convention,
            self.order()
        );
        for (l, t) in self.terms.iter().enumerate() {
            out.push_str(&format!("f_{l}(x,H) =\n{t}"));
        }
        out
    }

    pub fn to_json(&self) -> String {
        json::to_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self, SeriesError> {
        json::from_json(text)
    }
}

fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// `(-1/2)^j / (4^k k! (2j-2k+1)!)`.
pub(crate) fn moyal_weight(j: u32, k: u32) -> BigRational {
    let sign = if j % 2 == 1 { -1 } else { 1 };
    let numer = BigInt::from(sign);
    let denom = BigInt::from(2).pow(j) * BigInt::from(4).pow(k) * factorial(k) * factorial(2 * j - 2 * k + 1);
    BigRational::new(numer, denom)
}

/// Shared state for evaluating the right-hand side of the recursion: odd
/// derivatives of `V` and powers of `(H - V)`.
pub(crate) struct Recursion {
    odd_derivs: Vec<RingElem>,
    h_minus_v: HMinusV,
    execution: Execution,
}

impl Recursion {
    /// Supports every order `n <= max_n`.
    pub(crate) fn new(v: &RingElem, max_n: usize, execution: Execution) -> Self {
        let mut odd_derivs = vec![RingElem::zero()];
        let mut d = v.ddx();
        for _ in 1..=max_n {
            d = d.ddx().ddx();
            odd_derivs.push(d.clone());
        }
        Self {
            odd_derivs,
            h_minus_v: HMinusV::new(v, max_n as u32),
            execution,
        }
    }

    /// `Σ_j (-1/2)^j V^{(2j+1)} Σ_k (H-V)^{j-k}/(…) ∂_H^{2j-k+1} f_{n-j}`,
    /// restricted to `j ≥ 1` with `n - j < terms.len()`.
    pub(crate) fn order_sum(&self, n: usize, terms: &[SeriesTerm]) -> SeriesTerm {
        let mut jobs = Vec::new();
        for j in 1..=n {
            let src = n - j;
            if src >= terms.len() || self.odd_derivs[j].is_zero() || terms[src].is_zero() {
                continue;
            }
            for k in 0..=j {
                jobs.push((j, k));
            }
        }
        let parts = self.execution.map_slice(&jobs, |&(j, k)| {
            let src = &terms[n - j];
            let derived = src.dh_n(2 * j - k + 1);
            let factor = self.odd_derivs[j].scale_rational(&moyal_weight(j as u32, k as u32));
            self.h_minus_v.mul(&derived, (j - k) as u32, &factor)
        });
        let mut out = SeriesTerm::zero();
        for p in &parts {
            out.add_assign(p);
        }
        out
    }
}

/// Right-hand side `∂f_l/∂x` from the lower orders `lower = [f_0, …, f_{l-1}]`.
pub fn rhs(l: usize, lower: &[SeriesTerm], v: &RingElem) -> SeriesTerm {
    assert!(lower.len() >= l, "rhs({l}) needs f_0..f_{}", l.saturating_sub(1));
    Recursion::new(v, l, Execution::Sequential).order_sum(l, &lower[..l])
}

/// Antiderivative in `x` of an `rhs` output, with the additive function of
/// `H` fixed by `convention`.
pub fn integrate_term(
    t: &SeriesTerm,
    convention: Convention,
    x_ref: &BigRational,
) -> Result<SeriesTerm, SeriesError> {
    let integrated = t.map_ring(RingElem::int_dx);
    match convention {
        Convention::Paper => Ok(integrated),
        Convention::Uniform => {
            let mut out = SeriesTerm::zero();
            for (cell, c) in integrated.cells() {
                let at_ref = c
                    .value_at_rational(x_ref)
                    .ok_or_else(|| SeriesError::UnsupportedReference(x_ref.to_string()))?;
                out.add_cell(cell, c - &RingElem::constant(at_ref));
            }
            Ok(out)
        }
    }
}

/// First correction with the arbitrary function of `H` set to zero:
/// `f_1 = -(1/2) V'' [ (H-V)/6 f₀''' + f₀''/4 ] - (1/24) (V')² f₀'''`.
pub fn closed_form_f1(v: &RingElem) -> SeriesTerm {
    let v1 = v.ddx();
    let v2 = v1.ddx();
    let r = |n: i64, d: i64| Coefficient::ratio(n, d);
    let h_f3 = v2.scale(&r(-1, 12));
    let f3 = &(&v2 * v).scale(&r(1, 12)) - &(&v1 * &v1).scale(&r(1, 24));
    let f2 = v2.scale(&r(-1, 8));
    SeriesTerm::from_cells([
        (Cell::new(1, 3), h_f3),
        (Cell::new(0, 3), f3),
        (Cell::new(0, 2), f2),
    ])
}

/// Builds `f_0 ..= f_order` for potential `v`.
pub fn build_series(
    v: &RingElem,
    order: usize,
    options: &BuildOptions,
) -> Result<WignerSeries, SeriesError> {
    if options.convention == Convention::Uniform
        && !options.x_ref.is_zero()
        && !v.is_polynomial()
    {
        return Err(SeriesError::UnsupportedReference(options.x_ref.to_string()));
    }
    let rec = Recursion::new(v, order, options.execution);
    let mut terms = vec![SeriesTerm::seed()];
    let mut count = 1;
    for l in 1..=order {
        let next = if l == 1 && options.convention == Convention::Paper {
            closed_form_f1(v)
        } else {
            let d = rec.order_sum(l, &terms);
            integrate_term(&d, options.convention, &options.x_ref)?
        };
        count += next.monomial_count();
        if count > options.term_cap {
            return Err(SeriesError::ResourceLimit {
                order: l,
                count,
                cap: options.term_cap,
            });
        }
        terms.push(next);
    }
    Ok(WignerSeries {
        potential: v.clone(),
        convention: options.convention,
        x_ref: options.x_ref.clone(),
        terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{parse_expr, parse_potential};

    fn p(src: &str) -> RingElem {
        parse_expr(src).unwrap()
    }

    fn goldstone() -> RingElem {
        parse_potential("-q^2/2 + q^4/4").unwrap()
    }

    #[test]
    fn weights() {
        // j = 1: -1/2 · {1/3!, 1/(4·1!·1!)}
        assert_eq!(moyal_weight(1, 0), BigRational::new((-1).into(), 12.into()));
        assert_eq!(moyal_weight(1, 1), BigRational::new((-1).into(), 8.into()));
        assert_eq!(moyal_weight(2, 2), BigRational::new(1.into(), (4 * 16 * 2).into()));
    }

    #[test]
    fn quadratic_rhs_vanishes() {
        let v = p("3 - 2*q + 5/7*q^2");
        let s = build_series(&v, 3, &BuildOptions::with_convention(Convention::Paper)).unwrap();
        for l in 1..=3 {
            assert!(rhs(l, &s.terms, &v).is_zero());
        }
        assert!(rhs(2, &[SeriesTerm::seed(), SeriesTerm::seed()], &RingElem::zero()).is_zero());
    }

    #[test]
    fn first_order_rhs_is_derivative_of_closed_form() {
        let v = goldstone();
        let d = rhs(1, &[SeriesTerm::seed()], &v);
        assert_eq!(d, closed_form_f1(&v).ddx());
    }

    #[test]
    fn closed_form_goldstone() {
        let f1 = closed_form_f1(&goldstone());
        assert_eq!(f1.get(Cell::new(0, 2)), Some(&p("(6 - 18*q^2)/48")));
        assert_eq!(f1.get(Cell::new(1, 3)), Some(&p("(4 - 12*q^2)/48")));
        assert_eq!(f1.get(Cell::new(0, 3)), Some(&p("(-3*q^4 + q^6)/48")));
        assert_eq!(f1.len(), 3);
    }

    #[test]
    fn closed_form_quadratic_is_energy_only() {
        let (a, b, c) = (p("2/3"), p("-5"), p("7/2"));
        let v = &(&a + &(&b * &p("q"))) + &(&c * &p("q^2"));
        let f1 = closed_form_f1(&v);
        // (1/24)(4ac - b² - 4cH) f₀''' - (c/4) f₀''
        let expected = SeriesTerm::from_cells([
            (Cell::new(0, 3), (&(&p("4") * &(&a * &c)) - &(&b * &b)).scale(&Coefficient::ratio(1, 24))),
            (Cell::new(1, 3), c.scale(&Coefficient::ratio(-4, 24))),
            (Cell::new(0, 2), c.scale(&Coefficient::ratio(-1, 4))),
        ]);
        assert_eq!(f1, expected);
        assert!(closed_form_f1(&RingElem::zero()).is_zero());
    }

    #[test]
    fn integrate_round_trip_both_conventions() {
        let v = p("q^2/2*(1 + 1/2*cos(2*pi*q))");
        let lower = [SeriesTerm::seed(), closed_form_f1(&v)];
        let d = rhs(2, &lower, &v);
        for conv in [Convention::Paper, Convention::Uniform] {
            let f = integrate_term(&d, conv, &BigRational::zero()).unwrap();
            assert_eq!(f.ddx(), d);
        }
        assert!(integrate_term(&SeriesTerm::zero(), Convention::Uniform, &BigRational::zero())
            .unwrap()
            .is_zero());
    }

    #[test]
    fn goldstone_second_order_vanishes_at_origin() {
        let s = build_series(&goldstone(), 2, &BuildOptions::default()).unwrap();
        for (_, c) in s.term(2).cells() {
            for (m, _) in c.terms() {
                assert!(m.xpow() >= 2, "{c}");
            }
        }
    }

    #[test]
    fn goldstone_second_order_closed_form() {
        let s = build_series(&goldstone(), 2, &BuildOptions::default()).unwrap();
        let pre = p("q^2/4608");
        let cell = |m, j, src: &str| (Cell::new(m, j), &pre * &p(src));
        let expected = SeriesTerm::from_cells([
            cell(0, 4, "252*(-2 + 3*q^2)"),
            cell(0, 5, "-18*(6*q^2 - 16*q^4 + 5*q^6)"),
            cell(1, 5, "-18*(32 - 48*q^2)"),
            cell(0, 6, "9*q^6 - 6*q^8 + q^10"),
            cell(1, 6, "-24*q^2 + 80*q^4 - 24*q^6"),
            cell(2, 6, "-96 + 144*q^2"),
        ]);
        assert_eq!(s.term(2), &expected);
    }

    #[test]
    fn conventions_share_first_order_derivative() {
        for src in ["-q^2/2 + q^4/4", "q^4/4", "q^2/2*(1 + 1/2*cos(2*pi*q))", "q^3 - 2*q"] {
            let v = p(src);
            let a = build_series(&v, 1, &BuildOptions::with_convention(Convention::Paper)).unwrap();
            let b = build_series(&v, 1, &BuildOptions::with_convention(Convention::Uniform)).unwrap();
            assert_eq!(a.term(1).ddx(), b.term(1).ddx(), "{src}");
        }
    }

    #[test]
    fn quadratic_uniform_is_trivial() {
        let s = build_series(
            &p("1 + q + q^2"),
            4,
            &BuildOptions::with_convention(Convention::Uniform),
        )
        .unwrap();
        assert_eq!(s.term(0), &SeriesTerm::seed());
        assert!(s.terms[1..].iter().all(SeriesTerm::is_zero));
    }

    #[test]
    fn uniform_terms_vanish_at_reference() {
        let v = goldstone();
        let mut opts = BuildOptions::with_convention(Convention::Uniform);
        opts.x_ref = BigRational::new(1.into(), 2.into());
        let s = build_series(&v, 3, &opts).unwrap();
        for t in &s.terms[1..] {
            assert!(!t.is_zero());
            for (_, c) in t.cells() {
                assert!(c.value_at_rational(&opts.x_ref).unwrap().is_zero());
            }
        }
        let trig = p("q^2*cos(q)");
        assert!(matches!(
            build_series(&trig, 1, &opts),
            Err(SeriesError::UnsupportedReference(_))
        ));
    }

    #[test]
    fn derivative_order_bound() {
        let s = build_series(&goldstone(), 5, &BuildOptions::default()).unwrap();
        for (l, t) in s.terms.iter().enumerate() {
            assert!(t.max_j().unwrap() as usize <= 3 * l);
        }
        assert!(s.term(5).max_j().unwrap() <= 15);
    }

    #[test]
    fn even_potentials_give_even_coefficients() {
        for src in ["-q^2/2 + q^4/4", "q^4/4", "q^2/2*(1 + 1/2*cos(2*pi*q))"] {
            let v = parse_potential(src).unwrap();
            let order = if v.is_polynomial() { 4 } else { 2 };
            for conv in [Convention::Paper, Convention::Uniform] {
                let s = build_series(&v, order, &BuildOptions::with_convention(conv)).unwrap();
                for t in &s.terms {
                    for (_, c) in t.cells() {
                        for (m, _) in c.terms() {
                            // x^n sin(kx) is even for odd n
                            let odd_factors = m.xpow() % 2 + u32::from(m.trig() == crate::ring::Trig::Sin);
                            assert_eq!(odd_factors % 2, 0, "{src}: {c}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn resource_cap() {
        let opts = BuildOptions {
            term_cap: 50,
            ..BuildOptions::default()
        };
        assert!(matches!(
            build_series(&goldstone(), 5, &opts),
            Err(SeriesError::ResourceLimit { .. })
        ));
    }

    #[test]
    fn execution_policies_agree() {
        let v = p("q^2/2*(1 + 1/2*cos(2*pi*q))");
        let mut a = BuildOptions::default();
        a.execution = Execution::Sequential;
        let mut b = BuildOptions::default();
        b.execution = Execution::Parallel;
        assert_eq!(build_series(&v, 2, &a).unwrap(), build_series(&v, 2, &b).unwrap());
    }
}
