//! Classical-limit seed distributions `f₀(H)` and their energy derivatives.
//!
//! Every built-in seed satisfies a first-order autonomous equation
//! `g' = P_1(g)` once the fugacity is folded into the energy
//! (`g(H) = F(H - μ)`, `μ = ln z`), so `f₀^{(j)} = P_j(g)` with
//! `P_{j+1} = P_j' · P_1`. The `P_j` have integer coefficients and are
//! computed exactly.

mod polylog;

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use polylog::{chi_from_z, polylog_neg, z_from_chi, DegeneracyCalibration};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeedError {
    #[error("pole: Bose-Einstein seed needs exp(H)/z > 1, got H = {h}, z = {z}")]
    Pole { h: f64, z: f64 },
    #[error("derivative order {requested} exceeds cached order {cached}")]
    OrderExceedsCache { requested: usize, cached: usize },
    #[error("invalid fugacity {0}")]
    InvalidFugacity(f64),
    #[error("polylogarithm quadrature did not converge (estimate {estimate}, error {error})")]
    NonConvergent { estimate: f64, error: f64 },
    #[error("bracket failure: cannot bracket chi = {0}")]
    BracketFailure(f64),
    #[error("invalid seed spec '{0}'")]
    InvalidSpec(String),
}

/// Anything that can supply `f₀` and its `H`-derivatives.
///
/// `out[j]` receives `f₀^{(j)}(h)` for `j < out.len()`.
pub trait Seed: Send + Sync {
    fn derivatives(&self, h: f64, out: &mut [f64]) -> Result<(), SeedError>;

    /// Highest order this seed can provide, if bounded.
    fn max_order(&self) -> Option<usize> {
        None
    }

    fn label(&self) -> String;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedKind {
    MaxwellBoltzmann,
    FermiDirac,
    BoseEinstein,
}

impl SeedKind {
    /// `P_1(g)` as integer coefficients in powers of `g`.
    fn first_derivative(self) -> Vec<BigInt> {
        let c = |v: &[i64]| v.iter().map(|&x| BigInt::from(x)).collect();
        match self {
            SeedKind::MaxwellBoltzmann => c(&[0, -1]),
            SeedKind::FermiDirac => c(&[0, -1, 1]),
            SeedKind::BoseEinstein => c(&[0, -1, -1]),
        }
    }
}

/// Exact derivative polynomials `P_0 ..= P_n` for a seed kind.
pub fn derivative_polynomials(kind: SeedKind, n: usize) -> Vec<Vec<BigInt>> {
    let p1 = kind.first_derivative();
    let mut out = vec![vec![BigInt::zero(), BigInt::from(1)]];
    for _ in 0..n {
        let prev = out.last().unwrap();
        let deriv: Vec<BigInt> = prev
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * BigInt::from(i))
            .collect();
        let mut next = vec![BigInt::zero(); deriv.len() + p1.len() - 1];
        for (i, a) in deriv.iter().enumerate() {
            for (k, b) in p1.iter().enumerate() {
                next[i + k] += a * b;
            }
        }
        while next.len() > 1 && next.last().is_some_and(Zero::is_zero) {
            next.pop();
        }
        out.push(next);
    }
    out
}

fn horner(coeffs: &[f64], g: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * g + c)
}

/// Built-in seed with cached derivative polynomials.
#[derive(Clone, Debug)]
pub struct SeedDistribution {
    kind: SeedKind,
    z: f64,
    mu: f64,
    polys: Vec<Vec<f64>>,
    extend: bool,
}

/// Cache depth used when none is requested: enough for an order-10 series.
pub const DEFAULT_CACHE_ORDER: usize = 32;

impl SeedDistribution {
    pub fn new(kind: SeedKind, z: f64) -> Result<Self, SeedError> {
        Self::with_cache(kind, z, DEFAULT_CACHE_ORDER)
    }

    pub fn with_cache(kind: SeedKind, z: f64, max_order: usize) -> Result<Self, SeedError> {
        if !(z.is_finite() && z > 0.0) {
            return Err(SeedError::InvalidFugacity(z));
        }
        let polys = derivative_polynomials(kind, max_order)
            .into_iter()
            .map(|p| p.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect())
            .collect();
        Ok(Self {
            kind,
            z,
            mu: z.ln(),
            polys,
            extend: false,
        })
    }

    pub fn maxwell_boltzmann() -> Self {
        Self::new(SeedKind::MaxwellBoltzmann, 1.0).unwrap()
    }

    pub fn fermi_dirac(z: f64) -> Result<Self, SeedError> {
        Self::new(SeedKind::FermiDirac, z)
    }

    pub fn bose_einstein(z: f64) -> Result<Self, SeedError> {
        Self::new(SeedKind::BoseEinstein, z)
    }

    /// Allow orders beyond the cache, computed on demand.
    pub fn allow_extension(mut self, on: bool) -> Self {
        self.extend = on;
        self
    }

    pub fn kind(&self) -> SeedKind {
        self.kind
    }

    pub fn fugacity(&self) -> f64 {
        self.z
    }

    pub fn cached_order(&self) -> usize {
        self.polys.len() - 1
    }

    /// `g = f₀(H)`.
    pub fn value(&self, h: f64) -> Result<f64, SeedError> {
        let t = h - self.mu;
        match self.kind {
            SeedKind::MaxwellBoltzmann => Ok((-t).exp()),
            SeedKind::FermiDirac => Ok(if t > 0.0 {
                let e = (-t).exp();
                e / (1.0 + e)
            } else {
                1.0 / (t.exp() + 1.0)
            }),
            SeedKind::BoseEinstein => {
                if t <= 0.0 {
                    Err(SeedError::Pole { h, z: self.z })
                } else {
                    Ok(1.0 / t.exp_m1())
                }
            }
        }
    }

    /// `f₀^{(j)}(H)`.
    pub fn f0_deriv(&self, j: usize, h: f64) -> Result<f64, SeedError> {
        let g = self.value(h)?;
        if let Some(p) = self.polys.get(j) {
            return Ok(horner(p, g));
        }
        if !self.extend {
            return Err(SeedError::OrderExceedsCache {
                requested: j,
                cached: self.cached_order(),
            });
        }
        let p = &derivative_polynomials(self.kind, j)[j];
        let p: Vec<f64> = p.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect();
        Ok(horner(&p, g))
    }
}

impl Seed for SeedDistribution {
    fn derivatives(&self, h: f64, out: &mut [f64]) -> Result<(), SeedError> {
        let Some(top) = out.len().checked_sub(1) else {
            return Ok(());
        };
        if top > self.cached_order() && !self.extend {
            return Err(SeedError::OrderExceedsCache {
                requested: top,
                cached: self.cached_order(),
            });
        }
        let g = self.value(h)?;
        for (j, slot) in out.iter_mut().enumerate() {
            *slot = match self.polys.get(j) {
                Some(p) => horner(p, g),
                None => self.f0_deriv(j, h)?,
            };
        }
        Ok(())
    }

    fn max_order(&self) -> Option<usize> {
        if self.extend {
            None
        } else {
            Some(self.cached_order())
        }
    }

    fn label(&self) -> String {
        match self.kind {
            SeedKind::MaxwellBoltzmann if self.z == 1.0 => "mb".to_string(),
            SeedKind::MaxwellBoltzmann => format!("mb:z={}", self.z),
            SeedKind::FermiDirac => format!("fd:z={}", self.z),
            SeedKind::BoseEinstein => format!("be:z={}", self.z),
        }
    }
}

/// Derivative-wise linear combination `Σ w_i s_i` of seeds.
pub struct LinearCombination {
    parts: Vec<(f64, Box<dyn Seed>)>,
}

impl LinearCombination {
    pub fn new() -> Self {
        Self { parts: Vec::new() }
    }

    pub fn with(mut self, weight: f64, seed: impl Seed + 'static) -> Self {
        self.parts.push((weight, Box::new(seed)));
        self
    }
}

impl Default for LinearCombination {
    fn default() -> Self {
        Self::new()
    }
}

impl Seed for LinearCombination {
    fn derivatives(&self, h: f64, out: &mut [f64]) -> Result<(), SeedError> {
        out.fill(0.0);
        let mut buf = vec![0.0; out.len()];
        for (w, s) in &self.parts {
            s.derivatives(h, &mut buf)?;
            for (o, b) in out.iter_mut().zip(&buf) {
                *o += w * b;
            }
        }
        Ok(())
    }

    fn max_order(&self) -> Option<usize> {
        self.parts.iter().filter_map(|(_, s)| s.max_order()).min()
    }

    fn label(&self) -> String {
        let parts: Vec<String> = self
            .parts
            .iter()
            .map(|(w, s)| format!("{w}*{}", s.label()))
            .collect();
        parts.join(" + ")
    }
}

/// Seed selection as written on the command line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SeedSpec {
    MaxwellBoltzmann,
    FermiDirac { z: f64 },
    BoseEinstein { z: f64 },
    FermiDiracChi { chi: f64 },
}

impl SeedSpec {
    pub fn build(&self, max_order: usize) -> Result<SeedDistribution, SeedError> {
        match *self {
            SeedSpec::MaxwellBoltzmann => {
                SeedDistribution::with_cache(SeedKind::MaxwellBoltzmann, 1.0, max_order)
            }
            SeedSpec::FermiDirac { z } => {
                SeedDistribution::with_cache(SeedKind::FermiDirac, z, max_order)
            }
            SeedSpec::BoseEinstein { z } => {
                if z >= 1.0 {
                    return Err(SeedError::InvalidFugacity(z));
                }
                SeedDistribution::with_cache(SeedKind::BoseEinstein, z, max_order)
            }
            SeedSpec::FermiDiracChi { chi } => {
                let z = z_from_chi(chi)?;
                SeedDistribution::with_cache(SeedKind::FermiDirac, z, max_order)
            }
        }
    }
}

impl FromStr for SeedSpec {
    type Err = SeedError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SeedError::InvalidSpec(s.to_string());
        let s = s.trim();
        if s == "mb" {
            return Ok(SeedSpec::MaxwellBoltzmann);
        }
        let (kind, param) = s.split_once(':').ok_or_else(bad)?;
        let (key, value) = param.split_once('=').ok_or_else(bad)?;
        let value: f64 = value.trim().parse().map_err(|_| bad())?;
        if !(value.is_finite() && value > 0.0) {
            return Err(bad());
        }
        match (kind.trim(), key.trim()) {
            ("fd", "z") => Ok(SeedSpec::FermiDirac { z: value }),
            ("be", "z") if value < 1.0 => Ok(SeedSpec::BoseEinstein { z: value }),
            ("fd", "chi") => Ok(SeedSpec::FermiDiracChi { chi: value }),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for SeedSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeedSpec::MaxwellBoltzmann => write!(f, "mb"),
            SeedSpec::FermiDirac { z } => write!(f, "fd:z={z}"),
            SeedSpec::BoseEinstein { z } => write!(f, "be:z={z}"),
            SeedSpec::FermiDiracChi { chi } => write!(f, "fd:chi={chi}"),
        }
    }
}

impl TryFrom<String> for SeedSpec {
    type Error = SeedError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<SeedSpec> for String {
    fn from(s: SeedSpec) -> String {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Richardson-extrapolated central difference of `f^{(j-1)}`, used as an
    /// oracle independent of the polynomial recurrence.
    fn fd_derivative(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
        let d1 = d(h);
        let d2 = d(h / 2.0);
        let d3 = d(h / 4.0);
        let r1 = (4.0 * d2 - d1) / 3.0;
        let r2 = (4.0 * d3 - d2) / 3.0;
        (16.0 * r2 - r1) / 15.0
    }

    #[test]
    fn fermi_midpoint() {
        let s = SeedDistribution::fermi_dirac(1.0).unwrap();
        assert_eq!(s.f0_deriv(0, 0.0).unwrap(), 0.5);
        assert_eq!(s.f0_deriv(1, 0.0).unwrap(), -0.25);
    }

    #[test]
    fn fermi_sixth_derivative_matches_finite_difference() {
        let s = SeedDistribution::fermi_dirac(1.0).unwrap();
        let f5 = |h: f64| s.f0_deriv(5, h).unwrap();
        let oracle = fd_derivative(&f5, 0.7, 1e-2);
        let got = s.f0_deriv(6, 0.7).unwrap();
        assert!((got - oracle).abs() <= 1e-6 * oracle.abs(), "{got} vs {oracle}");
    }

    #[test]
    fn every_kind_matches_finite_differences_through_order_eight() {
        let seeds = [
            SeedDistribution::maxwell_boltzmann(),
            SeedDistribution::fermi_dirac(1.0).unwrap(),
            SeedDistribution::fermi_dirac(5.0).unwrap(),
            SeedDistribution::bose_einstein(0.1).unwrap(),
        ];
        let hs: Vec<f64> = (0..=24).map(|i| -2.0 + 0.25 * i as f64).collect();
        for s in &seeds {
            for j in 1..=8 {
                // Pointwise relative error breaks down at zeros of f^(j), so
                // compare against the largest magnitude on the sampled range.
                let scale = hs.iter().map(|&h| s.f0_deriv(j, h).unwrap().abs()).fold(0.0, f64::max);
                let prev = |h: f64| s.f0_deriv(j - 1, h).unwrap();
                for &h in &hs {
                    let oracle = fd_derivative(&prev, h, 1e-2);
                    let got = s.f0_deriv(j, h).unwrap();
                    assert!((got - oracle).abs() <= 1e-5 * scale, "{} j={j} H={h}", s.label());
                }
            }
        }
    }

    #[test]
    fn polynomials_have_expected_low_orders() {
        let p = derivative_polynomials(SeedKind::FermiDirac, 2);
        let as_i: Vec<Vec<i64>> = p
            .iter()
            .map(|v| v.iter().map(|c| c.to_i64().unwrap()).collect())
            .collect();
        // g'' = (-1 + 2g)(-g + g^2) = g - 3g^2 + 2g^3
        assert_eq!(as_i, vec![vec![0, 1], vec![0, -1, 1], vec![0, 1, -3, 2]]);
    }

    #[test]
    fn maxwell_derivatives_alternate() {
        let s = SeedDistribution::maxwell_boltzmann();
        let mut out = [0.0; 6];
        s.derivatives(1.3, &mut out).unwrap();
        for (j, v) in out.iter().enumerate() {
            let expected = if j % 2 == 0 { 1.0 } else { -1.0 } * (-1.3f64).exp();
            assert!((v - expected).abs() < 1e-16);
        }
    }

    #[test]
    fn bose_pole_and_cache_errors() {
        let s = SeedDistribution::bose_einstein(0.5).unwrap();
        assert!(matches!(s.f0_deriv(0, -1.0), Err(SeedError::Pole { .. })));
        assert!(s.f0_deriv(2, 0.5).is_ok());
        let small = SeedDistribution::with_cache(SeedKind::FermiDirac, 1.0, 4).unwrap();
        assert!(matches!(
            small.f0_deriv(5, 0.0),
            Err(SeedError::OrderExceedsCache { requested: 5, cached: 4 })
        ));
        let ext = small.allow_extension(true);
        let full = SeedDistribution::fermi_dirac(1.0).unwrap();
        assert_eq!(ext.f0_deriv(7, 0.3).unwrap(), full.f0_deriv(7, 0.3).unwrap());
    }

    #[test]
    fn fermi_derivatives_bounded_by_polynomial_extrema() {
        let s = SeedDistribution::fermi_dirac(2.0).unwrap();
        for j in 0..=12 {
            let bound = (0..=20_000)
                .map(|i| horner(&s.polys[j], i as f64 / 20_000.0).abs())
                .fold(0.0, f64::max);
            for k in 0..200 {
                let h = -10.0 + 0.1 * k as f64;
                assert!(s.f0_deriv(j, h).unwrap().abs() <= bound * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn seed_strings() {
        assert_eq!("mb".parse::<SeedSpec>().unwrap(), SeedSpec::MaxwellBoltzmann);
        assert_eq!(
            "fd:z=1".parse::<SeedSpec>().unwrap(),
            SeedSpec::FermiDirac { z: 1.0 }
        );
        assert_eq!(
            "be:z=0.5".parse::<SeedSpec>().unwrap(),
            SeedSpec::BoseEinstein { z: 0.5 }
        );
        assert_eq!(
            "fd:chi=1.01".parse::<SeedSpec>().unwrap(),
            SeedSpec::FermiDiracChi { chi: 1.01 }
        );
        for bad in ["be:z=1.5", "fd", "fd:z=-1", "xx:z=1", "fd:y=1"] {
            assert!(bad.parse::<SeedSpec>().is_err(), "{bad}");
        }
        let s = "fd:chi=1.01".parse::<SeedSpec>().unwrap().build(8).unwrap();
        assert!((s.fugacity() - 1.0).abs() < 0.02);
    }

    #[test]
    fn linear_combination_is_derivativewise() {
        let comb = LinearCombination::new()
            .with(2.0, SeedDistribution::fermi_dirac(1.0).unwrap())
            .with(-0.5, SeedDistribution::maxwell_boltzmann());
        let mut out = [0.0; 4];
        comb.derivatives(0.2, &mut out).unwrap();
        let fd = SeedDistribution::fermi_dirac(1.0).unwrap();
        let mb = SeedDistribution::maxwell_boltzmann();
        for (j, v) in out.iter().enumerate() {
            let e = 2.0 * fd.f0_deriv(j, 0.2).unwrap() - 0.5 * mb.f0_deriv(j, 0.2).unwrap();
            assert!((v - e).abs() < 1e-15);
        }
    }
}
