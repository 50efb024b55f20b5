//! Independent checks that a built series solves the stationary equation.
//!
//! With `f = Σ_{l≤L} ħ^{2l} f_l` the residual
//! `R = ∂f/∂x − Σ_j (−ħ²/2)^j V^{(2j+1)} Σ_k (H−V)^{j−k}/(4^k k!(2j−2k+1)!) ∂_H^{2j−k+1} f`
//! splits by powers of `ħ²` into `R = Σ_n ħ^{2n} R_n`. For polynomial `V` the
//! `j`-sum is finite and every `R_n` is computed exactly; otherwise the sum is
//! truncated and the `R_n` are evaluated at sample points.

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::ring::RingElem;
use crate::seed::{Seed, SeedError};
use crate::series::{closed_form_f1, moyal_weight, Convention, Recursion, SeriesTerm, WignerSeries};

#[derive(Debug, Error, PartialEq)]
pub enum VerifyError {
    #[error("trig potential unsupported in symbolic mode")]
    TrigPotential,
    #[error("invalid residual request: {0}")]
    Invalid(String),
    #[error(transparent)]
    Seed(#[from] SeedError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResidualMode {
    Symbolic,
    Numeric,
}

/// Size of one `R_n` that did not cancel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderCensus {
    pub hbar_power: u32,
    pub cells: usize,
    pub monomials: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolicResidual {
    /// Smallest power of `ħ` with a nonzero residual; `None` if the residual
    /// vanishes identically.
    pub observed_order: Option<u32>,
    pub census: Vec<OrderCensus>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumericResidual {
    pub seed: String,
    pub j_max: usize,
    pub samples: usize,
    pub rng_seed: u64,
    pub hbars: Vec<f64>,
    pub max_residual: Vec<f64>,
    pub slope: f64,
    pub stderr: f64,
    pub tolerance: f64,
    /// Set when some residual is within a few orders of magnitude of the
    /// roundoff level of the terms that produced it.
    pub ill_conditioned: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub mode: ResidualMode,
    pub potential: String,
    pub order: usize,
    pub convention: Convention,
    pub claimed_order: u32,
    pub symbolic: Option<SymbolicResidual>,
    pub numeric: Option<NumericResidual>,
    pub passed: bool,
}

impl ResidualReport {
    /// Short human-readable table.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "potential     {}\norder L       {}\nconvention    {}\nmode          {}\nclaimed order {}\n",
            self.potential,
            self.order,
            self.convention,
            match self.mode {
                ResidualMode::Symbolic => "symbolic",
                ResidualMode::Numeric => "numeric",
            },
            self.claimed_order
        );
        if let Some(sym) = &self.symbolic {
            let obs = sym
                .observed_order
                .map_or("inf (zero residual)".to_string(), |o| o.to_string());
            s += &format!("observed      {obs}\n");
            for c in &sym.census {
                s += &format!(
                    "  hbar^{:<3} cells {:>5}  monomials {:>7}\n",
                    c.hbar_power, c.cells, c.monomials
                );
            }
        }
        if let Some(num) = &self.numeric {
            s += &format!(
                "slope         {:.4} +/- {:.4} (tolerance {})\n",
                num.slope, num.stderr, num.tolerance
            );
            for (h, r) in num.hbars.iter().zip(&num.max_residual) {
                s += &format!("  hbar {h:<8} max|R| {r:.6e}\n");
            }
            if num.ill_conditioned {
                s += "  warning: ill-conditioned fit (residual near roundoff)\n";
            }
        }
        s += &format!("result        {}\n", if self.passed { "PASS" } else { "FAIL" });
        s
    }
}

fn claimed(series: &WignerSeries) -> u32 {
    2 * series.order() as u32 + 2
}

/// Largest `j` with `V^{(2j+1)} ≠ 0` for a polynomial of degree `d`.
fn polynomial_j_max(v: &RingElem) -> usize {
    match v.x_degree() {
        Some(d) if d >= 3 => ((d - 1) / 2) as usize,
        _ => 0,
    }
}

/// Exact `R_n` for every `n` up to the last one that can be nonzero.
pub fn residual_terms(series: &WignerSeries, execution: Execution) -> Result<Vec<SeriesTerm>, VerifyError> {
    let v = &series.potential;
    if !v.is_polynomial() {
        return Err(VerifyError::TrigPotential);
    }
    let l_max = series.order();
    let n_max = l_max + polynomial_j_max(v);
    let rec = Recursion::new(v, n_max, execution);
    Ok((0..=n_max)
        .map(|n| {
            let sum = rec.order_sum(n, &series.terms);
            if n <= l_max {
                series.terms[n].ddx().sub(&sum)
            } else {
                SeriesTerm::zero().sub(&sum)
            }
        })
        .collect())
}

pub fn residual_symbolic(series: &WignerSeries, execution: Execution) -> Result<ResidualReport, VerifyError> {
    let r = residual_terms(series, execution)?;
    let census: Vec<OrderCensus> = r
        .iter()
        .enumerate()
        .filter(|(_, t)| !t.is_zero())
        .map(|(n, t)| OrderCensus {
            hbar_power: 2 * n as u32,
            cells: t.len(),
            monomials: t.monomial_count(),
        })
        .collect();
    let observed_order = census.first().map(|c| c.hbar_power);
    let claimed_order = claimed(series);
    Ok(ResidualReport {
        mode: ResidualMode::Symbolic,
        potential: series.potential.to_string(),
        order: series.order(),
        convention: series.convention,
        claimed_order,
        passed: observed_order.is_none_or(|o| o >= claimed_order),
        symbolic: Some(SymbolicResidual {
            observed_order,
            census,
        }),
        numeric: None,
    })
}

#[derive(Clone, Debug)]
pub struct NumericOptions {
    pub hbars: Vec<f64>,
    pub samples: usize,
    pub j_max: usize,
    pub rng_seed: u64,
    /// Half-widths of the sampled `x` and `p` boxes.
    pub x_half_width: f64,
    pub p_half_width: f64,
    pub tolerance: f64,
    pub execution: Execution,
}

impl Default for NumericOptions {
    fn default() -> Self {
        Self {
            hbars: vec![0.05, 0.0707, 0.1, 0.141, 0.2],
            samples: 200,
            j_max: 6,
            rng_seed: 0x5eed,
            x_half_width: 1.5,
            p_half_width: 1.5,
            tolerance: 0.5,
            execution: Execution::Parallel,
        }
    }
}

/// Symbolic pieces of the truncated residual, evaluated numerically per sample.
struct NumericResidualKernel<'a> {
    series: &'a WignerSeries,
    j_max: usize,
    dfx: Vec<SeriesTerm>,
    /// `dh[l][r] = ∂_H^r f_l`.
    dh: Vec<Vec<SeriesTerm>>,
    odd: Vec<RingElem>,
    weights: Vec<Vec<f64>>,
    n_derivs: usize,
}

impl<'a> NumericResidualKernel<'a> {
    fn new(series: &'a WignerSeries, j_max: usize) -> Self {
        let v = &series.potential;
        let mut odd = vec![RingElem::zero()];
        let mut d = v.ddx();
        for _ in 1..=j_max {
            d = d.ddx().ddx();
            odd.push(d.clone());
        }
        let dh = series
            .terms
            .iter()
            .map(|t| {
                let mut row = vec![t.clone()];
                for r in 1..=2 * j_max + 1 {
                    let next = row[r - 1].dh();
                    row.push(next);
                }
                row
            })
            .collect();
        let weights = (0..=j_max)
            .map(|j| {
                (0..=j)
                    .map(|k| moyal_weight(j as u32, k as u32).to_f64().unwrap())
                    .collect()
            })
            .collect();
        Self {
            series,
            j_max,
            dfx: series.terms.iter().map(SeriesTerm::ddx).collect(),
            dh,
            odd,
            weights,
            n_derivs: series.max_j() as usize + 2 * j_max + 2,
        }
    }

    /// `(R_n, Σ|contributions to R_n|)` for `n = 0..=L+j_max`.
    fn at(&self, seed: &dyn Seed, x: f64, h: f64) -> Result<Vec<(f64, f64)>, SeedError> {
        let mut d = vec![0.0; self.n_derivs];
        seed.derivatives(h, &mut d)?;
        let l_max = self.series.order();
        let hv = h - self.series.potential.eval(x);
        let odd: Vec<f64> = self.odd.iter().map(|o| o.eval(x)).collect();
        let mut out = Vec::with_capacity(l_max + self.j_max + 1);
        for n in 0..=l_max + self.j_max {
            let (mut r, mut mag) = (0.0, 0.0);
            if n <= l_max {
                r = self.dfx[n].eval(x, h, &d);
                mag = r.abs();
            }
            for j in 1..=n.min(self.j_max) {
                if n - j > l_max {
                    continue;
                }
                for k in 0..=j {
                    let c = self.weights[j][k]
                        * odd[j]
                        * hv.powi((j - k) as i32)
                        * self.dh[n - j][2 * j - k + 1].eval(x, h, &d);
                    r -= c;
                    mag += c.abs();
                }
            }
            out.push((r, mag));
        }
        Ok(out)
    }
}

/// Least-squares slope of `ys` against `xs` and its standard error.
fn fit_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - my - slope * (x - mx)).powi(2))
        .sum();
    let stderr = if xs.len() > 2 {
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, stderr)
}

pub fn residual_numeric(
    series: &WignerSeries,
    seed: &dyn Seed,
    opts: &NumericOptions,
) -> Result<ResidualReport, VerifyError> {
    let hb = &opts.hbars;
    if hb.len() < 4 {
        return Err(VerifyError::Invalid("need at least 4 hbar values".into()));
    }
    if hb.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
        return Err(VerifyError::Invalid("hbar values must be positive".into()));
    }
    let (lo, hi) = hb
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &h| (a.min(h), b.max(h)));
    if hi < 4.0 * lo {
        return Err(VerifyError::Invalid("hbar values must span a factor of 4".into()));
    }
    if opts.j_max < series.order() + 1 {
        return Err(VerifyError::Invalid(format!(
            "j_max = {} must be at least L + 1 = {}",
            opts.j_max,
            series.order() + 1
        )));
    }
    if opts.samples == 0 {
        return Err(VerifyError::Invalid("need at least one sample".into()));
    }

    let kernel = NumericResidualKernel::new(series, opts.j_max);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);
    let points: Vec<(f64, f64)> = (0..opts.samples)
        .map(|_| {
            let x = rng.gen_range(-opts.x_half_width..=opts.x_half_width);
            let p: f64 = rng.gen_range(-opts.p_half_width..=opts.p_half_width);
            (x, 0.5 * p * p + series.potential.eval(x))
        })
        .collect();
    let per_sample = opts
        .execution
        .map_slice(&points, |&(x, h)| kernel.at(seed, x, h));
    let per_sample = per_sample.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut max_residual = Vec::with_capacity(hb.len());
    let mut ill_conditioned = false;
    for &h in hb {
        let h2 = h * h;
        let (mut worst, mut worst_mag) = (0.0f64, 0.0f64);
        for orders in &per_sample {
            let (r, mag) = orders
                .iter()
                .rev()
                .fold((0.0, 0.0), |(ar, am), (r, m)| (ar * h2 + r, am * h2 + m));
            worst = worst.max(r.abs());
            worst_mag = worst_mag.max(mag);
        }
        if worst <= 1e-12 * worst_mag {
            ill_conditioned = true;
        }
        max_residual.push(worst);
    }
    let lx: Vec<f64> = hb.iter().map(|h| h.ln()).collect();
    let ly: Vec<f64> = max_residual.iter().map(|r| r.max(f64::MIN_POSITIVE).ln()).collect();
    let (slope, stderr) = fit_slope(&lx, &ly);
    let claimed_order = claimed(series);
    Ok(ResidualReport {
        mode: ResidualMode::Numeric,
        potential: series.potential.to_string(),
        order: series.order(),
        convention: series.convention,
        claimed_order,
        symbolic: None,
        passed: slope >= claimed_order as f64 - opts.tolerance,
        numeric: Some(NumericResidual {
            seed: seed.label(),
            j_max: opts.j_max,
            samples: opts.samples,
            rng_seed: opts.rng_seed,
            hbars: hb.clone(),
            max_residual,
            slope,
            stderr,
            tolerance: opts.tolerance,
            ill_conditioned,
        }),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxwellCheck {
    pub points: usize,
    pub max_rel_error: f64,
    pub passed: bool,
}

/// Compares the closed-form first correction under Maxwell–Boltzmann
/// derivatives `f₀^{(j)} = (−1)^j e^{−H}` with the direct formula
/// `e^{−H} [−(1/2) V″ (1/4 − (H−V)/6) + (1/24) V′²]` at random `(x, H)`.
/// `flip_sign` drops the `(−1)^j` factor to confirm the check can fail.
pub fn maxwell_check_for(v: &RingElem, flip_sign: bool, points: usize, rng_seed: u64) -> MaxwellCheck {
    let f1 = closed_form_f1(v);
    let v1 = v.ddx();
    let v2 = v1.ddx();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut max_rel_error = 0.0f64;
    for _ in 0..points {
        let x: f64 = rng.gen_range(-2.0..=2.0);
        let h: f64 = rng.gen_range(-1.0..=3.0);
        let e = (-h).exp();
        let d: Vec<f64> = (0..4)
            .map(|j| if flip_sign || j % 2 == 0 { e } else { -e })
            .collect();
        let series_value = f1.eval(x, h, &d);
        let (vx, v1x, v2x) = (v.eval(x), v1.eval(x), v2.eval(x));
        let direct = e * (-0.5 * v2x * (0.25 - (h - vx) / 6.0) + v1x * v1x / 24.0);
        let scale = direct.abs().max(f64::MIN_POSITIVE);
        max_rel_error = max_rel_error.max((series_value - direct).abs() / scale);
    }
    MaxwellCheck {
        points,
        max_rel_error,
        passed: max_rel_error <= 1e-10,
    }
}

/// The Maxwell–Boltzmann cross-check on the double-well potential.
pub fn wigner_maxwell_check() -> bool {
    let v = crate::potentials::goldstone();
    maxwell_check_for(&v, false, 50, 27).passed
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials;
    use crate::ring::parse_potential;
    use crate::seed::SeedDistribution;
    use crate::series::{build_series, BuildOptions};

    fn build(v: &RingElem, order: usize, conv: Convention) -> WignerSeries {
        build_series(v, order, &BuildOptions::with_convention(conv)).unwrap()
    }

    #[test]
    fn symbolic_order_is_two_l_plus_two() {
        let v = potentials::goldstone();
        for conv in [Convention::Paper, Convention::Uniform] {
            for l in 0..=3 {
                let r = residual_symbolic(&build(&v, l, conv), Execution::Parallel).unwrap();
                assert_eq!(r.symbolic.unwrap().observed_order, Some(2 * l as u32 + 2));
                assert!(r.passed);
            }
        }
    }

    #[test]
    fn quadratic_residual_vanishes() {
        let v = parse_potential("1 + q + q^2").unwrap();
        let r = residual_symbolic(&build(&v, 3, Convention::Uniform), Execution::Sequential).unwrap();
        assert_eq!(r.symbolic.as_ref().unwrap().observed_order, None);
        assert!(r.passed);
        assert!(r.summary().contains("inf"));
    }

    #[test]
    fn symbolic_rejects_trig() {
        let v = potentials::modulated_harmonic(&"1/2".parse().unwrap());
        let s = build(&v, 1, Convention::Paper);
        assert_eq!(
            residual_symbolic(&s, Execution::Sequential).unwrap_err(),
            VerifyError::TrigPotential
        );
    }

    #[test]
    fn corrupted_series_is_detected() {
        let v = potentials::goldstone();
        let mut s = build(&v, 2, Convention::Paper);
        s.terms[2] = s.terms[2].scale_rational(&"101/100".parse().unwrap());
        let r = residual_symbolic(&s, Execution::Sequential).unwrap();
        assert_eq!(r.symbolic.unwrap().observed_order, Some(4));
        assert!(!r.passed);
    }

    #[test]
    fn numeric_slope_for_classical_seed() {
        let v = potentials::goldstone();
        let seed = SeedDistribution::fermi_dirac(1.0).unwrap();
        let opts = NumericOptions {
            hbars: vec![0.05, 0.1, 0.2, 0.4],
            j_max: 1,
            samples: 50,
            ..Default::default()
        };
        let r = residual_numeric(&build(&v, 0, Convention::Paper), &seed, &opts).unwrap();
        let num = r.numeric.unwrap();
        assert!((num.slope - 2.0).abs() < 0.3, "{}", num.slope);
    }

    #[test]
    fn numeric_slope_tracks_truncation_order() {
        let v = potentials::goldstone();
        let seed = SeedDistribution::fermi_dirac(1.0).unwrap();
        for l in 1..=2 {
            let opts = NumericOptions {
                hbars: vec![0.05, 0.1, 0.2, 0.4],
                j_max: l + 1,
                samples: 50,
                ..Default::default()
            };
            let r = residual_numeric(&build(&v, l, Convention::Paper), &seed, &opts).unwrap();
            let num = r.numeric.unwrap();
            let expected = 2.0 * l as f64 + 2.0;
            assert!((num.slope - expected).abs() < 0.3, "L={l}: {}", num.slope);
            assert!(r.passed);
        }
    }

    #[test]
    fn numeric_rejects_bad_requests() {
        let v = potentials::goldstone();
        let s = build(&v, 2, Convention::Paper);
        let seed = SeedDistribution::maxwell_boltzmann();
        let narrow = NumericOptions {
            hbars: vec![0.1, 0.12, 0.14, 0.16],
            ..Default::default()
        };
        assert!(residual_numeric(&s, &seed, &narrow).is_err());
        let shallow = NumericOptions {
            j_max: 2,
            ..Default::default()
        };
        assert!(residual_numeric(&s, &seed, &shallow).is_err());
    }

    #[test]
    fn maxwell_cross_check_and_mutation() {
        assert!(wigner_maxwell_check());
        let flipped = maxwell_check_for(&potentials::goldstone(), true, 50, 27);
        assert!(!flipped.passed);
    }

    #[test]
    fn maxwell_cross_check_quadratic_is_energy_only() {
        let v = parse_potential("1/3 - 2*q + 5/2*q^2").unwrap();
        let f1 = closed_form_f1(&v);
        assert!(f1.cells().all(|(_, c)| c.is_constant()));
        assert!(maxwell_check_for(&v, false, 50, 3).passed);
    }
}
