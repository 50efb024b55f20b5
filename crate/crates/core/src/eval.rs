//! Numeric evaluation of a [`WignerSeries`] for a concrete seed and `ħ`.
//!
//! The exact coefficients are compiled once to `f64`. For a grid, every
//! coefficient is evaluated once per `q` row; each point then costs one seed
//! derivative sweep plus a Horner pass in `H` per `(l, j)` group and a final
//! Horner pass in `ħ²`. [`eval_point`] runs the same row/point kernel, so
//! pointwise and grid values agree bit for bit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::ring::{RingElem, Trig};
use crate::seed::{Seed, SeedError};
use crate::series::{Convention, WignerSeries};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error(transparent)]
    Seed(#[from] SeedError),
    #[error("non-normalizable field: integral = {0}")]
    NonNormalizable(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("seed supplies derivatives up to order {available}, series needs {needed}")]
    SeedOrder { needed: usize, available: usize },
    #[error("hbar must be finite and nonnegative, got {0}")]
    InvalidHbar(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub q_min: f64,
    pub q_max: f64,
    pub n_q: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub n_p: usize,
}

/// `n` uniform nodes on `[a, b]`; mirrored exactly when `a == -b`.
fn axis(a: f64, b: f64, n: usize) -> Vec<f64> {
    let step = (b - a) / (n - 1) as f64;
    let mut pts: Vec<f64> = (0..n).map(|i| a + step * i as f64).collect();
    pts[n - 1] = b;
    if a == -b {
        for i in 0..n / 2 {
            pts[n - 1 - i] = -pts[i];
        }
        if n % 2 == 1 {
            pts[n / 2] = 0.0;
        }
    }
    pts
}

/// Trapezoid weights for `n` uniform nodes with spacing `h`.
pub(crate) fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    w[0] = 0.5 * h;
    w[n - 1] = 0.5 * h;
    w
}

/// Fixed-order pairwise summation.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

impl GridSpec {
    pub fn square(lo: f64, hi: f64, n: usize) -> Self {
        Self {
            q_min: lo,
            q_max: hi,
            n_q: n,
            p_min: lo,
            p_max: hi,
            n_p: n,
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let ok = |a: f64, b: f64, n: usize| a.is_finite() && b.is_finite() && a < b && n >= 2;
        if !ok(self.q_min, self.q_max, self.n_q) {
            return Err(EvalError::InvalidGrid(format!(
                "q range [{}, {}] with {} nodes",
                self.q_min, self.q_max, self.n_q
            )));
        }
        if !ok(self.p_min, self.p_max, self.n_p) {
            return Err(EvalError::InvalidGrid(format!(
                "p range [{}, {}] with {} nodes",
                self.p_min, self.p_max, self.n_p
            )));
        }
        Ok(())
    }

    pub fn dq(&self) -> f64 {
        (self.q_max - self.q_min) / (self.n_q - 1) as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / (self.n_p - 1) as f64
    }

    pub fn q_points(&self) -> Vec<f64> {
        axis(self.q_min, self.q_max, self.n_q)
    }

    pub fn p_points(&self) -> Vec<f64> {
        axis(self.p_min, self.p_max, self.n_p)
    }

    pub fn q_weights(&self) -> Vec<f64> {
        trapezoid_weights(self.n_q, self.dq())
    }

    pub fn p_weights(&self) -> Vec<f64> {
        trapezoid_weights(self.n_p, self.dp())
    }

    /// Same box with `factor`-times finer spacing.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            n_q: (self.n_q - 1) * factor + 1,
            n_p: (self.n_p - 1) * factor + 1,
            ..*self
        }
    }
}

#[derive(Clone, Debug)]
struct CompiledMonomial {
    xpow: i32,
    trig: Trig,
    k: f64,
    c: f64,
}

#[derive(Clone, Debug)]
struct CompiledRing(Vec<CompiledMonomial>);

impl CompiledRing {
    fn new(e: &RingElem) -> Self {
        Self(
            e.terms()
                .map(|(m, c)| CompiledMonomial {
                    xpow: m.xpow() as i32,
                    trig: m.trig(),
                    k: m.wavenumber().map_or(0.0, |k| k.to_f64()),
                    c: c.to_f64(),
                })
                .collect(),
        )
    }

    fn eval(&self, x: f64) -> f64 {
        self.0
            .iter()
            .map(|t| {
                let base = t.c * x.powi(t.xpow);
                match t.trig {
                    Trig::None => base,
                    Trig::Sin => base * (t.k * x).sin(),
                    Trig::Cos => base * (t.k * x).cos(),
                }
            })
            .sum()
    }
}

/// Coefficients of one `(l, j)` pair as a polynomial in `H`:
/// `by_m[m]` indexes into the compiled ring table.
#[derive(Clone, Debug)]
struct Group {
    l: usize,
    j: usize,
    by_m: Vec<Option<usize>>,
}

/// A series compiled for repeated numeric evaluation with one seed.
pub struct Evaluator<'a> {
    potential: CompiledRing,
    rings: Vec<CompiledRing>,
    groups: Vec<Group>,
    order: usize,
    n_derivs: usize,
    seed: &'a dyn Seed,
}

/// Coefficient values for one `q`.
pub struct Row {
    q: f64,
    v: f64,
    coeffs: Vec<f64>,
}

impl Row {
    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn potential(&self) -> f64 {
        self.v
    }
}

impl<'a> Evaluator<'a> {
    pub fn new(series: &WignerSeries, seed: &'a dyn Seed) -> Result<Self, EvalError> {
        let mut rings = Vec::new();
        let mut groups: Vec<Group> = Vec::new();
        for (l, t) in series.terms.iter().enumerate() {
            for (cell, c) in t.cells() {
                let (m, j) = (cell.m as usize, cell.j as usize);
                let idx = rings.len();
                rings.push(CompiledRing::new(c));
                let pos = groups.iter().position(|g| g.l == l && g.j == j);
                let g = match pos {
                    Some(p) => &mut groups[p],
                    None => {
                        groups.push(Group {
                            l,
                            j,
                            by_m: Vec::new(),
                        });
                        groups.last_mut().unwrap()
                    }
                };
                if g.by_m.len() <= m {
                    g.by_m.resize(m + 1, None);
                }
                g.by_m[m] = Some(idx);
            }
        }
        let max_j = series.max_j() as usize;
        if let Some(avail) = seed.max_order() {
            if avail < max_j {
                return Err(EvalError::SeedOrder {
                    needed: max_j,
                    available: avail,
                });
            }
        }
        Ok(Self {
            potential: CompiledRing::new(&series.potential),
            rings,
            groups,
            order: series.order(),
            n_derivs: max_j + 1,
            seed,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn row(&self, q: f64) -> Row {
        Row {
            q,
            v: self.potential.eval(q),
            coeffs: self.rings.iter().map(|r| r.eval(q)).collect(),
        }
    }

    /// Per-order partial sums `S_l` with `f = Σ_l ħ^{2l} S_l`.
    pub fn orders_in_row(&self, row: &Row, p: f64) -> Result<Vec<f64>, EvalError> {
        let h = 0.5 * p * p + row.v;
        let mut d = vec![0.0; self.n_derivs];
        self.seed.derivatives(h, &mut d)?;
        let mut sums = vec![0.0; self.order + 1];
        for g in &self.groups {
            let poly = g
                .by_m
                .iter()
                .rev()
                .fold(0.0, |acc, idx| acc * h + idx.map_or(0.0, |i| row.coeffs[i]));
            sums[g.l] += poly * d[g.j];
        }
        Ok(sums)
    }

    pub fn value_in_row(&self, row: &Row, p: f64, hbar: f64) -> Result<f64, EvalError> {
        let sums = self.orders_in_row(row, p)?;
        let h2 = hbar * hbar;
        Ok(sums.iter().rev().fold(0.0, |acc, s| acc * h2 + s))
    }

    pub fn value(&self, q: f64, p: f64, hbar: f64) -> Result<f64, EvalError> {
        self.value_in_row(&self.row(q), p, hbar)
    }
}

/// `f(q, p)` summed through `ħ^{2L}` with `H = p²/2 + V(q)`.
pub fn eval_point(
    series: &WignerSeries,
    seed: &dyn Seed,
    hbar: f64,
    q: f64,
    p: f64,
) -> Result<f64, EvalError> {
    check_hbar(hbar)?;
    Evaluator::new(series, seed)?.value(q, p, hbar)
}

fn check_hbar(hbar: f64) -> Result<(), EvalError> {
    if hbar.is_finite() && hbar >= 0.0 {
        Ok(())
    } else {
        Err(EvalError::InvalidHbar(hbar))
    }
}

/// Provenance carried alongside a field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSource {
    pub potential: String,
    pub order: usize,
    pub convention: Convention,
    pub seed: String,
}

/// Wigner function sampled on a grid, stored row-major (`q` outer).
#[derive(Clone, Debug, PartialEq)]
pub struct WignerField {
    pub grid: GridSpec,
    pub hbar: f64,
    pub values: Vec<f64>,
    /// Trapezoid integral of the raw field; values were divided by it when
    /// `normalized` is set.
    pub norm_constant: f64,
    pub normalized: bool,
    pub source: FieldSource,
}

impl WignerField {
    pub fn at(&self, iq: usize, ip: usize) -> f64 {
        self.values[iq * self.grid.n_p + ip]
    }

    pub fn row(&self, iq: usize) -> &[f64] {
        &self.values[iq * self.grid.n_p..(iq + 1) * self.grid.n_p]
    }

    /// `∫∫ g(f) dq dp` by the trapezoid rule with pairwise summation.
    pub fn integrate_with(&self, g: impl Fn(f64) -> f64) -> f64 {
        let wq = self.grid.q_weights();
        let wp = self.grid.p_weights();
        let rows: Vec<f64> = (0..self.grid.n_q)
            .map(|i| {
                let terms: Vec<f64> = self.row(i).iter().zip(&wp).map(|(f, w)| g(*f) * w).collect();
                wq[i] * pairwise_sum(&terms)
            })
            .collect();
        pairwise_sum(&rows)
    }

    pub fn integral(&self) -> f64 {
        self.integrate_with(|f| f)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> WignerField {
        WignerField {
            values: self.values.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }

    /// CSV with header `q,p,f`, one node per line in row-major order.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "q,p,f")?;
        let qs = self.grid.q_points();
        let ps = self.grid.p_points();
        for (i, q) in qs.iter().enumerate() {
            for (k, p) in ps.iter().enumerate() {
                writeln!(w, "{q},{p},{:e}", self.at(i, k))?;
            }
        }
        Ok(())
    }

    pub fn sidecar(&self) -> FieldSidecar {
        FieldSidecar {
            grid: self.grid,
            hbar: self.hbar,
            order: self.source.order,
            convention: self.source.convention,
            seed: self.source.seed.clone(),
            potential: self.source.potential.clone(),
            normalized: self.normalized,
            norm_constant: self.norm_constant,
            min: self.min(),
            max: self.max(),
        }
    }
}

/// JSON metadata written next to a field CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSidecar {
    pub grid: GridSpec,
    pub hbar: f64,
    pub order: usize,
    pub convention: Convention,
    pub seed: String,
    pub potential: String,
    pub normalized: bool,
    pub norm_constant: f64,
    pub min: f64,
    pub max: f64,
}

/// Evaluates the series on every grid node, optionally normalizing to unit
/// trapezoid integral.
pub fn eval_field(
    series: &WignerSeries,
    seed: &dyn Seed,
    hbar: f64,
    grid: &GridSpec,
    normalize: bool,
    execution: Execution,
) -> Result<WignerField, EvalError> {
    check_hbar(hbar)?;
    grid.validate()?;
    let ev = Evaluator::new(series, seed)?;
    let qs = grid.q_points();
    let ps = grid.p_points();
    let rows = execution.map_slice(&qs, |&q| -> Result<Vec<f64>, EvalError> {
        let row = ev.row(q);
        ps.iter().map(|&p| ev.value_in_row(&row, p, hbar)).collect()
    });
    let mut values = Vec::with_capacity(grid.n_q * grid.n_p);
    for r in rows {
        values.extend(r?);
    }
    let mut field = WignerField {
        grid: *grid,
        hbar,
        values,
        norm_constant: 1.0,
        normalized: false,
        source: FieldSource {
            potential: series.potential.to_string(),
            order: series.order(),
            convention: series.convention,
            seed: seed.label(),
        },
    };
    let integral = field.integral();
    if normalize {
        if !(integral.is_finite() && integral > 0.0) {
            return Err(EvalError::NonNormalizable(integral));
        }
        for v in &mut field.values {
            *v /= integral;
        }
        field.normalized = true;
    }
    field.norm_constant = integral;
    Ok(field)
}
