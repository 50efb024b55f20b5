//! Faithfulness checks on a sampled Wigner function: marginals, the purity
//! functional `Q` with its uncertainty bound, and negativity scans.
//!
//! Every integral uses the field's own grid and trapezoid weights.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{eval_field, pairwise_sum, EvalError, GridSpec, WignerField};
use crate::exec::Execution;
use crate::seed::Seed;
use crate::series::WignerSeries;

#[derive(Debug, Error, PartialEq)]
pub enum DiagnosticsError {
    #[error("degenerate field: double integral = {0}")]
    Degenerate(f64),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Default negativity threshold relative to the maximum value.
pub const DEFAULT_REL_EPS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Marginals {
    pub q: Vec<f64>,
    pub p_q: Vec<f64>,
    pub p: Vec<f64>,
    pub p_p: Vec<f64>,
}

fn double_integral(field: &WignerField) -> Result<f64, DiagnosticsError> {
    let total = field.integral();
    if total.is_finite() && total > 0.0 {
        Ok(total)
    } else {
        Err(DiagnosticsError::Degenerate(total))
    }
}

fn weighted_sum(values: &[f64], weights: &[f64]) -> f64 {
    let terms: Vec<f64> = values.iter().zip(weights).map(|(v, w)| v * w).collect();
    pairwise_sum(&terms)
}

/// Position and momentum marginals, each normalized by the full double
/// integral so that its trapezoid integral is one.
pub fn marginals(field: &WignerField) -> Result<Marginals, DiagnosticsError> {
    let total = double_integral(field)?;
    let g = &field.grid;
    let wq = g.q_weights();
    let wp = g.p_weights();
    let p_q = (0..g.n_q)
        .map(|i| weighted_sum(field.row(i), &wp) / total)
        .collect();
    let p_p = (0..g.n_p)
        .map(|k| {
            let col: Vec<f64> = (0..g.n_q).map(|i| field.at(i, k)).collect();
            weighted_sum(&col, &wq) / total
        })
        .collect();
    Ok(Marginals {
        q: g.q_points(),
        p_q,
        p: g.p_points(),
        p_p,
    })
}

impl Marginals {
    pub fn write_q_csv<W: std::io::Write>(&self, w: W) -> std::io::Result<()> {
        write_two_columns(w, ("q", "P_q"), &self.q, &self.p_q)
    }

    pub fn write_p_csv<W: std::io::Write>(&self, w: W) -> std::io::Result<()> {
        write_two_columns(w, ("p", "P_p"), &self.p, &self.p_p)
    }
}

fn write_two_columns<W: std::io::Write>(
    mut w: W,
    header: (&str, &str),
    xs: &[f64],
    ys: &[f64],
) -> std::io::Result<()> {
    writeln!(w, "{},{}", header.0, header.1)?;
    for (x, y) in xs.iter().zip(ys) {
        writeln!(w, "{x},{y:e}")?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UncertaintyVerdict {
    Satisfied,
    Violated,
    NotApplicable,
}

impl UncertaintyVerdict {
    pub fn as_bool(self) -> Option<bool> {
        match self {
            Self::Satisfied => Some(true),
            Self::Violated => Some(false),
            Self::NotApplicable => None,
        }
    }
}

impl std::fmt::Display for UncertaintyVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Satisfied => "satisfied",
            Self::Violated => "violated",
            Self::NotApplicable => "not applicable",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QFunctional {
    pub q: f64,
    pub bound_2pi_hbar_q: f64,
    pub verdict: UncertaintyVerdict,
}

/// `Q = ∫∫f² / (∫∫f)²`, independent of the field's normalization, and the
/// verdict `2πħQ ≤ 1` (not applicable at `ħ = 0`).
pub fn q_functional(field: &WignerField) -> Result<QFunctional, DiagnosticsError> {
    let total = double_integral(field)?;
    let q = field.integrate_with(|f| f * f) / (total * total);
    let bound = 2.0 * std::f64::consts::PI * field.hbar * q;
    let verdict = if field.hbar == 0.0 {
        UncertaintyVerdict::NotApplicable
    } else if bound <= 1.0 {
        UncertaintyVerdict::Satisfied
    } else {
        UncertaintyVerdict::Violated
    };
    Ok(QFunctional {
        q,
        bound_2pi_hbar_q: bound,
        verdict,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NegativityReport {
    pub min: f64,
    /// Flat index of the minimum (first occurrence).
    pub argmin: usize,
    /// Coordinates of the minimum: `[q, p]` for a field, `[x]` for a marginal.
    pub location: Vec<f64>,
    pub threshold: f64,
    pub count_below: usize,
    pub fraction_below: f64,
}

/// Scans `values` for entries below `-rel_eps · max|values|`.
pub fn negativity_report(
    values: &[f64],
    rel_eps: f64,
    locate: impl Fn(usize) -> Vec<f64>,
) -> NegativityReport {
    let (argmin, min) = values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |(ia, a), (i, v)| if v < a { (i, v) } else { (ia, a) });
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let threshold = -rel_eps * max.abs();
    let count_below = values.iter().filter(|&&v| v < threshold).count();
    NegativityReport {
        min,
        argmin,
        location: locate(argmin),
        threshold,
        count_below,
        fraction_below: count_below as f64 / values.len() as f64,
    }
}

pub fn field_negativity(field: &WignerField, rel_eps: f64) -> NegativityReport {
    let qs = field.grid.q_points();
    let ps = field.grid.p_points();
    let n_p = field.grid.n_p;
    negativity_report(&field.values, rel_eps, |i| vec![qs[i / n_p], ps[i % n_p]])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub hbar: f64,
    pub grid: GridSpec,
    pub marginals: Marginals,
    pub q: f64,
    pub bound_2pi_hbar_q: f64,
    pub uncertainty: UncertaintyVerdict,
    pub min_f: f64,
    pub argmin_f: [f64; 2],
    pub min_pq: f64,
    pub max_pq: f64,
    pub min_pp: f64,
    pub max_pp: f64,
    /// Largest deviation of either marginal's integral from one.
    pub normalization_residual: f64,
    pub field_negativity: NegativityReport,
    pub pq_negativity: NegativityReport,
    pub pp_negativity: NegativityReport,
}

pub fn diagnose(field: &WignerField, rel_eps: f64) -> Result<DiagnosticsReport, DiagnosticsError> {
    let m = marginals(field)?;
    let qf = q_functional(field)?;
    let fneg = field_negativity(field, rel_eps);
    let pq_neg = negativity_report(&m.p_q, rel_eps, |i| vec![m.q[i]]);
    let pp_neg = negativity_report(&m.p_p, rel_eps, |i| vec![m.p[i]]);
    let norm_q = weighted_sum(&m.p_q, &field.grid.q_weights());
    let norm_p = weighted_sum(&m.p_p, &field.grid.p_weights());
    let max = |xs: &[f64]| xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(DiagnosticsReport {
        hbar: field.hbar,
        grid: field.grid,
        q: qf.q,
        bound_2pi_hbar_q: qf.bound_2pi_hbar_q,
        uncertainty: qf.verdict,
        min_f: fneg.min,
        argmin_f: [fneg.location[0], fneg.location[1]],
        min_pq: pq_neg.min,
        max_pq: max(&m.p_q),
        min_pp: pp_neg.min,
        max_pp: max(&m.p_p),
        normalization_residual: (norm_q - 1.0).abs().max((norm_p - 1.0).abs()),
        field_negativity: fneg,
        pq_negativity: pq_neg,
        pp_negativity: pp_neg,
        marginals: m,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QSweepPoint {
    pub hbar: f64,
    pub q: f64,
    pub bound_2pi_hbar_q: f64,
    pub verdict: UncertaintyVerdict,
}

/// `2πħQ(ħ)` over a list of `ħ` values on a fixed grid.
pub fn q_sweep(
    series: &WignerSeries,
    seed: &dyn Seed,
    hbars: &[f64],
    grid: &GridSpec,
    execution: Execution,
) -> Result<Vec<QSweepPoint>, DiagnosticsError> {
    hbars
        .iter()
        .map(|&hbar| {
            let field = eval_field(series, seed, hbar, grid, false, execution)?;
            let qf = q_functional(&field)?;
            Ok(QSweepPoint {
                hbar,
                q: qf.q,
                bound_2pi_hbar_q: qf.bound_2pi_hbar_q,
                verdict: qf.verdict,
            })
        })
        .collect()
}

pub fn write_q_sweep_csv<W: std::io::Write>(mut w: W, sweep: &[QSweepPoint]) -> std::io::Result<()> {
    writeln!(w, "hbar,Q,two_pi_hbar_Q")?;
    for s in sweep {
        writeln!(w, "{},{:e},{:e}", s.hbar, s.q, s.bound_2pi_hbar_q)?;
    }
    Ok(())
}
