use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use super::SeedError;

// 15-point Kronrod nodes/weights on [-1, 1] and the embedded 7-point Gauss
// weights (nodes at odd indices).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) by global interval bisection.
pub(crate) fn integrate(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_intervals: usize,
) -> Result<f64, SeedError> {
    let (v, e) = gk15(f, a, b);
    let mut parts = vec![(a, b, v, e)];
    loop {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= abs_tol {
            return Ok(total);
        }
        if parts.len() >= max_intervals {
            return Err(SeedError::NonConvergent {
                estimate: total,
                error: err,
            });
        }
        let worst = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap();
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(f, lo, mid);
        let (v2, e2) = gk15(f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

/// `1/(e^s/z + 1)` written as a logistic in `s - ln z`.
fn fermi(s: f64, ln_z: f64) -> f64 {
    let t = s - ln_z;
    if t > 0.0 {
        let e = (-t).exp();
        e / (1.0 + e)
    } else {
        1.0 / (t.exp() + 1.0)
    }
}

/// `Li_ν(-z) = -(1/Γ(ν)) ∫_0^∞ s^{ν-1} / (e^s/z + 1) ds`, `ν > 0`, `z > 0`.
///
/// The integrand is made smooth at the origin by `s = t²` (`ν ≥ 1/2`) or
/// `s = t^{1/ν}` (`ν < 1/2`); the range is cut where the Fermi factor has
/// decayed below roundoff.
pub fn polylog_neg(nu: f64, z: f64) -> Result<f64, SeedError> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(SeedError::InvalidSpec(format!("polylog order {nu}")));
    }
    if !(z > 0.0 && z.is_finite()) {
        return Err(SeedError::InvalidFugacity(z));
    }
    let ln_z = z.ln();
    let s_max = ln_z.max(0.0) + 60.0 + 2.0 * nu;
    let g = gamma(nu);
    let tol = 1e-12 * g.min(1.0);
    let integral = if nu >= 0.5 {
        let f = |t: f64| 2.0 * t.powf(2.0 * nu - 1.0) * fermi(t * t, ln_z);
        integrate(&f, 0.0, s_max.sqrt(), tol, 4000)?
    } else {
        let f = |t: f64| fermi(t.powf(1.0 / nu), ln_z) / nu;
        integrate(&f, 0.0, s_max.powf(nu), tol, 4000)?
    };
    Ok(-integral / g)
}

/// Degeneracy `χ = T_F/T` from `Li_{3/2}(-z) = -(4/(3√π)) χ^{3/2}`.
pub fn chi_from_z(z: f64) -> Result<f64, SeedError> {
    let li = polylog_neg(1.5, z)?;
    let sqrt_pi = std::f64::consts::PI.sqrt();
    Ok((-(3.0 * sqrt_pi / 4.0) * li).powf(2.0 / 3.0))
}

/// Inverse of [`chi_from_z`] by bisection in `μ = ln z`.
pub fn z_from_chi(chi: f64) -> Result<f64, SeedError> {
    if !(chi > 0.0 && chi.is_finite()) {
        return Err(SeedError::BracketFailure(chi));
    }
    let resid = |mu: f64| chi_from_z(mu.exp()).map(|c| c - chi);
    let (mut lo, mut hi) = (-8.0f64, 8.0f64);
    let mut steps = 0;
    while resid(lo)? > 0.0 {
        lo = lo * 2.0 - 8.0;
        steps += 1;
        if steps > 8 || lo < -700.0 {
            return Err(SeedError::BracketFailure(chi));
        }
    }
    steps = 0;
    while resid(hi)? < 0.0 {
        hi = hi * 2.0 + 8.0;
        steps += 1;
        if steps > 8 || hi > 700.0 {
            return Err(SeedError::BracketFailure(chi));
        }
    }
    while hi - lo > 1e-11 {
        let mid = 0.5 * (lo + hi);
        if resid(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyCalibration {
    pub z: f64,
    pub mu: f64,
    pub chi: f64,
}

impl DegeneracyCalibration {
    pub fn from_z(z: f64) -> Result<Self, SeedError> {
        Ok(Self {
            z,
            mu: z.ln(),
            chi: chi_from_z(z)?,
        })
    }

    pub fn from_chi(chi: f64) -> Result<Self, SeedError> {
        let z = z_from_chi(chi)?;
        Ok(Self { z, mu: z.ln(), chi })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_argument_is_linear() {
        let v = polylog_neg(1.5, 1e-6).unwrap();
        assert!((v + 1e-6).abs() < 1e-9);
    }

    #[test]
    fn li_three_halves_at_minus_one_matches_alternating_series() {
        // Pair consecutive terms to get an absolutely convergent sum and add
        // the Euler-transform tail estimate (half the next term).
        let mut acc = 0.0;
        let n_max = 2_000_000u64;
        for n in 1..=n_max {
            let t = 1.0 / (n as f64).powf(1.5);
            acc += if n % 2 == 1 { t } else { -t };
        }
        acc += 0.5 / ((n_max + 1) as f64).powf(1.5);
        let oracle = -acc;
        let v = polylog_neg(1.5, 1.0).unwrap();
        assert!((v - oracle).abs() < 1e-9, "{v} vs {oracle}");
    }

    #[test]
    fn li_one_is_log() {
        let v = polylog_neg(1.0, 1.0).unwrap();
        assert!((v + 2f64.ln()).abs() < 1e-10);
        let v = polylog_neg(1.0, 7.5).unwrap();
        assert!((v + 8.5f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn small_order_branch() {
        // Li_{1/4}(-z) for small z is -z + z^2/2^{1/4} - ...
        let z = 1e-3;
        let v = polylog_neg(0.25, z).unwrap();
        let series = -z + z * z / 2f64.powf(0.25) - z.powi(3) / 3f64.powf(0.25);
        assert!((v - series).abs() < 1e-10);
    }

    #[test]
    fn intermediate_degeneracy() {
        let chi = chi_from_z(1.0).unwrap();
        assert!((chi - 1.01).abs() <= 0.01, "{chi}");
    }

    #[test]
    fn classical_limit_and_monotonicity() {
        assert!(chi_from_z(1e-8).unwrap() < 1e-4);
        let mut prev = 0.0;
        for k in -20..=20 {
            let c = chi_from_z(10f64.powf(k as f64 / 5.0)).unwrap();
            assert!(c > prev);
            prev = c;
        }
    }

    #[test]
    fn round_trip() {
        let z = z_from_chi(chi_from_z(2.5).unwrap()).unwrap();
        assert!((z - 2.5).abs() < 1e-5);
        let cal = DegeneracyCalibration::from_chi(1.01).unwrap();
        assert!((cal.z - 1.0).abs() < 0.03);
    }
}
