use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::binomial;
use num_rational::BigRational;

use crate::ring::{Coefficient, RingElem};

/// Index of one cell of a [`SeriesTerm`]: the term `H^m · f₀^{(j)}(H)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    /// Power of `H`.
    pub m: u32,
    /// Order of the seed derivative.
    pub j: u32,
}

impl Cell {
    pub const fn new(m: u32, j: u32) -> Self {
        Self { m, j }
    }
}

/// `Σ c_{m,j}(x) · H^m · f₀^{(j)}(H)` with exact ring coefficients.
///
/// Coefficients do not depend on the seed; no zero coefficient is stored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SeriesTerm {
    cells: BTreeMap<Cell, RingElem>,
}

impl SeriesTerm {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `f₀` itself.
    pub fn seed() -> Self {
        Self::single(Cell::new(0, 0), RingElem::one())
    }

    pub fn single(cell: Cell, c: RingElem) -> Self {
        let mut out = Self::zero();
        out.add_cell(cell, c);
        out
    }

    pub fn from_cells<I: IntoIterator<Item = (Cell, RingElem)>>(it: I) -> Self {
        let mut out = Self::zero();
        for (cell, c) in it {
            out.add_cell(cell, c);
        }
        out
    }

    pub fn add_cell(&mut self, cell: Cell, c: RingElem) {
        if c.is_zero() {
            return;
        }
        match self.cells.get_mut(&cell) {
            Some(slot) => {
                let sum = &*slot + &c;
                if sum.is_zero() {
                    self.cells.remove(&cell);
                } else {
                    *slot = sum;
                }
            }
            None => {
                self.cells.insert(cell, c);
            }
        }
    }

    pub fn add_assign(&mut self, other: &SeriesTerm) {
        for (cell, c) in &other.cells {
            self.add_cell(*cell, c.clone());
        }
    }

    pub fn sub(&self, other: &SeriesTerm) -> SeriesTerm {
        let mut out = self.clone();
        for (cell, c) in &other.cells {
            out.add_cell(*cell, -c);
        }
        out
    }

    pub fn get(&self, cell: Cell) -> Option<&RingElem> {
        self.cells.get(&cell)
    }

    pub fn cells(&self) -> impl Iterator<Item = (Cell, &RingElem)> + '_ {
        self.cells.iter().map(|(c, e)| (*c, e))
    }

    pub fn is_zero(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Total number of ring monomials across all cells.
    pub fn monomial_count(&self) -> usize {
        self.cells.values().map(RingElem::len).sum()
    }

    pub fn max_j(&self) -> Option<u32> {
        self.cells.keys().map(|c| c.j).max()
    }

    pub fn max_m(&self) -> Option<u32> {
        self.cells.keys().map(|c| c.m).max()
    }

    pub fn map_ring(&self, f: impl Fn(&RingElem) -> RingElem) -> SeriesTerm {
        Self::from_cells(self.cells.iter().map(|(cell, c)| (*cell, f(c))))
    }

    pub fn scale_rational(&self, r: &BigRational) -> SeriesTerm {
        self.map_ring(|c| c.scale_rational(r))
    }

    pub fn mul_ring(&self, e: &RingElem) -> SeriesTerm {
        self.map_ring(|c| c * e)
    }

    pub fn ddx(&self) -> SeriesTerm {
        self.map_ring(RingElem::ddx)
    }

    /// `∂/∂H`: `H^m f₀^{(j)} → m H^{m-1} f₀^{(j)} + H^m f₀^{(j+1)}`.
    pub fn dh(&self) -> SeriesTerm {
        let mut out = SeriesTerm::zero();
        for (cell, c) in &self.cells {
            if cell.m > 0 {
                out.add_cell(
                    Cell::new(cell.m - 1, cell.j),
                    c.scale(&Coefficient::integer(cell.m as i64)),
                );
            }
            out.add_cell(Cell::new(cell.m, cell.j + 1), c.clone());
        }
        out
    }

    pub fn dh_n(&self, n: usize) -> SeriesTerm {
        let mut out = self.clone();
        for _ in 0..n {
            out = out.dh();
        }
        out
    }

    /// `H`-only part of the term after substituting `x = 0`, exactly.
    pub fn value_at_zero(&self) -> SeriesTerm {
        Self::from_cells(
            self.cells
                .iter()
                .map(|(cell, c)| (*cell, RingElem::constant(c.value_at_zero()))),
        )
    }

    /// Numeric value for given `x`, `H` and seed derivatives `d[j]`.
    pub fn eval(&self, x: f64, h: f64, d: &[f64]) -> f64 {
        self.cells
            .iter()
            .map(|(cell, c)| c.eval(x) * h.powi(cell.m as i32) * d[cell.j as usize])
            .sum()
    }

    /// Multiplies by `(H - V)^power`, expanded binomially.
    pub fn mul_h_minus_v(&self, v: &RingElem, power: u32) -> SeriesTerm {
        HMinusV::new(v, power).mul(self, power, &RingElem::one())
    }
}

/// Cached powers of `-V` used to expand `(H - V)^p`.
pub(crate) struct HMinusV {
    neg_v_powers: Vec<RingElem>,
}

impl HMinusV {
    /// Precomputes `(-V)^i` for `i <= max_power`.
    pub(crate) fn new(v: &RingElem, max_power: u32) -> Self {
        let neg_v = -v;
        let mut neg_v_powers = vec![RingElem::one()];
        for i in 0..max_power as usize {
            let next = &neg_v_powers[i] * &neg_v;
            neg_v_powers.push(next);
        }
        Self { neg_v_powers }
    }

    /// `t · (H - V)^p · extra`, where `extra` is an `x`-only factor.
    pub(crate) fn mul(&self, t: &SeriesTerm, p: u32, extra: &RingElem) -> SeriesTerm {
        let factors: Vec<RingElem> = (0..=p)
            .map(|i| {
                let c = binomial(BigInt::from(p), BigInt::from(i));
                let r = BigRational::from_integer(c);
                let base = self.neg_v_powers[(p - i) as usize].scale_rational(&r);
                if extra.is_constant() && extra.constant_part().is_one() {
                    base
                } else {
                    &base * extra
                }
            })
            .collect();
        let mut out = SeriesTerm::zero();
        for (cell, c) in &t.cells {
            for (i, f) in factors.iter().enumerate() {
                if f.is_zero() {
                    continue;
                }
                out.add_cell(Cell::new(cell.m + i as u32, cell.j), c * f);
            }
        }
        out
    }
}

impl fmt::Display for SeriesTerm {
    /// One line per cell: `H^m f0^(j): <coefficient in x>`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.cells.is_empty() {
            return writeln!(f, "  0");
        }
        for (cell, c) in &self.cells {
            let hpart = match cell.m {
                0 => String::new(),
                1 => "H ".to_string(),
                m => format!("H^{m} "),
            };
            writeln!(f, "  {hpart}f0^({}): {}", cell.j, c.display_with("x"))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::parse_potential;

    fn poly(src: &str) -> RingElem {
        parse_potential(src).unwrap()
    }

    #[test]
    fn dh_examples() {
        assert_eq!(
            SeriesTerm::seed().dh(),
            SeriesTerm::single(Cell::new(0, 1), RingElem::one())
        );
        assert_eq!(
            SeriesTerm::single(Cell::new(2, 0), RingElem::one()).dh(),
            SeriesTerm::from_cells([
                (Cell::new(1, 0), poly("2")),
                (Cell::new(2, 1), RingElem::one()),
            ])
        );
        let x2 = RingElem::x_pow(2);
        assert_eq!(
            SeriesTerm::single(Cell::new(1, 3), x2.clone()).dh(),
            SeriesTerm::from_cells([(Cell::new(0, 3), x2.clone()), (Cell::new(1, 4), x2)])
        );
    }

    #[test]
    fn h_minus_v_examples() {
        let t = SeriesTerm::seed();
        let v = RingElem::x_pow(2);
        assert_eq!(t.mul_h_minus_v(&v, 0), t);
        assert_eq!(
            t.mul_h_minus_v(&v, 1),
            SeriesTerm::from_cells([(Cell::new(1, 0), RingElem::one()), (Cell::new(0, 0), -&v)])
        );
        let g = poly("-q^2/2 + q^4/4");
        let t = SeriesTerm::from_cells([
            (Cell::new(0, 2), poly("1 - 3*q^2")),
            (Cell::new(1, 3), poly("q")),
        ]);
        assert_eq!(
            t.mul_h_minus_v(&g, 2),
            t.mul_h_minus_v(&g, 1).mul_h_minus_v(&g, 1)
        );
    }

    #[test]
    fn numeric_eval_matches_definition() {
        let t = SeriesTerm::from_cells([
            (Cell::new(0, 1), poly("q^2")),
            (Cell::new(2, 0), poly("1 + q")),
        ]);
        let d = [0.3, -0.7];
        let (x, h) = (0.5, 1.5);
        let expected = 0.25 * -0.7 + 1.5 * 2.25 * 0.3;
        assert!((t.eval(x, h, &d) - expected).abs() < 1e-15);
    }
}
