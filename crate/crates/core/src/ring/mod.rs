//! Exact differential ring of functions of `x` built from `x^n`,
//! `x^n·sin(kx)` and `x^n·cos(kx)` with coefficients in `Q[π, 1/π]`.

mod coefficient;
mod elem;
mod parse;

pub use coefficient::Coefficient;
pub use elem::{Monomial, RingElem, Trig};
pub use parse::{parse_expr, parse_potential, ParseError};

pub(crate) use coefficient::fmt_rational;
