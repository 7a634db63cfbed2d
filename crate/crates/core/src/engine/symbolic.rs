//! Exact evaluation by the term-wise power rule.

use super::{FracOrder, SidedValue};
use crate::error::Result;
use crate::expr::Side;
use crate::piecewise::PiecewiseFn;
use crate::powersum::flatten;

/// Only the pieces up to the one governing t from `side` need to flatten.
pub fn eval(f: &PiecewiseFn, alpha: FracOrder, t: f64, side: Side) -> Result<SidedValue> {
    let last = f.piece_index(t, side);
    let sum = flatten(f, last)?;
    Ok(SidedValue::exact(sum.frac_deriv(alpha.get(), t, side)))
}
