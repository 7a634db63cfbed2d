//! Inputs shared by the benchmarks.

use fracrl_core::{PiecewiseFn, DEFAULT_DOMAIN_END};

pub const KINKED_ROOT: &str = "sqrt(t) + relu(t-1)";

pub fn kinked_root() -> PiecewiseFn {
    PiecewiseFn::parse(KINKED_ROOT, DEFAULT_DOMAIN_END).unwrap()
}

/// Square of the kinked root; its second piece does not flatten, so only
/// the numerical methods apply there.
pub fn kinked_square() -> PiecewiseFn {
    let u = kinked_root();
    u.mul(&u).unwrap()
}
