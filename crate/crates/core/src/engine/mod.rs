//! Pointwise evaluation of the modified Riemann–Liouville derivative
//!
//! D^α f(t) = 1/Γ(1−α) · d/dt ∫₀ᵗ (t−x)^{−α} (f(x) − f(0)) dx
//!
//! by three independent routes: the term-wise power rule on a flattened
//! shifted-power sum, Gauss–Jacobi quadrature of the equivalent form
//! 1/Γ(1−α) ∫₀ᵗ (t−x)^{−α} f′(x) dx, and Richardson-extrapolated finite
//! differences of the inner integral.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{near, Side};
use crate::piecewise::PiecewiseFn;

pub mod oracle;
pub mod quadrature;
pub mod symbolic;

pub use quadrature::{QuadraturePanel, QuadratureSpec};

/// Order α of the derivative, 0 < α < 1.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct FracOrder(f64);

impl FracOrder {
    pub const HALF: FracOrder = FracOrder(0.5);

    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(FracOrder(alpha))
        } else {
            Err(Error::Domain(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for FracOrder {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        FracOrder::new(v)
    }
}

impl From<FracOrder> for f64 {
    fn from(a: FracOrder) -> f64 {
        a.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Symbolic,
    Quadrature,
    Oracle,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Symbolic => "symbolic",
            Method::Quadrature => "quadrature",
            Method::Oracle => "oracle",
        })
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symbolic" => Ok(Method::Symbolic),
            "quadrature" => Ok(Method::Quadrature),
            "oracle" => Ok(Method::Oracle),
            other => Err(Error::Domain(format!("unknown method '{other}'"))),
        }
    }
}

/// Numerical knobs shared by all methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    /// Gauss–Jacobi nodes per panel; the error estimate doubles this.
    pub nodes: usize,
    /// One-sided limits closer than this merge into a value.
    pub merge_tol: f64,
    /// Largest finite-difference step of the oracle.
    pub oracle_step: f64,
    /// Step halvings in the oracle's Richardson table away from breakpoints.
    pub richardson_levels: usize,
    /// Width ratio between neighbouring panels of a geometric mesh.
    pub grading_ratio: f64,
    pub grading_levels: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            nodes: 64,
            merge_tol: 1e-6,
            oracle_step: 1e-3,
            richardson_levels: 3,
            grading_ratio: 0.15,
            grading_levels: 20,
        }
    }
}

/// A one-sided limit with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SidedValue {
    pub value: f64,
    pub err_estimate: f64,
}

impl SidedValue {
    pub fn exact(value: f64) -> Self {
        SidedValue {
            value,
            err_estimate: 0.0,
        }
    }
}

/// The α-derivative at a point. `value` is present exactly when the two
/// one-sided limits agree to the merge tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FracDerivResult {
    pub point: f64,
    pub alpha: FracOrder,
    #[serde(with = "crate::num")]
    pub left_limit: f64,
    #[serde(with = "crate::num")]
    pub right_limit: f64,
    #[serde(with = "crate::num::option")]
    pub value: Option<f64>,
    pub two_sided_mismatch: bool,
    pub method: Method,
    pub err_estimate: f64,
}

impl FracDerivResult {
    fn merge(
        point: f64,
        alpha: FracOrder,
        method: Method,
        left: SidedValue,
        right: SidedValue,
        tol: f64,
    ) -> Self {
        let (l, r) = (left.value, right.value);
        let value = if l == r {
            Some(l)
        } else if (l - r).abs() <= tol {
            Some(0.5 * (l + r))
        } else {
            None
        };
        FracDerivResult {
            point,
            alpha,
            left_limit: l,
            right_limit: r,
            two_sided_mismatch: value.is_none(),
            value,
            method,
            err_estimate: left.err_estimate.max(right.err_estimate),
        }
    }

    /// The merged value, or the mismatch as an error.
    pub fn merged(&self) -> Result<f64> {
        self.value.ok_or(Error::TwoSidedMismatch {
            at: self.point,
            left: self.left_limit,
            right: self.right_limit,
        })
    }
}

/// One one-sided limit by a fixed method.
pub fn one_sided(
    f: &PiecewiseFn,
    alpha: FracOrder,
    t: f64,
    side: Side,
    method: Method,
    cfg: &EngineConfig,
) -> Result<SidedValue> {
    check_point(f, t)?;
    match method {
        Method::Symbolic => symbolic::eval(f, alpha, t, side),
        Method::Quadrature => quadrature::eval(f, alpha, t, side, cfg),
        Method::Oracle => oracle::eval(f, alpha, t, side, cfg),
    }
}

fn check_point(f: &PiecewiseFn, t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 || (t > f.domain_end() && !near(t, f.domain_end())) {
        return Err(Error::Domain(format!(
            "t = {t} lies outside [0, {}]",
            f.domain_end()
        )));
    }
    Ok(())
}

/// Which one-sided limits exist at t: both at interior breakpoints, only the
/// right one at 0, otherwise a single limit (they coincide).
enum Sides {
    Both,
    RightOnly,
    Single,
}

fn sides_at(f: &PiecewiseFn, t: f64) -> Sides {
    if t <= 0.0 || near(t, 0.0) {
        Sides::RightOnly
    } else if f.interior_breakpoints().iter().any(|&b| near(b, t)) {
        Sides::Both
    } else {
        Sides::Single
    }
}

/// The derivative at t by a fixed method, with one-sided merge semantics.
pub fn frac_deriv_with(
    f: &PiecewiseFn,
    alpha: FracOrder,
    t: f64,
    method: Method,
    cfg: &EngineConfig,
) -> Result<FracDerivResult> {
    check_point(f, t)?;
    let side_value = |side| one_sided(f, alpha, t, side, method, cfg);
    let (left, right) = match sides_at(f, t) {
        Sides::Both => (side_value(Side::Left)?, side_value(Side::Right)?),
        Sides::RightOnly => {
            let r = side_value(Side::Right)?;
            (r, r)
        }
        Sides::Single => {
            let v = match side_value(Side::Left) {
                Err(Error::StencilCollision { .. }) if method == Method::Oracle => {
                    side_value(Side::Right)?
                }
                other => other?,
            };
            (v, v)
        }
    };
    Ok(FracDerivResult::merge(
        t,
        alpha,
        method,
        left,
        right,
        cfg.merge_tol,
    ))
}

/// The derivative at t: symbolic when f flattens to a shifted-power sum on
/// the relevant pieces, quadrature otherwise.
pub fn frac_deriv(
    f: &PiecewiseFn,
    alpha: FracOrder,
    t: f64,
    cfg: &EngineConfig,
) -> Result<FracDerivResult> {
    match frac_deriv_with(f, alpha, t, Method::Symbolic, cfg) {
        Err(Error::NotRepresentable(_)) => frac_deriv_with(f, alpha, t, Method::Quadrature, cfg),
        other => other,
    }
}
