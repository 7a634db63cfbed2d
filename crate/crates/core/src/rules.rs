//! Both sides of the claimed fractional Leibniz and chain rules at a point,
//! with a record of which differentiability hypotheses actually hold there.
//!
//! LEIBNIZ: (uv)^(α) = u^(α) v + u v^(α)
//! CHAIN_A: (f∘u)^(α) = f′(u) · u^(α)
//! CHAIN_B: (f∘u)^(α) = f^(α)(u) · (u′)^α

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::engine::{frac_deriv, EngineConfig, FracDerivResult, FracOrder};
use crate::error::{Error, Result};
use crate::expr::Side;
use crate::piecewise::{PiecewiseFn, DEFAULT_DOMAIN_END};

/// Residuals at or below this count as agreement.
pub const VERDICT_TOL: f64 = 1e-6;

/// Largest locality deviation that still counts as agreement.
pub const LOCALITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RuleId {
    Leibniz,
    ChainA,
    ChainB,
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleId::Leibniz => "LEIBNIZ",
            RuleId::ChainA => "CHAIN_A",
            RuleId::ChainB => "CHAIN_B",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Holds,
    Violated,
}

impl Verdict {
    pub fn from_residual(residual: f64, tol: f64) -> Self {
        if residual <= tol {
            Verdict::Holds
        } else {
            Verdict::Violated
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "HOLDS",
            Verdict::Violated => "VIOLATED",
        })
    }
}

/// Classical one-sided derivatives of one operand at one point. `None`
/// marks an unbounded or non-existent one-sided derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperandCondition {
    pub operand: String,
    pub at: f64,
    pub left_derivative: Option<f64>,
    pub right_derivative: Option<f64>,
    pub differentiable: bool,
}

impl OperandCondition {
    pub fn measure(operand: &str, f: &PiecewiseFn, at: f64) -> Result<Self> {
        let side = |s| -> Result<Option<f64>> {
            if s == Side::Left && at <= 0.0 {
                return Ok(None);
            }
            Ok(f.classical_derivative(at, s)?.finite())
        };
        let left = side(Side::Left)?;
        let right = side(Side::Right)?;
        let differentiable = match (left, right) {
            (Some(l), Some(r)) => (l - r).abs() <= 1e-9 * l.abs().max(1.0),
            (None, Some(_)) => at <= 0.0,
            _ => false,
        };
        Ok(OperandCondition {
            operand: operand.to_string(),
            at,
            left_derivative: left,
            right_derivative: right,
            differentiable,
        })
    }

    /// The two-sided derivative, if it exists.
    pub fn derivative(&self) -> Option<f64> {
        if !self.differentiable {
            return None;
        }
        match (self.left_derivative, self.right_derivative) {
            (Some(l), Some(r)) => Some(0.5 * (l + r)),
            (_, r) => r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideConditions {
    pub operands: Vec<OperandCondition>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleReport {
    pub rule: RuleId,
    pub point: f64,
    pub alpha: FracOrder,
    #[serde(with = "crate::num")]
    pub lhs: f64,
    #[serde(with = "crate::num")]
    pub rhs: f64,
    #[serde(with = "crate::num")]
    pub residual: f64,
    pub tol: f64,
    pub verdict: Verdict,
    pub side_conditions: SideConditions,
}

impl RuleReport {
    fn new(
        rule: RuleId,
        point: f64,
        alpha: FracOrder,
        lhs: f64,
        rhs: f64,
        tol: f64,
        side_conditions: SideConditions,
    ) -> Self {
        // adding zero turns −0 into 0
        let (lhs, rhs) = (lhs + 0.0, rhs + 0.0);
        let residual = (lhs - rhs).abs();
        let residual = if residual.is_nan() && lhs == rhs {
            0.0
        } else {
            residual
        };
        RuleReport {
            rule,
            point,
            alpha,
            lhs,
            rhs,
            residual,
            tol,
            verdict: Verdict::from_residual(residual, tol),
            side_conditions,
        }
    }
}

fn derivative_value(f: &PiecewiseFn, alpha: FracOrder, t: f64, cfg: &EngineConfig) -> Result<f64> {
    frac_deriv(f, alpha, t, cfg)?.merged()
}

pub fn check_leibniz(
    u: &PiecewiseFn,
    v: &PiecewiseFn,
    alpha: FracOrder,
    t: f64,
    cfg: &EngineConfig,
    tol: f64,
) -> Result<RuleReport> {
    let uv = u.mul(v)?;
    let lhs = derivative_value(&uv, alpha, t, cfg)?;
    let du = derivative_value(u, alpha, t, cfg)?;
    let dv = derivative_value(v, alpha, t, cfg)?;
    let rhs = du * v.eval(t)? + u.eval(t)? * dv;
    let conditions = SideConditions {
        operands: vec![
            OperandCondition::measure("u", u, t)?,
            OperandCondition::measure("v", v, t)?,
        ],
        notes: Vec::new(),
    };
    Ok(RuleReport::new(
        RuleId::Leibniz,
        t,
        alpha,
        lhs,
        rhs,
        tol,
        conditions,
    ))
}

/// `f` over u-space, continued past its last breakpoint when u's range
/// runs beyond f's domain.
fn outer_for(f: &PiecewiseFn, u: &PiecewiseFn) -> Result<PiecewiseFn> {
    let (_, hi) = u.range();
    f.extend_to(hi)
}

pub fn check_chain_a(
    f: &PiecewiseFn,
    u: &PiecewiseFn,
    alpha: FracOrder,
    t: f64,
    cfg: &EngineConfig,
    tol: f64,
) -> Result<RuleReport> {
    let f = outer_for(f, u)?;
    let fu = PiecewiseFn::compose(&f, u)?;
    let lhs = derivative_value(&fu, alpha, t, cfg)?;
    let y = u.eval(t)?;
    let f_cond = OperandCondition::measure("f", &f, y)?;
    let u_cond = OperandCondition::measure("u", u, t)?;
    let mut notes = Vec::new();
    let slope = match f_cond.derivative() {
        Some(d) => d,
        None => match (f_cond.left_derivative, f_cond.right_derivative) {
            (Some(l), Some(r)) => {
                notes.push(format!(
                    "f is not differentiable at u(t) = {y}; f' taken as the mean of {l} and {r}"
                ));
                0.5 * (l + r)
            }
            _ => {
                return Err(Error::Domain(format!(
                    "f has an unbounded derivative at u(t) = {y}"
                )))
            }
        },
    };
    let rhs = slope * derivative_value(u, alpha, t, cfg)?;
    let conditions = SideConditions {
        operands: vec![f_cond, u_cond],
        notes,
    };
    Ok(RuleReport::new(
        RuleId::ChainA,
        t,
        alpha,
        lhs,
        rhs,
        tol,
        conditions,
    ))
}

pub fn check_chain_b(
    f: &PiecewiseFn,
    u: &PiecewiseFn,
    alpha: FracOrder,
    t: f64,
    cfg: &EngineConfig,
    tol: f64,
) -> Result<RuleReport> {
    let f = outer_for(f, u)?;
    let u_cond = OperandCondition::measure("u", u, t)?;
    let du = u_cond.derivative().ok_or_else(|| {
        Error::Domain(format!(
            "u has no two-sided derivative at t = {t} (left {:?}, right {:?})",
            u_cond.left_derivative, u_cond.right_derivative
        ))
    })?;
    if du < 0.0 {
        return Err(Error::Domain(format!(
            "u'(t) = {du} is negative, so (u')^alpha is not real"
        )));
    }
    let fu = PiecewiseFn::compose(&f, u)?;
    let lhs = derivative_value(&fu, alpha, t, cfg)?;
    let y = u.eval(t)?;
    let rhs = derivative_value(&f, alpha, y, cfg)? * du.powf(alpha.get());
    let conditions = SideConditions {
        operands: vec![OperandCondition::measure("f", &f, y)?, u_cond],
        notes: Vec::new(),
    };
    Ok(RuleReport::new(
        RuleId::ChainB,
        t,
        alpha,
        lhs,
        rhs,
        tol,
        conditions,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalityEntry {
    pub function: String,
    pub result: FracDerivResult,
    #[serde(with = "crate::num")]
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalityReport {
    pub t0: f64,
    pub alpha: FracOrder,
    pub base: f64,
    pub continuations: Vec<LocalityEntry>,
    #[serde(with = "crate::num")]
    pub max_deviation: f64,
    pub tol: f64,
    pub agrees: bool,
}

/// Glues each continuation onto `u1` at t0 and compares the derivative
/// there with that of `u1` alone.
pub fn locality_test(
    u1: &PiecewiseFn,
    continuations: &[PiecewiseFn],
    alpha: FracOrder,
    t0: f64,
    cfg: &EngineConfig,
) -> Result<LocalityReport> {
    let base = derivative_value(u1, alpha, t0, cfg)?;
    let mut entries = Vec::with_capacity(continuations.len());
    for u2 in continuations {
        let glued = u1.glue(u2, t0)?;
        let result = frac_deriv(&glued, alpha, t0, cfg)?;
        let deviation = match result.value {
            Some(v) => (v - base).abs(),
            None => f64::INFINITY,
        };
        entries.push(LocalityEntry {
            function: glued.to_dsl(),
            result,
            deviation,
        });
    }
    let max_deviation = entries.iter().map(|e| e.deviation).fold(0.0, f64::max);
    Ok(LocalityReport {
        t0,
        alpha,
        base,
        continuations: entries,
        max_deviation,
        tol: LOCALITY_TOL,
        agrees: max_deviation <= LOCALITY_TOL,
    })
}

/// One counterexample with the values it is expected to produce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleRow {
    pub id: String,
    pub operands: Vec<(String, String)>,
    pub report: RuleReport,
    pub expected_lhs: f64,
    pub expected_rhs: f64,
    #[serde(with = "crate::num")]
    pub lhs_deviation: f64,
    #[serde(with = "crate::num")]
    pub rhs_deviation: f64,
    pub matches: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalityRow {
    pub report: LocalityReport,
    pub expected_base: f64,
    #[serde(with = "crate::num")]
    pub base_deviation: f64,
    pub matches: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reproduction {
    pub counterexamples: Vec<CounterexampleRow>,
    pub locality: LocalityRow,
}

impl Reproduction {
    /// True when every computed cell is within tolerance of its expected
    /// value, every counterexample is VIOLATED and locality agrees.
    pub fn all_match(&self) -> bool {
        self.counterexamples
            .iter()
            .all(|r| r.matches && r.report.verdict == Verdict::Violated)
            && self.locality.matches
    }
}

/// Largest deviation from an expected value that still counts as a match.
pub const REPRODUCTION_TOL: f64 = 1e-6;

struct Case {
    id: &'static str,
    rule: RuleId,
    first: (&'static str, &'static str),
    second: (&'static str, &'static str),
    lhs: f64,
    rhs: f64,
}

const KINKED_ROOT: &str = "sqrt(t) + relu(t-1)";
const V_SHAPE: &str = "1 - t + 2*relu(t-1)";

fn cases() -> Vec<Case> {
    let sp = PI.sqrt();
    vec![
        Case {
            id: "CE1",
            rule: RuleId::Leibniz,
            first: ("u", KINKED_ROOT),
            second: ("v", KINKED_ROOT),
            lhs: 2.0 / sp,
            rhs: sp,
        },
        Case {
            id: "CE2",
            rule: RuleId::Leibniz,
            first: ("u", V_SHAPE),
            second: ("v", V_SHAPE),
            lhs: -4.0 / (3.0 * sp),
            rhs: 0.0,
        },
        Case {
            id: "CE3",
            rule: RuleId::ChainA,
            first: ("f", "u^2"),
            second: ("u", KINKED_ROOT),
            lhs: 2.0 / sp,
            rhs: sp,
        },
        Case {
            id: "CE4",
            rule: RuleId::ChainA,
            first: ("f", "u^2"),
            second: ("u", V_SHAPE),
            lhs: -4.0 / (3.0 * sp),
            rhs: 0.0,
        },
        Case {
            id: "CE5",
            rule: RuleId::ChainB,
            first: ("f", "sqrt(u) + relu(u-1)"),
            second: ("u", "t^2"),
            lhs: 2.0 / sp,
            rhs: (PI / 2.0).sqrt(),
        },
    ]
}

fn run_case(case: &Case, alpha: FracOrder, cfg: &EngineConfig) -> Result<CounterexampleRow> {
    let a = PiecewiseFn::parse(case.first.1, DEFAULT_DOMAIN_END)?;
    let b = PiecewiseFn::parse(case.second.1, DEFAULT_DOMAIN_END)?;
    let t = 1.0;
    let report = match case.rule {
        RuleId::Leibniz => check_leibniz(&a, &b, alpha, t, cfg, VERDICT_TOL)?,
        RuleId::ChainA => check_chain_a(&a, &b, alpha, t, cfg, VERDICT_TOL)?,
        RuleId::ChainB => check_chain_b(&a, &b, alpha, t, cfg, VERDICT_TOL)?,
    };
    let lhs_deviation = (report.lhs - case.lhs).abs();
    let rhs_deviation = (report.rhs - case.rhs).abs();
    Ok(CounterexampleRow {
        id: case.id.to_string(),
        operands: vec![
            (case.first.0.to_string(), case.first.1.to_string()),
            (case.second.0.to_string(), case.second.1.to_string()),
        ],
        expected_lhs: case.lhs,
        expected_rhs: case.rhs,
        matches: lhs_deviation <= REPRODUCTION_TOL && rhs_deviation <= REPRODUCTION_TOL,
        lhs_deviation,
        rhs_deviation,
        report,
    })
}

fn locality_row(alpha: FracOrder, cfg: &EngineConfig) -> Result<LocalityRow> {
    let u1 = PiecewiseFn::parse("sqrt(t)", DEFAULT_DOMAIN_END)?;
    let continuations = ["sqrt(t)", "sqrt(t) + (t - 1)", "sqrt(t) + 5*(t - 1)"]
        .iter()
        .map(|src| PiecewiseFn::parse(src, DEFAULT_DOMAIN_END))
        .collect::<Result<Vec<_>>>()?;
    let report = locality_test(&u1, &continuations, alpha, 1.0, cfg)?;
    let expected_base = PI.sqrt() / 2.0;
    let base_deviation = (report.base - expected_base).abs();
    Ok(LocalityRow {
        matches: base_deviation <= REPRODUCTION_TOL && report.agrees,
        expected_base,
        base_deviation,
        report,
    })
}

/// The five counterexamples at t = 1 and the locality check, all at α = ½.
/// Rows are computed in parallel and returned in a fixed order.
pub fn reproduce_suite(cfg: &EngineConfig) -> Result<Reproduction> {
    let alpha = FracOrder::HALF;
    let cases = cases();
    let (rows, locality) = std::thread::scope(|s| {
        let handles: Vec<_> = cases
            .iter()
            .map(|c| s.spawn(move || run_case(c, alpha, cfg)))
            .collect();
        let locality = locality_row(alpha, cfg);
        let rows: Vec<Result<CounterexampleRow>> = handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect();
        (rows, locality)
    });
    Ok(Reproduction {
        counterexamples: rows.into_iter().collect::<Result<_>>()?,
        locality: locality?,
    })
}
