//! Gauss–Jacobi quadrature of 1/Γ(1−α) ∫₀ᵗ (t−x)^{−α} f′(x) dx.
//!
//! [0, t] is cut at the breakpoints of f. Each cut is halved and each half
//! is anchored at its outer end: nodes are addressed by their offset from a
//! breakpoint (or from t), so x − b and t − x never suffer cancellation. A
//! half whose outer end is non-smooth is refined geometrically toward it;
//! the panel touching the end absorbs the algebraic factor there (the
//! kernel at t, the leading power of f′ at a breakpoint) into its Jacobi
//! weight.

use serde::{Deserialize, Serialize};

use super::{EngineConfig, FracOrder, SidedValue};
use crate::error::{Error, Result};
use crate::expr::{near, Expr, Side};
use crate::jacobi::cached_jacobi_rule;
use crate::piecewise::PiecewiseFn;
use crate::special::gamma_unchecked;

/// One subinterval [anchor + off_lo, anchor + off_hi] and its weight
/// (1−s)^a_exp (1+s)^b_exp on the reference interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraturePanel {
    pub lo: f64,
    pub hi: f64,
    pub anchor: f64,
    pub off_lo: f64,
    pub off_hi: f64,
    pub a_exp: f64,
    pub b_exp: f64,
    /// The (t−x)^{−α} kernel is part of the weight (panel ends at t).
    pub kernel_in_weight: bool,
    pub nodes: usize,
    pub piece: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub t: f64,
    pub alpha: f64,
    pub panels: Vec<QuadraturePanel>,
}

/// What is integrated against the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrand {
    /// f′(x); endpoint singularities of f′ go into the weights.
    Derivative,
    /// f(x) − f(0); bounded, so only the kernel goes into a weight.
    Increment,
}

struct HalfPlan {
    anchor: f64,
    /// +1 for a half extending right of its anchor, −1 for left.
    dir: f64,
    width: f64,
    graded: bool,
    a_exp: f64,
    b_exp: f64,
    kernel: bool,
}

/// Builds the panel layout for ∫₀ᵗ.
pub fn plan(
    f: &PiecewiseFn,
    alpha: f64,
    t: f64,
    integrand: Integrand,
    cfg: &EngineConfig,
) -> Result<QuadratureSpec> {
    let mut edges: Vec<f64> = f
        .breakpoints()
        .iter()
        .copied()
        .filter(|&b| b < t && !near(b, t))
        .collect();
    if edges.is_empty() || t <= 0.0 {
        return Ok(QuadratureSpec {
            t,
            alpha,
            panels: Vec::new(),
        });
    }
    edges.push(t);

    let mut panels = Vec::new();
    for w in edges.windows(2) {
        let (a, c) = (w[0], w[1]);
        let touches_t = c == t;
        let j = f.piece_index(0.5 * (a + c), Side::Right);
        let piece = &f.pieces()[j];
        let h = c - a;

        let singular_exp = |x: f64, side: Side| -> f64 {
            let g = piece.local_order(x, side);
            if integrand == Integrand::Derivative && g < 1.0 {
                g - 1.0
            } else {
                0.0
            }
        };
        let beta_lo = singular_exp(a, Side::Right);
        let beta_hi = singular_exp(c, Side::Left);
        let kernel_exp = if touches_t { -alpha } else { 0.0 };
        let a_exp = beta_hi + kernel_exp;
        if a_exp <= -1.0 {
            return Err(Error::NonIntegrable {
                at: c,
                exponent: a_exp,
            });
        }
        if beta_lo <= -1.0 {
            return Err(Error::NonIntegrable {
                at: a,
                exponent: beta_lo,
            });
        }

        let grade_lo = !piece.is_analytic(a, Side::Right);
        let grade_hi = !piece.is_analytic(c, Side::Left) || (!touches_t && t - c < 2.0 * h);

        let halves = [
            HalfPlan {
                anchor: a,
                dir: 1.0,
                width: 0.5 * h,
                graded: grade_lo,
                a_exp: 0.0,
                b_exp: beta_lo,
                kernel: false,
            },
            HalfPlan {
                anchor: c,
                dir: -1.0,
                width: 0.5 * h,
                graded: grade_hi,
                a_exp,
                b_exp: 0.0,
                kernel: touches_t,
            },
        ];
        for half in halves {
            emit_half(&half, j, cfg, &mut panels);
        }
    }
    panels.sort_by(|p, q| p.lo.total_cmp(&q.lo));
    Ok(QuadratureSpec { t, alpha, panels })
}

fn emit_half(half: &HalfPlan, piece: usize, cfg: &EngineConfig, out: &mut Vec<QuadraturePanel>) {
    // offsets measured away from the anchor, innermost first
    let mut cuts = vec![0.0];
    if half.graded {
        for k in (1..=cfg.grading_levels).rev() {
            cuts.push(half.width * cfg.grading_ratio.powi(k as i32));
        }
    }
    cuts.push(half.width);
    for (i, w) in cuts.windows(2).enumerate() {
        let inner = i == 0;
        let (near_off, far_off) = (w[0], w[1]);
        let (off_lo, off_hi) = if half.dir > 0.0 {
            (near_off, far_off)
        } else {
            (-far_off, -near_off)
        };
        out.push(QuadraturePanel {
            lo: half.anchor + off_lo,
            hi: half.anchor + off_hi,
            anchor: half.anchor,
            off_lo,
            off_hi,
            a_exp: if inner { half.a_exp } else { 0.0 },
            b_exp: if inner { half.b_exp } else { 0.0 },
            kernel_in_weight: inner && half.kernel,
            nodes: cfg.nodes,
            piece,
        });
    }
}

/// Σ over panels of ∫ (t−x)^{−α} φ(x) dx with `nodes` points per panel.
/// `phi(panel, offset)` evaluates the integrand factor at
/// panel.anchor + offset.
pub fn integrate<F>(spec: &QuadratureSpec, nodes: usize, phi: F) -> Result<f64>
where
    F: Fn(&QuadraturePanel, f64) -> f64,
{
    let alpha = spec.alpha;
    let mut total = 0.0;
    for p in &spec.panels {
        let rule = cached_jacobi_rule(nodes, p.a_exp, p.b_exp)?;
        let half = 0.5 * (p.off_hi - p.off_lo);
        let rest_a = if p.kernel_in_weight {
            p.a_exp + alpha
        } else {
            p.a_exp
        };
        let from_left = p.off_lo >= 0.0;
        let mut sum = 0.0;
        for (&s, &w) in rule.nodes.iter().zip(&rule.weights) {
            let offset = if from_left {
                p.off_lo + half * (1.0 + s)
            } else {
                p.off_hi - half * (1.0 - s)
            };
            let kernel = if p.kernel_in_weight {
                half.powf(-alpha)
            } else {
                let dt = if p.anchor == spec.t {
                    -offset
                } else {
                    (spec.t - p.anchor) - offset
                };
                dt.powf(-alpha)
            };
            let mut v = kernel * phi(p, offset);
            if p.b_exp != 0.0 {
                v /= (1.0 + s).powf(p.b_exp);
            }
            if rest_a != 0.0 {
                v /= (1.0 - s).powf(rest_a);
            }
            sum += w * v;
        }
        total += half * sum;
    }
    Ok(total)
}

fn derivative_at(f: &PiecewiseFn, p: &QuadraturePanel, offset: f64) -> f64 {
    let side = if offset >= 0.0 {
        Side::Right
    } else {
        Side::Left
    };
    f.pieces()[p.piece].jet(p.anchor, offset, side).deriv
}

/// lim_{s→t⁺} of the contribution of (t, s): nonzero only when the right
/// piece rises from t like c·(x−t)^γ with γ ≤ α.
pub(crate) fn right_jump(piece: &Expr, alpha: f64, t: f64) -> f64 {
    let gamma = piece.local_order(t, Side::Right);
    if gamma > alpha {
        return 0.0;
    }
    // jets keep tiny offsets exact, so the next-order term is negligible here
    let delta = 1e-30 * t.abs().max(1.0);
    let coef = piece.jet(t, delta, Side::Right).inc / delta.powf(gamma);
    if gamma == alpha {
        coef * gamma_unchecked(alpha + 1.0)
    } else {
        f64::INFINITY.copysign(coef)
    }
}

pub fn eval(
    f: &PiecewiseFn,
    alpha: FracOrder,
    t: f64,
    side: Side,
    cfg: &EngineConfig,
) -> Result<SidedValue> {
    let a = alpha.get();
    let spec = plan(f, a, t, Integrand::Derivative, cfg)?;
    let coarse = integrate(&spec, cfg.nodes, |p, off| derivative_at(f, p, off))?;
    let fine = integrate(&spec, 2 * cfg.nodes, |p, off| derivative_at(f, p, off))?;
    let scale = 1.0 / gamma_unchecked(1.0 - a);
    let mut value = fine * scale;
    if side == Side::Right {
        value += right_jump(f.piece_at(t, Side::Right), a, t);
    }
    Ok(SidedValue {
        value,
        err_estimate: (fine - coarse).abs() * scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::piecewise::DEFAULT_DOMAIN_END;
    use crate::special::power_rule_coeff as power_rule;
    use std::f64::consts::PI;

    fn pf(src: &str) -> PiecewiseFn {
        PiecewiseFn::parse(src, DEFAULT_DOMAIN_END).unwrap()
    }

    fn q(src: &str, alpha: f64, t: f64, side: Side) -> SidedValue {
        let f = pf(src);
        eval(
            &f,
            FracOrder::new(alpha).unwrap(),
            t,
            side,
            &EngineConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn plan_partitions_the_interval() {
        let cfg = EngineConfig::default();
        let f = pf("sqrt(t) + relu(t-1) + pshift(2, 2.5, 0.3)");
        for t in [0.3, 1.0, 1.0 + 1e-9, 2.5, 3.7] {
            let spec = plan(&f, 0.5, t, Integrand::Derivative, &cfg).unwrap();
            assert_eq!(spec.panels[0].lo, 0.0);
            assert_eq!(spec.panels.last().unwrap().hi, t);
            for w in spec.panels.windows(2) {
                assert!((w[0].hi - w[1].lo).abs() <= 1e-15 * t.max(1.0), "{t}");
            }
            assert!(spec.panels.iter().all(|p| p.a_exp > -1.0 && p.b_exp > -1.0));
            assert_eq!(spec.panels.iter().filter(|p| p.kernel_in_weight).count(), 1);
        }
    }

    #[test]
    fn power_rule_values() {
        let sp = PI.sqrt();
        let cases = [
            ("t", 2.0 / sp),
            ("sqrt(t)", sp / 2.0),
            ("t^2", 8.0 / (3.0 * sp)),
            ("t^1.5", 3.0 * sp / 4.0),
        ];
        for (src, want) in cases {
            let v = q(src, 0.5, 1.0, Side::Left);
            assert!((v.value - want).abs() < 1e-12, "{src}: {}", v.value);
            assert!(v.err_estimate < 1e-12);
        }
    }

    #[test]
    fn other_orders() {
        for alpha in [0.1, 0.3, 0.7, 0.9] {
            for p in [0.2, 0.5, 1.0, 2.7] {
                let src = format!("t^{p}");
                let v = q(&src, alpha, 1.7, Side::Left).value;
                let want = power_rule(p, alpha) * 1.7f64.powf(p - alpha);
                assert!(
                    (v - want).abs() < 1e-11 * want.abs().max(1.0),
                    "{alpha} {p}"
                );
            }
        }
    }

    #[test]
    fn right_limits_add_the_jump() {
        let sp = PI.sqrt();
        let v = q("t + pshift(1, 1, 0.5)", 0.5, 1.0, Side::Right).value;
        assert!((v - (2.0 / sp + sp / 2.0)).abs() < 1e-12);
        let v = q("t + pshift(1, 1, 0.25)", 0.5, 1.0, Side::Right).value;
        assert_eq!(v, f64::INFINITY);
        let v = q("sqrt(t)", 0.5, 0.0, Side::Right).value;
        assert!((v - sp / 2.0).abs() < 1e-9);
    }

    #[test]
    fn non_integrable_left_limit() {
        let f = pf("relu(1 - t)^0.2");
        let r = eval(
            &f,
            FracOrder::HALF,
            1.0,
            Side::Left,
            &EngineConfig::default(),
        );
        assert!(matches!(r, Err(Error::NonIntegrable { .. })));
    }

    #[test]
    fn close_to_a_breakpoint() {
        let sp = PI.sqrt();
        for eps in [1e-3, 1e-7, 1e-12] {
            let t: f64 = 1.0 + eps;
            let v = q("sqrt(t) + relu(t-1)", 0.5, t, Side::Left).value;
            let want = sp / 2.0 + 2.0 * ((t - 1.0) / PI).sqrt();
            assert!((v - want).abs() < 1e-12, "{eps}: {v} vs {want}");
        }
    }
}
