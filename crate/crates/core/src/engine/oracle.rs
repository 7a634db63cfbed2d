//! Independent check straight from the definition: H(s) = ∫₀ˢ (s−x)^{−α}
//! (f(x) − f(0)) dx by quadrature of the raw integrand, then a one-sided
//! difference quotient of H at t, extrapolated to zero step.
//!
//! Away from breakpoints the quotient has an error series in h, h², …; just
//! right of a breakpoint where the increment starts like (x−t)^γ it also
//! carries h^{γ−α} and h^{γ−α+1}, which the Richardson table removes first.

use super::quadrature::{integrate, plan, Integrand};
use super::{EngineConfig, FracOrder, SidedValue};
use crate::error::{Error, Result};
use crate::expr::{near, Expr, Side};
use crate::piecewise::PiecewiseFn;
use crate::special::gamma_unchecked;

/// H(s) for the α of the evaluation.
pub fn inner_integral(f: &PiecewiseFn, alpha: f64, s: f64, cfg: &EngineConfig) -> Result<f64> {
    let spec = plan(f, alpha, s, Integrand::Increment, cfg)?;
    let f0 = f.value_at_0();
    integrate(&spec, cfg.nodes, |p, off| {
        let side = if off >= 0.0 { Side::Right } else { Side::Left };
        let j = f.pieces()[p.piece].jet(p.anchor, off, side);
        (j.base - f0) + j.inc
    })
}

fn check_stencil(f: &PiecewiseFn, t: f64, far: f64) -> Result<()> {
    let (lo, hi) = if far < t { (far, t) } else { (t, far) };
    let hit = f
        .breakpoints()
        .iter()
        .copied()
        .find(|&b| b > lo && b < hi && !near(b, t));
    let outside = (lo < 0.0)
        .then_some(0.0)
        .or((hi > f.domain_end()).then_some(f.domain_end()));
    match hit.or(outside) {
        Some(breakpoint) => Err(Error::StencilCollision {
            from: lo,
            to: hi,
            breakpoint,
        }),
        None => Ok(()),
    }
}

/// Leading order of the increment that starts at t on `side`, when that
/// increment is not analytic there.
fn onset_order(f: &PiecewiseFn, t: f64, side: Side) -> Option<(f64, Expr)> {
    let here = f.piece_at(t, side);
    match side {
        Side::Right => {
            let at_break = t <= 0.0 || f.interior_breakpoints().iter().any(|&b| near(b, t));
            if !at_break {
                return None;
            }
            let before = if t <= 0.0 {
                Expr::Const(f.value_at_0())
            } else {
                f.piece_at(t, Side::Left).clone()
            };
            let diff = Expr::Sum(vec![here.clone(), before.scaled(-1.0)]).simplify();
            Some((diff.local_order(t, Side::Right), diff))
        }
        Side::Left => {
            if here.is_analytic(t, Side::Left) {
                None
            } else {
                Some((here.local_order(t, Side::Left), here.clone()))
            }
        }
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
    let dir = match side {
        Side::Left => -1.0,
        Side::Right => 1.0,
    };
    let h = cfg.oracle_step;
    check_stencil(f, t, t + dir * h)?;

    let mut exps = vec![1.0, 2.0];
    let mut levels = cfg.richardson_levels.max(1);
    if let Some((gamma, diff)) = onset_order(f, t, side) {
        if gamma < a {
            let probe = diff.jet(t, dir * 1e-30 * t.max(1.0), side).inc;
            return Ok(SidedValue::exact(f64::INFINITY.copysign(probe)));
        }
        if gamma.is_finite() {
            exps.extend([gamma - a, gamma - a + 1.0]);
            exps.retain(|&e| e > 1e-9);
            exps.sort_by(f64::total_cmp);
            exps.dedup_by(|x, y| (*x - *y).abs() < 1e-9);
            levels = levels.max(exps.len() + 1);
        }
    }

    let h_t = inner_integral(f, a, t, cfg)?;
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(levels);
    for k in 0..levels {
        let step = h / (1u64 << k) as f64;
        let h_s = inner_integral(f, a, t + dir * step, cfg)?;
        let mut row = vec![dir * (h_s - h_t) / step];
        for j in 1..=k.min(exps.len()) {
            let r = (exps[j - 1]).exp2();
            let prev = &table[k - 1];
            row.push((r * row[j - 1] - prev[j - 1]) / (r - 1.0));
        }
        table.push(row);
    }
    let last = table.last().unwrap();
    let best = *last.last().unwrap();
    let err = if last.len() > 1 {
        (best - last[last.len() - 2]).abs()
    } else {
        f64::INFINITY
    };
    let scale = 1.0 / gamma_unchecked(1.0 - a);
    Ok(SidedValue {
        value: best * scale,
        err_estimate: err * scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::piecewise::DEFAULT_DOMAIN_END;
    use std::f64::consts::PI;

    fn pf(src: &str) -> PiecewiseFn {
        PiecewiseFn::parse(src, DEFAULT_DOMAIN_END).unwrap()
    }

    fn o(src: &str, t: f64, side: Side) -> Result<SidedValue> {
        eval(&pf(src), FracOrder::HALF, t, side, &EngineConfig::default())
    }

    #[test]
    fn inner_integral_of_t() {
        // ∫₀ˢ (s−x)^{−1/2} x dx = (4/3) s^{3/2}
        let h = inner_integral(&pf("t"), 0.5, 2.0, &EngineConfig::default()).unwrap();
        assert!((h - 4.0 / 3.0 * 2f64.powf(1.5)).abs() < 1e-13);
    }

    #[test]
    fn golden_values() {
        let sp = PI.sqrt();
        let v = o("sqrt(t)", 0.25, Side::Left).unwrap();
        assert!((v.value - sp / 2.0).abs() < 1e-6);
        let v = o("t^1.5", 1.0, Side::Left).unwrap();
        assert!((v.value - 3.0 * sp / 4.0).abs() < 1e-6, "{v:?}");
        assert_eq!(o("0", 1.0, Side::Left).unwrap().value, 0.0);
    }

    #[test]
    fn right_of_a_kink() {
        let sp = PI.sqrt();
        let v = o("sqrt(t) + relu(t-1)", 1.0, Side::Right).unwrap();
        assert!((v.value - sp / 2.0).abs() < 1e-6, "{v:?}");
        let v = o("t + pshift(1, 1, 0.5)", 1.0, Side::Right).unwrap();
        assert!((v.value - (2.0 / sp + sp / 2.0)).abs() < 1e-6, "{v:?}");
    }

    #[test]
    fn stencil_collisions() {
        assert!(matches!(
            o("sqrt(t) + relu(t-1)", 1.0005, Side::Left),
            Err(Error::StencilCollision { breakpoint, .. }) if breakpoint == 1.0
        ));
        assert!(matches!(
            o("t", 0.0005, Side::Left),
            Err(Error::StencilCollision { .. })
        ));
        assert!(o("sqrt(t) + relu(t-1)", 1.0005, Side::Right).is_ok());
    }
}
