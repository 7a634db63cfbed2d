//! Flattening of piecewise functions into finite sums of shifted powers
//! Σ cᵢ (x − bᵢ)₊^{pᵢ} + k, the form the fractional power rule acts on.
//!
//! Each piece is first expanded to a formula valid on its own interval.
//! The pieces are then glued as P₀ + Σ 1{x ≥ bᵢ}(Pᵢ − Pᵢ₋₁); the indicator
//! can be absorbed only when every surviving term of the difference either
//! starts at or after bᵢ or has an integer exponent (binomial re-expansion
//! around bᵢ).

use crate::error::{Error, Result};
use crate::expr::{near, Expr, Side};
use crate::piecewise::PiecewiseFn;
use crate::special::power_rule_coeff;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub coef: f64,
    pub shift: f64,
    pub exp: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PowerSum {
    pub constant: f64,
    pub terms: Vec<Term>,
}

fn is_int(p: f64) -> bool {
    (p - p.round()).abs() < 1e-12 && p.round() >= 0.0 && p <= 64.0
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl PowerSum {
    pub fn constant(c: f64) -> Self {
        PowerSum {
            constant: c,
            terms: Vec::new(),
        }
    }

    pub fn term(coef: f64, shift: f64, exp: f64) -> Self {
        PowerSum {
            constant: 0.0,
            terms: vec![Term { coef, shift, exp }],
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.constant
            + self
                .terms
                .iter()
                .map(|t| {
                    let d = x - t.shift;
                    if d > 0.0 {
                        t.coef * d.powf(t.exp)
                    } else {
                        0.0
                    }
                })
                .sum::<f64>()
    }

    fn magnitude(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coef.abs())
            .fold(self.constant.abs(), f64::max)
    }

    fn add_scaled(&mut self, other: &PowerSum, k: f64) {
        self.constant += k * other.constant;
        self.terms.extend(other.terms.iter().map(|t| Term {
            coef: k * t.coef,
            ..*t
        }));
    }

    /// Merges like terms and drops those that cancel to within `scale`.
    fn normalize(&mut self, scale: f64) {
        let mut merged: Vec<Term> = Vec::with_capacity(self.terms.len());
        for t in self.terms.drain(..) {
            match merged
                .iter_mut()
                .find(|m| near(m.shift, t.shift) && (m.exp - t.exp).abs() < 1e-12)
            {
                Some(m) => m.coef += t.coef,
                None => merged.push(t),
            }
        }
        let cut = 1e-12 * scale.max(1.0);
        merged.retain(|t| t.coef.abs() > cut);
        merged.sort_by(|a, b| a.shift.total_cmp(&b.shift).then(a.exp.total_cmp(&b.exp)));
        self.terms = merged;
    }

    fn mul(&self, other: &PowerSum, lo: f64) -> Result<PowerSum> {
        let mut out = PowerSum::constant(self.constant * other.constant);
        for t in &self.terms {
            out.terms.push(Term {
                coef: t.coef * other.constant,
                ..*t
            });
        }
        for t in &other.terms {
            out.terms.push(Term {
                coef: t.coef * self.constant,
                ..*t
            });
        }
        for a in &self.terms {
            for b in &other.terms {
                out.add_scaled(&term_product(*a, *b, lo)?, 1.0);
            }
        }
        let scale = self.magnitude() * other.magnitude();
        out.normalize(scale);
        Ok(out)
    }

    /// The α-derivative at t, taking the one-sided limit from `side` for
    /// terms that start exactly at t.
    pub fn frac_deriv(&self, alpha: f64, t: f64, side: Side) -> f64 {
        self.terms
            .iter()
            .map(|term| {
                let Term { coef, shift, exp } = *term;
                if near(t, shift) {
                    match side {
                        Side::Left => 0.0,
                        Side::Right if exp > alpha => 0.0,
                        Side::Right if exp == alpha => coef * power_rule_coeff(exp, alpha),
                        Side::Right => f64::INFINITY.copysign(coef),
                    }
                } else if t > shift {
                    coef * power_rule_coeff(exp, alpha) * (t - shift).powf(exp - alpha)
                } else {
                    0.0
                }
            })
            .sum()
    }
}

/// (x − s)^p expanded around `center` for integer p; the constant lands in
/// the returned sum's constant field.
fn expand_integer(coef: f64, s: f64, p: f64, center: f64) -> PowerSum {
    let n = p.round() as u32;
    let d = center - s;
    let mut out = PowerSum::default();
    for j in 0..=n {
        let c = coef * binomial(n, j) * d.powi((n - j) as i32);
        if j == 0 {
            out.constant += c;
        } else {
            out.terms.push(Term {
                coef: c,
                shift: center,
                exp: j as f64,
            });
        }
    }
    out
}

/// Product of two terms, valid on x ≥ lo where lo is at or past both shifts.
fn term_product(a: Term, b: Term, lo: f64) -> Result<PowerSum> {
    if near(a.shift, b.shift) {
        return Ok(PowerSum::term(a.coef * b.coef, a.shift, a.exp + b.exp));
    }
    let (first, second) = if a.shift < b.shift { (a, b) } else { (b, a) };
    if is_int(first.exp) {
        // exact for all x: the earlier factor is a polynomial once the later one is on
        let poly = expand_integer(first.coef, first.shift, first.exp, second.shift);
        let mut out = PowerSum::term(poly.constant * second.coef, second.shift, second.exp);
        for t in poly.terms {
            out.terms.push(Term {
                coef: t.coef * second.coef,
                shift: second.shift,
                exp: t.exp + second.exp,
            });
        }
        return Ok(out);
    }
    if is_int(second.exp) && (lo >= second.shift || near(lo, second.shift)) {
        let poly = expand_integer(second.coef, second.shift, second.exp, first.shift);
        let mut out = PowerSum::term(poly.constant * first.coef, first.shift, first.exp);
        for t in poly.terms {
            out.terms.push(Term {
                coef: t.coef * first.coef,
                shift: first.shift,
                exp: t.exp + first.exp,
            });
        }
        return Ok(out);
    }
    Err(Error::NotRepresentable(format!(
        "product of (x - {})^{} and (x - {})^{}",
        first.shift, first.exp, second.shift, second.exp
    )))
}

/// Expands `e` into a shifted-power sum that agrees with it on [lo, hi].
/// The interval must not contain any non-smooth point of `e` in its interior.
pub fn flatten_expr(e: &Expr, lo: f64, hi: f64) -> Result<PowerSum> {
    match e {
        Expr::Const(c) => Ok(PowerSum::constant(*c)),
        Expr::Power { coef, shift, exp } => {
            if *shift >= hi || near(*shift, hi) {
                Ok(PowerSum::default())
            } else {
                Ok(PowerSum::term(*coef, *shift, *exp))
            }
        }
        Expr::Sum(items) => {
            let mut out = PowerSum::default();
            let mut scale: f64 = 0.0;
            for item in items {
                let p = flatten_expr(item, lo, hi)?;
                scale = scale.max(p.magnitude());
                out.add_scaled(&p, 1.0);
            }
            out.normalize(scale);
            Ok(out)
        }
        Expr::Product(items) => {
            let mut out = PowerSum::constant(1.0);
            for item in items {
                out = out.mul(&flatten_expr(item, lo, hi)?, lo)?;
            }
            Ok(out)
        }
        Expr::Compose { outer, inner } => {
            let q = flatten_expr(inner, lo, hi)?;
            let (umin, umax) = inner.range(lo, hi);
            let outer_sum = flatten_expr(outer, umin, umax.max(umin))?;
            let mid = 0.5 * (lo + hi);
            let mut out = PowerSum::constant(outer_sum.constant);
            for t in &outer_sum.terms {
                let mut r = q.clone();
                r.constant -= t.shift;
                if r.eval(mid) <= 0.0 {
                    continue;
                }
                out.add_scaled(&positive_power(&r, t.exp, lo)?, t.coef);
            }
            out.normalize(outer_sum.magnitude() * q.magnitude().max(1.0));
            Ok(out)
        }
    }
}

/// r^p for r > 0 on the interval.
fn positive_power(r: &PowerSum, p: f64, lo: f64) -> Result<PowerSum> {
    if is_int(p) {
        let mut out = PowerSum::constant(1.0);
        for _ in 0..p.round() as u32 {
            out = out.mul(r, lo)?;
        }
        return Ok(out);
    }
    match (r.constant, r.terms.as_slice()) {
        (c, []) => Ok(PowerSum::constant(c.powf(p))),
        (c, [t]) if c == 0.0 && t.coef > 0.0 => {
            Ok(PowerSum::term(t.coef.powf(p), t.shift, t.exp * p))
        }
        _ => Err(Error::NotRepresentable(format!(
            "non-integer power {p} of a multi-term expression"
        ))),
    }
}

/// The shifted-power sum equal to `f` on [0, b_{last+1}], where `last` is a
/// piece index.
pub fn flatten(f: &PiecewiseFn, last: usize) -> Result<PowerSum> {
    let edges = f.breakpoints();
    let pieces = f.pieces();
    let mut prev = flatten_expr(&pieces[0], edges[0], edges[1])?;
    let mut total = prev.clone();
    for i in 1..=last.min(pieces.len() - 1) {
        let cur = flatten_expr(&pieces[i], edges[i], edges[i + 1])?;
        let mut diff = cur.clone();
        diff.add_scaled(&prev, -1.0);
        diff.normalize(cur.magnitude().max(prev.magnitude()));
        total.add_scaled(&after(&diff, edges[i])?, 1.0);
        prev = cur;
    }
    let scale = total.magnitude();
    total.normalize(scale);
    Ok(total)
}

/// 1{x ≥ b} · d(x) as a shifted-power sum. The constant part of the result
/// vanishes by continuity and is dropped.
fn after(d: &PowerSum, b: f64) -> Result<PowerSum> {
    let mut out = PowerSum::default();
    for t in &d.terms {
        if t.shift >= b || near(t.shift, b) {
            out.terms.push(*t);
        } else if is_int(t.exp) {
            let e = expand_integer(t.coef, t.shift, t.exp, b);
            out.terms.extend(e.terms);
        } else {
            return Err(Error::NotRepresentable(format!(
                "term (x - {})^{} changes at {b}",
                t.shift, t.exp
            )));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::piecewise::DEFAULT_DOMAIN_END;
    use std::f64::consts::PI;

    fn pf(src: &str) -> PiecewiseFn {
        PiecewiseFn::parse(src, DEFAULT_DOMAIN_END).unwrap()
    }

    fn whole(f: &PiecewiseFn) -> PowerSum {
        flatten(f, f.pieces().len() - 1).unwrap()
    }

    fn agrees(f: &PiecewiseFn, s: &PowerSum) {
        for i in 0..=400 {
            let x = i as f64 / 100.0;
            assert!((f.at(x) - s.eval(x)).abs() < 1e-12, "{f} at {x}");
        }
    }

    #[test]
    fn kinked_root_flattens_directly() {
        let f = pf("sqrt(t) + relu(t-1)");
        let s = whole(&f);
        assert_eq!(s.terms.len(), 2);
        agrees(&f, &s);
    }

    #[test]
    fn explicit_pieces_glue_into_shifted_terms() {
        let f = pf("piecewise(sqrt(t), 1, sqrt(t) + t - 1)");
        let s = whole(&f);
        assert_eq!(s.terms.len(), 2);
        assert_eq!(
            s.terms[1],
            Term {
                coef: 1.0,
                shift: 1.0,
                exp: 1.0
            }
        );
        agrees(&f, &s);
    }

    #[test]
    fn square_of_v_shape_is_polynomial() {
        let u = pf("1 - t + 2*relu(t-1)");
        let s = whole(&u.mul(&u).unwrap());
        agrees(&u.mul(&u).unwrap(), &s);
        // (t−1)² = t² − 2t + 1 everywhere
        let got = s.frac_deriv(0.5, 1.0, Side::Left);
        assert!((got + 4.0 / (3.0 * PI.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn square_of_kinked_root_is_not_representable() {
        let u = pf("sqrt(t) + relu(t-1)");
        let uu = u.mul(&u).unwrap();
        assert!(flatten(&uu, 0).is_ok());
        assert!(matches!(flatten(&uu, 1), Err(Error::NotRepresentable(_))));
    }

    #[test]
    fn kinked_outer_of_square_flattens() {
        let f = PiecewiseFn::parse("sqrt(u) + relu(u-1)", 16.0).unwrap();
        let g = PiecewiseFn::compose(&f, &pf("t^2")).unwrap();
        let s = whole(&g);
        agrees(&g, &s);
        let sp = PI.sqrt();
        for t in [1.5, 2.0] {
            let profile = 2.0 * (t / PI).sqrt()
                + 4.0 / sp * (t * (t - 1.0f64).sqrt() - (t - 1.0f64).powf(1.5) / 3.0);
            assert!((s.frac_deriv(0.5, t, Side::Left) - profile).abs() < 1e-13);
        }
    }

    #[test]
    fn products_of_shifted_terms() {
        let f = pf("relu(t-1) * pshift(1, 2, 0.5)");
        agrees(&f, &whole(&f));
        let g = pf("t^2 * relu(t - 1)^1.5");
        agrees(&g, &whole(&g));
        let h = pf("sqrt(t) * relu(t - 1)");
        assert!(flatten(&h, 1).is_err());
    }

    #[test]
    fn one_sided_rule_at_shift() {
        let s = PowerSum::term(2.0, 1.0, 0.5);
        assert_eq!(s.frac_deriv(0.5, 1.0, Side::Left), 0.0);
        assert!((s.frac_deriv(0.5, 1.0, Side::Right) - PI.sqrt()).abs() < 1e-14);
        assert!(s.frac_deriv(0.7, 1.0, Side::Right).is_infinite());
        assert_eq!(s.frac_deriv(0.3, 1.0, Side::Right), 0.0);
    }
}
