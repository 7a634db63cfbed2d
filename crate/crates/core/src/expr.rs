//! Expression trees over shifted-power terms.
//!
//! A `Power { coef, shift, exp }` node is `coef · (x − shift)^exp` for
//! `x ≥ shift` and zero before it. With `exp > 0` every term is continuous,
//! so every expression built from these nodes is continuous too.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which one-sided neighbourhood of a point is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Const(f64),
    Power { coef: f64, shift: f64, exp: f64 },
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Compose { outer: Box<Expr>, inner: Box<Expr> },
}

/// Value at an anchor, the increment to `anchor + offset`, and the
/// derivative at `anchor + offset`.
///
/// Keeping the increment separate lets quadrature nodes sit within a few ulps
/// of a shift point without cancellation in `x − shift`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub base: f64,
    pub inc: f64,
    pub deriv: f64,
}

impl Jet {
    pub fn value(&self) -> f64 {
        self.base + self.inc
    }
}

/// Tolerance for treating a point as sitting on a shift.
pub(crate) fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

fn is_integer(p: f64) -> bool {
    p == p.round()
}

impl Expr {
    /// The identity `x`.
    pub fn var() -> Expr {
        Expr::Power {
            coef: 1.0,
            shift: 0.0,
            exp: 1.0,
        }
    }

    pub fn power(coef: f64, shift: f64, exp: f64) -> Expr {
        Expr::Power { coef, shift, exp }
    }

    pub fn scaled(self, k: f64) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(k * c),
            Expr::Power { coef, shift, exp } => Expr::Power {
                coef: k * coef,
                shift,
                exp,
            },
            other => Expr::Product(vec![Expr::Const(k), other]),
        }
    }

    /// Checks the structural invariants: finite constants, `exp > 0`,
    /// `shift ≥ 0`.
    pub fn validate(&self) -> Result<()> {
        match self {
            Expr::Const(c) if !c.is_finite() => {
                Err(Error::Domain(format!("non-finite constant {c}")))
            }
            Expr::Const(_) => Ok(()),
            Expr::Power { coef, shift, exp } => {
                if !(coef.is_finite() && shift.is_finite() && exp.is_finite()) {
                    return Err(Error::Domain("non-finite power term".into()));
                }
                if *exp <= 0.0 {
                    return Err(Error::Domain(format!(
                        "power exponent must be positive, got {exp}"
                    )));
                }
                if *shift < 0.0 {
                    return Err(Error::Domain(format!(
                        "power shift must be non-negative, got {shift}"
                    )));
                }
                Ok(())
            }
            Expr::Sum(items) | Expr::Product(items) => items.iter().try_for_each(Expr::validate),
            Expr::Compose { outer, inner } => {
                outer.validate()?;
                inner.validate()
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.jet(x, 0.0, Side::Right).value()
    }

    /// Forward-mode evaluation at `anchor + offset`. `side` picks the
    /// one-sided derivative when the point lands exactly on a shift.
    pub fn jet(&self, anchor: f64, offset: f64, side: Side) -> Jet {
        match self {
            Expr::Const(c) => Jet {
                base: *c,
                inc: 0.0,
                deriv: 0.0,
            },
            Expr::Power { coef, shift, exp } => {
                power_jet(*coef, *shift, *exp, anchor, offset, side)
            }
            Expr::Sum(items) => items.iter().fold(
                Jet {
                    base: 0.0,
                    inc: 0.0,
                    deriv: 0.0,
                },
                |acc, e| {
                    let j = e.jet(anchor, offset, side);
                    Jet {
                        base: acc.base + j.base,
                        inc: acc.inc + j.inc,
                        deriv: acc.deriv + j.deriv,
                    }
                },
            ),
            Expr::Product(items) => items.iter().fold(
                Jet {
                    base: 1.0,
                    inc: 0.0,
                    deriv: 0.0,
                },
                |acc, e| {
                    let j = e.jet(anchor, offset, side);
                    let (va, vb) = (acc.value(), j.value());
                    Jet {
                        base: acc.base * j.base,
                        inc: acc.inc * j.base + acc.base * j.inc + acc.inc * j.inc,
                        deriv: mul0(acc.deriv, vb) + mul0(va, j.deriv),
                    }
                },
            ),
            Expr::Compose { outer, inner } => {
                let ij = inner.jet(anchor, offset, side);
                let outer_side = if ij.deriv < 0.0 { side.flip() } else { side };
                let oj = outer.jet(ij.base, ij.inc, outer_side);
                Jet {
                    base: oj.base,
                    inc: oj.inc,
                    deriv: if ij.deriv == 0.0 {
                        0.0
                    } else {
                        oj.deriv * ij.deriv
                    },
                }
            }
        }
    }

    /// Leading exponent γ of |f(x) − f(x0)| as x → x0 from `side`.
    ///
    /// Returns `INFINITY` when f is locally constant and `2.0` for an
    /// analytic point with vanishing slope (meaning "at least two").
    pub fn local_order(&self, x0: f64, side: Side) -> f64 {
        match self {
            Expr::Const(_) => f64::INFINITY,
            Expr::Power { coef, shift, exp } => {
                if *coef == 0.0 {
                    return f64::INFINITY;
                }
                let at_shift = near(x0, *shift);
                match side {
                    Side::Right if at_shift => *exp,
                    Side::Right if x0 > *shift => 1.0,
                    Side::Left if x0 > *shift && !at_shift => 1.0,
                    _ => f64::INFINITY,
                }
            }
            Expr::Sum(items) => {
                let mut order = f64::INFINITY;
                let mut slope = 0.0;
                let mut analytic_varies = false;
                for item in items {
                    if item.is_analytic(x0, side) {
                        let o = item.local_order(x0, side);
                        if o.is_finite() {
                            analytic_varies = true;
                            slope += item.jet(x0, 0.0, side).deriv;
                        }
                    } else {
                        order = order.min(item.local_order(x0, side));
                    }
                }
                if analytic_varies {
                    let a = if slope.abs() > 1e-13 { 1.0 } else { 2.0 };
                    order = order.min(a);
                }
                order
            }
            Expr::Product(items) => {
                let mut iter = items.iter();
                let Some(first) = iter.next() else {
                    return f64::INFINITY;
                };
                let mut order = first.local_order(x0, side);
                let mut value = first.eval(x0);
                for item in iter {
                    let o = item.local_order(x0, side);
                    let v = item.eval(x0);
                    let mut combined = order + o;
                    if v != 0.0 {
                        combined = combined.min(order);
                    }
                    if value != 0.0 {
                        combined = combined.min(o);
                    }
                    order = combined;
                    value *= v;
                }
                order
            }
            Expr::Compose { outer, inner } => {
                let oi = inner.local_order(x0, side);
                if oi.is_infinite() {
                    return f64::INFINITY;
                }
                let y0 = inner.eval(x0);
                match inner.direction(x0, side) {
                    None => f64::INFINITY,
                    Some(oside) => outer.local_order(y0, oside) * oi,
                }
            }
        }
    }

    /// Side of y0 = f(x0) from which f approaches y0 as x → x0 from `side`,
    /// or `None` if f is locally constant.
    pub(crate) fn direction(&self, x0: f64, side: Side) -> Option<Side> {
        let sign = match side {
            Side::Right => 1.0,
            Side::Left => -1.0,
        };
        let d = self.jet(x0, 0.0, side).deriv * sign;
        if d > 0.0 {
            return Some(Side::Right);
        }
        if d < 0.0 {
            return Some(Side::Left);
        }
        let eps = 1e-7 * x0.abs().max(1.0);
        let inc = self.jet(x0, sign * eps, side).inc;
        if inc > 0.0 {
            Some(Side::Right)
        } else if inc < 0.0 {
            Some(Side::Left)
        } else {
            None
        }
    }

    /// True when the expression is analytic in a one-sided neighbourhood of
    /// x0, endpoint included. Conservative for compositions.
    pub fn is_analytic(&self, x0: f64, side: Side) -> bool {
        match self {
            Expr::Const(_) => true,
            Expr::Power { coef, shift, exp } => {
                *coef == 0.0 || side == Side::Left || !near(x0, *shift) || is_integer(*exp)
            }
            Expr::Sum(items) | Expr::Product(items) => {
                items.iter().all(|e| e.is_analytic(x0, side))
            }
            Expr::Compose { outer, inner } => {
                if !inner.is_analytic(x0, side) {
                    return false;
                }
                match inner.direction(x0, side) {
                    None => true,
                    Some(oside) => outer.is_analytic(inner.eval(x0), oside),
                }
            }
        }
    }

    /// Points in the open interval (lo, hi) where the expression may fail to
    /// be analytic. Sorted and deduplicated.
    pub fn critical_points(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out = Vec::new();
        self.collect_critical(lo, hi, &mut out);
        sort_dedup(&mut out);
        out
    }

    fn collect_critical(&self, lo: f64, hi: f64, out: &mut Vec<f64>) {
        match self {
            Expr::Const(_) => {}
            Expr::Power { shift, .. } => {
                if *shift > lo && *shift < hi && !near(*shift, lo) && !near(*shift, hi) {
                    out.push(*shift);
                }
            }
            Expr::Sum(items) | Expr::Product(items) => {
                for e in items {
                    e.collect_critical(lo, hi, out);
                }
            }
            Expr::Compose { outer, inner } => {
                let mut inner_pts = inner.critical_points(lo, hi);
                let (umin, umax) = inner.range(lo, hi);
                let levels = outer.critical_points(umin, umax);
                let mut edges = vec![lo];
                edges.append(&mut inner_pts.clone());
                edges.push(hi);
                for level in levels {
                    for seg in edges.windows(2) {
                        solve_level(inner, level, seg[0], seg[1], out);
                    }
                }
                out.append(&mut inner_pts);
                out.retain(|&x| x > lo && x < hi && !near(x, lo) && !near(x, hi));
            }
        }
    }

    /// Sampled range over [lo, hi]; exact for monotone expressions.
    pub fn range(&self, lo: f64, hi: f64) -> (f64, f64) {
        const SAMPLES: usize = 256;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for i in 0..=SAMPLES {
            let x = lo + (hi - lo) * i as f64 / SAMPLES as f64;
            let v = self.eval(x);
            min = min.min(v);
            max = max.max(v);
        }
        (min, max)
    }

    /// Simplified copy valid on [lo, hi]: terms that vanish there are dropped.
    pub fn restrict(&self, lo: f64, hi: f64) -> Expr {
        self.restrict_inner(lo, hi).simplify()
    }

    fn restrict_inner(&self, lo: f64, hi: f64) -> Expr {
        match self {
            Expr::Power { shift, .. } if *shift >= hi || near(*shift, hi) => Expr::Const(0.0),
            Expr::Const(_) | Expr::Power { .. } => self.clone(),
            Expr::Sum(items) => Expr::Sum(items.iter().map(|e| e.restrict_inner(lo, hi)).collect()),
            Expr::Product(items) => {
                Expr::Product(items.iter().map(|e| e.restrict_inner(lo, hi)).collect())
            }
            Expr::Compose { outer, inner } => {
                let inner = inner.restrict_inner(lo, hi).simplify();
                let (umin, umax) = inner.range(lo, hi);
                let outer = if umax > umin {
                    outer.restrict_inner(umin, umax)
                } else {
                    (**outer).clone()
                };
                Expr::Compose {
                    outer: Box::new(outer),
                    inner: Box::new(inner),
                }
            }
        }
    }

    /// Algebraic clean-up: flattens nested sums and products, folds
    /// constants, merges like power terms.
    pub fn simplify(&self) -> Expr {
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Power { coef, .. } if *coef == 0.0 => Expr::Const(0.0),
            Expr::Power { .. } => self.clone(),
            Expr::Sum(items) => simplify_sum(items),
            Expr::Product(items) => simplify_product(items),
            Expr::Compose { outer, inner } => {
                let outer = outer.simplify();
                let inner = inner.simplify();
                if let Expr::Const(_) = outer {
                    return outer;
                }
                if let Expr::Const(c) = inner {
                    return Expr::Const(outer.eval(c));
                }
                let distribute = |items: &[Expr]| -> Vec<Expr> {
                    items
                        .iter()
                        .map(|o| Expr::Compose {
                            outer: Box::new(o.clone()),
                            inner: Box::new(inner.clone()),
                        })
                        .collect()
                };
                match &outer {
                    Expr::Sum(items) => return Expr::Sum(distribute(items)).simplify(),
                    Expr::Product(items) => return Expr::Product(distribute(items)).simplify(),
                    _ => {}
                }
                // domains start at 0, where the identity is its own positive part
                if inner == Expr::var() {
                    return outer;
                }
                if let (
                    Expr::Power {
                        coef: c,
                        shift: 0.0,
                        exp: p,
                    },
                    Expr::Power {
                        coef: k,
                        shift: b,
                        exp: q,
                    },
                ) = (&outer, &inner)
                {
                    if *k > 0.0 {
                        return Expr::power(c * k.powf(*p), *b, q * p);
                    }
                }
                Expr::Compose {
                    outer: Box::new(outer),
                    inner: Box::new(inner),
                }
            }
        }
    }

    /// Affine form `a·x + c` if the expression is exactly affine on x ≥ 0.
    pub fn as_affine(&self) -> Option<(f64, f64)> {
        match self {
            Expr::Const(c) => Some((0.0, *c)),
            Expr::Power {
                coef,
                shift: 0.0,
                exp: 1.0,
            } => Some((*coef, 0.0)),
            Expr::Power { coef: 0.0, .. } => Some((0.0, 0.0)),
            Expr::Power { .. } | Expr::Compose { .. } => None,
            Expr::Sum(items) => items.iter().try_fold((0.0, 0.0), |(a, c), e| {
                let (ea, ec) = e.as_affine()?;
                Some((a + ea, c + ec))
            }),
            Expr::Product(items) => items.iter().try_fold((0.0, 1.0), |(a, c), e| {
                let (ea, ec) = e.as_affine()?;
                if a != 0.0 && ea != 0.0 {
                    return None;
                }
                Some((a * ec + c * ea, c * ec))
            }),
        }
    }

    /// Renders the expression in the function DSL with `var` standing for
    /// the argument.
    pub fn to_dsl(&self, var: &str) -> String {
        let mut s = String::new();
        self.write_dsl(var, &mut s);
        s
    }

    fn write_dsl(&self, var: &str, out: &mut String) {
        let plain = is_plain_var(var);
        match self {
            Expr::Const(c) => out.push_str(&fmt_num(*c)),
            Expr::Power { coef, shift, exp } => {
                if plain && *shift != 0.0 && (*exp != 1.0) {
                    let _ = write!(out, "pshift({coef}, {shift}, {exp})");
                    return;
                }
                if *coef != 1.0 {
                    let _ = write!(out, "{}*", fmt_num(*coef));
                }
                if plain && *shift == 0.0 {
                    out.push_str(var);
                } else if *shift == 0.0 {
                    let _ = write!(out, "relu({var})");
                } else {
                    let _ = write!(out, "relu({var} - {shift})");
                }
                if *exp != 1.0 {
                    let _ = write!(out, "^{exp}");
                }
            }
            Expr::Sum(items) => {
                out.push('(');
                for (i, e) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(" + ");
                    }
                    e.write_dsl(var, out);
                }
                if items.is_empty() {
                    out.push('0');
                }
                out.push(')');
            }
            Expr::Product(items) => {
                for (i, e) in items.iter().enumerate() {
                    if i > 0 {
                        out.push('*');
                    }
                    out.push('(');
                    e.write_dsl(var, out);
                    out.push(')');
                }
                if items.is_empty() {
                    out.push('1');
                }
            }
            Expr::Compose { outer, inner } => {
                let inner_text = format!("({})", inner.to_dsl(var));
                outer.write_dsl(&inner_text, out);
            }
        }
    }
}

impl std::fmt::Display for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_dsl("t"))
    }
}

fn is_plain_var(var: &str) -> bool {
    matches!(var, "t" | "u" | "x")
}

fn fmt_num(c: f64) -> String {
    if c < 0.0 {
        format!("({c})")
    } else {
        format!("{c}")
    }
}

/// Product that treats 0 · ∞ as 0 (a vanishing factor beats a blow-up of
/// lower order in every expression this crate builds).
fn mul0(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

fn power_jet(coef: f64, shift: f64, exp: f64, anchor: f64, offset: f64, side: Side) -> Jet {
    if coef == 0.0 {
        return Jet {
            base: 0.0,
            inc: 0.0,
            deriv: 0.0,
        };
    }
    let a0 = anchor - shift;
    let d = a0 + offset;
    let base = if a0 > 0.0 { coef * a0.powf(exp) } else { 0.0 };
    let value = if d > 0.0 { coef * d.powf(exp) } else { 0.0 };
    let inc = if a0 > 0.0 && d > 0.0 {
        base * (exp * (offset / a0).ln_1p()).exp_m1()
    } else {
        value - base
    };
    let deriv = if d > 0.0 {
        coef * exp * d.powf(exp - 1.0)
    } else if d < 0.0 || side == Side::Left || exp > 1.0 {
        0.0
    } else if exp == 1.0 {
        coef
    } else {
        f64::INFINITY.copysign(coef)
    };
    Jet { base, inc, deriv }
}

fn simplify_sum(items: &[Expr]) -> Expr {
    let mut flat = Vec::new();
    for e in items {
        match e.simplify() {
            Expr::Sum(inner) => flat.extend(inner),
            other => flat.push(other),
        }
    }
    let mut constant = 0.0;
    let mut terms: Vec<Expr> = Vec::new();
    for e in flat {
        match e {
            Expr::Const(c) => constant += c,
            Expr::Power { coef, shift, exp } => {
                let existing = terms.iter_mut().find_map(|t| match t {
                    Expr::Power {
                        coef: c2,
                        shift: s2,
                        exp: e2,
                    } if *s2 == shift && *e2 == exp => Some(c2),
                    _ => None,
                });
                match existing {
                    Some(c2) => *c2 += coef,
                    None => terms.push(Expr::Power { coef, shift, exp }),
                }
            }
            other => terms.push(other),
        }
    }
    terms.retain(|t| !matches!(t, Expr::Power { coef, .. } if *coef == 0.0));
    if constant != 0.0 || terms.is_empty() {
        terms.insert(0, Expr::Const(constant));
    }
    if terms.len() == 1 {
        terms.pop().unwrap()
    } else {
        Expr::Sum(terms)
    }
}

fn simplify_product(items: &[Expr]) -> Expr {
    let mut flat = Vec::new();
    for e in items {
        match e.simplify() {
            Expr::Product(inner) => flat.extend(inner),
            other => flat.push(other),
        }
    }
    let mut scale = 1.0;
    let mut powers: Vec<(f64, f64)> = Vec::new(); // (shift, exp)
    let mut rest = Vec::new();
    for e in flat {
        match e {
            Expr::Const(c) => scale *= c,
            Expr::Power { coef, shift, exp } => {
                scale *= coef;
                match powers.iter_mut().find(|(s, _)| *s == shift) {
                    Some((_, e)) => *e += exp,
                    None => powers.push((shift, exp)),
                }
            }
            other => rest.push(other),
        }
    }
    if scale == 0.0 {
        return Expr::Const(0.0);
    }
    let mut factors: Vec<Expr> = powers
        .into_iter()
        .map(|(shift, exp)| Expr::power(1.0, shift, exp))
        .collect();
    factors.extend(rest);
    match factors.len() {
        0 => Expr::Const(scale),
        1 => factors.pop().unwrap().scaled(scale),
        _ => {
            if scale != 1.0 {
                let first = factors.remove(0).scaled(scale);
                factors.insert(0, first);
            }
            Expr::Product(factors)
        }
    }
}

pub(crate) fn sort_dedup(v: &mut Vec<f64>) {
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| near(*a, *b));
}

/// Appends the roots of `f(x) = level` in (lo, hi), found by sampling for
/// sign changes and bisecting to full precision.
pub(crate) fn solve_level(f: &Expr, level: f64, lo: f64, hi: f64, out: &mut Vec<f64>) {
    const SAMPLES: usize = 64;
    let g = |x: f64| f.eval(x) - level;
    let mut x_prev = lo;
    let mut g_prev = g(lo);
    for i in 1..=SAMPLES {
        let x = lo + (hi - lo) * i as f64 / SAMPLES as f64;
        let gx = g(x);
        if gx == 0.0 {
            out.push(x);
        } else if g_prev != 0.0 && (g_prev < 0.0) != (gx < 0.0) {
            out.push(bisect(&g, x_prev, x, g_prev));
        }
        x_prev = x;
        g_prev = gx;
    }
}

pub(crate) fn bisect<F: Fn(f64) -> f64>(g: &F, mut a: f64, mut b: f64, ga: f64) -> f64 {
    let neg_at_a = ga < 0.0;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let gm = g(m);
        if gm == 0.0 {
            return m;
        }
        if (gm < 0.0) == neg_at_a {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
