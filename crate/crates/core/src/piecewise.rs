//! Continuous piecewise-smooth functions on [0, T].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{near, solve_level, sort_dedup, Expr, Side};
use crate::parse::parse_definition;

/// Domain end used when none is given.
pub const DEFAULT_DOMAIN_END: f64 = 4.0;

/// Largest admissible jump between adjacent pieces.
pub const CONTINUITY_TOL: f64 = 1e-12;

/// Where the classical derivative blows up, and how fast: near `location`
/// on `side`, |f′(x)| grows like |x − location|^exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularityTag {
    pub location: f64,
    pub exponent: f64,
    pub side: Side,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Derivative {
    Finite(f64),
    Singular(SingularityTag),
}

impl Derivative {
    pub fn finite(self) -> Option<f64> {
        match self {
            Derivative::Finite(d) => Some(d),
            Derivative::Singular(_) => None,
        }
    }
}

/// A continuous function given by one expression per interval between
/// consecutive breakpoints. Every piece is analytic in the interior of its
/// interval; all non-smooth points are breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseFn {
    domain_end: f64,
    breakpoints: Vec<f64>,
    pieces: Vec<Expr>,
    value_at_0: f64,
}

impl PiecewiseFn {
    /// Parses the DSL on [0, domain_end].
    pub fn parse(src: &str, domain_end: f64) -> Result<Self> {
        let def = parse_definition(src, domain_end)?;
        let mut breaks = Vec::with_capacity(def.rest.len());
        let mut pieces = vec![def.first];
        for (b, e) in def.rest {
            if b >= domain_end {
                return Err(Error::Domain(format!(
                    "breakpoint {b} lies outside (0, {domain_end})"
                )));
            }
            breaks.push(b);
            pieces.push(e);
        }
        Self::from_pieces(&breaks, pieces, domain_end)
    }

    pub fn from_expr(expr: Expr, domain_end: f64) -> Result<Self> {
        Self::from_pieces(&[], vec![expr], domain_end)
    }

    /// `pieces[i]` governs between the (i−1)-th and i-th interior breakpoint.
    pub fn from_pieces(interior: &[f64], pieces: Vec<Expr>, domain_end: f64) -> Result<Self> {
        if !(domain_end > 0.0 && domain_end.is_finite()) {
            return Err(Error::Domain(format!(
                "domain end must be positive and finite, got {domain_end}"
            )));
        }
        if pieces.len() != interior.len() + 1 {
            return Err(Error::Domain("need one more piece than breakpoints".into()));
        }
        let mut edges = Vec::with_capacity(interior.len() + 2);
        edges.push(0.0);
        for &b in interior {
            if !(b > *edges.last().unwrap() && b < domain_end) {
                return Err(Error::Domain(format!(
                    "breakpoints must increase strictly inside (0, {domain_end}), got {b}"
                )));
            }
            edges.push(b);
        }
        edges.push(domain_end);
        for e in &pieces {
            e.validate()?;
        }
        for (i, &b) in interior.iter().enumerate() {
            let mismatch = (pieces[i].eval(b) - pieces[i + 1].eval(b)).abs();
            if !(mismatch <= CONTINUITY_TOL) {
                return Err(Error::Discontinuous { at: b, mismatch });
            }
        }
        Ok(Self::build(domain_end, &edges, pieces))
    }

    /// Restricts every piece to its interval and splits pieces at their
    /// own non-smooth points.
    fn build(domain_end: f64, edges: &[f64], pieces: Vec<Expr>) -> Self {
        let mut breakpoints = vec![0.0];
        let mut out = Vec::new();
        for (w, piece) in edges.windows(2).zip(pieces) {
            let (lo, hi) = (w[0], w[1]);
            let mut cuts = piece.critical_points(lo, hi);
            cuts.push(hi);
            let mut start = lo;
            for c in cuts {
                out.push(piece.restrict(start, c));
                breakpoints.push(c);
                start = c;
            }
        }
        let value_at_0 = out[0].eval(0.0);
        PiecewiseFn {
            domain_end,
            breakpoints,
            pieces: out,
            value_at_0,
        }
    }

    pub fn domain_end(&self) -> f64 {
        self.domain_end
    }

    /// All breakpoints, 0 and T included.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn interior_breakpoints(&self) -> &[f64] {
        &self.breakpoints[1..self.breakpoints.len() - 1]
    }

    pub fn pieces(&self) -> &[Expr] {
        &self.pieces
    }

    pub fn value_at_0(&self) -> f64 {
        self.value_at_0
    }

    /// The breakpoint equal to x, if any.
    pub fn breakpoint_at(&self, x: f64) -> Option<f64> {
        self.breakpoints.iter().copied().find(|&b| near(b, x))
    }

    /// Index of the piece governing x from `side`. Points past the ends
    /// fall to the first or last piece.
    pub fn piece_index(&self, x: f64, side: Side) -> usize {
        let m = self.pieces.len();
        let inner = &self.breakpoints[1..m];
        let mut idx = inner.partition_point(|&b| b < x && !near(b, x));
        if idx < inner.len() && near(inner[idx], x) && side == Side::Right {
            idx += 1;
        }
        idx.min(m - 1)
    }

    pub fn piece_at(&self, x: f64, side: Side) -> &Expr {
        &self.pieces[self.piece_index(x, side)]
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        let slack = CONTINUITY_TOL * self.domain_end.max(1.0);
        if x.is_nan() || x < -slack || x > self.domain_end + slack {
            return Err(Error::Domain(format!(
                "{x} lies outside [0, {}]",
                self.domain_end
            )));
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.at(x))
    }

    /// Unchecked evaluation.
    pub fn at(&self, x: f64) -> f64 {
        self.piece_at(x, Side::Right).eval(x)
    }

    /// One-sided classical derivative of the governing piece.
    pub fn classical_derivative(&self, x: f64, side: Side) -> Result<Derivative> {
        self.check_domain(x)?;
        if side == Side::Left && x <= 0.0 {
            return Err(Error::Domain("no left derivative at 0".into()));
        }
        let piece = self.piece_at(x, side);
        let order = piece.local_order(x, side);
        if order < 1.0 {
            return Ok(Derivative::Singular(SingularityTag {
                location: x,
                exponent: order - 1.0,
                side,
            }));
        }
        Ok(Derivative::Finite(piece.jet(x, 0.0, side).deriv))
    }

    /// Sampled (min, max) over the domain; exact for monotone pieces.
    pub fn range(&self) -> (f64, f64) {
        self.pieces
            .iter()
            .zip(self.breakpoints.windows(2))
            .map(|(p, w)| p.range(w[0], w[1]))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (c, d)| {
                (a.min(c), b.max(d))
            })
    }

    fn same_domain(&self, other: &Self) -> Result<()> {
        if near(self.domain_end, other.domain_end) {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "domains differ: [0, {}] vs [0, {}]",
                self.domain_end, other.domain_end
            )))
        }
    }

    fn combine(&self, other: &Self, op: impl Fn(Expr, Expr) -> Expr) -> Result<Self> {
        self.same_domain(other)?;
        let mut edges: Vec<f64> = self
            .breakpoints
            .iter()
            .chain(&other.breakpoints)
            .copied()
            .collect();
        sort_dedup(&mut edges);
        let pieces = edges
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                op(
                    self.piece_at(mid, Side::Right).clone(),
                    other.piece_at(mid, Side::Right).clone(),
                )
                .simplify()
            })
            .collect();
        Self::from_pieces(&edges[1..edges.len() - 1], pieces, self.domain_end)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| Expr::Sum(vec![a, b]))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| Expr::Product(vec![a, b]))
    }

    pub fn scale(&self, k: f64) -> Self {
        PiecewiseFn {
            domain_end: self.domain_end,
            breakpoints: self.breakpoints.clone(),
            pieces: self
                .pieces
                .iter()
                .map(|p| p.clone().scaled(k).simplify())
                .collect(),
            value_at_0: k * self.value_at_0,
        }
    }

    /// `outer ∘ inner` on inner's domain. Inner must map into outer's domain
    /// and be monotone on each of its pieces.
    pub fn compose(outer: &Self, inner: &Self) -> Result<Self> {
        let (lo, hi) = inner.range();
        let slack = CONTINUITY_TOL * outer.domain_end.max(1.0);
        if lo < -slack || hi > outer.domain_end + slack {
            return Err(Error::Domain(format!(
                "inner range [{lo}, {hi}] leaves the outer domain [0, {}]",
                outer.domain_end
            )));
        }
        let levels = outer.interior_breakpoints();
        let mut edges = inner.breakpoints.clone();
        for (piece, w) in inner.pieces.iter().zip(inner.breakpoints.windows(2)) {
            check_monotone(piece, w[0], w[1])?;
            for &c in levels {
                solve_level(piece, c, w[0], w[1], &mut edges);
            }
        }
        sort_dedup(&mut edges);
        let pieces = edges
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let inner_piece = inner.piece_at(mid, Side::Right).clone();
                let y = inner_piece.eval(mid);
                Expr::Compose {
                    outer: Box::new(outer.piece_at(y, Side::Right).clone()),
                    inner: Box::new(inner_piece),
                }
                .simplify()
            })
            .collect();
        Self::from_pieces(&edges[1..edges.len() - 1], pieces, inner.domain_end)
    }

    /// `self` on [0, t0] followed by `tail` on [t0, T] with T = tail's
    /// domain end. Fails unless both agree at t0.
    pub fn glue(&self, tail: &Self, t0: f64) -> Result<Self> {
        if !(t0 > 0.0 && t0 < tail.domain_end && t0 <= self.domain_end) {
            return Err(Error::Domain(format!("cannot glue at {t0}")));
        }
        let mut edges = Vec::new();
        let mut pieces = Vec::new();
        for (p, w) in self.pieces.iter().zip(self.breakpoints.windows(2)) {
            if w[0] < t0 && !near(w[0], t0) {
                edges.push(w[0]);
                pieces.push(p.clone());
            }
        }
        edges.push(t0);
        for (p, w) in tail.pieces.iter().zip(tail.breakpoints.windows(2)) {
            if w[1] > t0 && !near(w[1], t0) {
                if w[0] > t0 && !near(w[0], t0) {
                    edges.push(w[0]);
                }
                pieces.push(p.clone());
            }
        }
        Self::from_pieces(&edges[1..], pieces, tail.domain_end)
    }

    /// Same function on the shorter domain [0, end].
    pub fn restrict_to(&self, end: f64) -> Result<Self> {
        if !(end > 0.0 && end <= self.domain_end) {
            return Err(Error::Domain(format!("cannot restrict to [0, {end}]")));
        }
        let interior: Vec<f64> = self
            .interior_breakpoints()
            .iter()
            .copied()
            .filter(|&b| b < end && !near(b, end))
            .collect();
        let pieces = self.pieces[..=interior.len()].to_vec();
        Self::from_pieces(&interior, pieces, end)
    }

    /// Continues the last piece up to `end`.
    pub fn extend_to(&self, end: f64) -> Result<Self> {
        if end <= self.domain_end {
            return Ok(self.clone());
        }
        let interior = self.interior_breakpoints().to_vec();
        Self::from_pieces(&interior, self.pieces.clone(), end)
    }

    /// The DSL text, collapsed to a single expression when the last piece
    /// is valid everywhere.
    pub fn to_dsl(&self) -> String {
        let last = self.pieces.last().unwrap();
        let global = self
            .pieces
            .iter()
            .zip(self.breakpoints.windows(2))
            .all(|(p, w)| last.restrict(w[0], w[1]) == *p);
        if global {
            return last.to_dsl("t");
        }
        let mut s = String::from("piecewise(");
        for (i, p) in self.pieces.iter().enumerate() {
            if i > 0 {
                s.push_str(&format!(", {}, ", self.breakpoints[i]));
            }
            s.push_str(&p.to_dsl("t"));
        }
        s.push(')');
        s
    }
}

impl fmt::Display for PiecewiseFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_dsl())
    }
}

fn check_monotone(piece: &Expr, lo: f64, hi: f64) -> Result<()> {
    const SAMPLES: usize = 128;
    let tol = 1e-12 * piece.eval(lo).abs().max(piece.eval(hi).abs()).max(1.0);
    let (mut up, mut down) = (false, false);
    let mut prev = piece.eval(lo);
    for i in 1..=SAMPLES {
        let v = piece.eval(lo + (hi - lo) * i as f64 / SAMPLES as f64);
        up |= v > prev + tol;
        down |= v < prev - tol;
        prev = v;
    }
    if up && down {
        Err(Error::NonMonotone { lo, hi })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pf(src: &str) -> PiecewiseFn {
        PiecewiseFn::parse(src, DEFAULT_DOMAIN_END).unwrap()
    }

    #[test]
    fn kinked_root_structure_and_values() {
        let u = pf("sqrt(t) + relu(t-1)");
        assert_eq!(u.breakpoints(), &[0.0, 1.0, 4.0]);
        assert_eq!(u.eval(1.0).unwrap(), 1.0);
        assert!((u.eval(4.0).unwrap() - 5.0).abs() < 1e-15);
        assert_eq!(u.value_at_0(), 0.0);
        assert!(u.eval(4.5).is_err());
        assert!(u.eval(-0.1).is_err());
    }

    #[test]
    fn v_shape_values_and_derivatives() {
        let u = pf("1 - t + 2*relu(t-1)");
        assert_eq!(u.eval(1.0).unwrap(), 0.0);
        assert_eq!(
            u.classical_derivative(1.0, Side::Left).unwrap(),
            Derivative::Finite(-1.0)
        );
        assert_eq!(
            u.classical_derivative(1.0, Side::Right).unwrap(),
            Derivative::Finite(1.0)
        );
    }

    #[test]
    fn derivative_examples() {
        let sq = pf("t^2");
        for side in [Side::Left, Side::Right] {
            assert_eq!(
                sq.classical_derivative(3.0, side).unwrap(),
                Derivative::Finite(6.0)
            );
        }
        let u = pf("sqrt(t) + relu(t-1)");
        assert_eq!(
            u.classical_derivative(1.0, Side::Left).unwrap(),
            Derivative::Finite(0.5)
        );
        assert_eq!(
            u.classical_derivative(1.0, Side::Right).unwrap(),
            Derivative::Finite(1.5)
        );
        match u.classical_derivative(0.0, Side::Right).unwrap() {
            Derivative::Singular(tag) => {
                assert_eq!(tag.exponent, -0.5);
                assert_eq!(tag.location, 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn explicit_piecewise_matches_relu_form() {
        let a = pf("piecewise(sqrt(t), 1, sqrt(t) + t - 1)");
        let b = pf("sqrt(t) + relu(t-1)");
        for i in 0..=400 {
            let x = i as f64 / 100.0;
            assert!((a.at(x) - b.at(x)).abs() < 1e-14);
        }
    }

    #[test]
    fn discontinuity_is_reported() {
        match PiecewiseFn::parse("piecewise(t, 1, t + 0.5)", 4.0) {
            Err(Error::Discontinuous { at, mismatch }) => {
                assert_eq!(at, 1.0);
                assert!((mismatch - 0.5).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn square_of_kinked_root() {
        let u = pf("sqrt(t) + relu(t-1)");
        let uu = u.mul(&u).unwrap();
        assert_eq!(uu.pieces()[0], Expr::var());
        for x in [0.2, 1.0, 1.7, 3.9] {
            let v = u.at(x);
            assert!((uu.at(x) - v * v).abs() < 1e-13);
        }
    }

    #[test]
    fn square_of_v_shape() {
        let u = pf("1 - t + 2*relu(t-1)");
        let uu = u.mul(&u).unwrap();
        for x in [0.0, 0.5, 1.0, 2.5] {
            assert!((uu.at(x) - (x - 1.0) * (x - 1.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn compose_kinked_outer_with_square() {
        let f = PiecewiseFn::parse("sqrt(u) + relu(u-1)", 16.0).unwrap();
        let u = pf("t^2");
        let g = PiecewiseFn::compose(&f, &u).unwrap();
        assert_eq!(g.breakpoints(), &[0.0, 1.0, 4.0]);
        assert_eq!(g.pieces()[0], Expr::var());
        for x in [0.3, 1.0, 2.0, 3.5] {
            let want = if x <= 1.0 { x } else { x + x * x - 1.0 };
            assert!((g.at(x) - want).abs() < 1e-13);
        }
    }

    #[test]
    fn compose_rejects_bad_inner() {
        let f = pf("relu(t - 1)");
        let wide = pf("t^2");
        assert!(matches!(
            PiecewiseFn::compose(&f, &wide),
            Err(Error::Domain(_))
        ));
        let bump = pf("relu(1 - (t - 1)^2)");
        assert!(matches!(
            PiecewiseFn::compose(&f, &bump),
            Err(Error::NonMonotone { .. })
        ));
    }

    #[test]
    fn glue_and_restrict() {
        let base = pf("sqrt(t)");
        let cont = pf("sqrt(t) + 5*relu(t - 1)");
        let g = base.glue(&cont, 1.0).unwrap();
        assert_eq!(g.breakpoints(), &[0.0, 1.0, 4.0]);
        assert!((g.at(2.0) - (2f64.sqrt() + 5.0)).abs() < 1e-14);
        let bad = pf("t + 1");
        assert!(matches!(
            base.glue(&bad, 1.0),
            Err(Error::Discontinuous { .. })
        ));
        let r = g.restrict_to(1.0).unwrap();
        assert_eq!(r.breakpoints(), &[0.0, 1.0]);
    }

    #[test]
    fn display_round_trips() {
        for src in [
            "sqrt(t) + relu(t-1)",
            "1 - t + 2*relu(t-1)",
            "piecewise(t, 1, t^2)",
            "pshift(2, 0.5, 1.5) - 3*t",
            "relu(t^2 - 1)^0.5",
        ] {
            let f = pf(src);
            let g = pf(&f.to_dsl());
            for i in 0..=1000 {
                let x = 4.0 * i as f64 / 1000.0;
                assert!((f.at(x) - g.at(x)).abs() < 1e-12, "{src} -> {f} at {x}");
            }
        }
    }
}
