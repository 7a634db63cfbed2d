//! Recursive-descent parser for the function DSL.
//!
//! ```text
//! definition := expr | 'piecewise' '(' expr (',' number ',' expr)* ')'
//! expr       := term (('+' | '-') term)*
//! term       := unary (('*' | '/') unary)*
//! unary      := ('-' | '+') unary | power
//! power      := atom ('^' unary)*
//! atom       := number | 't' | 'u' | 'x' | '(' expr ')'
//!             | 'sqrt' '(' expr ')' | 'relu' '(' expr ')'
//!             | 'pshift' '(' number ',' number ',' number ')'
//! ```
//!
//! Integer powers multiply out; non-integer powers and `sqrt` take the power
//! of the positive part, which keeps every expression continuous. Exponents
//! and divisors must be constant.

use crate::error::{Error, Result};
use crate::expr::Expr;

/// A parsed function definition before it is checked for continuity.
#[derive(Debug, Clone, PartialEq)]
pub struct Definition {
    pub first: Expr,
    /// `(breakpoint, expression from that breakpoint on)`, increasing.
    pub rest: Vec<(f64, Expr)>,
}

/// Parses a single expression (no `piecewise`).
pub fn parse_expr(src: &str) -> Result<Expr> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    p.expect_end()?;
    Ok(e.simplify())
}

/// Parses a full definition, which may be a top-level `piecewise(...)`.
/// `domain_end` is used to check that `sqrt` arguments stay non-negative.
pub fn parse_definition(src: &str, domain_end: f64) -> Result<Definition> {
    let mut p = Parser::new(src)?;
    p.domain_end = domain_end;
    let def = if p.peek_ident() == Some("piecewise") {
        p.piecewise()?
    } else {
        Definition {
            first: p.expr()?.simplify(),
            rest: Vec::new(),
        }
    };
    p.expect_end()?;
    Ok(def)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
    domain_end: f64,
}

fn syntax(position: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        position,
        message: message.into(),
    }
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let v: f64 = text
                .parse()
                .map_err(|_| syntax(start, format!("malformed number '{text}'")))?;
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
        } else if "+-*/^(),".contains(c) {
            out.push((Tok::Sym(c), i));
            i += 1;
        } else {
            let ch = src[i..].chars().next().unwrap_or(c);
            return Err(syntax(i, format!("unexpected character '{ch}'")));
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self> {
        Ok(Parser {
            src,
            toks: tokenize(src)?,
            pos: 0,
            domain_end: f64::INFINITY,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn peek_ident(&self) -> Option<&str> {
        match self.peek() {
            Tok::Ident(s) => Some(s),
            _ => None,
        }
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(syntax(
                self.offset(),
                format!("expected '{c}', found {}", self.describe()),
            ))
        }
    }

    fn expect_end(&self) -> Result<()> {
        match self.peek() {
            Tok::End => Ok(()),
            _ => Err(syntax(
                self.offset(),
                format!("unexpected {}", self.describe()),
            )),
        }
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::End => "end of input".into(),
            _ => {
                let start = self.offset();
                let end = self.toks[self.pos + 1].1.max(start + 1).min(self.src.len());
                format!("'{}'", self.src[start..end].trim())
            }
        }
    }

    fn piecewise(&mut self) -> Result<Definition> {
        self.bump();
        self.expect('(')?;
        let first = self.expr()?.simplify();
        let mut rest: Vec<(f64, Expr)> = Vec::new();
        while self.eat(',') {
            let at = self.offset();
            let b = self.signed_number()?;
            let prev = rest.last().map_or(0.0, |r| r.0);
            if !(b > prev) {
                return Err(syntax(at, format!("breakpoint {b} must exceed {prev}")));
            }
            self.expect(',')?;
            rest.push((b, self.expr()?.simplify()));
        }
        self.expect(')')?;
        Ok(Definition { first, rest })
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut items = vec![self.term()?];
        loop {
            if self.eat('+') {
                items.push(self.term()?);
            } else if self.eat('-') {
                items.push(self.term()?.scaled(-1.0));
            } else {
                break;
            }
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Expr::Sum(items)
        })
    }

    fn term(&mut self) -> Result<Expr> {
        let mut items = vec![self.unary()?];
        loop {
            if self.eat('*') {
                items.push(self.unary()?);
            } else if *self.peek() == Tok::Sym('/') {
                let at = self.bump_offset();
                let d = self.constant(at, "divisor")?;
                if d == 0.0 {
                    return Err(syntax(at, "division by zero"));
                }
                items.push(Expr::Const(1.0 / d));
            } else {
                break;
            }
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Expr::Product(items)
        })
    }

    fn bump_offset(&mut self) -> usize {
        self.bump();
        self.offset()
    }

    /// Parses a unary operand that must reduce to a constant.
    fn constant(&mut self, at: usize, what: &str) -> Result<f64> {
        match self.unary()?.simplify() {
            Expr::Const(c) => Ok(c),
            _ => Err(syntax(at, format!("{what} must be a constant"))),
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            Ok(self.unary()?.scaled(-1.0))
        } else if self.eat('+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let mut base = self.atom()?;
        while *self.peek() == Tok::Sym('^') {
            let at = self.bump_offset();
            let p = self.constant(at, "exponent")?;
            base = raise(base, p).map_err(|m| syntax(at, m))?;
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let at = self.offset();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Const(v)),
            Tok::Sym('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "t" | "u" | "x" => Ok(Expr::var()),
                "sqrt" => {
                    self.expect('(')?;
                    let arg_at = self.offset();
                    let arg = self.expr()?.simplify();
                    self.expect(')')?;
                    self.check_nonnegative(&arg, arg_at)?;
                    raise(arg, 0.5).map_err(|m| syntax(at, m))
                }
                "relu" => {
                    self.expect('(')?;
                    let arg = self.expr()?.simplify();
                    self.expect(')')?;
                    Ok(relu(arg))
                }
                "pshift" => {
                    self.expect('(')?;
                    let c = self.signed_number()?;
                    self.expect(',')?;
                    let b_at = self.offset();
                    let b = self.signed_number()?;
                    self.expect(',')?;
                    let p_at = self.offset();
                    let p = self.signed_number()?;
                    self.expect(')')?;
                    if b < 0.0 {
                        return Err(syntax(b_at, "pshift shift must be non-negative"));
                    }
                    if p <= 0.0 {
                        return Err(syntax(p_at, "pshift exponent must be positive"));
                    }
                    Ok(Expr::power(c, b, p))
                }
                "piecewise" => Err(syntax(at, "piecewise(...) is only allowed at top level")),
                other => Err(syntax(at, format!("unknown identifier '{other}'"))),
            },
            Tok::Sym(c) => Err(syntax(at, format!("unexpected '{c}'"))),
            Tok::End => Err(syntax(at, "unexpected end of input")),
        }
    }

    fn signed_number(&mut self) -> Result<f64> {
        let neg = if self.eat('-') {
            true
        } else {
            self.eat('+');
            false
        };
        let at = self.offset();
        match self.bump() {
            Tok::Num(v) => Ok(if neg { -v } else { v }),
            _ => Err(syntax(at, "expected a number")),
        }
    }

    fn check_nonnegative(&self, arg: &Expr, at: usize) -> Result<()> {
        let end = if self.domain_end.is_finite() {
            self.domain_end
        } else {
            1.0
        };
        let min = match arg.as_affine() {
            Some((a, c)) => c.min(a * end + c),
            None => arg.range(0.0, end).0,
        };
        if min < -1e-12 {
            return Err(Error::Domain(format!(
                "sqrt argument at offset {at} takes negative values on [0, {end}]"
            )));
        }
        Ok(())
    }
}

/// `base^p`: repeated product for integer p, positive-part power otherwise.
fn raise(base: Expr, p: f64) -> std::result::Result<Expr, String> {
    if !p.is_finite() || p < 0.0 {
        return Err(format!("exponent must be non-negative, got {p}"));
    }
    if p == p.round() && p <= 64.0 {
        let n = p as usize;
        return Ok(match n {
            0 => Expr::Const(1.0),
            1 => base,
            _ => Expr::Product(vec![base; n]).simplify(),
        });
    }
    Ok(match base.simplify() {
        Expr::Const(c) => Expr::Const(c.max(0.0).powf(p)),
        Expr::Power { coef, shift, exp } if coef > 0.0 => Expr::power(coef.powf(p), shift, exp * p),
        other => Expr::Compose {
            outer: Box::new(Expr::power(1.0, 0.0, p)),
            inner: Box::new(other),
        }
        .simplify(),
    })
}

/// max(e, 0) on x ≥ 0, rewritten into shifted powers when e is affine.
fn relu(e: Expr) -> Expr {
    let Some((a, c)) = e.as_affine() else {
        return Expr::Compose {
            outer: Box::new(Expr::var()),
            inner: Box::new(e),
        };
    };
    if a == 0.0 {
        return Expr::Const(c.max(0.0));
    }
    let root = -c / a;
    let line = Expr::Sum(vec![Expr::Const(c), Expr::power(a, 0.0, 1.0)]).simplify();
    match (a > 0.0, root > 0.0) {
        (true, true) => Expr::power(a, root, 1.0),
        (true, false) => line,
        (false, true) => Expr::Sum(vec![line, Expr::power(-a, root, 1.0)]).simplify(),
        (false, false) => Expr::Const(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(e: &Expr, x: f64, want: f64) {
        let got = e.eval(x);
        assert!((got - want).abs() < 1e-13, "at {x}: {got} vs {want}");
    }

    #[test]
    fn kinked_root_function() {
        let e = parse_expr("sqrt(t) + relu(t-1)").unwrap();
        for x in [0.0, 0.3, 1.0, 2.0, 4.0] {
            close(&e, x, x.sqrt() + (x - 1.0).max(0.0));
        }
    }

    #[test]
    fn v_shape_function() {
        let e = parse_expr("1 - t + 2*relu(t-1)").unwrap();
        for x in [0.0, 0.5, 1.0, 3.0] {
            close(&e, x, (1.0 - x).abs());
        }
    }

    #[test]
    fn integer_powers_expand() {
        assert_eq!(parse_expr("t^2").unwrap(), Expr::power(1.0, 0.0, 2.0));
        let e = parse_expr("(t - 1)^2").unwrap();
        close(&e, 0.0, 1.0);
        close(&e, 3.0, 4.0);
    }

    #[test]
    fn fractional_powers_take_positive_part() {
        assert_eq!(parse_expr("t^1.5").unwrap(), Expr::power(1.0, 0.0, 1.5));
        assert_eq!(parse_expr("t^(3/2)").unwrap(), Expr::power(1.0, 0.0, 1.5));
        let e = parse_expr("(1 - t)^0.5").unwrap();
        close(&e, 0.75, 0.5);
        close(&e, 2.0, 0.0);
    }

    #[test]
    fn pshift_and_unary_minus() {
        assert_eq!(
            parse_expr("pshift(-2, 1, 0.5)").unwrap(),
            Expr::power(-2.0, 1.0, 0.5)
        );
        assert_eq!(parse_expr("-t^2").unwrap(), Expr::power(-1.0, 0.0, 2.0));
        assert_eq!(parse_expr("u^2").unwrap(), Expr::power(1.0, 0.0, 2.0));
    }

    #[test]
    fn relu_rewrites() {
        assert_eq!(
            parse_expr("relu(t - 1)").unwrap(),
            Expr::power(1.0, 1.0, 1.0)
        );
        assert_eq!(parse_expr("relu(t + 1)").unwrap().eval(2.0), 3.0);
        assert_eq!(parse_expr("relu(-t - 1)").unwrap(), Expr::Const(0.0));
        let e = parse_expr("relu(2 - t)").unwrap();
        close(&e, 1.0, 1.0);
        close(&e, 3.0, 0.0);
        let nonlinear = parse_expr("relu(t^2 - 1)").unwrap();
        close(&nonlinear, 0.5, 0.0);
        close(&nonlinear, 2.0, 3.0);
    }

    #[test]
    fn scientific_numbers() {
        assert_eq!(parse_expr("2.5e-1").unwrap(), Expr::Const(0.25));
        assert_eq!(parse_expr("1E2*t").unwrap(), Expr::power(100.0, 0.0, 1.0));
    }

    #[test]
    fn piecewise_definition() {
        let d = parse_definition("piecewise(sqrt(t), 1, sqrt(t) + t - 1)", 4.0).unwrap();
        assert_eq!(d.rest.len(), 1);
        assert_eq!(d.rest[0].0, 1.0);
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let cases = [
            ("t +", 3),
            ("sqrt(t", 6),
            ("t $ 2", 2),
            ("foo(t)", 0),
            ("t^t", 2),
            ("t / t", 4),
            ("2 * (t + 1))", 11),
            ("pshift(1, -1, 2)", 10),
            ("piecewise(t, 2, t, 1, t)", 19),
            ("t + piecewise(t)", 4),
        ];
        for (src, want) in cases {
            match parse_definition(src, 4.0) {
                Err(Error::Syntax { position, .. }) => {
                    assert_eq!(position, want, "{src}")
                }
                other => panic!("{src}: {other:?}"),
            }
        }
    }

    #[test]
    fn sqrt_of_negative_affine_is_domain_error() {
        assert!(matches!(
            parse_definition("sqrt(1 - t)", 4.0),
            Err(Error::Domain(_))
        ));
        assert!(parse_definition("sqrt(4 - t)", 4.0).is_ok());
    }
}
