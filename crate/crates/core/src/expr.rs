//! Arithmetic expression language for metric coefficients.
//!
//! Grammar (whitespace is ignored between tokens):
//!
//! ```text
//! expr    = term , { ("+" | "-") , term } ;
//! term    = unary , { ("*" | "/") , unary } ;
//! unary   = "-" , unary | power ;
//! power   = primary , [ "^" , unary ] ;
//! primary = number | identifier | func , "(" , expr , ")" | "(" , expr , ")" ;
//! func    = "sin" | "cos" | "exp" | "log" | "sqrt" ;
//! ```
//!
//! `^` is right associative and binds tighter than unary minus, so `-x0^2`
//! is `-(x0^2)`. Identifiers are resolved against a [`VarSet`] at parse time.

use std::fmt;

use crate::error::{FinslerError, Result};
use crate::jets::Jet;

/// Ordered list of variable names; the position of a name is its slot in the
/// evaluation vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarSet {
    names: Vec<String>,
}

impl VarSet {
    pub fn named<S: AsRef<str>>(names: &[S]) -> Self {
        VarSet {
            names: names.iter().map(|s| s.as_ref().to_string()).collect(),
        }
    }

    /// Indexed families, e.g. `families(&["x", "y"], 2)` gives `x0 x1 y0 y1`.
    pub fn families(prefixes: &[&str], n: usize) -> Self {
        let names = prefixes
            .iter()
            .flat_map(|p| (0..n).map(move |i| format!("{p}{i}")))
            .collect();
        VarSet { names }
    }

    /// Position coordinates `x0..x{n-1}`.
    pub fn coords(n: usize) -> Self {
        Self::families(&["x"], n)
    }

    /// Position and direction `x0..x{n-1}, y0..y{n-1}`.
    pub fn finsler(n: usize) -> Self {
        Self::families(&["x", "y"], n)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn slot(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Number of names of the form `{prefix}{digits}`.
    fn family_size(&self, prefix: &str) -> usize {
        self.names
            .iter()
            .filter(|n| {
                n.strip_prefix(prefix)
                    .is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
            })
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }
}

/// Parse tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var { name: String, slot: usize },
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Values an expression can be evaluated over.
pub trait Scalar: Clone {
    /// A constant of the same shape as `self`.
    fn lift(&self, value: f64) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn div(&self, other: &Self) -> Result<Self>;
    fn neg(&self) -> Self;
    fn powi(&self, exponent: i32) -> Result<Self>;
    fn powf(&self, exponent: f64) -> Result<Self>;
    fn pow(&self, exponent: &Self) -> Result<Self>;
    fn call(&self, func: Func) -> Result<Self>;
}

impl Scalar for f64 {
    fn lift(&self, value: f64) -> f64 {
        value
    }
    fn add(&self, other: &f64) -> f64 {
        self + other
    }
    fn sub(&self, other: &f64) -> f64 {
        self - other
    }
    fn mul(&self, other: &f64) -> f64 {
        self * other
    }
    fn div(&self, other: &f64) -> Result<f64> {
        if *other == 0.0 {
            return Err(FinslerError::SingularPoint("division by zero".into()));
        }
        Ok(self / other)
    }
    fn neg(&self) -> f64 {
        -self
    }
    fn powi(&self, exponent: i32) -> Result<f64> {
        if exponent < 0 && *self == 0.0 {
            return Err(FinslerError::SingularPoint(format!(
                "zero raised to negative power {exponent}"
            )));
        }
        Ok(f64::powi(*self, exponent))
    }
    fn powf(&self, exponent: f64) -> Result<f64> {
        if exponent.fract() == 0.0 && exponent.abs() <= i32::MAX as f64 {
            return Scalar::powi(self, exponent as i32);
        }
        if *self < 0.0 {
            return Err(FinslerError::Domain(format!(
                "fractional power {exponent} of negative value {self}"
            )));
        }
        Ok(f64::powf(*self, exponent))
    }
    fn pow(&self, exponent: &f64) -> Result<f64> {
        Scalar::powf(self, *exponent)
    }
    fn call(&self, func: Func) -> Result<f64> {
        let v = *self;
        Ok(match func {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Log => {
                if v <= 0.0 {
                    return Err(FinslerError::Domain(format!("log of non-positive value {v}")));
                }
                v.ln()
            }
            Func::Sqrt => {
                if v < 0.0 {
                    return Err(FinslerError::Domain(format!("sqrt of negative value {v}")));
                }
                v.sqrt()
            }
        })
    }
}

impl Scalar for Jet {
    fn lift(&self, value: f64) -> Jet {
        self.constant_like(value)
    }
    fn add(&self, other: &Jet) -> Jet {
        self + other
    }
    fn sub(&self, other: &Jet) -> Jet {
        self - other
    }
    fn mul(&self, other: &Jet) -> Jet {
        self * other
    }
    fn div(&self, other: &Jet) -> Result<Jet> {
        self.checked_div(other)
    }
    fn neg(&self) -> Jet {
        -self
    }
    fn powi(&self, exponent: i32) -> Result<Jet> {
        Jet::powi(self, exponent)
    }
    fn powf(&self, exponent: f64) -> Result<Jet> {
        Jet::powf(self, exponent)
    }
    fn pow(&self, exponent: &Jet) -> Result<Jet> {
        // a^b = exp(b log a) for a variable exponent
        Ok((exponent * &self.ln()?).exp())
    }
    fn call(&self, func: Func) -> Result<Jet> {
        match func {
            Func::Sin => Ok(self.sin()),
            Func::Cos => Ok(self.cos()),
            Func::Exp => Ok(self.exp()),
            Func::Log => self.ln(),
            Func::Sqrt => self.sqrt(),
        }
    }
}

impl Expr {
    /// A numeric literal; negative values become `Neg(Num(|v|))` so that the
    /// tree matches what the parser would produce from its printed form.
    pub fn number(value: f64) -> Expr {
        if value < 0.0 || (value == 0.0 && value.is_sign_negative()) {
            Expr::Neg(Box::new(Expr::Num(-value)))
        } else {
            Expr::Num(value)
        }
    }

    pub fn var(name: &str, slot: usize) -> Expr {
        Expr::Var {
            name: name.to_string(),
            slot,
        }
    }

    /// Parses `source`, resolving identifiers against `vars`.
    pub fn parse(source: &str, vars: &VarSet) -> Result<Expr> {
        let mut p = Parser {
            src: source.as_bytes(),
            pos: 0,
            vars,
        };
        p.skip_ws();
        if p.pos == p.src.len() {
            return Err(FinslerError::Syntax {
                column: 1,
                message: "empty expression".into(),
            });
        }
        let e = p.expr()?;
        p.skip_ws();
        if p.pos < p.src.len() {
            return Err(p.error(format!("unexpected `{}`", p.src[p.pos] as char)));
        }
        Ok(e)
    }

    /// Largest variable slot referenced, if any.
    pub fn max_slot(&self) -> Option<usize> {
        match self {
            Expr::Num(_) => None,
            Expr::Var { slot, .. } => Some(*slot),
            Expr::Neg(a) | Expr::Call(_, a) => a.max_slot(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                match (a.max_slot(), b.max_slot()) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    (x, y) => x.or(y),
                }
            }
        }
    }

    /// Value of a variable-free subtree.
    pub fn constant_value(&self) -> Option<f64> {
        if self.max_slot().is_some() {
            return None;
        }
        self.eval_with(&[], &0.0).ok()
    }

    /// Evaluates over real numbers.
    pub fn eval_f64(&self, vars: &[f64]) -> Result<f64> {
        self.eval_with(vars, &0.0)
    }

    /// Evaluates over any [`Scalar`]; `vars` must be non-empty so constants
    /// can take their shape.
    pub fn eval<T: Scalar>(&self, vars: &[T]) -> Result<T> {
        let proto = vars
            .first()
            .ok_or_else(|| FinslerError::InvalidArgument("expression evaluated with no variables".into()))?;
        self.eval_with(vars, proto)
    }

    fn eval_with<T: Scalar>(&self, vars: &[T], proto: &T) -> Result<T> {
        match self {
            Expr::Num(v) => Ok(proto.lift(*v)),
            Expr::Var { name, slot } => vars.get(*slot).cloned().ok_or_else(|| {
                FinslerError::InvalidArgument(format!(
                    "variable `{name}` needs slot {slot}, only {} values supplied",
                    vars.len()
                ))
            }),
            Expr::Neg(a) => Ok(a.eval_with(vars, proto)?.neg()),
            Expr::Add(a, b) => Ok(a.eval_with(vars, proto)?.add(&b.eval_with(vars, proto)?)),
            Expr::Sub(a, b) => Ok(a.eval_with(vars, proto)?.sub(&b.eval_with(vars, proto)?)),
            Expr::Mul(a, b) => Ok(a.eval_with(vars, proto)?.mul(&b.eval_with(vars, proto)?)),
            Expr::Div(a, b) => a.eval_with(vars, proto)?.div(&b.eval_with(vars, proto)?),
            Expr::Pow(a, b) => {
                let base = a.eval_with(vars, proto)?;
                match b.constant_value() {
                    Some(k) => base.powf(k),
                    None => base.pow(&b.eval_with(vars, proto)?),
                }
            }
            Expr::Call(f, a) => a.eval_with(vars, proto)?.call(*f),
        }
    }

    /// Replaces every variable by the expression returned from `f(name, slot)`.
    pub fn map_vars(&self, f: &dyn Fn(&str, usize) -> Expr) -> Expr {
        let bx = |e: &Expr| Box::new(e.map_vars(f));
        match self {
            Expr::Num(v) => Expr::Num(*v),
            Expr::Var { name, slot } => f(name, *slot),
            Expr::Neg(a) => Expr::Neg(bx(a)),
            Expr::Add(a, b) => Expr::Add(bx(a), bx(b)),
            Expr::Sub(a, b) => Expr::Sub(bx(a), bx(b)),
            Expr::Mul(a, b) => Expr::Mul(bx(a), bx(b)),
            Expr::Div(a, b) => Expr::Div(bx(a), bx(b)),
            Expr::Pow(a, b) => Expr::Pow(bx(a), bx(b)),
            Expr::Call(func, a) => Expr::Call(*func, bx(a)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Num(v) if *v < 0.0 || v.is_sign_negative() => 3,
            Expr::Num(_) | Expr::Var { .. } | Expr::Call(..) => 5,
        }
    }

    fn write_min(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "(")?;
            self.write(f)?;
            write!(f, ")")
        } else {
            self.write(f)
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var { name, .. } => write!(f, "{name}"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.write_min(f, 3)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.write_min(f, 1)?;
                write!(f, "{}", if matches!(self, Expr::Add(..)) { " + " } else { " - " })?;
                b.write_min(f, 2)
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.write_min(f, 2)?;
                write!(f, "{}", if matches!(self, Expr::Mul(..)) { "*" } else { "/" })?;
                b.write_min(f, 3)
            }
            Expr::Pow(a, b) => {
                a.write_min(f, 5)?;
                write!(f, "^")?;
                b.write_min(f, 3)
            }
            Expr::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.write(f)?;
                write!(f, ")")
            }
        }
    }
}

/// Canonical, precedence-aware form that reparses to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vars: &'a VarSet,
}

impl Parser<'_> {
    fn error(&self, message: String) -> FinslerError {
        FinslerError::Syntax {
            column: self.pos + 1,
            message,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            let found = match self.src.get(self.pos) {
                Some(&b) => format!("`{}`", b as char),
                None => "end of input".to_string(),
            };
            Err(self.error(format!("expected `{}`, found {found}", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.eat(b'^') {
            return Ok(Expr::Pow(Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.error("unexpected end of input".into())),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            Some(c) => Err(self.error(format!("unexpected `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if self.src.get(self.pos).is_some_and(|b| b.is_ascii_digit()) {
                digits(self);
            } else {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Expr::Num(v)),
            _ => Err(FinslerError::Syntax {
                column: start + 1,
                message: format!("invalid number `{text}`"),
            }),
        }
    }

    fn identifier(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self
            .src
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii identifier");
        let column = start + 1;
        if let Some(func) = Func::from_name(name) {
            if self.peek() != Some(b'(') {
                return Err(self.error(format!("expected `(` after function `{name}`")));
            }
            self.pos += 1;
            let arg = self.expr()?;
            self.expect(b')')?;
            return Ok(Expr::Call(func, Box::new(arg)));
        }
        if let Some(slot) = self.vars.slot(name) {
            return Ok(Expr::var(name, slot));
        }
        let prefix = name.trim_end_matches(|c: char| c.is_ascii_digit());
        if prefix.len() < name.len() {
            let dim = self.vars.family_size(prefix);
            if dim > 0 {
                return Err(FinslerError::VariableOutOfRange {
                    name: name.to_string(),
                    column,
                    dim,
                });
            }
        }
        Err(FinslerError::UnknownIdentifier {
            name: name.to_string(),
            column,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn parse(s: &str, n: usize) -> Result<Expr> {
        Expr::parse(s, &VarSet::finsler(n))
    }

    #[test]
    fn sum_of_cubes() {
        let e = parse("y0^3 + y1^3", 2).unwrap();
        let cube = |name: &str, slot| Expr::Pow(Box::new(Expr::var(name, slot)), Box::new(Expr::Num(3.0)));
        assert_eq!(e, Expr::Add(Box::new(cube("y0", 2)), Box::new(cube("y1", 3))));
        assert_eq!(e.to_string(), "y0^3 + y1^3");
    }

    #[test]
    fn unbalanced_paren_column() {
        match parse("2*(x0", 1) {
            Err(FinslerError::Syntax { column, .. }) => assert_eq!(column, 6),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn error_kinds() {
        assert!(matches!(
            parse("x0 + foo", 1),
            Err(FinslerError::UnknownIdentifier { column: 6, .. })
        ));
        assert!(matches!(
            parse("y2", 2),
            Err(FinslerError::VariableOutOfRange { dim: 2, column: 1, .. })
        ));
        assert!(matches!(parse("", 1), Err(FinslerError::Syntax { column: 1, .. })));
        assert!(matches!(parse("x0 x0", 1), Err(FinslerError::Syntax { column: 4, .. })));
        assert!(matches!(parse("sin x0", 1), Err(FinslerError::Syntax { .. })));
        assert!(matches!(parse("1e999", 1), Err(FinslerError::Syntax { .. })));
        // y is not a coordinate of a position-only expression
        assert!(matches!(
            Expr::parse("y0", &VarSet::coords(2)),
            Err(FinslerError::UnknownIdentifier { .. })
        ));
    }

    /// Independent evaluator for the unary-minus/power interplay.
    fn neg_square_by_hand(x: f64) -> f64 {
        let square = x * x;
        -square
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        let e = parse("-x0^2", 1).unwrap();
        assert_eq!(e.eval_f64(&[3.0, 0.0]).unwrap(), -9.0);
        assert_eq!(neg_square_by_hand(3.0), -9.0);
        let r = parse("2^3^2", 1).unwrap();
        assert_eq!(r.eval_f64(&[0.0, 0.0]).unwrap(), 512.0);
        let neg_exp = parse("2^-1", 1).unwrap();
        assert_eq!(neg_exp.eval_f64(&[0.0, 0.0]).unwrap(), 0.5);
        let left = parse("8/4/2", 1).unwrap();
        assert_eq!(left.eval_f64(&[0.0, 0.0]).unwrap(), 1.0);
        let sub = parse("1 - 2 - 3", 1).unwrap();
        assert_eq!(sub.eval_f64(&[0.0, 0.0]).unwrap(), -4.0);
    }

    #[test]
    fn jet_evaluation() {
        let e = parse("x0*y0", 1).unwrap();
        let p = Jet::variables(&[2.0, 3.0], 2).unwrap();
        assert_eq!(e.eval(&p).unwrap().value(), 6.0);

        let c = parse("y0^3+y1^3+y2^3-3*y0*y1*y2", 3).unwrap();
        let p = Jet::variables(&[0.0, 0.0, 0.0, 1.0, 1.0, 1.0], 2).unwrap();
        assert_eq!(c.eval(&p).unwrap().value(), 0.0);

        let ex = Expr::parse("exp(x0)", &VarSet::coords(1)).unwrap();
        let j = ex.eval(&Jet::variables(&[0.0], 3).unwrap()).unwrap();
        let want = [1.0, 1.0, 0.5, 1.0 / 6.0];
        for (d, w) in want.iter().enumerate() {
            assert_relative_eq!(
                j.coeff(&crate::jets::MultiIndex::new(vec![d as u8])),
                *w,
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn integer_exponent_accepts_negative_base() {
        let e = parse("x0^(1+2)", 1).unwrap();
        let p = Jet::variables(&[-2.0, 1.0], 2).unwrap();
        assert_eq!(e.eval(&p).unwrap().value(), -8.0);
        let frac = parse("x0^0.5", 1).unwrap();
        assert!(matches!(frac.eval(&p), Err(FinslerError::Domain(_))));
        assert!(matches!(frac.eval_f64(&[-2.0, 1.0]), Err(FinslerError::Domain(_))));
    }

    #[test]
    fn variable_exponent() {
        let e = parse("x0^y0", 1).unwrap();
        let p = Jet::variables(&[2.0, 3.0], 2).unwrap();
        let j = e.eval(&p).unwrap();
        assert_relative_eq!(j.value(), 8.0, max_relative = 1e-14);
        // d/dy 2^y = 2^y ln 2
        assert_relative_eq!(j.partial_vars(&[1]).unwrap(), 8.0 * 2f64.ln(), max_relative = 1e-14);
    }

    #[test]
    fn named_variables() {
        let vars = VarSet::named(&["z"]);
        let e = Expr::parse("sqrt(1 - z^2)", &vars).unwrap();
        assert_eq!(e.eval_f64(&[0.6]).unwrap(), 0.8);
        assert!(matches!(
            Expr::parse("x0", &vars),
            Err(FinslerError::UnknownIdentifier { .. })
        ));
    }

    #[test]
    fn number_constructor_prints_reparseably() {
        let e = Expr::Mul(Box::new(Expr::number(-0.5)), Box::new(Expr::var("x0", 0)));
        let printed = e.to_string();
        assert_eq!(parse(&printed, 1).unwrap(), e);
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0u32..1000, 0u32..4).prop_map(|(m, s)| Expr::Num(m as f64 / 10f64.powi(s as i32))),
            (0usize..4).prop_map(|s| {
                let name = if s < 2 { format!("x{s}") } else { format!("y{}", s - 2) };
                Expr::var(&name, s)
            }),
        ];
        leaf.prop_recursive(5, 40, 2, |inner| {
            let b = |e: Expr| Box::new(e);
            prop_oneof![
                inner.clone().prop_map(move |a| Expr::Neg(b(a))),
                (inner.clone(), inner.clone()).prop_map(move |(a, c)| Expr::Add(b(a), b(c))),
                (inner.clone(), inner.clone()).prop_map(move |(a, c)| Expr::Sub(b(a), b(c))),
                (inner.clone(), inner.clone()).prop_map(move |(a, c)| Expr::Mul(b(a), b(c))),
                (inner.clone(), inner.clone()).prop_map(move |(a, c)| Expr::Div(b(a), b(c))),
                (inner.clone(), inner.clone()).prop_map(move |(a, c)| Expr::Pow(b(a), b(c))),
                (0usize..5, inner).prop_map(move |(k, a)| {
                    let f = [Func::Sin, Func::Cos, Func::Exp, Func::Log, Func::Sqrt][k];
                    Expr::Call(f, b(a))
                }),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn print_parse_round_trip(e in arb_expr()) {
            let printed = e.to_string();
            let back = parse(&printed, 2).unwrap();
            prop_assert_eq!(back, e);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn first_order_jets_match_finite_differences(
            x0 in 0.2f64..2.0, x1 in -1.0f64..1.0, y0 in 0.2f64..2.0, y1 in -1.0f64..1.0,
        ) {
            let e = parse("sqrt(x0^2 + y0*y0) * exp(x1/3) + sin(y1)*log(x0 + y0) - y1^3/(1 + x0)", 2).unwrap();
            let point = [x0, x1, y0, y1];
            let jet = e.eval(&Jet::variables(&point, 1).unwrap()).unwrap();
            for v in 0..4 {
                let h = 1e-6 * (1.0 + point[v].abs());
                let mut up = point;
                let mut dn = point;
                up[v] += h;
                dn[v] -= h;
                let fd = (e.eval_f64(&up).unwrap() - e.eval_f64(&dn).unwrap()) / (2.0 * h);
                let ad = jet.partial_vars(&[v]).unwrap();
                prop_assert!((fd - ad).abs() <= 1e-6 * (1.0 + ad.abs()), "slot {}: {} vs {}", v, fd, ad);
            }
        }
    }
}
