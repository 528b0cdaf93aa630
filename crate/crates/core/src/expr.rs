//! Symbolic scalar expressions over named chart coordinates.
//!
//! Expressions are immutable DAGs behind [`Arc`] handles: building a
//! derivative or a curvature component reuses subtrees instead of copying
//! them, and every recursive operation (differentiation, substitution,
//! evaluation, simplification) is memoized per node so the cost is
//! proportional to the number of distinct nodes, not the tree size.
//!
//! Construction goes through smart constructors that fold constants and
//! absorb 0/1 identities, which keeps the expressions for flat and product
//! metrics collapsed to literal zeros. There is deliberately no general
//! rewriting beyond that: numeric evaluation is the ground truth.
//!
//! The concrete grammar accepted by [`Expr::parse`]:
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := ['-'] atom ['^' ['-'] number]
//! atom   := number | ident | func '(' expr ')' | '(' expr ')'
//! func   := sin | cos | tan | exp | log | sqrt
//! ```
//!
//! Whitespace is insignificant; numbers are decimal literals (an optional
//! exponent suffix such as `1.5e-3` is accepted). Exponents of `^` are
//! numeric constants only; a general power `f^g` is written as
//! `exp(g*log(f))`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

mod parser;

/// Function names reserved by the grammar; not usable as coordinate names.
pub const RESERVED_FUNCS: [&str; 6] = ["sin", "cos", "tan", "exp", "log", "sqrt"];

#[derive(Debug)]
enum Node {
    Const(f64),
    Var(String),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Neg(Expr),
    /// Base raised to a constant exponent.
    Pow(Expr, f64),
    Sin(Expr),
    Cos(Expr),
    Tan(Expr),
    Exp(Expr),
    Log(Expr),
    Sqrt(Expr),
}

/// A symbolic scalar expression. Cheap to clone (shared DAG).
#[derive(Clone)]
pub struct Expr(Arc<Node>);

fn ptr(e: &Expr) -> usize {
    Arc::as_ptr(&e.0) as usize
}

impl Expr {
    // ---- constructors -----------------------------------------------------

    /// Numeric constant.
    pub fn num(c: f64) -> Expr {
        Expr(Arc::new(Node::Const(c)))
    }

    /// Coordinate variable.
    pub fn var(name: impl Into<String>) -> Expr {
        Expr(Arc::new(Node::Var(name.into())))
    }

    pub fn zero() -> Expr {
        Expr::num(0.0)
    }

    pub fn one() -> Expr {
        Expr::num(1.0)
    }

    pub fn add(&self, rhs: &Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) if (a + b).is_finite() => Expr::num(a + b),
            (Some(a), _) if a == 0.0 => rhs.clone(),
            (_, Some(b)) if b == 0.0 => self.clone(),
            _ => Expr(Arc::new(Node::Add(self.clone(), rhs.clone()))),
        }
    }

    pub fn sub(&self, rhs: &Expr) -> Expr {
        if self.same_leaf(rhs) {
            return Expr::zero();
        }
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) if (a - b).is_finite() => Expr::num(a - b),
            (_, Some(b)) if b == 0.0 => self.clone(),
            (Some(a), _) if a == 0.0 => rhs.neg(),
            _ => Expr(Arc::new(Node::Sub(self.clone(), rhs.clone()))),
        }
    }

    pub fn mul(&self, rhs: &Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) if (a * b).is_finite() => Expr::num(a * b),
            (Some(a), _) if a == 0.0 => Expr::zero(),
            (_, Some(b)) if b == 0.0 => Expr::zero(),
            (Some(a), _) if a == 1.0 => rhs.clone(),
            (_, Some(b)) if b == 1.0 => self.clone(),
            _ => Expr(Arc::new(Node::Mul(self.clone(), rhs.clone()))),
        }
    }

    pub fn div(&self, rhs: &Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) if b != 0.0 && (a / b).is_finite() => Expr::num(a / b),
            (_, Some(b)) if b == 1.0 => self.clone(),
            _ => Expr(Arc::new(Node::Div(self.clone(), rhs.clone()))),
        }
    }

    pub fn neg(&self) -> Expr {
        match &*self.0 {
            Node::Const(c) => Expr::num(-c),
            Node::Neg(inner) => inner.clone(),
            _ => Expr(Arc::new(Node::Neg(self.clone()))),
        }
    }

    /// Power with a constant exponent.
    pub fn pow(&self, exponent: f64) -> Expr {
        if exponent == 0.0 {
            return Expr::one();
        }
        if exponent == 1.0 {
            return self.clone();
        }
        if let Some(c) = self.as_const() {
            let v = c.powf(exponent);
            if v.is_finite() {
                return Expr::num(v);
            }
        }
        Expr(Arc::new(Node::Pow(self.clone(), exponent)))
    }

    pub fn sin(&self) -> Expr {
        self.unary_fold(f64::sin, |e| Node::Sin(e))
    }

    pub fn cos(&self) -> Expr {
        self.unary_fold(f64::cos, |e| Node::Cos(e))
    }

    pub fn tan(&self) -> Expr {
        self.unary_fold(f64::tan, |e| Node::Tan(e))
    }

    pub fn exp(&self) -> Expr {
        self.unary_fold(f64::exp, |e| Node::Exp(e))
    }

    pub fn log(&self) -> Expr {
        self.unary_fold(f64::ln, |e| Node::Log(e))
    }

    pub fn sqrt(&self) -> Expr {
        self.unary_fold(f64::sqrt, |e| Node::Sqrt(e))
    }

    fn unary_fold(&self, f: fn(f64) -> f64, make: fn(Expr) -> Node) -> Expr {
        if let Some(c) = self.as_const() {
            let v = f(c);
            if v.is_finite() {
                return Expr::num(v);
            }
        }
        Expr(Arc::new(make(self.clone())))
    }

    /// Sum of an iterator of expressions (empty sum is 0).
    pub fn sum(terms: impl IntoIterator<Item = Expr>) -> Expr {
        let mut acc = Expr::zero();
        for t in terms {
            acc = acc.add(&t);
        }
        acc
    }

    // ---- inspection -------------------------------------------------------

    /// The constant value, if this node is a literal constant.
    pub fn as_const(&self) -> Option<f64> {
        match &*self.0 {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    /// Shared node, identical variable, or identical constant.
    fn same_leaf(&self, other: &Expr) -> bool {
        if Arc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        match (&*self.0, &*other.0) {
            (Node::Var(a), Node::Var(b)) => a == b,
            (Node::Const(a), Node::Const(b)) => a == b,
            _ => false,
        }
    }

    /// Free variable names, in first-occurrence order.
    pub fn variables(&self) -> Vec<String> {
        let mut seen = HashMap::new();
        let mut out = Vec::new();
        let mut visited: HashMap<usize, ()> = HashMap::new();
        fn walk(
            e: &Expr,
            visited: &mut HashMap<usize, ()>,
            seen: &mut HashMap<String, ()>,
            out: &mut Vec<String>,
        ) {
            if visited.insert(ptr(e), ()).is_some() {
                return;
            }
            match &*e.0 {
                Node::Const(_) => {}
                Node::Var(v) => {
                    if seen.insert(v.clone(), ()).is_none() {
                        out.push(v.clone());
                    }
                }
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                    walk(a, visited, seen, out);
                    walk(b, visited, seen, out);
                }
                Node::Neg(a)
                | Node::Pow(a, _)
                | Node::Sin(a)
                | Node::Cos(a)
                | Node::Tan(a)
                | Node::Exp(a)
                | Node::Log(a)
                | Node::Sqrt(a) => walk(a, visited, seen, out),
            }
        }
        walk(self, &mut visited, &mut seen, &mut out);
        out
    }

    // ---- parsing ----------------------------------------------------------

    /// Parse `text` against the grammar, restricting free variables to
    /// `vars`.
    pub fn parse(text: &str, vars: &[&str]) -> Result<Expr> {
        parser::parse(text, vars)
    }

    // ---- calculus ---------------------------------------------------------

    /// Exact symbolic partial derivative with respect to `var`.
    pub fn diff(&self, var: &str) -> Expr {
        let mut memo: HashMap<usize, Expr> = HashMap::new();
        self.diff_memo(var, &mut memo)
    }

    fn diff_memo(&self, var: &str, memo: &mut HashMap<usize, Expr>) -> Expr {
        if let Some(d) = memo.get(&ptr(self)) {
            return d.clone();
        }
        let d = match &*self.0 {
            Node::Const(_) => Expr::zero(),
            Node::Var(v) => {
                if v == var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Add(a, b) => a.diff_memo(var, memo).add(&b.diff_memo(var, memo)),
            Node::Sub(a, b) => a.diff_memo(var, memo).sub(&b.diff_memo(var, memo)),
            Node::Mul(a, b) => {
                let da = a.diff_memo(var, memo);
                let db = b.diff_memo(var, memo);
                da.mul(b).add(&a.mul(&db))
            }
            Node::Div(a, b) => {
                let da = a.diff_memo(var, memo);
                let db = b.diff_memo(var, memo);
                da.mul(b).sub(&a.mul(&db)).div(&b.pow(2.0))
            }
            Node::Neg(a) => a.diff_memo(var, memo).neg(),
            Node::Pow(a, k) => {
                let da = a.diff_memo(var, memo);
                Expr::num(*k).mul(&a.pow(k - 1.0)).mul(&da)
            }
            Node::Sin(a) => a.cos().mul(&a.diff_memo(var, memo)),
            Node::Cos(a) => a.sin().neg().mul(&a.diff_memo(var, memo)),
            Node::Tan(a) => a.diff_memo(var, memo).div(&a.cos().pow(2.0)),
            Node::Exp(a) => self.clone().mul(&a.diff_memo(var, memo)),
            Node::Log(a) => a.diff_memo(var, memo).div(a),
            Node::Sqrt(a) => a
                .diff_memo(var, memo)
                .div(&Expr::num(2.0).mul(&self.clone())),
        };
        memo.insert(ptr(self), d.clone());
        d
    }

    /// Simultaneous substitution of variables by expressions.
    pub fn substitute(&self, bindings: &HashMap<String, Expr>) -> Expr {
        let mut memo: HashMap<usize, Expr> = HashMap::new();
        self.subst_memo(bindings, &mut memo)
    }

    fn subst_memo(&self, bindings: &HashMap<String, Expr>, memo: &mut HashMap<usize, Expr>) -> Expr {
        if let Some(s) = memo.get(&ptr(self)) {
            return s.clone();
        }
        let s = match &*self.0 {
            Node::Const(_) => self.clone(),
            Node::Var(v) => bindings.get(v).cloned().unwrap_or_else(|| self.clone()),
            Node::Add(a, b) => a.subst_memo(bindings, memo).add(&b.subst_memo(bindings, memo)),
            Node::Sub(a, b) => a.subst_memo(bindings, memo).sub(&b.subst_memo(bindings, memo)),
            Node::Mul(a, b) => a.subst_memo(bindings, memo).mul(&b.subst_memo(bindings, memo)),
            Node::Div(a, b) => a.subst_memo(bindings, memo).div(&b.subst_memo(bindings, memo)),
            Node::Neg(a) => a.subst_memo(bindings, memo).neg(),
            Node::Pow(a, k) => a.subst_memo(bindings, memo).pow(*k),
            Node::Sin(a) => a.subst_memo(bindings, memo).sin(),
            Node::Cos(a) => a.subst_memo(bindings, memo).cos(),
            Node::Tan(a) => a.subst_memo(bindings, memo).tan(),
            Node::Exp(a) => a.subst_memo(bindings, memo).exp(),
            Node::Log(a) => a.subst_memo(bindings, memo).log(),
            Node::Sqrt(a) => a.subst_memo(bindings, memo).sqrt(),
        };
        memo.insert(ptr(self), s.clone());
        s
    }

    /// Rebuild bottom-up through the smart constructors: constant folding,
    /// 0/1 absorption, `x - x -> 0`. No completeness guarantee.
    pub fn simplify(&self) -> Expr {
        let mut memo: HashMap<usize, Expr> = HashMap::new();
        self.subst_memo(&HashMap::new(), &mut memo)
    }

    /// Evaluate at a point binding every free variable.
    pub fn eval(&self, point: &HashMap<String, f64>) -> Result<f64> {
        EvalScope::new(point).eval(self)
    }

    fn eval_memo(&self, env: &HashMap<String, f64>, memo: &mut HashMap<usize, f64>) -> Result<f64> {
        if let Some(v) = memo.get(&ptr(self)) {
            return Ok(*v);
        }
        let v = match &*self.0 {
            Node::Const(c) => *c,
            Node::Var(name) => *env.get(name).ok_or_else(|| Error::UnboundVariable {
                name: name.clone(),
            })?,
            Node::Add(a, b) => a.eval_memo(env, memo)? + b.eval_memo(env, memo)?,
            Node::Sub(a, b) => a.eval_memo(env, memo)? - b.eval_memo(env, memo)?,
            Node::Mul(a, b) => a.eval_memo(env, memo)? * b.eval_memo(env, memo)?,
            Node::Div(a, b) => {
                let denom = b.eval_memo(env, memo)?;
                if denom == 0.0 {
                    return Err(self.domain_error("division by zero"));
                }
                a.eval_memo(env, memo)? / denom
            }
            Node::Neg(a) => -a.eval_memo(env, memo)?,
            Node::Pow(a, k) => {
                let base = a.eval_memo(env, memo)?;
                if base < 0.0 && k.fract() != 0.0 {
                    return Err(self.domain_error("fractional power of negative base"));
                }
                if base == 0.0 && *k < 0.0 {
                    return Err(self.domain_error("negative power of zero"));
                }
                base.powf(*k)
            }
            Node::Sin(a) => a.eval_memo(env, memo)?.sin(),
            Node::Cos(a) => a.eval_memo(env, memo)?.cos(),
            Node::Tan(a) => a.eval_memo(env, memo)?.tan(),
            Node::Exp(a) => a.eval_memo(env, memo)?.exp(),
            Node::Log(a) => {
                let v = a.eval_memo(env, memo)?;
                if v <= 0.0 {
                    return Err(self.domain_error("log of non-positive value"));
                }
                v.ln()
            }
            Node::Sqrt(a) => {
                let v = a.eval_memo(env, memo)?;
                if v < 0.0 {
                    return Err(self.domain_error("square root of negative value"));
                }
                v.sqrt()
            }
        };
        memo.insert(ptr(self), v);
        Ok(v)
    }

    fn domain_error(&self, what: &str) -> Error {
        Error::Domain {
            what: what.to_string(),
            expr: self.display_capped(120),
        }
    }

    /// Render the expression, truncating past `limit` characters.
    pub fn display_capped(&self, limit: usize) -> String {
        struct Capped {
            buf: String,
            limit: usize,
        }
        impl fmt::Write for Capped {
            fn write_str(&mut self, s: &str) -> fmt::Result {
                if self.buf.len() >= self.limit {
                    return Err(fmt::Error);
                }
                self.buf.push_str(s);
                Ok(())
            }
        }
        let mut w = Capped {
            buf: String::new(),
            limit,
        };
        let truncated = {
            use fmt::Write as _;
            write!(w, "{self}").is_err()
        };
        if truncated {
            w.buf.truncate(w.buf.len().min(w.limit));
            w.buf.push('…');
        }
        w.buf
    }
}

// ---- operator sugar -------------------------------------------------------

impl std::ops::Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        Expr::add(self, rhs)
    }
}

impl std::ops::Sub for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        Expr::sub(self, rhs)
    }
}

impl std::ops::Mul for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        Expr::mul(self, rhs)
    }
}

impl std::ops::Div for &Expr {
    type Output = Expr;
    fn div(self, rhs: &Expr) -> Expr {
        Expr::div(self, rhs)
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

// ---- structural equality (for tests and round-trip checks) ----------------

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        fn eq_rec(a: &Expr, b: &Expr, memo: &mut HashMap<(usize, usize), bool>) -> bool {
            if Arc::ptr_eq(&a.0, &b.0) {
                return true;
            }
            let key = (ptr(a), ptr(b));
            if let Some(&r) = memo.get(&key) {
                return r;
            }
            let r = match (&*a.0, &*b.0) {
                (Node::Const(x), Node::Const(y)) => x == y,
                (Node::Var(x), Node::Var(y)) => x == y,
                (Node::Add(x1, x2), Node::Add(y1, y2))
                | (Node::Sub(x1, x2), Node::Sub(y1, y2))
                | (Node::Mul(x1, x2), Node::Mul(y1, y2))
                | (Node::Div(x1, x2), Node::Div(y1, y2)) => {
                    eq_rec(x1, y1, memo) && eq_rec(x2, y2, memo)
                }
                (Node::Pow(x, j), Node::Pow(y, k)) => j == k && eq_rec(x, y, memo),
                (Node::Neg(x), Node::Neg(y))
                | (Node::Sin(x), Node::Sin(y))
                | (Node::Cos(x), Node::Cos(y))
                | (Node::Tan(x), Node::Tan(y))
                | (Node::Exp(x), Node::Exp(y))
                | (Node::Log(x), Node::Log(y))
                | (Node::Sqrt(x), Node::Sqrt(y)) => eq_rec(x, y, memo),
                _ => false,
            };
            memo.insert(key, r);
            r
        }
        eq_rec(self, other, &mut HashMap::new())
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({})", self.display_capped(200))
    }
}

// ---- printing (inverse of the parser) --------------------------------------

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_ATOM: u8 = 4;

impl Expr {
    fn precedence(&self) -> u8 {
        match &*self.0 {
            Node::Add(..) | Node::Sub(..) => PREC_ADD,
            Node::Mul(..) | Node::Div(..) => PREC_MUL,
            Node::Neg(_) => PREC_NEG,
            Node::Pow(..) => PREC_NEG, // binds like a factor: -x^2 is -(x^2)
            Node::Const(c) if *c < 0.0 => PREC_NEG,
            _ => PREC_ATOM,
        }
    }

    fn write_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let prec = self.precedence();
        if prec < min {
            write!(f, "(")?;
        }
        match &*self.0 {
            Node::Const(c) => write!(f, "{c}")?,
            Node::Var(v) => write!(f, "{v}")?,
            Node::Add(a, b) => {
                a.write_prec(f, PREC_ADD)?;
                write!(f, " + ")?;
                b.write_prec(f, PREC_ADD + 1)?;
            }
            Node::Sub(a, b) => {
                a.write_prec(f, PREC_ADD)?;
                write!(f, " - ")?;
                b.write_prec(f, PREC_ADD + 1)?;
            }
            Node::Mul(a, b) => {
                a.write_prec(f, PREC_MUL)?;
                write!(f, " * ")?;
                b.write_prec(f, PREC_MUL + 1)?;
            }
            Node::Div(a, b) => {
                a.write_prec(f, PREC_MUL)?;
                write!(f, " / ")?;
                b.write_prec(f, PREC_MUL + 1)?;
            }
            Node::Neg(a) => {
                write!(f, "-")?;
                a.write_prec(f, PREC_NEG)?;
            }
            Node::Pow(a, k) => {
                a.write_prec(f, PREC_ATOM)?;
                write!(f, "^{k}")?;
            }
            Node::Sin(a) => write_func(f, "sin", a)?,
            Node::Cos(a) => write_func(f, "cos", a)?,
            Node::Tan(a) => write_func(f, "tan", a)?,
            Node::Exp(a) => write_func(f, "exp", a)?,
            Node::Log(a) => write_func(f, "log", a)?,
            Node::Sqrt(a) => write_func(f, "sqrt", a)?,
        }
        if prec < min {
            write!(f, ")")?;
        }
        Ok(())
    }
}

fn write_func(f: &mut fmt::Formatter<'_>, name: &str, arg: &Expr) -> fmt::Result {
    write!(f, "{name}(")?;
    arg.write_prec(f, PREC_ADD)?;
    write!(f, ")")
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_prec(f, PREC_ADD)
    }
}

// ---- shared-memo evaluation scope ------------------------------------------

/// Evaluates many expressions at a single point with one shared memo table,
/// so DAG nodes shared across tensor components are computed once.
pub struct EvalScope<'a> {
    env: &'a HashMap<String, f64>,
    memo: HashMap<usize, f64>,
}

impl<'a> EvalScope<'a> {
    pub fn new(env: &'a HashMap<String, f64>) -> Self {
        EvalScope {
            env,
            memo: HashMap::new(),
        }
    }

    pub fn eval(&mut self, e: &Expr) -> Result<f64> {
        e.eval_memo(self.env, &mut self.memo)
    }
}

/// Build an evaluation environment from coordinate names and values.
pub fn env_from(names: &[String], values: &[f64]) -> HashMap<String, f64> {
    names
        .iter()
        .cloned()
        .zip(values.iter().copied())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(pairs: &[(&str, f64)]) -> HashMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn parse_matches_builder() {
        let eta = Expr::var("eta");
        assert_eq!(Expr::parse("sin(eta)^2", &["eta"]).unwrap(), eta.sin().pow(2.0));
        let x = Expr::var("x");
        assert_eq!(
            Expr::parse("exp(2*x)", &["x", "y"]).unwrap(),
            Expr::num(2.0).mul(&x).exp()
        );
    }

    #[test]
    fn parse_reports_offset() {
        match Expr::parse("x+*y", &["x", "y"]) {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_undeclared() {
        match Expr::parse("x + z", &["x", "y"]) {
            Err(Error::UndeclaredVariable { name }) => assert_eq!(name, "z"),
            other => panic!("expected undeclared-variable error, got {other:?}"),
        }
    }

    #[test]
    fn diff_basics() {
        let x = Expr::var("x");
        assert_eq!(x.sin().diff("x"), x.cos());
        let e2x = Expr::num(2.0).mul(&x).exp();
        // d/dx exp(2x) = exp(2x) * 2
        assert_eq!(
            e2x.diff("x").eval(&env(&[("x", 0.3)])).unwrap(),
            2.0 * (0.6f64).exp()
        );
        assert_eq!(Expr::var("y").diff("x"), Expr::zero());
    }

    #[test]
    fn substitute_simultaneous() {
        let u = Expr::var("u");
        let mut b = HashMap::new();
        b.insert("u".to_string(), Expr::var("x").add(&Expr::var("y")));
        let got = u.pow(2.0).substitute(&b);
        assert_eq!(got, Expr::var("x").add(&Expr::var("y")).pow(2.0));

        // swap x and y simultaneously
        let mut swap = HashMap::new();
        swap.insert("x".to_string(), Expr::var("y"));
        swap.insert("y".to_string(), Expr::var("x"));
        let e = Expr::var("x").div(&Expr::var("y"));
        assert_eq!(e.substitute(&swap), Expr::var("y").div(&Expr::var("x")));

        // empty substitution is the identity
        assert_eq!(Expr::var("x").substitute(&HashMap::new()), Expr::var("x"));
    }

    #[test]
    fn substitute_then_simplify_folds() {
        let mut b = HashMap::new();
        b.insert("u".to_string(), Expr::zero());
        assert_eq!(Expr::var("u").sin().substitute(&b), Expr::zero());
    }

    #[test]
    fn eval_values_and_domain_errors() {
        assert_eq!(
            Expr::parse("exp(2*x)", &["x"]).unwrap().eval(&env(&[("x", 0.0)])).unwrap(),
            1.0
        );
        let pyth = Expr::parse("sin(x)^2+cos(x)^2", &["x"]).unwrap();
        assert!((pyth.eval(&env(&[("x", 0.7)])).unwrap() - 1.0).abs() <= 1e-12);
        match Expr::parse("1/x", &["x"]).unwrap().eval(&env(&[("x", 0.0)])) {
            Err(Error::Domain { what, .. }) => assert!(what.contains("division")),
            other => panic!("expected domain error, got {other:?}"),
        }
        match Expr::parse("log(x)", &["x"]).unwrap().eval(&env(&[("x", -1.0)])) {
            Err(Error::Domain { .. }) => {}
            other => panic!("expected domain error, got {other:?}"),
        }
        match Expr::var("x").eval(&env(&[("y", 1.0)])) {
            Err(Error::UnboundVariable { name }) => assert_eq!(name, "x"),
            other => panic!("expected unbound-variable error, got {other:?}"),
        }
    }

    #[test]
    fn simplify_guarantees() {
        let x = Expr::var("x");
        assert_eq!(Expr::zero().mul(&x.sin()), Expr::zero());
        assert_eq!(x.pow(1.0), x);
        assert_eq!(
            Expr::num(2.0).add(&Expr::num(3.0)).mul(&x),
            Expr::num(5.0).mul(&x)
        );
        assert_eq!(x.sub(&x), Expr::zero());
    }

    #[test]
    fn display_round_trips() {
        let cases = [
            "x + y * z",
            "(x + y) * z",
            "x - (y - z)",
            "x / (y * z)",
            "-x^2",
            "(-x)^2",
            "sin(x)^2 + cos(x)^2",
            "exp(2 * x) / sqrt(1 + y^2)",
            "x - -y",
        ];
        for src in cases {
            let e = Expr::parse(src, &["x", "y", "z"]).unwrap();
            let printed = e.to_string();
            let back = Expr::parse(&printed, &["x", "y", "z"]).unwrap();
            assert_eq!(back, e, "round trip failed for `{src}` -> `{printed}`");
        }
    }

    #[test]
    fn negative_exponent_prints_and_parses() {
        // d/dx log(x) = 1/x; d/dx of that involves x^-2 via the quotient rule
        let e = Expr::var("x").pow(-2.0);
        let printed = e.to_string();
        let back = Expr::parse(&printed, &["x"]).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn variables_in_order() {
        let e = Expr::parse("y + x*y + sin(z)", &["x", "y", "z"]).unwrap();
        assert_eq!(e.variables(), vec!["y", "x", "z"]);
    }
}
