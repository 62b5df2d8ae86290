//! Closed-form coefficient functions of chart coordinates.
//!
//! An [`Expr`] is an immutable, reference-counted tree over constants,
//! coordinate variables (by index), the unary functions
//! `neg sin cos exp log sqrt abs` and the binary operators `+ - * / ^`.
//! Trees are built either by [`parse`] or by the smart constructors, which
//! fold constants and drop additive/multiplicative identities so that
//! repeated symbolic differentiation does not blow up.
//!
//! Evaluation comes in two flavours: [`Expr::eval`] for plain values and
//! [`Expr::eval_jet`] for the value together with all first partials
//! (forward-mode differentiation on the tree). [`Expr::derivative`] returns
//! the partial derivative as a new tree, which is what the exterior
//! derivative uses so that `d` of a `d` is still exact.

mod jet;
mod parse;

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

pub use jet::Jet1;
pub use parse::parse;

use crate::error::DomainError;

/// Threshold below which a denominator is treated as zero.
pub const DIV_ZERO_TOL: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl UnaryOp {
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Abs => "abs",
        }
    }

    pub(crate) fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "exp" => UnaryOp::Exp,
            "log" => UnaryOp::Log,
            "sqrt" => UnaryOp::Sqrt,
            "abs" => UnaryOp::Abs,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
        }
    }
}

#[derive(Debug)]
pub enum Node {
    Const(f64),
    Var(usize),
    Unary(UnaryOp, Expr),
    Binary(BinaryOp, Expr, Expr),
}

/// Expression tree. Cloning is cheap (shared nodes).
#[derive(Debug, Clone)]
pub struct Expr(Arc<Node>);

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn constant(c: f64) -> Self {
        Expr(Arc::new(Node::Const(c)))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn var(index: usize) -> Self {
        Expr(Arc::new(Node::Var(index)))
    }

    pub fn as_const(&self) -> Option<f64> {
        match *self.0 {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    /// True when the tree is the literal constant zero.
    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    pub fn unary(op: UnaryOp, arg: Expr) -> Self {
        if let Some(c) = arg.as_const() {
            if let Ok(v) = apply_unary(op, c) {
                return Self::constant(v);
            }
        }
        if op == UnaryOp::Neg {
            if let Node::Unary(UnaryOp::Neg, inner) = &*arg.0 {
                return inner.clone();
            }
        }
        Expr(Arc::new(Node::Unary(op, arg)))
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Self {
        if let (Some(a), Some(b)) = (lhs.as_const(), rhs.as_const()) {
            if let Ok(v) = apply_binary(op, a, b) {
                return Self::constant(v);
            }
        }
        match op {
            BinaryOp::Add => {
                if lhs.is_zero() {
                    return rhs;
                }
                if rhs.is_zero() {
                    return lhs;
                }
            }
            BinaryOp::Sub => {
                if rhs.is_zero() {
                    return lhs;
                }
                if lhs.is_zero() {
                    return Self::unary(UnaryOp::Neg, rhs);
                }
            }
            BinaryOp::Mul => {
                if lhs.is_zero() || rhs.is_zero() {
                    return Self::zero();
                }
                if lhs.is_one() {
                    return rhs;
                }
                if rhs.is_one() {
                    return lhs;
                }
                if lhs.as_const() == Some(-1.0) {
                    return Self::unary(UnaryOp::Neg, rhs);
                }
                if rhs.as_const() == Some(-1.0) {
                    return Self::unary(UnaryOp::Neg, lhs);
                }
            }
            BinaryOp::Div => {
                if lhs.is_zero() {
                    return Self::zero();
                }
                if rhs.is_one() {
                    return lhs;
                }
            }
            BinaryOp::Pow => {
                if rhs.is_one() {
                    return lhs;
                }
                if rhs.is_zero() {
                    return Self::one();
                }
            }
        }
        Expr(Arc::new(Node::Binary(op, lhs, rhs)))
    }

    pub fn pow(self, exponent: Expr) -> Self {
        Self::binary(BinaryOp::Pow, self, exponent)
    }

    pub fn powi(self, exponent: i32) -> Self {
        self.pow(Self::constant(exponent as f64))
    }

    pub fn sin(self) -> Self {
        Self::unary(UnaryOp::Sin, self)
    }

    pub fn cos(self) -> Self {
        Self::unary(UnaryOp::Cos, self)
    }

    pub fn exp(self) -> Self {
        Self::unary(UnaryOp::Exp, self)
    }

    pub fn ln(self) -> Self {
        Self::unary(UnaryOp::Log, self)
    }

    pub fn sqrt(self) -> Self {
        Self::unary(UnaryOp::Sqrt, self)
    }

    pub fn abs(self) -> Self {
        Self::unary(UnaryOp::Abs, self)
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match &*self.0 {
            Node::Const(_) => None,
            Node::Var(i) => Some(*i),
            Node::Unary(_, a) => a.max_var(),
            Node::Binary(_, a, b) => match (a.max_var(), b.max_var()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    /// Number of nodes, counting shared subtrees once per occurrence.
    pub fn size(&self) -> usize {
        match &*self.0 {
            Node::Const(_) | Node::Var(_) => 1,
            Node::Unary(_, a) => 1 + a.size(),
            Node::Binary(_, a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64, DomainError> {
        let v = match &*self.0 {
            Node::Const(c) => *c,
            Node::Var(i) => point[*i],
            Node::Unary(op, a) => apply_unary(*op, a.eval(point)?)?,
            Node::Binary(op, a, b) => apply_binary(*op, a.eval(point)?, b.eval(point)?)?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(DomainError::NonFinite)
        }
    }

    /// Value and first partials with respect to every coordinate of `point`.
    pub fn eval_jet(&self, point: &[f64]) -> Result<Jet1, DomainError> {
        jet::eval_jet(self, point)
    }

    /// Symbolic partial derivative with respect to coordinate `var`.
    pub fn derivative(&self, var: usize) -> Expr {
        use BinaryOp::*;
        match &*self.0 {
            Node::Const(_) => Self::zero(),
            Node::Var(i) => {
                if *i == var {
                    Self::one()
                } else {
                    Self::zero()
                }
            }
            Node::Unary(op, a) => {
                let da = a.derivative(var);
                if da.is_zero() {
                    return Self::zero();
                }
                let outer = match op {
                    UnaryOp::Neg => return -da,
                    UnaryOp::Sin => a.clone().cos(),
                    UnaryOp::Cos => -a.clone().sin(),
                    UnaryOp::Exp => self.clone(),
                    UnaryOp::Log => return da / a.clone(),
                    UnaryOp::Sqrt => return da / (Self::constant(2.0) * self.clone()),
                    // sign(a) written as a/|a|; the jet path handles a = 0 separately
                    UnaryOp::Abs => a.clone() / self.clone(),
                };
                outer * da
            }
            Node::Binary(op, a, b) => {
                let da = a.derivative(var);
                let db = b.derivative(var);
                match op {
                    Add => da + db,
                    Sub => da - db,
                    Mul => da * b.clone() + a.clone() * db,
                    Div => (da * b.clone() - a.clone() * db) / (b.clone() * b.clone()),
                    Pow => {
                        if db.is_zero() {
                            if da.is_zero() {
                                return Self::zero();
                            }
                            let reduced = b.clone() - Self::one();
                            b.clone() * a.clone().pow(reduced) * da
                        } else {
                            self.clone()
                                * (db * a.clone().ln() + b.clone() * da / a.clone())
                        }
                    }
                }
            }
        }
    }

    /// Substitute every variable `i` by `subs[i]`.
    pub fn substitute(&self, subs: &[Expr]) -> Expr {
        match &*self.0 {
            Node::Const(_) => self.clone(),
            Node::Var(i) => subs[*i].clone(),
            Node::Unary(op, a) => Self::unary(*op, a.substitute(subs)),
            Node::Binary(op, a, b) => Self::binary(*op, a.substitute(subs), b.substitute(subs)),
        }
    }

    /// Fully parenthesised rendering using the given coordinate names.
    pub fn display<'a>(&'a self, names: &'a [String]) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, names }
    }
}

pub(crate) fn apply_unary(op: UnaryOp, x: f64) -> Result<f64, DomainError> {
    Ok(match op {
        UnaryOp::Neg => -x,
        UnaryOp::Sin => x.sin(),
        UnaryOp::Cos => x.cos(),
        UnaryOp::Exp => x.exp(),
        UnaryOp::Log => {
            if x <= 0.0 {
                return Err(DomainError::LogNonPositive(x));
            }
            x.ln()
        }
        UnaryOp::Sqrt => {
            if x < 0.0 {
                return Err(DomainError::SqrtNegative(x));
            }
            x.sqrt()
        }
        UnaryOp::Abs => x.abs(),
    })
}

pub(crate) fn apply_binary(op: BinaryOp, a: f64, b: f64) -> Result<f64, DomainError> {
    Ok(match op {
        BinaryOp::Add => a + b,
        BinaryOp::Sub => a - b,
        BinaryOp::Mul => a * b,
        BinaryOp::Div => {
            if b.abs() <= DIV_ZERO_TOL {
                return Err(DomainError::DivisionByZero);
            }
            a / b
        }
        BinaryOp::Pow => {
            if a < 0.0 && b.fract() != 0.0 {
                return Err(DomainError::FractionalPowerOfNegative { base: a, exponent: b });
            }
            if a == 0.0 && b < 0.0 {
                return Err(DomainError::DivisionByZero);
            }
            a.powf(b)
        }
    })
}

pub struct ExprDisplay<'a> {
    expr: &'a Expr,
    names: &'a [String],
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(self.expr, self.names, f)
    }
}

fn write_expr(e: &Expr, names: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e.node() {
        Node::Const(c) => {
            if *c < 0.0 {
                write!(f, "(-{:?})", -c)
            } else {
                write!(f, "{:?}", c)
            }
        }
        Node::Var(i) => match names.get(*i) {
            Some(n) => f.write_str(n),
            None => write!(f, "<x{}>", i),
        },
        Node::Unary(UnaryOp::Neg, a) => {
            f.write_str("(-")?;
            write_expr(a, names, f)?;
            f.write_str(")")
        }
        Node::Unary(op, a) => {
            write!(f, "{}(", op.name())?;
            write_expr(a, names, f)?;
            f.write_str(")")
        }
        Node::Binary(op, a, b) => {
            f.write_str("(")?;
            write_expr(a, names, f)?;
            write!(f, " {} ", op.symbol())?;
            write_expr(b, names, f)?;
            f.write_str(")")
        }
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::binary(BinaryOp::Add, self, rhs)
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::binary(BinaryOp::Sub, self, rhs)
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::binary(BinaryOp::Mul, self, rhs)
    }
}

impl Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::binary(BinaryOp::Div, self, rhs)
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::unary(UnaryOp::Neg, self)
    }
}

impl From<f64> for Expr {
    fn from(c: f64) -> Self {
        Expr::constant(c)
    }
}
