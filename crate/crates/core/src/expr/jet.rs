use smallvec::{smallvec, SmallVec};

use super::{apply_binary, apply_unary, BinaryOp, Expr, Node, UnaryOp};
use crate::error::DomainError;

/// Value together with its gradient with respect to the chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet1 {
    pub value: f64,
    pub partials: SmallVec<[f64; 4]>,
}

impl Jet1 {
    pub fn constant(value: f64, dim: usize) -> Self {
        Jet1 {
            value,
            partials: smallvec![0.0; dim],
        }
    }

    pub fn variable(value: f64, index: usize, dim: usize) -> Self {
        let mut j = Self::constant(value, dim);
        j.partials[index] = 1.0;
        j
    }

    pub fn dim(&self) -> usize {
        self.partials.len()
    }

    fn scaled(mut self, value: f64, factor: f64) -> Self {
        self.value = value;
        for p in self.partials.iter_mut() {
            *p *= factor;
        }
        self
    }

    fn combine(a: &Jet1, b: &Jet1, value: f64, ca: f64, cb: f64) -> Jet1 {
        Jet1 {
            value,
            partials: a
                .partials
                .iter()
                .zip(b.partials.iter())
                .map(|(x, y)| ca * x + cb * y)
                .collect(),
        }
    }

    fn is_constant(&self) -> bool {
        self.partials.iter().all(|p| *p == 0.0)
    }
}

pub(super) fn eval_jet(expr: &Expr, point: &[f64]) -> Result<Jet1, DomainError> {
    let dim = point.len();
    let jet = match expr.node() {
        Node::Const(c) => Jet1::constant(*c, dim),
        Node::Var(i) => Jet1::variable(point[*i], *i, dim),
        Node::Unary(op, a) => {
            let a = eval_jet(a, point)?;
            let x = a.value;
            let v = apply_unary(*op, x)?;
            let slope = match op {
                UnaryOp::Neg => -1.0,
                UnaryOp::Sin => x.cos(),
                UnaryOp::Cos => -x.sin(),
                UnaryOp::Exp => v,
                UnaryOp::Log => 1.0 / x,
                UnaryOp::Sqrt => {
                    if v == 0.0 {
                        if a.is_constant() {
                            0.0
                        } else {
                            return Err(DomainError::NonDifferentiable("sqrt at 0"));
                        }
                    } else {
                        0.5 / v
                    }
                }
                UnaryOp::Abs => {
                    if x > 0.0 {
                        1.0
                    } else if x < 0.0 {
                        -1.0
                    } else {
                        0.0
                    }
                }
            };
            a.scaled(v, slope)
        }
        Node::Binary(op, a, b) => {
            let a = eval_jet(a, point)?;
            let b = eval_jet(b, point)?;
            let v = apply_binary(*op, a.value, b.value)?;
            match op {
                BinaryOp::Add => Jet1::combine(&a, &b, v, 1.0, 1.0),
                BinaryOp::Sub => Jet1::combine(&a, &b, v, 1.0, -1.0),
                BinaryOp::Mul => Jet1::combine(&a, &b, v, b.value, a.value),
                BinaryOp::Div => Jet1::combine(&a, &b, v, 1.0 / b.value, -v / b.value),
                BinaryOp::Pow => {
                    let (x, y) = (a.value, b.value);
                    let ca = if a.is_constant() || y == 0.0 {
                        0.0
                    } else {
                        y * x.powf(y - 1.0)
                    };
                    let cb = if b.is_constant() {
                        0.0
                    } else if x > 0.0 {
                        v * x.ln()
                    } else {
                        return Err(DomainError::LogNonPositive(x));
                    };
                    Jet1::combine(&a, &b, v, ca, cb)
                }
            }
        }
    };
    if jet.value.is_finite() && jet.partials.iter().all(|p| p.is_finite()) {
        Ok(jet)
    } else {
        Err(DomainError::NonFinite)
    }
}
