use serde::{Deserialize, Serialize};

use crate::error::{Error, ExprError, Result};
use crate::expr::{self, Expr};

/// How a coordinate ranges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordKind {
    /// Angle-like coordinate, identified modulo `period`.
    Periodic { period: f64 },
    /// Closed interval used for sampling and domain checks.
    Bounded { lo: f64, hi: f64 },
}

impl CoordKind {
    pub fn unit_periodic() -> Self {
        CoordKind::Periodic { period: 1.0 }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, CoordKind::Periodic { .. })
    }
}

/// A single coordinate patch with named coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    names: Vec<String>,
    kinds: Vec<CoordKind>,
}

pub const MAX_DIM: usize = 8;

impl Chart {
    pub fn new<S: Into<String>>(coords: impl IntoIterator<Item = (S, CoordKind)>) -> Result<Self> {
        let (names, kinds): (Vec<String>, Vec<CoordKind>) =
            coords.into_iter().map(|(n, k)| (n.into(), k)).unzip();
        if names.is_empty() || names.len() > MAX_DIM {
            return Err(Error::Dimension(format!(
                "chart dimension {} outside 1..={MAX_DIM}",
                names.len()
            )));
        }
        for (i, n) in names.iter().enumerate() {
            let valid = n
                .chars()
                .next()
                .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !valid {
                return Err(Error::InvalidInput(format!("bad coordinate name '{n}'")));
            }
            if names[..i].contains(n) {
                return Err(Error::InvalidInput(format!("duplicate coordinate '{n}'")));
            }
        }
        for (n, k) in names.iter().zip(&kinds) {
            match *k {
                CoordKind::Periodic { period } if !(period > 0.0 && period.is_finite()) => {
                    return Err(Error::InvalidInput(format!("period of '{n}' must be positive")));
                }
                CoordKind::Bounded { lo, hi } if !(lo <= hi && lo.is_finite() && hi.is_finite()) => {
                    return Err(Error::InvalidInput(format!("bounds of '{n}' are not an interval")));
                }
                _ => {}
            }
        }
        Ok(Chart { names, kinds })
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn kinds(&self) -> &[CoordKind] {
        &self.kinds
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn parse(&self, text: &str) -> Result<Expr, ExprError> {
        expr::parse(text, &self.names)
    }

    /// Chart with one more coordinate appended.
    pub fn extended(&self, name: &str, kind: CoordKind) -> Result<Chart> {
        let coords = self
            .names
            .iter()
            .cloned()
            .zip(self.kinds.iter().copied())
            .chain(std::iter::once((name.to_string(), kind)));
        Chart::new(coords)
    }

    /// Reduce periodic coordinates into `[0, period)`.
    pub fn reduce(&self, point: &mut [f64]) {
        for (x, k) in point.iter_mut().zip(&self.kinds) {
            if let CoordKind::Periodic { period } = *k {
                *x = x.rem_euclid(period);
                if *x >= period {
                    *x = 0.0;
                }
            }
        }
    }

    pub fn reduced(&self, point: &[f64]) -> Vec<f64> {
        let mut p = point.to_vec();
        self.reduce(&mut p);
        p
    }

    /// Bounded coordinates lie in their interval (with a small relative slack).
    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && point.iter().zip(&self.kinds).all(|(x, k)| match *k {
                CoordKind::Periodic { .. } => x.is_finite(),
                CoordKind::Bounded { lo, hi } => {
                    let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
                    *x >= lo - slack && *x <= hi + slack
                }
            })
    }

    /// The sampling box of each coordinate: `[0, period)` or `[lo, hi]`.
    pub fn sample_range(&self, i: usize) -> (f64, f64) {
        match self.kinds[i] {
            CoordKind::Periodic { period } => (0.0, period),
            CoordKind::Bounded { lo, hi } => (lo, hi),
        }
    }
}
