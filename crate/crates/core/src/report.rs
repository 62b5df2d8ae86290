//! Verification records and bit-stable JSON output.

use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;
use serde_json::Value;

/// Whether a record's `worst_residual` must stay below or above `bound`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    pub pass: bool,
    pub worst_residual: f64,
    pub bound: f64,
    pub relation: Relation,
    pub worst_point: Option<Vec<f64>>,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

impl CheckRecord {
    /// Record from an accumulated worst value.
    pub fn from_worst(id: impl Into<String>, worst: &Worst, bound: f64) -> Self {
        let pass = worst.samples > 0
            && match worst.relation {
                Relation::AtMost => worst.value <= bound,
                Relation::AtLeast => worst.value >= bound,
            };
        CheckRecord {
            id: id.into(),
            pass,
            worst_residual: worst.value,
            bound,
            relation: worst.relation,
            worst_point: worst.point.clone(),
            samples: worst.samples,
            detail: None,
            error: None,
            wall_time_ms: None,
        }
    }

    /// Failed record carrying an upstream error.
    pub fn failed(id: impl Into<String>, error: &dyn std::fmt::Display) -> Self {
        CheckRecord {
            id: id.into(),
            pass: false,
            worst_residual: f64::NAN,
            bound: f64::NAN,
            relation: Relation::AtMost,
            worst_point: None,
            samples: 0,
            detail: None,
            error: Some(error.to_string()),
            wall_time_ms: None,
        }
    }

    /// Boolean record with no residual.
    pub fn flag(id: impl Into<String>, pass: bool, samples: usize) -> Self {
        CheckRecord {
            id: id.into(),
            pass,
            worst_residual: if pass { 0.0 } else { 1.0 },
            bound: 0.0,
            relation: Relation::AtMost,
            worst_point: None,
            samples,
            detail: None,
            error: None,
            wall_time_ms: None,
        }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = Some(detail);
        self
    }

    /// Force failure (keeps the residual).
    pub fn and(mut self, ok: bool) -> Self {
        self.pass &= ok;
        self
    }
}

/// Running worst case over an ordered scan. Ties keep the first point, so
/// the result does not depend on how the scan was parallelised.
#[derive(Debug, Clone, PartialEq)]
pub struct Worst {
    pub relation: Relation,
    pub value: f64,
    pub point: Option<Vec<f64>>,
    pub samples: usize,
}

impl Worst {
    pub fn max() -> Self {
        Worst {
            relation: Relation::AtMost,
            value: f64::NEG_INFINITY,
            point: None,
            samples: 0,
        }
    }

    pub fn min() -> Self {
        Worst {
            relation: Relation::AtLeast,
            value: f64::INFINITY,
            point: None,
            samples: 0,
        }
    }

    pub fn push(&mut self, value: f64, point: &[f64]) {
        self.samples += 1;
        let worse = match self.relation {
            Relation::AtMost => value > self.value || value.is_nan() && !self.value.is_nan(),
            Relation::AtLeast => value < self.value || value.is_nan() && !self.value.is_nan(),
        };
        if worse || self.point.is_none() {
            self.value = value;
            self.point = Some(point.to_vec());
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub tool: String,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<Value>,
    pub checks: Vec<CheckRecord>,
    pub pass: bool,
}

impl Default for VerificationReport {
    fn default() -> Self {
        Self::new()
    }
}

impl VerificationReport {
    pub fn new() -> Self {
        VerificationReport {
            tool: "lhskit".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: None,
            config: None,
            checks: Vec::new(),
            pass: true,
        }
    }

    pub fn push(&mut self, record: CheckRecord) {
        self.pass &= record.pass;
        self.checks.push(record);
    }

    pub fn extend(&mut self, other: VerificationReport) {
        for r in other.checks {
            self.push(r);
        }
    }

    pub fn get(&self, id: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|r| r.id == id)
    }

    /// Pretty JSON with every float written with 17 significant digits.
    pub fn to_json(&self) -> String {
        to_stable_json(self)
    }
}

/// Pretty printer that writes floats as `d.dddddddddddddddde±x`.
struct StableFormatter<'a> {
    inner: serde_json::ser::PrettyFormatter<'a>,
}

macro_rules! forward {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.inner.$name(w $(, $arg)*)
        })*
    };
}

impl Formatter for StableFormatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value == 0.0 {
            return w.write_all(if value.is_sign_negative() { b"-0.0" } else { b"0.0" });
        }
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    forward! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        begin_object_value();
        end_object_value();
    }
}

/// Serialise any value as pretty, bit-stable JSON.
pub fn to_stable_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut out = Vec::new();
    let fmt = StableFormatter {
        inner: serde_json::ser::PrettyFormatter::with_indent(b"  "),
    };
    let mut ser = serde_json::Serializer::with_formatter(&mut out, fmt);
    value.serialize(&mut ser).expect("in-memory serialisation");
    out.push(b'\n');
    String::from_utf8(out).expect("json is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_use_seventeen_digits() {
        let s = to_stable_json(&vec![0.1, 1.0, -2.5e-300, 0.0]);
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("1.0000000000000000e0"));
        assert!(s.contains("-2.5000000000000000e-300"));
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![0.1, 1.0, -2.5e-300, 0.0]);
    }

    #[test]
    fn non_finite_becomes_null() {
        let s = to_stable_json(&vec![f64::NAN]);
        assert!(s.contains("null"));
    }

    #[test]
    fn worst_keeps_first_tie() {
        let mut w = Worst::max();
        w.push(1.0, &[0.0]);
        w.push(1.0, &[1.0]);
        w.push(0.5, &[2.0]);
        assert_eq!(w.point, Some(vec![0.0]));
        assert_eq!(w.samples, 3);
        let r = CheckRecord::from_worst("x", &w, 1.0);
        assert!(r.pass);
        assert!(!CheckRecord::from_worst("x", &w, 0.9).pass);
    }

    #[test]
    fn report_pass_is_conjunction() {
        let mut r = VerificationReport::new();
        r.push(CheckRecord::flag("a", true, 1));
        assert!(r.pass);
        r.push(CheckRecord::flag("b", false, 1));
        assert!(!r.pass);
    }
}
