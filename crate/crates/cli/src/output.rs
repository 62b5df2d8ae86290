//! CSV rendering.

use lhskit_core::report::{CheckRecord, Relation};

/// A CSV table: either rows to be written or text produced elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub enum Table {
    Rows { header: Vec<String>, rows: Vec<Vec<String>> },
    Raw(String),
}

/// Floats in 17 significant digits, matching the JSON reports.
pub fn float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

impl Table {
    pub fn new(header: Vec<String>, rows: Vec<Vec<String>>) -> Self {
        Table::Rows { header, rows }
    }

    pub fn numeric(header: Vec<String>, rows: Vec<Vec<f64>>) -> Self {
        let rows = rows.into_iter().map(|r| r.into_iter().map(float).collect()).collect();
        Table::Rows { header, rows }
    }

    pub fn raw(text: String) -> Self {
        Table::Raw(text)
    }

    pub fn render(&self) -> String {
        match self {
            Table::Raw(s) => s.clone(),
            Table::Rows { header, rows } => {
                let mut w = csv::WriterBuilder::new()
                    .terminator(csv::Terminator::Any(b'\n'))
                    .from_writer(Vec::new());
                w.write_record(header).expect("in-memory write");
                for r in rows {
                    w.write_record(r).expect("in-memory write");
                }
                String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
            }
        }
    }
}

/// One row per check record.
pub fn records_table(records: &[CheckRecord]) -> Table {
    let header = ["id", "pass", "worst_residual", "relation", "bound", "samples", "error"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows = records
        .iter()
        .map(|r| {
            vec![
                r.id.clone(),
                r.pass.to_string(),
                float(r.worst_residual),
                match r.relation {
                    Relation::AtMost => "at_most".into(),
                    Relation::AtLeast => "at_least".into(),
                },
                float(r.bound),
                r.samples.to_string(),
                r.error.clone().unwrap_or_default(),
            ]
        })
        .collect();
    Table::new(header, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoting_and_line_endings() {
        let t = Table::new(
            vec!["a".into(), "b".into()],
            vec![vec!["x,y".into(), "1".into()]],
        );
        assert_eq!(t.render(), "a,b\n\"x,y\",1\n");
    }

    #[test]
    fn floats_keep_seventeen_digits() {
        assert_eq!(float(0.1), "1.0000000000000001e-1");
        assert_eq!(float(f64::NAN), "NaN");
    }
}
