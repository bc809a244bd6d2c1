//! Tabular reports with deterministic ordering and formatting.

use std::cmp::Ordering;
use std::io::Write;

use serde_json::{json, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Cell {
        Cell::Text(s.into())
    }

    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format_float(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            // the rendered digits are what CSV shows, so JSON carries the same value
            Cell::Num(v) if v.is_finite() => json!(format_float(*v).parse::<f64>().expect("formatted float parses")),
            Cell::Num(_) => Value::Null,
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }

    fn order(&self, other: &Cell) -> Ordering {
        match (self, other) {
            (Cell::Num(a), Cell::Num(b)) => a.total_cmp(b),
            (Cell::Int(a), Cell::Int(b)) => a.cmp(b),
            _ => self.render().cmp(&other.render()),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::text(if v { "PASS" } else { "FAIL" })
    }
}

/// Twelve significant digits in scientific notation.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.11e}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Key-value facts that do not fit the table.
    pub summary: Vec<(String, Cell)>,
    pub passed: bool,
}

impl Report {
    pub fn new(command: &str, columns: Vec<String>) -> Report {
        Report { command: command.into(), columns, rows: Vec::new(), summary: Vec::new(), passed: true }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl Into<Cell>) {
        self.summary.push((key.into(), value.into()));
    }

    /// Sort rows lexicographically by their cells.
    pub fn sort(&mut self) {
        self.rows
            .sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.order(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal));
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> std::io::Result<()> {
        match format {
            Format::Csv => self.write_csv(out),
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, &self.to_json())?;
                writeln!(out)
            }
        }
    }

    fn write_csv(&self, out: &mut dyn Write) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()
    }

    pub fn to_json(&self) -> Value {
        let summary: serde_json::Map<String, Value> =
            self.summary.iter().map(|(k, v)| (k.clone(), v.to_json())).collect();
        json!({
            "command": self.command,
            "passed": self.passed,
            "summary": summary,
            "columns": self.columns,
            "rows": self.rows.iter().map(|r| r.iter().map(Cell::to_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    }

    /// One line per summary entry and a closing verdict, for the terminal.
    pub fn summary_lines(&self) -> Vec<String> {
        let mut lines: Vec<String> = self.summary.iter().map(|(k, v)| format!("{k}: {}", v.render())).collect();
        lines.push(format!("{}: {}", self.command, if self.passed { "PASS" } else { "FAIL" }));
        lines
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_float(std::f64::consts::FRAC_PI_6), "5.23598775598e-1");
        assert_eq!(format_float(0.0), "0.00000000000e0");
        assert_eq!(format_float(f64::NAN), "nan");
    }

    #[test]
    fn rows_sort_numerically() {
        let mut r = Report::new("t", vec!["a".into(), "b".into()]);
        r.push(vec![Cell::Num(10.0), Cell::text("x")]);
        r.push(vec![Cell::Num(-2.0), Cell::text("y")]);
        r.push(vec![Cell::Num(-2.0), Cell::text("a")]);
        r.sort();
        let firsts: Vec<_> = r.rows.iter().map(|row| row[1].render()).collect();
        assert_eq!(firsts, ["a", "y", "x"]);
    }

    #[test]
    fn json_and_csv_agree_on_digits() {
        let mut r = Report::new("t", vec!["v".into()]);
        r.push(vec![Cell::Num(1.0 / 3.0)]);
        let mut buf = Vec::new();
        r.write(Format::Csv, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "v\n3.33333333333e-1\n");
        assert_eq!(r.to_json()["rows"][0][0], json!(0.333333333333));
    }
}
