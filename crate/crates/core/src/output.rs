//! Tabular output in comma-separated or JSON-lines form.

use std::io::Write;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    JsonLines,
}

/// Numeric precision for floating-point cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    Significant(usize),
    /// Shortest representation that round-trips.
    Full,
}

impl Default for Precision {
    fn default() -> Self {
        Precision::Significant(6)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(i64),
    Num(f64),
    Missing,
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
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

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Num)
    }
}

/// Format `v` like C's `%g`: fixed notation for moderate exponents,
/// scientific otherwise, trailing zeros removed.
pub fn format_number(v: f64, precision: Precision) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let digits = match precision {
        Precision::Full => return format!("{v:?}"),
        Precision::Significant(p) => p.max(1),
    };
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        format!("{}e{exp}", trim_zeros(mantissa))
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl OutputTable {
    pub fn new(columns: &[&str]) -> Self {
        OutputTable {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self, format: OutputFormat, precision: Precision) -> String {
        let mut out = Vec::new();
        self.write_to(&mut out, format, precision)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(out).expect("output is UTF-8")
    }

    pub fn write_to<W: Write>(&self, w: &mut W, format: OutputFormat, precision: Precision) -> Result<()> {
        match format {
            OutputFormat::Csv => {
                let mut csv = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
                csv.write_record(&self.columns).map_err(csv_err)?;
                for row in &self.rows {
                    csv.write_record(row.iter().map(|c| match c {
                        Cell::Text(s) => s.clone(),
                        Cell::Int(i) => i.to_string(),
                        Cell::Num(v) => format_number(*v, precision),
                        Cell::Missing => String::new(),
                    }))
                    .map_err(csv_err)?;
                }
                csv.flush()?;
            }
            OutputFormat::JsonLines => {
                for row in &self.rows {
                    let fields: Vec<String> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(name, c)| format!("{}:{}", json_string(name), json_value(c, precision)))
                        .collect();
                    writeln!(w, "{{{}}}", fields.join(","))?;
                }
            }
        }
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> crate::error::StableError {
    crate::error::StableError::Io(e.to_string())
}

fn json_string(s: &str) -> String {
    serde_json::Value::String(s.to_string()).to_string()
}

fn json_value(c: &Cell, precision: Precision) -> String {
    match c {
        Cell::Text(s) => json_string(s),
        Cell::Int(i) => i.to_string(),
        Cell::Num(v) if v.is_finite() => format_number(*v, precision),
        Cell::Num(_) | Cell::Missing => "null".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        let p = Precision::Significant(6);
        assert_eq!(format_number(1.570123456, p), "1.57012");
        assert_eq!(format_number(-0.162, p), "-0.162");
        assert_eq!(format_number(0.0005, p), "0.0005");
        assert_eq!(format_number(1.23456789e-7, p), "1.23457e-7");
        assert_eq!(format_number(1234567.0, p), "1.23457e6");
        assert_eq!(format_number(100.0, p), "100");
        assert_eq!(format_number(0.0, p), "0");
        assert_eq!(format_number(f64::NAN, p), "nan");
        assert_eq!(format_number(0.999_999_7, p), "1");
    }

    #[test]
    fn full_precision_round_trips() {
        for v in [0.1, 1.0 / 3.0, 1e-300, -2.5e17] {
            let s = format_number(v, Precision::Full);
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn csv_and_json_mirror_each_other() {
        let mut t = OutputTable::new(&["name", "n", "x", "gap"]);
        t.push(vec!["a,b".into(), 3usize.into(), 0.5.into(), Cell::Missing]);
        let csv = t.render(OutputFormat::Csv, Precision::default());
        assert_eq!(csv, "name,n,x,gap\n\"a,b\",3,0.5,\n");
        let json = t.render(OutputFormat::JsonLines, Precision::default());
        assert_eq!(json, "{\"name\":\"a,b\",\"n\":3,\"x\":0.5,\"gap\":null}\n");
        let v: serde_json::Value = serde_json::from_str(json.trim()).unwrap();
        assert_eq!(v["x"], 0.5);
    }
}
