//! CSV and JSON emission with reproducible 17-significant-digit numbers.

use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Round-trippable decimal form: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub enum MetaValue {
    Str(String),
    Num(f64),
    Int(u64),
}

/// A flat numeric table with named columns and a metadata block.
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub meta: Vec<(String, MetaValue)>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Table {
        Table {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            meta: Vec::new(),
        }
    }

    pub fn meta_str(&mut self, key: &str, value: impl Into<String>) {
        self.meta.push((key.into(), MetaValue::Str(value.into())));
    }

    pub fn meta_num(&mut self, key: &str, value: f64) {
        self.meta.push((key.into(), MetaValue::Num(value)));
    }

    pub fn meta_int(&mut self, key: &str, value: u64) {
        self.meta.push((key.into(), MetaValue::Int(value)));
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    fn to_json(&self) -> String {
        let mut out = String::from("{\n  \"meta\": {");
        let mut first = true;
        for (k, v) in &self.meta {
            if !first {
                out.push(',');
            }
            first = false;
            let _ = write!(out, "\n    \"{}\": ", escape(k));
            match v {
                MetaValue::Str(s) => {
                    let _ = write!(out, "\"{}\"", escape(s));
                }
                MetaValue::Num(x) => out.push_str(&fmt_f64(*x)),
                MetaValue::Int(i) => {
                    let _ = write!(out, "{i}");
                }
            }
        }
        out.push_str("\n  },\n  \"columns\": [");
        for (i, c) in self.columns.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            let _ = write!(out, "\"{}\"", escape(c));
        }
        out.push_str("],\n  \"rows\": [\n");
        for (i, row) in self.rows.iter().enumerate() {
            out.push_str("    [");
            for (j, &x) in row.iter().enumerate() {
                if j > 0 {
                    out.push_str(", ");
                }
                out.push_str(&fmt_f64(x));
            }
            out.push(']');
            if i + 1 < self.rows.len() {
                out.push(',');
            }
            out.push('\n');
        }
        out.push_str("  ]\n}\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.chars()
        .flat_map(|c| match c {
            '"' => vec!['\\', '"'],
            '\\' => vec!['\\', '\\'],
            c => vec![c],
        })
        .collect()
}
