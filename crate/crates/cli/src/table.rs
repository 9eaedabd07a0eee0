//! Output tables shared by every subcommand, rendered as aligned text, CSV or JSON.

use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    /// Plain decimal string; grouped in threes after the point in text output.
    Num(String),
    Text(String),
    Empty,
}

impl Cell {
    pub fn int(v: impl TryInto<i64>) -> Cell {
        Cell::Int(v.try_into().unwrap_or(i64::MAX))
    }

    pub fn num(s: impl Into<String>) -> Cell {
        Cell::Num(s.into())
    }

    pub fn text(s: impl Into<String>) -> Cell {
        Cell::Text(s.into())
    }

    fn plain(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(s) | Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn pretty(&self) -> String {
        match self {
            Cell::Num(s) => group_digits(s),
            other => other.plain(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => Value::from(*v),
            Cell::Num(s) | Cell::Text(s) => Value::from(s.clone()),
            Cell::Empty => Value::Null,
        }
    }
}

/// `0.66798625915` -> `0.667 986 259 15`; exponents and integer parts are left alone.
pub fn group_digits(s: &str) -> String {
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => s.split_at(i),
        None => (s, ""),
    };
    let Some((int, frac)) = mantissa.split_once('.') else {
        return s.to_string();
    };
    let mut out = String::with_capacity(s.len() + frac.len() / 3 + 1);
    out.push_str(int);
    out.push('.');
    for (i, ch) in frac.chars().enumerate() {
        if i > 0 && i % 3 == 0 {
            out.push(' ');
        }
        out.push(ch);
    }
    out.push_str(exponent);
    out
}

#[derive(Debug, Clone)]
pub struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
    notes: Vec<String>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Table {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Free-text remark shown under the text table only.
    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => self.text(),
            Format::Csv => self.csv(),
            Format::Json => self.json(),
        }
    }

    fn text(&self) -> String {
        let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Cell::pretty).collect()).collect();
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|c| {
                cells
                    .iter()
                    .map(|r| r[c].chars().count())
                    .chain(std::iter::once(self.columns[c].len()))
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |fields: Vec<String>| {
            let mut s = String::new();
            for (i, f) in fields.iter().enumerate() {
                if i > 0 {
                    s.push_str("  ");
                }
                if i + 1 == fields.len() {
                    s.push_str(f);
                } else {
                    s.push_str(&format!("{f:<w$}", w = widths[i]));
                }
            }
            s.trim_end().to_string() + "\n"
        };
        let mut out = line(self.columns.iter().map(|c| c.to_string()).collect());
        for r in cells {
            out.push_str(&line(r));
        }
        for n in &self.notes {
            out.push_str(n);
            out.push('\n');
        }
        out
    }

    fn csv(&self) -> String {
        let escape = |s: String| {
            if s.contains([',', '"', '\n']) {
                format!("\"{}\"", s.replace('"', "\"\""))
            } else {
                s
            }
        };
        let mut out = self.columns.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.iter().map(|c| escape(c.plain())).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }

    fn json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let mut m = Map::new();
                for (c, v) in self.columns.iter().zip(r) {
                    m.insert((*c).to_string(), v.json());
                }
                Value::Object(m)
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&Value::Array(rows)).expect("serialisable");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grouping() {
        assert_eq!(group_digits("0.66798625915"), "0.667 986 259 15");
        assert_eq!(group_digits("-0.008627"), "-0.008 627");
        assert_eq!(group_digits("123"), "123");
        assert_eq!(group_digits("1.2345e-50"), "1.234 5e-50");
    }

    #[test]
    fn formats_carry_same_values() {
        let mut t = Table::new(&["n", "value"]);
        t.push(vec![Cell::int(3), Cell::num("0.1234567")]);
        t.push(vec![Cell::int(4), Cell::Empty]);
        assert_eq!(t.render(Format::Csv), "n,value\n3,0.1234567\n4,\n");
        assert!(t.render(Format::Text).contains("0.123 456 7"));
        let v: Value = serde_json::from_str(&t.render(Format::Json)).unwrap();
        assert_eq!(v[0]["value"], "0.1234567");
        assert_eq!(v[0]["n"], 3);
        assert!(v[1]["value"].is_null());
    }
}
