//! Report bundles: a JSON document plus optional CSV tables and SVG figures.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use paperfold::scalar::Scalar;
use serde_json::{Map, Number, Value};

/// `x` with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// JSON number written with 17 significant digits; non-finite values become strings.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::String(fmt17(x));
    }
    Value::Number(fmt17(x).parse::<Number>().expect("finite floats are JSON numbers"))
}

/// A scheme scalar: exact types keep their string form, the rest become numbers.
pub fn scalar<S: Scalar>(x: S) -> Value {
    if S::EXACT {
        Value::String(x.emit())
    } else {
        num(x.to_f64())
    }
}

pub fn obj<const N: usize>(fields: [(&str, Value); N]) -> Value {
    let mut m = Map::new();
    for (k, v) in fields {
        m.insert(k.to_string(), v);
    }
    Value::Object(m)
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Table {
        Table { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }
}

#[derive(Clone, Debug)]
pub struct Bundle {
    pub json: Value,
    pub tables: Vec<Table>,
    /// `(file stem, svg text)`.
    pub figures: Vec<(String, String)>,
    /// Extra files written verbatim under `--out`, e.g. generated scheme files.
    pub files: Vec<(String, String)>,
    pub exit: i32,
}

impl Bundle {
    pub fn new(json: Value) -> Bundle {
        Bundle { json, tables: Vec::new(), figures: Vec::new(), files: Vec::new(), exit: 0 }
    }

    pub fn json_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.json).expect("reports always serialize");
        s.push('\n');
        s
    }

    /// Write everything under `dir`; returns the paths in write order.
    pub fn write_to(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        let mut put = |name: &str, text: &str| -> io::Result<()> {
            let p = dir.join(name);
            fs::write(&p, text)?;
            out.push(p);
            Ok(())
        };
        put("report.json", &self.json_text())?;
        for t in &self.tables {
            put(&format!("{}.csv", t.name), &t.to_csv())?;
        }
        for (name, svg) in &self.figures {
            put(&format!("{name}.svg"), svg)?;
        }
        for (name, text) in &self.files {
            put(name, text)?;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt17(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt17(-2.0), "-2.0000000000000000e0");
        assert_eq!(num(f64::INFINITY), Value::String("inf".into()));
        let s = serde_json::to_string(&num(1.0 / 3.0)).unwrap();
        assert_eq!(s, "3.3333333333333331e-1");
    }

    #[test]
    fn csv_quotes_commas() {
        let mut t = Table::new("t", &["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        assert_eq!(t.to_csv(), "a,b\n1,\"x,y\"\n");
    }
}
