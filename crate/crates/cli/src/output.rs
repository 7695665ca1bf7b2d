//! CSV tables and TOML summaries.
//!
//! Floats are written as `{:.16e}` (17 significant digits), rows end in LF,
//! and the first line is a `# schema:` comment naming the column layout.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(v) => format_float(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub schema: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(schema: &str, columns: &[&str]) -> Self {
        Table { schema: schema.to_string(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match schema {}", self.schema);
        self.rows.push(row);
    }

    /// Index of column `name`.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        writeln!(buf, "# schema: {}", self.schema)?;
        {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut buf);
            w.write_record(&self.columns)?;
            for row in &self.rows {
                w.write_record(row.iter().map(Cell::render))?;
            }
            w.flush()?;
        }
        Ok(buf)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).with_context(|| format!("writing {}", path.display()))
    }
}

/// Ordered scalar results of one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Scalars(pub Vec<(String, ScalarValue)>);

#[derive(Debug, Clone, PartialEq)]
pub enum ScalarValue {
    Float(f64),
    Int(i64),
    Text(String),
}

impl Scalars {
    pub fn float(&mut self, name: &str, v: f64) {
        self.0.push((name.to_string(), ScalarValue::Float(v)));
    }

    pub fn int(&mut self, name: &str, v: i64) {
        self.0.push((name.to_string(), ScalarValue::Int(v)));
    }

    pub fn text(&mut self, name: &str, v: impl Into<String>) {
        self.0.push((name.to_string(), ScalarValue::Text(v.into())));
    }

    pub fn get(&self, name: &str) -> Option<&ScalarValue> {
        self.0.iter().find(|(k, _)| k == name).map(|(_, v)| v)
    }

    pub fn get_f64(&self, name: &str) -> Option<f64> {
        match self.get(name)? {
            ScalarValue::Float(v) => Some(*v),
            ScalarValue::Int(v) => Some(*v as f64),
            ScalarValue::Text(_) => None,
        }
    }

    fn to_toml(&self) -> toml::Table {
        let mut t = toml::Table::new();
        for (k, v) in &self.0 {
            let value = match v {
                // TOML floats cannot hold every f64 textually, so keep the exact rendering
                ScalarValue::Float(x) if x.is_finite() => toml::Value::Float(*x),
                ScalarValue::Float(x) => toml::Value::String(format_float(*x)),
                ScalarValue::Int(x) => toml::Value::Integer(*x),
                ScalarValue::Text(s) => toml::Value::String(s.clone()),
            };
            t.insert(k.clone(), value);
        }
        t
    }
}

pub struct Summary<'a> {
    pub experiment: &'a str,
    pub seed: u64,
    pub scalars: &'a Scalars,
    pub warnings: &'a [String],
    pub config: &'a crate::config::ExperimentConfig,
}

impl Summary<'_> {
    pub fn to_string(&self) -> Result<String> {
        let mut meta = toml::Table::new();
        meta.insert("software".into(), toml::Value::String("ion-dfs".into()));
        meta.insert("version".into(), toml::Value::String(env!("CARGO_PKG_VERSION").into()));
        meta.insert("experiment".into(), toml::Value::String(self.experiment.into()));
        // u64 seeds above i64::MAX do not fit a TOML integer
        meta.insert("seed".into(), toml::Value::String(self.seed.to_string()));
        let mut doc = toml::Table::new();
        doc.insert("meta".into(), toml::Value::Table(meta));
        doc.insert("scalars".into(), toml::Value::Table(self.scalars.to_toml()));
        doc.insert(
            "warnings".into(),
            toml::Value::Array(self.warnings.iter().map(|w| toml::Value::String(w.clone())).collect()),
        );
        doc.insert("config".into(), toml::Value::try_from(self.config).context("serialising config echo")?);
        Ok(toml::to_string(&doc)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_string()?).with_context(|| format!("writing {}", path.display()))
    }
}
