//! Tabular reports: CSV with a fixed header, or JSON mirroring it.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    /// Printed to stderr for CSV, embedded for JSON.
    pub summary: Map<String, Value>,
    /// Replaces the table in JSON output when set.
    pub document: Option<Value>,
}

impl Report {
    pub fn new(header: Vec<&'static str>) -> Self {
        Report { header, rows: Vec::new(), summary: Map::new(), document: None }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn summarize(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }

    fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        Ok(w.into_inner()?)
    }

    fn to_json(&self) -> Result<Vec<u8>> {
        let doc = match &self.document {
            Some(d) => d.clone(),
            None => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| Value::Object(self.header.iter().zip(r).map(|(k, v)| (k.to_string(), cell_value(v))).collect()))
                    .collect();
                let mut doc = Map::new();
                doc.insert("rows".into(), Value::Array(rows));
                if !self.summary.is_empty() {
                    doc.insert("summary".into(), Value::Object(self.summary.clone()));
                }
                Value::Object(doc)
            }
        };
        let mut out = serde_json::to_vec_pretty(&doc)?;
        out.push(b'\n');
        Ok(out)
    }

    pub fn emit(&self, format: Format, out: Option<&Path>) -> Result<()> {
        let bytes = match format {
            Format::Csv => self.to_csv()?,
            Format::Json => self.to_json()?,
        };
        match out {
            Some(path) => std::fs::write(path, &bytes).with_context(|| format!("writing {}", path.display()))?,
            None => std::io::stdout().write_all(&bytes)?,
        }
        if format == Format::Csv {
            for (k, v) in &self.summary {
                eprintln!("# {k}: {v}");
            }
        }
        Ok(())
    }
}

/// Numbers become JSON numbers; `inf` and other text stay strings.
fn cell_value(text: &str) -> Value {
    match text {
        "true" => Value::Bool(true),
        "false" => Value::Bool(false),
        "" => Value::Null,
        _ => text
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .and_then(serde_json::Number::from_f64)
            .map_or_else(|| Value::String(text.to_string()), Value::Number),
    }
}
