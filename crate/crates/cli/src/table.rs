//! Tabular output with a self-describing header.
//!
//! CSV files start with `#` lines carrying the tool version, the schema tag
//! and the resolved configuration as one-line JSON. JSON output wraps the
//! same fields in one document.

use crate::error::CliError;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::io::{BufRead, Write};

pub const TOOL: &str = "csdist";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
    Empty,
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Cell {
        Cell::Text(s.into())
    }

    pub fn opt_num(v: Option<f64>) -> Cell {
        v.map(Cell::Num).unwrap_or(Cell::Empty)
    }

    pub fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Cell::Int(v) => Value::from(*v),
            // NaN and ±∞ have no JSON literal
            Cell::Num(v) if v.is_finite() => Value::from(*v),
            Cell::Num(v) => Value::from(v.to_string()),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Empty => Value::Null,
        }
    }
}

/// Header shared by every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub tool: String,
    pub version: String,
    pub schema: String,
    pub config: Value,
}

impl Header {
    pub fn new(schema: &str, config: Value) -> Self {
        Header { tool: TOOL.into(), version: VERSION.into(), schema: schema.into(), config }
    }

    pub fn write_csv_comments(&self, w: &mut dyn Write) -> std::io::Result<()> {
        writeln!(w, "# tool: {} {}", self.tool, self.version)?;
        writeln!(w, "# schema: {}", self.schema)?;
        writeln!(w, "# config: {}", self.config)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv(&self, header: &Header, w: &mut dyn Write) -> Result<(), CliError> {
        header.write_csv_comments(w)?;
        let mut cw = csv::Writer::from_writer(w);
        cw.write_record(&self.columns)?;
        for row in &self.rows {
            cw.write_record(row.iter().map(Cell::render))?;
        }
        cw.flush()?;
        Ok(())
    }

    pub fn write_json(&self, header: &Header, w: &mut dyn Write) -> Result<(), CliError> {
        let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::to_json).collect())).collect();
        let doc = serde_json::json!({
            "tool": header.tool,
            "version": header.version,
            "schema": header.schema,
            "config": header.config,
            "columns": self.columns,
            "rows": rows,
        });
        serde_json::to_writer_pretty(&mut *w, &doc)?;
        writeln!(w)?;
        Ok(())
    }
}

/// A previously written file: header plus rows as strings.
#[derive(Debug, Clone)]
pub struct ParsedOutput {
    pub header: Header,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Usage(format!("cannot check output: {}", msg.into()))
}

/// Read back a CSV or JSON output written by this tool.
pub fn parse_output(text: &str) -> Result<ParsedOutput, CliError> {
    if text.trim_start().starts_with('{') {
        // a JSON document, or JSON lines whose first line is the header
        if let Ok(doc) = serde_json::from_str::<Value>(text) {
            return parse_json_doc(&doc);
        }
        return parse_json_lines(text);
    }
    let mut tool = None;
    let mut schema = None;
    let mut config = None;
    let mut body = String::new();
    for line in std::io::Cursor::new(text).lines() {
        let line = line?;
        if let Some(rest) = line.strip_prefix("# tool: ") {
            tool = Some(rest.to_string());
        } else if let Some(rest) = line.strip_prefix("# schema: ") {
            schema = Some(rest.to_string());
        } else if let Some(rest) = line.strip_prefix("# config: ") {
            config = Some(serde_json::from_str::<Value>(rest)?);
        } else if !line.starts_with('#') {
            body.push_str(&line);
            body.push('\n');
        }
    }
    let tool = tool.ok_or_else(|| bad("missing tool line"))?;
    let (name, version) = tool.split_once(' ').ok_or_else(|| bad("malformed tool line"))?;
    let header = Header {
        tool: name.into(),
        version: version.into(),
        schema: schema.ok_or_else(|| bad("missing schema line"))?,
        config: config.ok_or_else(|| bad("missing config line"))?,
    };
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let columns = rdr.headers()?.iter().map(String::from).collect();
    let rows = rdr.records().map(|r| r.map(|r| r.iter().map(String::from).collect())).collect::<Result<_, _>>()?;
    Ok(ParsedOutput { header, columns, rows })
}

fn json_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn parse_json_doc(doc: &Value) -> Result<ParsedOutput, CliError> {
    let header = Header {
        tool: doc["tool"].as_str().ok_or_else(|| bad("missing tool"))?.into(),
        version: doc["version"].as_str().ok_or_else(|| bad("missing version"))?.into(),
        schema: doc["schema"].as_str().ok_or_else(|| bad("missing schema"))?.into(),
        config: doc["config"].clone(),
    };
    let columns = doc["columns"]
        .as_array()
        .ok_or_else(|| bad("missing columns"))?
        .iter()
        .map(json_cell)
        .collect();
    let rows = doc["rows"]
        .as_array()
        .ok_or_else(|| bad("missing rows"))?
        .iter()
        .map(|r| r.as_array().map(|a| a.iter().map(json_cell).collect()).ok_or_else(|| bad("row is not an array")))
        .collect::<Result<_, _>>()?;
    Ok(ParsedOutput { header, columns, rows })
}

fn parse_json_lines(text: &str) -> Result<ParsedOutput, CliError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let first: Value = serde_json::from_str(lines.next().ok_or_else(|| bad("empty file"))?)?;
    let header: Header = serde_json::from_value(first)?;
    let columns: Vec<String> = crate::commands::SIMULATE_COLUMNS.iter().map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for l in lines {
        let v: Value = serde_json::from_str(l)?;
        rows.push(columns.iter().map(|c| json_cell(&v[c.as_str()])).collect());
    }
    Ok(ParsedOutput { header, columns, rows })
}
