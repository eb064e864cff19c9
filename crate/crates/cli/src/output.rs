use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

use crate::error::CliError;
use crate::spec::{Format, RunSpec};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    /// `Num` for finite values, `Empty` otherwise.
    pub fn num(v: Option<f64>) -> Self {
        match v {
            Some(x) if x.is_finite() => Cell::Num(x),
            _ => Cell::Empty,
        }
    }

    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x:?}"),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => json!(x),
            Cell::Int(i) => json!(i),
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Free-form remarks, `#` lines in CSV and a `notes` array in JSON.
    pub notes: Vec<String>,
    /// Extra structured metadata for the JSON envelope.
    pub meta: Option<Value>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Self::default()
        }
    }
}

pub fn render(spec: &RunSpec, table: &Table, format: Format) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Csv => render_csv(spec, table),
        Format::Json => {
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
                .collect();
            let doc = json!({
                "generator": concat!("nlbs ", env!("CARGO_PKG_VERSION")),
                "runspec": spec,
                "columns": table.columns,
                "rows": rows,
                "notes": table.notes,
                "meta": table.meta.clone().unwrap_or(Value::Null),
            });
            let mut out =
                serde_json::to_vec_pretty(&doc).map_err(|e| CliError::Internal(e.to_string()))?;
            out.push(b'\n');
            Ok(out)
        }
    }
}

fn render_csv(spec: &RunSpec, table: &Table) -> Result<Vec<u8>, CliError> {
    let mut out = Vec::new();
    let spec_json = serde_json::to_string(spec).map_err(|e| CliError::Internal(e.to_string()))?;
    writeln!(
        out,
        "# nlbs {} runspec={spec_json}",
        env!("CARGO_PKG_VERSION")
    )?;
    for n in &table.notes {
        writeln!(out, "# {n}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&table.columns).map_err(csv_err)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::csv)).map_err(csv_err)?;
    }
    w.into_inner()
        .map_err(|e| CliError::Internal(e.to_string()))
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Internal(format!("csv: {e}"))
}

/// Writes to `path` through a temporary file in the same directory, or to
/// stdout when no path is given.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    let Some(path) = path else {
        let mut out = std::io::stdout().lock();
        out.write_all(bytes)?;
        return Ok(out.flush()?);
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.error))?;
    Ok(())
}
