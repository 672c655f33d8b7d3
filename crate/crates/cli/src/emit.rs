//! Machine-readable result records.
//!
//! Every command emits one JSON object with the same top-level layout
//! (see `schema/output.schema.json`); survival curves and verify tables can
//! be emitted as CSV instead.

use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Serialize)]
pub struct ParamsRecord {
    pub gamma: f64,
    pub mu: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zs: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResultRecord {
    pub command: String,
    pub params: ParamsRecord,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<BTreeMap<String, f64>>,
    pub runtime_s: f64,
    pub version: String,
}

/// Rows for the CSV flavors: (t, survival) curves or (identity, point,
/// residual) verify tables.
#[derive(Debug, Clone)]
pub enum CsvTable {
    Survival(Vec<(f64, f64)>),
    Verify(Vec<(String, String, f64)>),
}

pub fn write_json(record: &ResultRecord, out: &mut dyn Write) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(record).expect("serializable");
    writeln!(out, "{text}")
}

pub fn write_csv(table: &CsvTable, out: &mut dyn Write) -> std::io::Result<()> {
    match table {
        CsvTable::Survival(rows) => {
            writeln!(out, "t,survival")?;
            for (t, s) in rows {
                writeln!(out, "{t},{s}")?;
            }
        }
        CsvTable::Verify(rows) => {
            writeln!(out, "identity,point,residual")?;
            for (id, point, r) in rows {
                writeln!(out, "{id},{point},{r}")?;
            }
        }
    }
    Ok(())
}

pub fn emit(
    record: &ResultRecord,
    csv: Option<&CsvTable>,
    format: &crate::config::OutputFormat,
    path: Option<&Path>,
) -> std::io::Result<()> {
    let mut sink: Box<dyn Write> = match path {
        Some(p) => Box::new(std::fs::File::create(p)?),
        None => Box::new(std::io::stdout()),
    };
    match format {
        crate::config::OutputFormat::Json => write_json(record, &mut sink),
        crate::config::OutputFormat::Csv => match csv {
            Some(table) => write_csv(table, &mut sink),
            // Commands without a CSV flavor fall back to the JSON record.
            None => write_json(record, &mut sink),
        },
    }
}
