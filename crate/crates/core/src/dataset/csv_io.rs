use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{canonical_number, Cell, Column, ColumnKind, Schema, Table};
use crate::error::{Error, Result};

/// CSV dialect shared by input and output.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CsvOptions {
    pub delimiter: char,
    /// Cell text (after trimming) that denotes a missing value.
    pub missing_marker: String,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            delimiter: ',',
            missing_marker: String::new(),
        }
    }
}

impl CsvOptions {
    fn delimiter_byte(&self) -> Result<u8> {
        u8::try_from(self.delimiter)
            .ok()
            .filter(u8::is_ascii)
            .ok_or_else(|| Error::InvalidConfig(format!("delimiter {:?} is not ASCII", self.delimiter)))
    }
}

fn parse_number(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|x| x.is_finite())
}

/// Reads a headed CSV file. Without a hint, a column is numeric iff every
/// non-missing cell parses as a finite number.
pub fn load_csv(path: &Path, schema_hint: Option<&Schema>, opts: &CsvOptions) -> Result<Table> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter_byte()?)
        .has_headers(true)
        .flexible(true)
        .from_reader(file);

    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut raw: Vec<Vec<Option<String>>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != header.len() {
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            return Err(Error::RaggedRow {
                line,
                expected: header.len(),
                found: record.len(),
            });
        }
        raw.push(
            record
                .iter()
                .map(|cell| {
                    let cell = cell.trim();
                    (cell != opts.missing_marker).then(|| cell.to_string())
                })
                .collect(),
        );
    }
    if raw.is_empty() {
        return Err(Error::EmptyTable);
    }

    let schema = match schema_hint {
        Some(hint) => {
            let names: Vec<&str> = hint.names().collect();
            if names != header {
                return Err(Error::SchemaMismatch(format!(
                    "hint columns [{}] do not match header [{}]",
                    names.join(","),
                    header.join(",")
                )));
            }
            hint.clone()
        }
        None => {
            let columns = header
                .iter()
                .enumerate()
                .map(|(c, name)| {
                    let numeric = raw
                        .iter()
                        .filter_map(|r| r[c].as_deref())
                        .all(|v| parse_number(v).is_some());
                    Column {
                        name: name.clone(),
                        kind: if numeric {
                            ColumnKind::Numeric
                        } else {
                            ColumnKind::Categorical
                        },
                    }
                })
                .collect();
            Schema::new(columns)?
        }
    };

    let mut rows = Vec::with_capacity(raw.len());
    for (r, cells) in raw.into_iter().enumerate() {
        let row = cells
            .into_iter()
            .zip(schema.columns())
            .map(|(cell, col)| match (cell, col.kind) {
                (None, _) => Ok(Cell::Missing),
                (Some(v), ColumnKind::Numeric) => parse_number(&v).map(Cell::Num).ok_or(Error::NotNumeric {
                    column: col.name.clone(),
                    row: r,
                    value: v,
                }),
                (Some(v), ColumnKind::Categorical) => Ok(Cell::Cat(v)),
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Table::new(schema, rows)
}

/// Writes a table in canonical form; missing cells use the configured marker.
pub fn write_csv(table: &Table, path: &Path, opts: &CsvOptions) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut writer = csv::WriterBuilder::new()
        .delimiter(opts.delimiter_byte()?)
        .from_writer(file);
    writer.write_record(table.schema().names())?;
    for row in table.rows() {
        writer.write_record(row.iter().map(|c| match c {
            Cell::Missing => opts.missing_marker.clone(),
            Cell::Num(x) => canonical_number(*x),
            Cell::Cat(s) => s.clone(),
        }))?;
    }
    writer.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(())
}
