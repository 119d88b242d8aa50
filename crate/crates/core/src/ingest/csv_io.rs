use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::RawTable;

/// Header names that identify the id and target columns of a CSV file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CsvSchema {
    pub mileage: String,
    pub meters: String,
    pub target: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            mileage: "mileage".into(),
            meters: "meters".into(),
            target: "left_height".into(),
        }
    }
}

/// Parse a comma-separated numeric table with a mandatory header row.
///
/// Parse errors report 1-based data-row and column positions (the header is
/// not counted).
pub fn read_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<RawTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::Format(format!("{}: missing header row", path.display())));
    }
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("{}: no column named {name:?}", path.display())))
    };
    let id_columns = [find(&schema.mileage)?, find(&schema.meters)?];
    let target = find(&schema.target)?;

    let width = header.len();
    let mut data = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        if record.len() != width {
            return Err(Error::Format(format!(
                "{}: row {} has {} fields, header has {width}",
                path.display(),
                i + 1,
                record.len()
            )));
        }
        for (j, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| Error::Parse {
                row: i + 1,
                column: j + 1,
                message: format!("{cell:?} is not a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    row: i + 1,
                    column: j + 1,
                    message: format!("{cell:?} is not finite"),
                });
            }
            data.push(value);
        }
    }
    RawTable::from_flat(header, data, id_columns, target)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Format(format!("{}: {other:?}", path.display())),
    }
}

/// Write a table as CSV. Values use the shortest representation that parses
/// back to the identical `f64`.
pub fn write_csv(table: &RawTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(out, "{}", table.column_names().join(",")).map_err(io)?;
    let mut line = String::new();
    for row in table.rows() {
        line.clear();
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&v.to_string());
        }
        line.push('\n');
        out.write_all(line.as_bytes()).map_err(io)?;
    }
    out.flush().map_err(io)
}
