use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::error::{NmdError, Result};

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> NmdError {
    NmdError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Parses headerless numeric CSV. `path` is only used in error messages.
pub fn parse_dense_csv<R: Read>(reader: R, path: impl Into<PathBuf>) -> Result<Array2<f64>> {
    let path = path.into();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut values = Vec::new();
    let mut ncols = None;
    let mut nrows = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(&path, line, e.to_string())
        })?;
        let line = rec.position().map_or(nrows + 1, |p| p.line() as usize);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        match ncols {
            None => ncols = Some(rec.len()),
            Some(n) if n != rec.len() => {
                return Err(parse_err(&path, line, format!("expected {n} columns, found {}", rec.len())));
            }
            _ => {}
        }
        for (j, cell) in rec.iter().enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(&path, line, format!("column {}: not a number: `{cell}`", j + 1)))?;
            values.push(v);
        }
        nrows += 1;
    }
    let ncols = ncols.ok_or_else(|| parse_err(&path, 1, "empty file"))?;
    Array2::from_shape_vec((nrows, ncols), values).map_err(|e| NmdError::invalid(e.to_string()))
}

pub fn load_dense_csv(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| NmdError::io(path, e))?;
    parse_dense_csv(file, path)
}

/// Writes one row per line with shortest round-trip formatting.
pub fn write_dense_csv(path: impl AsRef<Path>, a: &Array2<f64>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| NmdError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let res = (|| -> std::io::Result<()> {
        for row in a.rows() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        w.flush()
    })();
    res.map_err(|e| NmdError::io(path, e))
}
