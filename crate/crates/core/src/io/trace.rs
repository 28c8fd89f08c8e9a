use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use sha2::{Digest, Sha256};

use crate::error::{NmdError, Result};
use crate::solvers::TraceRecord;

pub const TRACE_HEADER: &str = "iter,wall_time,objective,rel_error,bregman_step,lyapunov";

/// Ordered `key=value` preamble of a trace file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceMeta {
    pub entries: Vec<(String, String)>,
}

impl TraceMeta {
    /// The required keys: solver, case, seed, lambda, beta, dataset_sha256.
    pub fn new(solver: &str, case: &str, seed: u64, lambda: f64, beta: f64, dataset_sha256: &str) -> Self {
        TraceMeta::default()
            .with("solver", solver)
            .with("case", case)
            .with("seed", seed)
            .with("lambda", format!("{lambda:?}"))
            .with("beta", format!("{beta:?}"))
            .with("dataset_sha256", dataset_sha256)
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceFile {
    pub meta: TraceMeta,
    pub records: Vec<TraceRecord>,
}

pub fn write_trace(path: impl AsRef<Path>, trace: &[TraceRecord], meta: &TraceMeta) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| NmdError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let res = (|| -> std::io::Result<()> {
        for (k, v) in &meta.entries {
            writeln!(w, "# {k}={v}")?;
        }
        writeln!(w, "{TRACE_HEADER}")?;
        for r in trace {
            writeln!(
                w,
                "{},{:?},{:?},{:?},{:?},{:?}",
                r.iter, r.wall_time, r.objective, r.rel_error, r.bregman_step, r.lyapunov
            )?;
        }
        w.flush()
    })();
    res.map_err(|e| NmdError::io(path, e))
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<TraceFile> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| NmdError::io(path, e))?;
    let err = |line: usize, message: String| NmdError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut meta = TraceMeta::default();
    let mut records = Vec::new();
    let mut header_seen = false;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let no = i + 1;
        let line = line.map_err(|e| NmdError::io(path, e))?;
        if let Some(rest) = line.strip_prefix('#') {
            let (k, v) = rest
                .trim_start()
                .split_once('=')
                .ok_or_else(|| err(no, "metadata line without `=`".into()))?;
            meta.entries.push((k.to_string(), v.to_string()));
            continue;
        }
        if !header_seen {
            if line.trim() != TRACE_HEADER {
                return Err(err(no, format!("expected header `{TRACE_HEADER}`")));
            }
            header_seen = true;
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 6 {
            return Err(err(no, format!("expected 6 columns, found {}", cells.len())));
        }
        let f = |j: usize| -> Result<f64> {
            cells[j]
                .trim()
                .parse()
                .map_err(|_| err(no, format!("bad number `{}`", cells[j])))
        };
        records.push(TraceRecord {
            iter: cells[0]
                .trim()
                .parse()
                .map_err(|_| err(no, format!("bad iteration `{}`", cells[0])))?,
            wall_time: f(1)?,
            objective: f(2)?,
            rel_error: f(3)?,
            bregman_step: f(4)?,
            lyapunov: f(5)?,
        });
    }
    if !header_seen {
        return Err(err(1, "missing header".into()));
    }
    Ok(TraceFile { meta, records })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| NmdError::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Digest of the shape and little-endian values of a matrix, for data that
/// did not come from a file.
pub fn sha256_matrix(a: &Array2<f64>) -> String {
    let mut h = Sha256::new();
    h.update((a.nrows() as u64).to_le_bytes());
    h.update((a.ncols() as u64).to_le_bytes());
    for v in a.iter() {
        h.update(v.to_le_bytes());
    }
    hex::encode(h.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(i: usize) -> TraceRecord {
        TraceRecord {
            iter: i,
            wall_time: 0.001 * i as f64,
            objective: 1.0 / (i as f64 + 3.0),
            rel_error: 1e-7 / i as f64,
            bregman_step: f64::EPSILON * i as f64,
            lyapunov: 2.0f64.sqrt(),
        }
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let meta = TraceMeta::new("aapb", "l1l1", 42, 1.0, 0.6, "abc").with("phi_star", "running_min");
        let trace: Vec<_> = (1..=5).map(rec).collect();
        write_trace(&p, &trace, &meta).unwrap();
        let back = read_trace(&p).unwrap();
        assert_eq!(back.records, trace);
        assert_eq!(back.meta, meta);
        assert_eq!(back.meta.get("solver"), Some("aapb"));
        assert_eq!(back.meta.get("seed"), Some("42"));
    }

    #[test]
    fn empty_trace_has_header_and_metadata() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        write_trace(&p, &[], &TraceMeta::new("ppalm", "none", 7, 1.0, 0.0, "x")).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 7);
        assert!(text.contains("# solver=ppalm\n"));
        assert!(text.ends_with(&format!("{TRACE_HEADER}\n")));
        assert!(read_trace(&p).unwrap().records.is_empty());
    }

    #[test]
    fn digests() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        let a = Array2::from_elem((2, 2), 1.0);
        assert_eq!(sha256_matrix(&a), sha256_matrix(&a.clone()));
        assert_ne!(sha256_matrix(&a), sha256_matrix(&Array2::from_elem((1, 4), 1.0)));
    }
}
