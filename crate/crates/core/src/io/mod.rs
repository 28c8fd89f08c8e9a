//! Matrix loaders and writers, synthetic generators and trace files.

mod dense;
mod mtx;
mod synth;
mod trace;

use std::path::Path;

use ndarray::Array2;

use crate::error::{NmdError, Result};

pub use dense::{load_dense_csv, parse_dense_csv, write_dense_csv};
pub use mtx::{load_matrix_market, parse_matrix_market, write_matrix_market, SparseMatrix};
pub use synth::{inject_noise, synth_blobs, synth_relu, BLOB_SHIFT};
pub use trace::{
    read_trace, sha256_file, sha256_hex, sha256_matrix, write_trace, TraceFile, TraceMeta, TRACE_HEADER,
};

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase()
}

/// Loads a dense matrix from `.mtx` (MatrixMarket) or `.csv`.
pub fn load_matrix(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    match extension(path).as_str() {
        "mtx" => Ok(load_matrix_market(path)?.to_dense()),
        "csv" | "txt" => load_dense_csv(path),
        other => Err(NmdError::Unsupported(format!(
            "matrix file extension `{other}` (expected .mtx or .csv)"
        ))),
    }
}

/// Writes `.mtx` as sparse coordinates, anything else as dense CSV.
pub fn write_matrix(path: impl AsRef<Path>, a: &Array2<f64>) -> Result<()> {
    let path = path.as_ref();
    if extension(path) == "mtx" {
        write_matrix_market(path, &SparseMatrix::from_dense(a))
    } else {
        write_dense_csv(path, a)
    }
}
