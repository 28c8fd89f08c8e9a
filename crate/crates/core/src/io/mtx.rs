use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::error::{NmdError, Result};

/// Coordinate-list matrix as stored in a MatrixMarket file, with symmetric
/// storage already expanded.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub nrows: usize,
    pub ncols: usize,
    /// `(row, col, value)`, 0-based. Duplicates add up in [`Self::to_dense`].
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    pub fn to_dense(&self) -> Array2<f64> {
        let mut a = Array2::zeros((self.nrows, self.ncols));
        for &(i, j, v) in &self.entries {
            a[[i, j]] += v;
        }
        a
    }

    /// Nonzero entries of `a` in row-major order.
    pub fn from_dense(a: &Array2<f64>) -> Self {
        let entries = a
            .indexed_iter()
            .filter(|(_, &v)| v != 0.0)
            .map(|((i, j), &v)| (i, j, v))
            .collect();
        SparseMatrix {
            nrows: a.nrows(),
            ncols: a.ncols(),
            entries,
        }
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Clone, Copy, PartialEq)]
enum Field {
    Real,
    Integer,
    Pattern,
}

#[derive(Clone, Copy, PartialEq)]
enum Symmetry {
    General,
    Symmetric,
    Skew,
}

struct Parser {
    path: PathBuf,
}

impl Parser {
    fn err(&self, line: usize, message: impl Into<String>) -> NmdError {
        NmdError::Parse {
            path: self.path.clone(),
            line,
            message: message.into(),
        }
    }

    fn header(&self, line: &str) -> Result<(Layout, Field, Symmetry)> {
        let tokens: Vec<String> = line.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
        if tokens.len() != 5 || tokens[0] != "%%matrixmarket" {
            return Err(self.err(1, "expected `%%MatrixMarket matrix <format> <field> <symmetry>`"));
        }
        if tokens[1] != "matrix" {
            return Err(NmdError::Unsupported(format!("MatrixMarket object `{}`", tokens[1])));
        }
        let layout = match tokens[2].as_str() {
            "coordinate" => Layout::Coordinate,
            "array" => Layout::Array,
            other => return Err(self.err(1, format!("unknown format `{other}`"))),
        };
        let field = match tokens[3].as_str() {
            "real" | "double" => Field::Real,
            "integer" => Field::Integer,
            "pattern" if layout == Layout::Coordinate => Field::Pattern,
            other => return Err(NmdError::Unsupported(format!("MatrixMarket field `{other}`"))),
        };
        let symmetry = match tokens[4].as_str() {
            "general" => Symmetry::General,
            "symmetric" => Symmetry::Symmetric,
            "skew-symmetric" => Symmetry::Skew,
            other => return Err(NmdError::Unsupported(format!("MatrixMarket symmetry `{other}`"))),
        };
        Ok((layout, field, symmetry))
    }

    fn number<T: std::str::FromStr>(&self, line: usize, tok: Option<&str>, what: &str) -> Result<T> {
        let tok = tok.ok_or_else(|| self.err(line, format!("missing {what}")))?;
        tok.parse()
            .map_err(|_| self.err(line, format!("invalid {what} `{tok}`")))
    }

    fn value(&self, line: usize, tok: Option<&str>, field: Field) -> Result<f64> {
        let v = match field {
            Field::Pattern => return Ok(1.0),
            Field::Integer => self.number::<i64>(line, tok, "integer value")? as f64,
            Field::Real => self.number::<f64>(line, tok, "value")?,
        };
        if !v.is_finite() {
            return Err(self.err(line, "non-finite value"));
        }
        Ok(v)
    }
}

fn push_entry(out: &mut Vec<(usize, usize, f64)>, i: usize, j: usize, v: f64, symmetry: Symmetry) {
    out.push((i, j, v));
    if i != j {
        match symmetry {
            Symmetry::General => {}
            Symmetry::Symmetric => out.push((j, i, v)),
            Symmetry::Skew => out.push((j, i, -v)),
        }
    }
}

/// Parses MatrixMarket text. `path` is only used in error messages.
pub fn parse_matrix_market<R: BufRead>(reader: R, path: impl Into<PathBuf>) -> Result<SparseMatrix> {
    let p = Parser { path: path.into() };
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let io_err = |p: &Parser, e: std::io::Error| NmdError::io(p.path.clone(), e);

    let (_, first) = lines.next().ok_or_else(|| p.err(1, "empty file"))?;
    let (layout, field, symmetry) = p.header(&first.map_err(|e| io_err(&p, e))?)?;

    let mut data = Vec::new();
    for (no, line) in lines {
        let line = line.map_err(|e| io_err(&p, e))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        data.push((no, t.to_string()));
    }
    let mut it = data.into_iter();
    let (size_no, size_line) = it.next().ok_or_else(|| p.err(1, "missing size line"))?;
    let mut tok = size_line.split_whitespace();
    let nrows: usize = p.number(size_no, tok.next(), "row count")?;
    let ncols: usize = p.number(size_no, tok.next(), "column count")?;
    if symmetry != Symmetry::General && nrows != ncols {
        return Err(p.err(size_no, "symmetric storage requires a square matrix"));
    }

    let mut entries = Vec::new();
    match layout {
        Layout::Coordinate => {
            let nnz: usize = p.number(size_no, tok.next(), "entry count")?;
            if tok.next().is_some() {
                return Err(p.err(size_no, "trailing tokens on size line"));
            }
            let mut seen = 0;
            for (no, line) in it {
                if seen == nnz {
                    return Err(p.err(no, format!("more than the declared {nnz} entries")));
                }
                let mut tok = line.split_whitespace();
                let i: usize = p.number(no, tok.next(), "row index")?;
                let j: usize = p.number(no, tok.next(), "column index")?;
                if i == 0 || i > nrows || j == 0 || j > ncols {
                    return Err(p.err(no, format!("index ({i}, {j}) outside {nrows}×{ncols}")));
                }
                let v = p.value(no, tok.next(), field)?;
                if tok.next().is_some() {
                    return Err(p.err(no, "trailing tokens"));
                }
                if symmetry == Symmetry::Skew && i == j {
                    return Err(p.err(no, "skew-symmetric matrix with a diagonal entry"));
                }
                if symmetry != Symmetry::General && j > i {
                    return Err(p.err(no, "symmetric storage expects the lower triangle"));
                }
                push_entry(&mut entries, i - 1, j - 1, v, symmetry);
                seen += 1;
            }
            if seen != nnz {
                return Err(p.err(size_no, format!("declared {nnz} entries, found {seen}")));
            }
        }
        Layout::Array => {
            if tok.next().is_some() {
                return Err(p.err(size_no, "trailing tokens on size line"));
            }
            // column-major; symmetric storage keeps the lower triangle
            let mut slots = Vec::new();
            for j in 0..ncols {
                let start = match symmetry {
                    Symmetry::General => 0,
                    Symmetry::Symmetric => j,
                    Symmetry::Skew => j + 1,
                };
                for i in start..nrows {
                    slots.push((i, j));
                }
            }
            let mut values = it.flat_map(|(no, line)| {
                line.split_whitespace()
                    .map(|s| (no, s.to_string()))
                    .collect::<Vec<_>>()
            });
            for &(i, j) in &slots {
                let (no, tok) = values
                    .next()
                    .ok_or_else(|| p.err(size_no, format!("expected {} values", slots.len())))?;
                let v = p.value(no, Some(&tok), field)?;
                if v != 0.0 {
                    push_entry(&mut entries, i, j, v, symmetry);
                }
            }
            if let Some((no, _)) = values.next() {
                return Err(p.err(no, format!("more than the expected {} values", slots.len())));
            }
        }
    }
    Ok(SparseMatrix {
        nrows,
        ncols,
        entries,
    })
}

pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<SparseMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| NmdError::io(path, e))?;
    parse_matrix_market(BufReader::new(file), path)
}

/// Writes `coordinate real general` with shortest round-trip values.
pub fn write_matrix_market(path: impl AsRef<Path>, a: &SparseMatrix) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| NmdError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let res = (|| -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", a.nrows, a.ncols, a.entries.len())?;
        for &(i, j, v) in &a.entries {
            writeln!(w, "{} {} {:?}", i + 1, j + 1, v)?;
        }
        w.flush()
    })();
    res.map_err(|e| NmdError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn parse(s: &str) -> Result<SparseMatrix> {
        parse_matrix_market(s.as_bytes(), "test.mtx")
    }

    fn line_of(e: NmdError) -> usize {
        match e {
            NmdError::Parse { line, .. } => line,
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn coordinate_diagonal() {
        let a = parse("%%MatrixMarket matrix coordinate real general\n% note\n2 2 2\n1 1 1.0\n2 2 2.0\n").unwrap();
        assert_eq!(a.to_dense(), array![[1.0, 0.0], [0.0, 2.0]]);
    }

    #[test]
    fn symmetric_expansion() {
        let a = parse("%%MatrixMarket matrix coordinate real symmetric\n3 3 3\n1 1 4\n2 1 -1\n3 2 0.5\n").unwrap();
        assert_eq!(
            a.to_dense(),
            array![[4.0, -1.0, 0.0], [-1.0, 0.0, 0.5], [0.0, 0.5, 0.0]]
        );
        let s = parse("%%MatrixMarket matrix coordinate integer skew-symmetric\n2 2 1\n2 1 3\n").unwrap();
        assert_eq!(s.to_dense(), array![[0.0, -3.0], [3.0, 0.0]]);
    }

    #[test]
    fn pattern_and_array() {
        let a = parse("%%MatrixMarket matrix coordinate pattern general\n2 3 2\n1 3\n2 1\n").unwrap();
        assert_eq!(a.to_dense(), array![[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]);
        let b = parse("%%MatrixMarket matrix array real general\n2 2\n1\n3\n2 4\n").unwrap();
        assert_eq!(b.to_dense(), array![[1.0, 2.0], [3.0, 4.0]]);
        let c = parse("%%MatrixMarket matrix array real symmetric\n2 2\n1\n5\n2\n").unwrap();
        assert_eq!(c.to_dense(), array![[1.0, 5.0], [5.0, 2.0]]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n3 1 2.0\n").unwrap_err();
        assert_eq!(line_of(e), 4);
        let e = parse("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 x\n").unwrap_err();
        assert_eq!(line_of(e), 3);
        let e = parse("%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1.0\n").unwrap_err();
        assert_eq!(line_of(e), 2);
        let e = parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 1.0\n2 2 1.0\n").unwrap_err();
        assert_eq!(line_of(e), 4);
        assert!(matches!(
            parse("%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n"),
            Err(NmdError::Unsupported(_))
        ));
        assert!(parse("").is_err());
        assert!(parse("1 1 1\n").is_err());
    }

    #[test]
    fn round_trip_is_bitwise() {
        let a = array![[0.1, 0.0, 1e-300], [std::f64::consts::PI, -2.5e17, 0.0]];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.mtx");
        write_matrix_market(&path, &SparseMatrix::from_dense(&a)).unwrap();
        let b = load_matrix_market(&path).unwrap().to_dense();
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}
