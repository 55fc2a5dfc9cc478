//! Matrix Market exchange: `coordinate real {symmetric,general}` for sparse
//! matrices and `array real general` for dense matrices and vectors.
//! Values are written in shortest round-trip exponent form.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use geneo_core::sparse::{Definiteness, SparseSymMatrix};
use nalgebra::{DMatrix, DVector};

use crate::error::ToolError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

/// Parsed file content before conversion.
#[derive(Debug, Clone, PartialEq)]
pub struct MtxData {
    pub rows: usize,
    pub cols: usize,
    /// Zero-based `(row, col, value)`; symmetric files are expanded.
    pub triplets: Vec<(usize, usize, f64)>,
}

impl MtxData {
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for &(i, j, v) in &self.triplets {
            m[(i, j)] += v;
        }
        m
    }
}

pub fn to_string_sparse_sym(a: &SparseSymMatrix) -> String {
    let lower: Vec<_> = a.lower_triplets().collect();
    let mut s = String::from("%%MatrixMarket matrix coordinate real symmetric\n");
    let _ = writeln!(s, "{} {} {}", a.order(), a.order(), lower.len());
    for (i, j, v) in lower {
        let _ = writeln!(s, "{} {} {:e}", i + 1, j + 1, v);
    }
    s
}

pub fn to_string_dense(m: &DMatrix<f64>) -> String {
    let mut s = String::from("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(s, "{} {}", m.nrows(), m.ncols());
    for v in m.iter() {
        let _ = writeln!(s, "{v:e}");
    }
    s
}

fn write(path: &Path, text: &str) -> Result<(), ToolError> {
    fs::write(path, text).map_err(|e| ToolError::io(path, e))
}

pub fn write_sparse_sym(path: &Path, a: &SparseSymMatrix) -> Result<(), ToolError> {
    write(path, &to_string_sparse_sym(a))
}

pub fn write_dense(path: &Path, m: &DMatrix<f64>) -> Result<(), ToolError> {
    write(path, &to_string_dense(m))
}

pub fn write_vector(path: &Path, v: &DVector<f64>) -> Result<(), ToolError> {
    write_dense(path, &DMatrix::from_column_slice(v.len(), 1, v.as_slice()))
}

pub fn parse(path: &Path, text: &str) -> Result<MtxData, ToolError> {
    let err = |line: usize, message: String| ToolError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));
    let (_, banner) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let words: Vec<String> = banner.split_whitespace().map(str::to_ascii_lowercase).collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return Err(err(1, format!("bad banner `{banner}`")));
    }
    let layout = match words[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        f => return Err(err(1, format!("unsupported format `{f}`"))),
    };
    if words[3] != "real" && words[3] != "integer" {
        return Err(err(1, format!("unsupported field `{}`", words[3])));
    }
    let symmetry = match words[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        s => return Err(err(1, format!("unsupported symmetry `{s}`"))),
    };
    let mut body = lines.filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('%'));
    let (size_line, size) = body.next().ok_or_else(|| err(2, "missing size line".into()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(|e| err(size_line, format!("bad size line: {e}")))?;
    let mut triplets = Vec::new();
    match (layout, dims.as_slice()) {
        (Layout::Coordinate, &[rows, cols, nnz]) => {
            for _ in 0..nnz {
                let (ln, l) = body.next().ok_or_else(|| err(0, format!("expected {nnz} entries")))?;
                let t: Vec<&str> = l.split_whitespace().collect();
                if t.len() != 3 {
                    return Err(err(ln, "expected `row col value`".into()));
                }
                let i: usize = t[0].parse().map_err(|_| err(ln, "bad row index".into()))?;
                let j: usize = t[1].parse().map_err(|_| err(ln, "bad column index".into()))?;
                let v: f64 = t[2].parse().map_err(|_| err(ln, "bad value".into()))?;
                if i == 0 || j == 0 || i > rows || j > cols {
                    return Err(err(ln, format!("index ({i}, {j}) outside {rows}x{cols}")));
                }
                if symmetry == Symmetry::Symmetric && j > i {
                    return Err(err(ln, "symmetric files store the lower triangle only".into()));
                }
                triplets.push((i - 1, j - 1, v));
                if symmetry == Symmetry::Symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
            }
            if let Some((ln, _)) = body.next() {
                return Err(err(ln, "entries beyond the declared count".into()));
            }
            Ok(MtxData { rows, cols, triplets })
        }
        (Layout::Array, &[rows, cols]) => {
            if symmetry == Symmetry::Symmetric {
                return Err(err(1, "symmetric array files are not supported".into()));
            }
            for j in 0..cols {
                for i in 0..rows {
                    let (ln, l) = body
                        .next()
                        .ok_or_else(|| err(0, format!("expected {} values", rows * cols)))?;
                    let v: f64 = l.trim().parse().map_err(|_| err(ln, "bad value".into()))?;
                    if v != 0.0 {
                        triplets.push((i, j, v));
                    }
                }
            }
            if let Some((ln, _)) = body.next() {
                return Err(err(ln, "values beyond the declared size".into()));
            }
            Ok(MtxData { rows, cols, triplets })
        }
        _ => Err(err(size_line, "size line does not match the format".into())),
    }
}

pub fn read(path: &Path) -> Result<MtxData, ToolError> {
    let text = fs::read_to_string(path).map_err(|e| ToolError::io(path, e))?;
    parse(path, &text)
}

pub fn read_sparse_sym(path: &Path, definiteness: Definiteness) -> Result<SparseSymMatrix, ToolError> {
    let data = read(path)?;
    if data.rows != data.cols {
        return Err(ToolError::Parse {
            path: path.to_path_buf(),
            line: 2,
            message: format!("matrix is {}x{}, not square", data.rows, data.cols),
        });
    }
    SparseSymMatrix::from_triplets(data.rows, &data.triplets, definiteness)
        .map_err(ToolError::numerical(format!("reading {}", path.display())))
}

pub fn read_dense(path: &Path) -> Result<DMatrix<f64>, ToolError> {
    Ok(read(path)?.to_dense())
}

pub fn read_vector(path: &Path) -> Result<DVector<f64>, ToolError> {
    let m = read_dense(path)?;
    if m.ncols() != 1 {
        return Err(ToolError::Parse {
            path: path.to_path_buf(),
            line: 2,
            message: format!("expected one column, found {}", m.ncols()),
        });
    }
    Ok(m.column(0).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("test.mtx")
    }

    #[test]
    fn sparse_round_trip_is_exact() {
        let dense = DMatrix::from_row_slice(3, 3, &[4.0, -1.0 / 3.0, 0.0, -1.0 / 3.0, 4.0, 1e-300, 0.0, 1e-300, 2.5]);
        let a = SparseSymMatrix::from_dense(&dense, Definiteness::Spd).unwrap();
        let text = to_string_sparse_sym(&a);
        assert!(text.starts_with("%%MatrixMarket matrix coordinate real symmetric\n3 3 5\n"));
        let back = parse(p(), &text).unwrap();
        assert_eq!(back.to_dense(), dense);
    }

    #[test]
    fn dense_round_trip_is_column_major() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.5, -6.0]);
        let text = to_string_dense(&m);
        assert_eq!(text, "%%MatrixMarket matrix array real general\n2 3\n1e0\n4e0\n2e0\n5.5e0\n3e0\n-6e0\n");
        assert_eq!(parse(p(), &text).unwrap().to_dense(), m);
    }

    #[test]
    fn comments_and_general_files_are_read() {
        let text = "%%MatrixMarket matrix coordinate real general\n% comment\n\n2 2 3\n1 1 2\n2 1 -1\n1 2 -1\n";
        let d = parse(p(), text).unwrap().to_dense();
        assert_eq!(d, DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 0.0]));
    }

    #[test]
    fn malformed_files_report_lines() {
        let bad = [
            ("%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1\n", 1),
            ("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n", 3),
            ("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 2 1\n", 3),
            ("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 x\n", 3),
        ];
        for (text, line) in bad {
            match parse(p(), text) {
                Err(ToolError::Parse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{other:?}"),
            }
        }
        assert!(parse(p(), "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n").is_err());
    }
}
