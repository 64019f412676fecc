//! Feature matrices and their plain-text file format.
//!
//! One example per line, comma-separated decimal numbers. Blank lines and
//! lines starting with `#` are skipped. An optional header line can be
//! skipped with `header = true`.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// N examples (rows) by d features (columns), all finite, N >= 2, d >= 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: Array2<f64>,
}

impl FeatureMatrix {
    pub fn new(data: Array2<f64>) -> Result<Self> {
        let (n, d) = data.dim();
        if n < 2 {
            return Err(Error::InvalidShape(format!("need at least 2 examples, got {n}")));
        }
        if d < 1 {
            return Err(Error::InvalidShape("need at least 1 feature".into()));
        }
        for ((row, col), v) in data.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFiniteInput { row, col });
            }
        }
        let data = if data.is_standard_layout() {
            data
        } else {
            data.as_standard_layout().into_owned()
        };
        Ok(Self { data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::InvalidShape(format!(
                "row {bad} has {} values, expected {d}",
                rows[bad].len()
            )));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let data = Array2::from_shape_vec((n, d), flat)
            .map_err(|e| Error::InvalidShape(e.to_string()))?;
        Self::new(data)
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn d(&self) -> usize {
        self.data.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.d();
        let flat = self.data.as_slice().expect("standard layout");
        &flat[i * d..(i + 1) * d]
    }

    /// Isotropic rescaling `c * X`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(&self.data * c)
    }

    pub fn parse_text(text: &str, header: bool) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut width: Option<(usize, usize)> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            if header && idx == 0 {
                continue;
            }
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut row = Vec::new();
            for (col, field) in line.split(',').enumerate() {
                let field = field.trim();
                let v: f64 = field.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("column {}: cannot parse {field:?} as a number", col + 1),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("column {}: non-finite value {field:?}", col + 1),
                    });
                }
                row.push(v);
            }
            match width {
                None => width = Some((row.len(), line_no)),
                Some((w, first)) if w != row.len() => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!(
                            "row has {} values but line {first} has {w}",
                            row.len()
                        ),
                    });
                }
                _ => {}
            }
            rows.push(row);
        }
        Self::from_rows(&rows)
    }

    pub fn read_path(path: impl AsRef<Path>, header: bool) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
            line: 0,
            message: format!("{}: {e}", path.display()),
        })?;
        Self::parse_text(&text, header)
    }

    /// Shortest round-tripping decimal representation of every entry.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n() {
            for (j, v) in self.row(i).iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                write!(out, "{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(matches!(
            FeatureMatrix::new(array![[1.0, 2.0]]),
            Err(Error::InvalidShape(_))
        ));
        assert!(matches!(
            FeatureMatrix::new(Array2::zeros((3, 0))),
            Err(Error::InvalidShape(_))
        ));
        assert_eq!(
            FeatureMatrix::new(array![[1.0], [f64::NAN]]),
            Err(Error::NonFiniteInput { row: 1, col: 0 })
        );
    }

    #[test]
    fn parses_comments_and_header() {
        let text = "a,b\n# comment\n1,2\n\n3.5, -4e-1\n";
        let m = FeatureMatrix::parse_text(text, true).unwrap();
        assert_eq!(m.view(), array![[1.0, 2.0], [3.5, -0.4]]);
        assert!(FeatureMatrix::parse_text(text, false).is_err());
    }

    #[test]
    fn ragged_row_names_line() {
        let err = FeatureMatrix::parse_text("1,2\n3,4\n# x\n5\n", false).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nan_in_file_is_parse_error() {
        let err = FeatureMatrix::parse_text("1,2\nNaN,4\n", false).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn text_round_trip_is_exact() {
        let m = FeatureMatrix::new(array![[0.1, 1.0 / 3.0], [-2.5e-300, 7.0]]).unwrap();
        let back = FeatureMatrix::parse_text(&m.to_text(), false).unwrap();
        assert_eq!(m, back);
    }
}
