//! Observational data matrix and its CSV form.

use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};

/// n x p observations stored column-major, with unique variable names.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleMatrix {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl SampleMatrix {
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::Dimension(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        if columns.is_empty() {
            return Err(Error::Input("no columns".into()));
        }
        let n = columns[0].len();
        if n == 0 {
            return Err(Error::Input("no rows".into()));
        }
        for (c, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(Error::Dimension(format!(
                    "column {} has {} rows, expected {n}",
                    names[c],
                    col.len()
                )));
            }
            if let Some(r) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::Parse {
                    row: r + 1,
                    col: c + 1,
                    msg: "non-finite value".into(),
                });
            }
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name) {
                return Err(Error::Input(format!("duplicate variable name {name}")));
            }
        }
        Ok(SampleMatrix { names, columns })
    }

    pub fn n(&self) -> usize {
        self.columns[0].len()
    }

    pub fn p(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    /// Keeps the named columns, in the given order.
    pub fn select(&self, names: &[&str]) -> Result<Self> {
        let mut cols = Vec::with_capacity(names.len());
        for name in names {
            let j = self
                .names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::Input(format!("no column named {name}")))?;
            cols.push(self.columns[j].clone());
        }
        SampleMatrix::new(names.iter().map(|s| s.to_string()).collect(), cols)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = self.names.join(",");
        out.push('\n');
        for r in 0..self.n() {
            let row: Vec<String> = self.columns.iter().map(|c| format!("{:?}", c[r])).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(text.as_bytes());
        let names: Vec<String> = reader
            .headers()
            .map_err(|e| Error::Parse {
                row: 0,
                col: 0,
                msg: e.to_string(),
            })?
            .iter()
            .map(str::to_string)
            .collect();
        let mut columns = vec![Vec::new(); names.len()];
        for (r, record) in reader.records().enumerate() {
            let row = r + 1;
            let record = record.map_err(|e| Error::Parse {
                row,
                col: 0,
                msg: e.to_string(),
            })?;
            if record.len() != names.len() {
                return Err(Error::Parse {
                    row,
                    col: record.len().min(names.len()) + 1,
                    msg: format!("expected {} fields, found {}", names.len(), record.len()),
                });
            }
            for (c, cell) in record.iter().enumerate() {
                let v: f64 = cell.parse().map_err(|_| Error::Parse {
                    row,
                    col: c + 1,
                    msg: format!("non-numeric cell {cell:?} in column {}", names[c]),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        row,
                        col: c + 1,
                        msg: format!("non-finite cell {cell:?} in column {}", names[c]),
                    });
                }
                columns[c].push(v);
            }
        }
        SampleMatrix::new(names, columns)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_identity() {
        let m = SampleMatrix::new(
            vec!["a".into(), "b".into()],
            vec![vec![0.1, -2.5e-17, 3.0], vec![1.0 / 3.0, 7.0, -0.0]],
        )
        .unwrap();
        assert_eq!(SampleMatrix::from_csv_str(&m.to_csv_string()).unwrap(), m);
    }

    #[test]
    fn nan_cell_is_named() {
        let err = SampleMatrix::from_csv_str("a,b\n1,2\n3,NaN\n").unwrap_err();
        match err {
            Error::Parse { row, col, .. } => assert_eq!((row, col), (2, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ragged_and_text_cells_rejected() {
        assert!(matches!(
            SampleMatrix::from_csv_str("a,b\n1,2\n3\n"),
            Err(Error::Parse { row: 2, .. })
        ));
        assert!(matches!(
            SampleMatrix::from_csv_str("a,b\n1,x\n"),
            Err(Error::Parse { row: 1, col: 2, .. })
        ));
    }

    #[test]
    fn duplicate_names_rejected() {
        assert!(
            SampleMatrix::new(vec!["a".into(), "a".into()], vec![vec![1.0], vec![2.0]]).is_err()
        );
    }
}
