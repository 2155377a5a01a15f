//! Tabular samples: named real-valued columns of equal length.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// An n-by-p table stored column-major. All entries are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    n: usize,
}

impl Dataset {
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        if columns.is_empty() {
            return Err(Error::DataFormat("dataset needs at least one column".into()));
        }
        let n = columns[0].len();
        if n == 0 {
            return Err(Error::DataFormat("dataset needs at least one row".into()));
        }
        for (j, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "column '{}' has {} rows, expected {n}",
                    names[j],
                    col.len()
                )));
            }
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("column '{}', row {i}", names[j])));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for name in &names {
            if !seen.insert(name.clone()) {
                return Err(Error::DataFormat(format!("duplicate column name '{name}'")));
            }
        }
        Ok(Dataset { names, columns, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, j: usize) -> &str {
        &self.names[j]
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    /// Resolves a column reference: an exact name match wins; otherwise the
    /// key is parsed as a zero-based index. When a numeric key also names a
    /// column, the name wins and a warning is logged.
    pub fn resolve_column(&self, key: &str) -> Result<usize> {
        let by_name = self.names.iter().position(|n| n == key);
        if let Some(j) = by_name {
            if key.parse::<usize>().is_ok() {
                log::warn!("column key '{key}' is both a name and an index; using the name");
            }
            return Ok(j);
        }
        if let Ok(j) = key.parse::<usize>() {
            if j < self.p() {
                return Ok(j);
            }
            return Err(Error::UnknownColumn(format!(
                "{key} (index out of range for {} columns)",
                self.p()
            )));
        }
        Err(Error::UnknownColumn(key.to_string()))
    }

    /// The rows at `idx`, in the given order.
    pub fn subset_rows(&self, idx: &[usize]) -> Result<Dataset> {
        for &i in idx {
            if i >= self.n {
                return Err(Error::ShapeMismatch(format!("row {i} out of range for {}", self.n)));
            }
        }
        if idx.is_empty() {
            return Err(Error::DataFormat("row subset is empty".into()));
        }
        let columns = self
            .columns
            .iter()
            .map(|col| idx.iter().map(|&i| col[i]).collect())
            .collect();
        Ok(Dataset { names: self.names.clone(), columns, n: idx.len() })
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let names: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
        if names.is_empty() {
            return Err(Error::DataFormat("CSV has no header".into()));
        }
        let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
        for (row_idx, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != names.len() {
                return Err(Error::DataFormat(format!(
                    "row {} has {} fields, expected {}",
                    row_idx + 1,
                    record.len(),
                    names.len()
                )));
            }
            for (j, field) in record.iter().enumerate() {
                let value: f64 = field.trim().parse().map_err(|_| {
                    Error::DataFormat(format!(
                        "row {}, column '{}': invalid real '{}'",
                        row_idx + 1,
                        names[j],
                        field
                    ))
                })?;
                columns[j].push(value);
            }
        }
        Dataset::new(names, columns)
    }

    pub fn read_csv_path<P: AsRef<Path>>(path: P) -> Result<Dataset> {
        let file = std::fs::File::open(path)?;
        Dataset::read_csv(std::io::BufReader::new(file))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(&self.names)?;
        let mut row: Vec<String> = vec![String::new(); self.p()];
        for i in 0..self.n {
            for (j, col) in self.columns.iter().enumerate() {
                row[j] = format_real(col[i]);
            }
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_csv_path<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Shortest decimal representation that round-trips, with an explicit
/// fractional part so the field always reads as a real.
pub fn format_real(v: f64) -> String {
    let s = format!("{v}");
    if s.contains(['.', 'e', 'E']) || s == "inf" || s == "-inf" || s == "NaN" {
        s
    } else {
        format!("{s}.0")
    }
}

/// Mean of a slice.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation (divisor n).
pub fn std_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Empirical quantile by linear interpolation between order statistics at
/// position `1 + (n-1) q` (the common "type 7" rule).
pub fn quantile(xs: &[f64], q: f64) -> crate::error::Result<f64> {
    if xs.is_empty() {
        return Err(crate::error::Error::InvalidParam("quantile of an empty sample".into()));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(crate::error::Error::InvalidParam(format!("quantile level {q} outside [0, 1]")));
    }
    let mut s = xs.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = (s.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if lo + 1 < s.len() {
        Ok(s[lo] + frac * (s[lo + 1] - s[lo]))
    } else {
        Ok(s[lo])
    }
}

/// The nine deciles of a sample, nondecreasing.
pub fn deciles(xs: &[f64]) -> crate::error::Result<Vec<f64>> {
    if xs.len() < 10 {
        return Err(crate::error::Error::InvalidParam(format!(
            "deciles need at least 10 points, got {}",
            xs.len()
        )));
    }
    (1..=9).map(|i| quantile(xs, i as f64 / 10.0)).collect()
}
