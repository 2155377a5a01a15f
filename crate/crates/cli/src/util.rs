//! Shared loading and parsing helpers for the subcommands.

use smint::graph::read_edge_list;
use smint::{Dag, Dataset, Error, Result};
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

pub fn load_dag(path: &Path) -> Result<Dag> {
    read_edge_list(BufReader::new(File::open(path)?))
}

/// Loads a DAG and checks that it covers exactly the dataset's columns.
pub fn load_dag_for(path: &Path, data: &Dataset) -> Result<Dag> {
    let dag = load_dag(path)?;
    if dag.p() != data.p() {
        return Err(Error::ShapeMismatch(format!(
            "DAG has {} nodes but the dataset has {} columns",
            dag.p(),
            data.p()
        )));
    }
    Ok(dag)
}

/// Order file: one column name or zero-based index per line, '#' starts a
/// comment. Every column must appear exactly once.
pub fn load_order(path: &Path, data: &Dataset) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path)?;
    let mut order = Vec::new();
    let mut seen = vec![false; data.p()];
    for (lineno, line) in text.lines().enumerate() {
        let token = line.split('#').next().unwrap_or("").trim();
        if token.is_empty() {
            continue;
        }
        let j = data.resolve_column(token)?;
        if seen[j] {
            return Err(Error::DataFormat(format!(
                "order file line {}: column '{token}' listed twice",
                lineno + 1
            )));
        }
        seen[j] = true;
        order.push(j);
    }
    if order.len() != data.p() {
        return Err(Error::DataFormat(format!(
            "order file lists {} of {} columns",
            order.len(),
            data.p()
        )));
    }
    Ok(order)
}

/// Comma-separated, strictly increasing intervention values.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let mut grid = Vec::new();
    for tok in s.split(',') {
        let tok = tok.trim();
        if tok.is_empty() {
            continue;
        }
        let v: f64 = tok
            .parse()
            .map_err(|_| Error::InvalidParam(format!("bad grid value '{tok}'")))?;
        if !v.is_finite() {
            return Err(Error::InvalidParam(format!("grid value '{tok}' is not finite")));
        }
        grid.push(v);
    }
    if grid.is_empty() {
        return Err(Error::InvalidParam("grid has no values".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParam("grid values must be strictly increasing".into()));
    }
    Ok(grid)
}

/// Comma-separated positive bandwidths; an empty string is an empty list.
pub fn parse_bandwidths(s: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for tok in s.split(',') {
        let tok = tok.trim();
        if tok.is_empty() {
            continue;
        }
        let v: f64 = tok
            .parse()
            .map_err(|_| Error::InvalidParam(format!("bad bandwidth '{tok}'")))?;
        check_bandwidth(v)?;
        out.push(v);
    }
    Ok(out)
}

/// Flag-level positivity check, so a mistyped bandwidth reads as a usage
/// error rather than a numeric failure.
pub fn check_bandwidth(v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::InvalidParam(format!("bandwidth {v} must be positive")));
    }
    Ok(())
}
