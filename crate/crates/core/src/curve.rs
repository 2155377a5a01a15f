//! Intervention-effect curves: estimates of `E[t(Y) | do(X = x)]` on a grid.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::format_real;
use crate::error::{Error, Result};

/// Provenance attached to a curve. Serialized as one JSON object per curve
/// in a `.meta.jsonl` sidecar.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub method: String,
    pub x: String,
    pub y: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub adjustment: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<String>,
    /// Boosting iterations actually applied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<u32>,
    /// Which stopping rule ended the boosting loop.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_rule: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Monte-Carlo replications behind each point, for simulation methods.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_reps: Option<usize>,
}

/// A curve on a strictly increasing grid of intervention values.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectCurve {
    grid: Vec<f64>,
    values: Vec<f64>,
    pub meta: CurveMeta,
}

impl EffectCurve {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, meta: CurveMeta) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} grid points for {} values",
                grid.len(),
                values.len()
            )));
        }
        if grid.is_empty() {
            return Err(Error::InvalidParam("curve needs at least one grid point".into()));
        }
        for v in grid.iter().chain(values.iter()) {
            if !v.is_finite() {
                return Err(Error::NonFinite("curve grid or values".into()));
            }
        }
        for w in grid.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidParam(format!(
                    "grid must be strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        Ok(EffectCurve { grid, values, meta })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Writes `x_value,estimate` rows.
    pub fn write_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "x_value,estimate")?;
        for (x, v) in self.grid.iter().zip(&self.values) {
            writeln!(writer, "{},{}", format_real(*x), format_real(*v))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(reader: R) -> Result<EffectCurve> {
        let mut grid = Vec::new();
        let mut values = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if i == 0 {
                if line != "x_value,estimate" {
                    return Err(Error::DataFormat(format!(
                        "expected header 'x_value,estimate', found '{line}'"
                    )));
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let (a, b) = line
                .split_once(',')
                .ok_or_else(|| Error::DataFormat(format!("line {}: missing comma", i + 1)))?;
            let parse = |t: &str| -> Result<f64> {
                t.trim()
                    .parse()
                    .map_err(|_| Error::DataFormat(format!("line {}: invalid real '{t}'", i + 1)))
            };
            grid.push(parse(a)?);
            values.push(parse(b)?);
        }
        EffectCurve::new(grid, values, CurveMeta::default())
    }

    pub fn write_meta_jsonl<W: Write>(&self, mut writer: W) -> Result<()> {
        let line = serde_json::to_string(&self.meta)
            .map_err(|e| Error::DataFormat(format!("metadata serialization: {e}")))?;
        writeln!(writer, "{line}")?;
        Ok(())
    }

    /// Writes `<path>` as CSV and `<path minus .csv>.meta.jsonl` alongside.
    pub fn write_with_sidecar<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))?;
        let meta = std::fs::File::create(sidecar_path(path))?;
        self.write_meta_jsonl(std::io::BufWriter::new(meta))?;
        Ok(())
    }
}

/// `curve.csv -> curve.meta.jsonl`; extensionless paths gain the suffix.
pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    path.with_extension("meta.jsonl")
}

/// Pointwise variance curve `Var(Y | do) = E[Y^2 | do] - E[Y | do]^2` from a
/// mean curve and a second-moment curve on the same grid.
pub fn variance_curve(mean: &EffectCurve, second_moment: &EffectCurve) -> Result<EffectCurve> {
    if mean.grid != second_moment.grid {
        return Err(Error::ShapeMismatch("variance curve needs matching grids".into()));
    }
    let values: Vec<f64> = mean
        .values
        .iter()
        .zip(&second_moment.values)
        .map(|(m, m2)| m2 - m * m)
        .collect();
    let mut meta = mean.meta.clone();
    meta.transform = Some("variance".into());
    EffectCurve::new(mean.grid.clone(), values, meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> CurveMeta {
        CurveMeta { method: "test".into(), x: "X1".into(), y: "Y".into(), ..Default::default() }
    }

    #[test]
    fn grid_must_strictly_increase() {
        assert!(EffectCurve::new(vec![0.0, 0.0], vec![1.0, 2.0], meta()).is_err());
        assert!(EffectCurve::new(vec![1.0, 0.0], vec![1.0, 2.0], meta()).is_err());
        assert!(EffectCurve::new(vec![0.0], vec![1.0, 2.0], meta()).is_err());
        assert!(EffectCurve::new(vec![], vec![], meta()).is_err());
        assert!(EffectCurve::new(vec![0.0, f64::NAN], vec![1.0, 2.0], meta()).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let c = EffectCurve::new(vec![-1.0, 0.5, 2.0], vec![0.25, 1.0, -3.5], meta()).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x_value,estimate\n"));
        let back = EffectCurve::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.grid(), c.grid());
        assert_eq!(back.values(), c.values());
    }

    #[test]
    fn metadata_serializes_compactly() {
        let mut m = meta();
        m.iterations = Some(4);
        m.stop_rule = Some("relative-difference".into());
        let c = EffectCurve::new(vec![0.0], vec![1.0], m).unwrap();
        let mut buf = Vec::new();
        c.write_meta_jsonl(&mut buf).unwrap();
        let line = String::from_utf8(buf).unwrap();
        assert_eq!(line.lines().count(), 1);
        assert!(line.contains("\"iterations\":4"));
        assert!(!line.contains("mc_reps"), "absent fields are omitted: {line}");
        let parsed: CurveMeta = serde_json::from_str(line.trim()).unwrap();
        assert_eq!(parsed, c.meta);
    }

    #[test]
    fn variance_combines_moments() {
        let m = EffectCurve::new(vec![0.0, 1.0], vec![1.0, 2.0], meta()).unwrap();
        let m2 = EffectCurve::new(vec![0.0, 1.0], vec![2.0, 5.0], meta()).unwrap();
        let v = variance_curve(&m, &m2).unwrap();
        assert_eq!(v.values(), &[1.0, 1.0]);
        let other = EffectCurve::new(vec![0.0, 2.0], vec![2.0, 5.0], meta()).unwrap();
        assert!(variance_curve(&m, &other).is_err());
    }

    #[test]
    fn sidecar_path_replaces_extension() {
        assert_eq!(
            sidecar_path(Path::new("out/curve.csv")),
            Path::new("out/curve.meta.jsonl")
        );
    }
}
