//! Versioned JSON documents and CSV summaries.
//!
//! Every document is wrapped as `{"schema_version": 1, "kind": ..., "data": ...}`.
//! Floats are written in the shortest form that parses back to the same
//! bits, so roundtrips are exact. Non-finite floats have no JSON encoding
//! and are written as `null`.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process::MarkedPoint;
use crate::stats::TestReport;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct EnvelopeOut<'a, T> {
    schema_version: u32,
    kind: &'a str,
    data: &'a T,
}

#[derive(Deserialize)]
struct Header {
    schema_version: u32,
    kind: String,
}

#[derive(Deserialize)]
struct EnvelopeIn<T> {
    data: T,
}

/// Kinds of documents.
pub mod kind {
    pub const POINTS: &str = "points";
    pub const DIAGRAM: &str = "diagram";
    pub const REPORT: &str = "report";
    pub const REPORTS: &str = "reports";
    pub const CONFIG: &str = "config";
}

/// Marked points of one simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    pub dim: usize,
    pub points: Vec<MarkedPoint>,
}

pub fn to_json<T: Serialize>(kind: &str, value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(&EnvelopeOut { schema_version: SCHEMA_VERSION, kind, data: value })?)
}

pub fn from_json<T: DeserializeOwned>(kind: &str, text: &str) -> Result<T> {
    let head: Header = serde_json::from_str(text)?;
    if head.schema_version != SCHEMA_VERSION {
        return Err(Error::SchemaVersion { expected: SCHEMA_VERSION, found: head.schema_version });
    }
    if head.kind != kind {
        return Err(Error::Domain(format!("expected a '{kind}' document, found '{}'", head.kind)));
    }
    let env: EnvelopeIn<T> = serde_json::from_str(text)?;
    Ok(env.data)
}

pub fn write_json<T: Serialize>(path: &Path, kind: &str, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, to_json(kind, value)? + "\n")?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<T> {
    from_json(kind, &fs::read_to_string(path)?)
}

/// Column order of report CSV files.
pub const REPORT_COLUMNS: [&str; 9] =
    ["statistic", "estimate", "standard_error", "target", "z_score", "p_value", "pass", "replicates", "sample_size"];

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:?}")).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// CSV with a header row and one row per report.
pub fn reports_csv(reports: &[TestReport]) -> String {
    let mut out = REPORT_COLUMNS.join(",") + "\n";
    for r in reports {
        let row = [
            csv_field(&r.statistic),
            format!("{:?}", r.estimate),
            opt(r.standard_error),
            opt(r.target),
            opt(r.z_score),
            opt(r.p_value),
            r.pass.to_string(),
            r.replicates.to_string(),
            r.sample_size.to_string(),
        ];
        out += &row.join(",");
        out.push('\n');
    }
    out
}

/// CSV of marked points: `x0,...,x{ℓ-1},h`.
pub fn points_csv(points: &[MarkedPoint]) -> String {
    let dim = points.first().map_or(0, |p| p.dim());
    let mut out: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    out.push("h".into());
    let mut s = out.join(",") + "\n";
    for p in points {
        let mut row: Vec<String> = p.v.iter().map(|x| format!("{x:?}")).collect();
        row.push(format!("{:?}", p.h));
        s += &row.join(",");
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laguerre::{build_diagram, LaguerreDiagram};
    use crate::process::SimulationWindow;
    use crate::stats::Thresholds;

    #[test]
    fn point_roundtrip() {
        let p = MarkedPoint::new(vec![1.0, 2.0], 9.0);
        let back: MarkedPoint = from_json(kind::POINTS, &to_json(kind::POINTS, &p).unwrap()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn diagram_roundtrip_is_exact() {
        let pts: Vec<MarkedPoint> = (0..30)
            .map(|i| {
                let t = i as f64 * 0.7371;
                MarkedPoint::new(vec![2.0 * t.sin(), 1.7 * (1.3 * t).cos()], (0.1 * t).sin().abs() / 3.0)
            })
            .collect();
        let w = SimulationWindow::new(1.5, 1.0, 10.0, 3).unwrap();
        let d = build_diagram(&pts, &w).unwrap();
        let back: LaguerreDiagram = from_json(kind::DIAGRAM, &to_json(kind::DIAGRAM, &d).unwrap()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn report_roundtrip_preserves_bits() {
        let r = TestReport::distribution("ks", 0.012345678901234567, 0.1 + 0.2, 4, 5000, Thresholds::default());
        let back: TestReport = from_json(kind::REPORT, &to_json(kind::REPORT, &r).unwrap()).unwrap();
        assert_eq!(back.p_value.unwrap().to_bits(), r.p_value.unwrap().to_bits());
        assert_eq!(back, r);
    }

    #[test]
    fn version_and_kind_checked() {
        let s = to_json(kind::POINTS, &1.0f64).unwrap().replace("\"schema_version\": 1", "\"schema_version\": 7");
        assert!(matches!(from_json::<f64>(kind::POINTS, &s), Err(Error::SchemaVersion { expected: 1, found: 7 })));
        let s = to_json(kind::POINTS, &1.0f64).unwrap();
        assert!(matches!(from_json::<f64>(kind::DIAGRAM, &s), Err(Error::Domain(_))));
    }

    #[test]
    fn csv_columns() {
        let r = TestReport::mean("mean, area", 1.0, 0.1, 1.05, 3, 30, Thresholds::default());
        let csv = reports_csv(&[r]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], REPORT_COLUMNS.join(","));
        assert!(lines[1].starts_with("\"mean, area\",1.0,0.1,1.05,"));
        assert_eq!(points_csv(&[MarkedPoint::new(vec![0.5], 2.0)]), "x0,h\n0.5,2.0\n");
    }
}
