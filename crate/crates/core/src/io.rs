//! JSON interchange for spaces and fields, and the canonical writer used for
//! every machine-readable output.

use std::io;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::space::{Metric, MetricKind, ScalarField, Space};

pub const FORMAT_VERSION: u64 = 1;
/// Rows whose sum is this close to 1 are rescaled to sum to 1 exactly.
pub const ROW_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum MetricDoc {
    Explicit { matrix: Vec<Vec<f64>> },
    GraphShortestPath,
}

#[derive(Debug, Deserialize)]
struct SpaceIn {
    version: Option<u64>,
    labels: Vec<Value>,
    metric: MetricDoc,
    kernel: Vec<Vec<f64>>,
    measure: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct SpaceOut<'a> {
    version: u64,
    labels: &'a [String],
    metric: MetricDoc,
    kernel: Vec<Vec<f64>>,
    measure: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct FieldDoc {
    values: Vec<f64>,
}

fn square(rows: Vec<Vec<f64>>, n: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Dimension(format!("{what} must be {n}x{n}")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn label_string(v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(x) => Ok(x.to_string()),
        other => Err(Error::Parse(format!("label must be a string or number, got {other}"))),
    }
}

/// Parses a space document. Only structural problems are errors here;
/// axiom violations are left for [`crate::validate_space`] to report.
pub fn read_space(text: &str) -> Result<Space> {
    let doc: SpaceIn = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    match doc.version {
        Some(FORMAT_VERSION) => {}
        Some(v) => return Err(Error::Parse(format!("unsupported space format version {v}"))),
        None => return Err(Error::Parse("space document has no version field".into())),
    }
    let n = doc.labels.len();
    let labels = doc.labels.iter().map(label_string).collect::<Result<Vec<_>>>()?;
    let mut kernel = square(doc.kernel, n, "kernel")?;
    for mut row in kernel.row_iter_mut() {
        let s: f64 = row.sum();
        if s != 1.0 && (s - 1.0).abs() <= ROW_SUM_TOL && row.iter().all(|&v| v >= 0.0) {
            row /= s;
        }
    }
    let metric = match doc.metric {
        MetricDoc::Explicit { matrix } => Metric::Explicit(square(matrix, n, "metric")?),
        MetricDoc::GraphShortestPath => Metric::GraphShortestPath,
    };
    Space::new(labels, metric, kernel, DVector::from_vec(doc.measure))
}

pub fn space_to_value(space: &Space) -> Value {
    let metric = match space.metric_kind() {
        MetricKind::Explicit => MetricDoc::Explicit {
            matrix: rows(space.metric()),
        },
        MetricKind::GraphShortestPath => MetricDoc::GraphShortestPath,
    };
    let out = SpaceOut {
        version: FORMAT_VERSION,
        labels: space.labels(),
        metric,
        kernel: rows(space.kernel()),
        measure: space.measure().iter().copied().collect(),
    };
    serde_json::to_value(out).expect("space documents are always representable")
}

pub fn write_space(space: &Space) -> String {
    to_canonical_json(&space_to_value(space))
}

pub fn read_field(text: &str) -> Result<ScalarField> {
    let doc: FieldDoc = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    ScalarField::new(doc.values)
}

pub fn write_field(f: &ScalarField) -> String {
    to_canonical_json(&FieldDoc {
        values: f.as_slice().to_vec(),
    })
}

/// Compact JSON with floats as `d.dddddddddddddddde±x` (17 significant
/// digits), non-finite floats as `null`, and object keys sorted.
struct Canonical;

impl Formatter for Canonical {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        let value = if value == 0.0 { 0.0 } else { value };
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }
}

pub fn to_canonical_json<T: Serialize + ?Sized>(value: &T) -> String {
    let tree = serde_json::to_value(value).expect("serializable to a JSON tree");
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Canonical);
    tree.serialize(&mut ser).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::space::{validate_space, Axiom};

    #[test]
    fn space_round_trip() {
        for space in [fixtures::p3(), fixtures::two_block(0.5), fixtures::cycle(5)] {
            let text = write_space(&space);
            let back = read_space(&text).unwrap();
            assert_eq!(back, space);
            assert_eq!(write_space(&back), text);
        }
    }

    #[test]
    fn graph_metric_is_recomputed() {
        let text = r#"{"version":1,"labels":["a","b","c"],"metric":{"type":"graph_shortest_path"},
            "kernel":[[0,1,0],[0.5,0,0.5],[0,1,0]],"measure":[0.25,0.5,0.25]}"#;
        let s = read_space(text).unwrap();
        assert_eq!(s.metric()[(0, 2)], 2.0);
        assert!(validate_space(&s).is_valid());
    }

    #[test]
    fn rows_near_one_are_renormalized() {
        let text = r#"{"version":1,"labels":[0,1],"metric":{"type":"explicit","matrix":[[0,1],[1,0]]},
            "kernel":[[0.5000000001,0.5],[0.3,0.6]],"measure":[1,1]}"#;
        let s = read_space(text).unwrap();
        assert_eq!(s.labels(), ["0", "1"]);
        assert_eq!(s.kernel().row(0).sum(), 1.0);
        assert!((s.kernel().row(1).sum() - 0.9).abs() < 1e-15);
        assert!(validate_space(&s).is_violated(Axiom::RowStochastic));
    }

    #[test]
    fn structural_errors() {
        let missing = r#"{"labels":["a"],"metric":{"type":"graph_shortest_path"},"kernel":[[1]],"measure":[1]}"#;
        assert!(matches!(read_space(missing), Err(Error::Parse(_))));
        let ragged = r#"{"version":1,"labels":["a","b"],"metric":{"type":"graph_shortest_path"},"kernel":[[1],[0,1]],"measure":[1,1]}"#;
        assert!(matches!(read_space(ragged), Err(Error::Dimension(_))));
        assert!(matches!(read_space("{"), Err(Error::Parse(_))));
    }

    #[test]
    fn canonical_floats_and_keys() {
        let v = serde_json::json!({"b": 0.1, "a": [1.0, -0.0, 3], "c": f64::NAN});
        assert_eq!(
            to_canonical_json(&v),
            r#"{"a":[1.0000000000000000e0,0.0000000000000000e0,3],"b":1.0000000000000001e-1,"c":null}"#
        );
        assert_eq!(to_canonical_json(&[f64::INFINITY]), "[null]");
    }

    #[test]
    fn field_round_trip() {
        let f = ScalarField::new(vec![0.1, 2.0, -3.5]).unwrap();
        assert_eq!(read_field(&write_field(&f)).unwrap(), f);
        assert!(read_field(r#"{"values":[1, "x"]}"#).is_err());
    }
}
