//! The JSON model file format.
//!
//! ```json
//! {"formatVersion":1,"kind":"curve","degreeU":3,"knotsU":[0,0,0,0,1,1,1,1],
//!  "points":[[0,0],[1,3],[2,-3],[3,0]]}
//! ```
//!
//! Surfaces add `degreeV`, `knotsV` and `pointsShape: [n1, n2]`, with
//! points stored row-major (`index = i * n2 + j`). `weights` and `metadata`
//! are optional. Floating point values are written with 17 significant
//! digits so that a save and reload reproduces every value exactly.

use std::io;
use std::path::Path;

use serde::ser::Serialize;
use serde::Deserialize;
use serde_json::ser::Formatter;

use crate::{BSplineCurve, BSplineSurface, ControlPoints, Error, Geometry, KnotVector, Result};

pub const FORMAT_VERSION: u32 = 1;

/// Bundled JSON schema of the format.
pub const SCHEMA: &str = include_str!("../schema/model.schema.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Curve,
    Surface,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ModelFile {
    pub format_version: u32,
    pub kind: ModelKind,
    pub degree_u: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree_v: Option<usize>,
    pub knots_u: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knots_v: Option<Vec<f64>>,
    pub points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points_shape: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<serde_json::Map<String, serde_json::Value>>,
}

fn field(name: &str, err: Error) -> Error {
    Error::Field {
        field: name.to_string(),
        message: err.to_string(),
    }
}

fn field_msg(name: &str, message: impl Into<String>) -> Error {
    Error::Field {
        field: name.to_string(),
        message: message.into(),
    }
}

impl ModelFile {
    pub fn from_geometry(geometry: &Geometry) -> Self {
        let points = geometry.points().to_rows();
        match geometry {
            Geometry::Curve(c) => ModelFile {
                format_version: FORMAT_VERSION,
                kind: ModelKind::Curve,
                degree_u: c.degree(),
                degree_v: None,
                knots_u: c.knots().knots().to_vec(),
                knots_v: None,
                points,
                points_shape: None,
                weights: None,
                metadata: None,
            },
            Geometry::Surface(s) => {
                let (p, q) = s.degrees();
                let (n1, n2) = s.shape();
                ModelFile {
                    format_version: FORMAT_VERSION,
                    kind: ModelKind::Surface,
                    degree_u: p,
                    degree_v: Some(q),
                    knots_u: s.knots_u().knots().to_vec(),
                    knots_v: Some(s.knots_v().knots().to_vec()),
                    points,
                    points_shape: Some([n1, n2]),
                    weights: None,
                    metadata: None,
                }
            }
        }
    }

    pub fn with_weights(mut self, weights: Option<Vec<f64>>) -> Self {
        self.weights = weights;
        self
    }

    /// Parses JSON text, reporting syntax errors with line and column.
    pub fn parse(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        file.validate()?;
        Ok(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        Self::parse(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| io_error(path, e))
    }

    /// Serialised form with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = to_precise_json(self);
        s.push('\n');
        s
    }

    /// Checks the fields without building the geometry.
    pub fn validate(&self) -> Result<()> {
        self.to_geometry().map(|_| ())
    }

    pub fn to_geometry(&self) -> Result<Geometry> {
        if self.format_version != FORMAT_VERSION {
            return Err(field_msg(
                "formatVersion",
                format!("unsupported version {}, expected {FORMAT_VERSION}", self.format_version),
            ));
        }
        let dim = self.points.first().map(Vec::len).unwrap_or(0);
        for (i, p) in self.points.iter().enumerate() {
            if p.len() != dim {
                return Err(field_msg(
                    &format!("points[{i}]"),
                    format!("expected {dim} coordinates like points[0], got {}", p.len()),
                ));
            }
            if let Some(c) = p.iter().position(|v| !v.is_finite()) {
                return Err(field_msg(&format!("points[{i}][{c}]"), "coordinate is not finite"));
            }
        }
        let flat: Vec<f64> = self.points.iter().flatten().copied().collect();
        let points = ControlPoints::new(dim, flat).map_err(|e| field("points", e))?;
        if let Some(w) = &self.weights {
            if w.len() != self.points.len() {
                return Err(field_msg(
                    "weights",
                    format!("{} weights for {} control points", w.len(), self.points.len()),
                ));
            }
            if let Some(i) = w.iter().position(|v| !(*v > 0.0 && *v < 1.0)) {
                return Err(field_msg(&format!("weights[{i}]"), "weights must lie strictly between 0 and 1"));
            }
        }
        let ku = KnotVector::new(self.knots_u.clone(), self.degree_u).map_err(|e| field("knotsU", e))?;
        match self.kind {
            ModelKind::Curve => {
                for (name, present) in [
                    ("degreeV", self.degree_v.is_some()),
                    ("knotsV", self.knots_v.is_some()),
                    ("pointsShape", self.points_shape.is_some()),
                ] {
                    if present {
                        return Err(field_msg(name, "only valid for surfaces"));
                    }
                }
                if ku.basis_count() != points.len() {
                    return Err(field_msg(
                        "points",
                        format!(
                            "knotsU defines {} basis functions but {} points are given",
                            ku.basis_count(),
                            points.len()
                        ),
                    ));
                }
                Ok(BSplineCurve::new(ku, points).map_err(|e| field("points", e))?.into())
            }
            ModelKind::Surface => {
                let q = self.degree_v.ok_or_else(|| field_msg("degreeV", "required for surfaces"))?;
                let knots_v = self.knots_v.clone().ok_or_else(|| field_msg("knotsV", "required for surfaces"))?;
                let kv = KnotVector::new(knots_v, q).map_err(|e| field("knotsV", e))?;
                let [n1, n2] = self.points_shape.ok_or_else(|| field_msg("pointsShape", "required for surfaces"))?;
                if n1 != ku.basis_count() || n2 != kv.basis_count() {
                    return Err(field_msg(
                        "pointsShape",
                        format!(
                            "[{n1}, {n2}] does not match the knot vectors ({}, {})",
                            ku.basis_count(),
                            kv.basis_count()
                        ),
                    ));
                }
                if n1 * n2 != points.len() {
                    return Err(field_msg(
                        "points",
                        format!("pointsShape [{n1}, {n2}] needs {} points, got {}", n1 * n2, points.len()),
                    ));
                }
                Ok(BSplineSurface::new(ku, kv, points).map_err(|e| field("points", e))?.into())
            }
        }
    }
}

fn io_error(path: &Path, e: io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Compact JSON with every float written to 17 significant digits.
#[derive(Debug, Clone, Copy, Default)]
pub struct PreciseFormatter;

impl Formatter for PreciseFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Serialises with [`PreciseFormatter`].
pub fn to_precise_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, PreciseFormatter);
    value.serialize(&mut ser).expect("serialising to memory cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    const BEZIER: &str = r#"{"formatVersion":1,"kind":"curve","degreeU":3,
        "knotsU":[0,0,0,0,1,1,1,1],"points":[[0,0],[1,3],[2,-3],[3,0]]}"#;

    #[test]
    fn parse_and_build_curve() {
        let f = ModelFile::parse(BEZIER).unwrap();
        let g = f.to_geometry().unwrap();
        assert_eq!(g.len(), 4);
        assert!(!g.is_surface());
    }

    #[test]
    fn round_trip_is_exact() {
        let mut f = ModelFile::parse(BEZIER).unwrap();
        f.points[1][0] = 0.1 + 0.2;
        f.points[2][1] = -1.0e-300 / 3.0;
        let again = ModelFile::parse(&f.to_json()).unwrap();
        assert_eq!(again, f);
    }

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(to_precise_json(&[0.5f64]), "[5.0000000000000000e-1]");
    }

    #[test]
    fn syntax_error_has_position() {
        let err = ModelFile::parse("{\n  \"formatVersion\": 1,\n  oops\n}").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn field_errors_name_the_field() {
        let cases = [
            (BEZIER.replace(",[3,0]", ""), "points"),
            (BEZIER.replace("[2,-3]", "[2,-3,1]"), "points[2]"),
            (BEZIER.replace("\"formatVersion\":1", "\"formatVersion\":9"), "formatVersion"),
            (BEZIER.replace("[0,0,0,0,1,1,1,1]", "[0,0,0,1,0,1,1,1]"), "knotsU"),
            (BEZIER.replace("\"kind\":\"curve\"", "\"kind\":\"surface\""), "degreeV"),
        ];
        for (text, expected) in cases {
            match ModelFile::parse(&text) {
                Err(Error::Field { field, .. }) => assert_eq!(field, expected),
                other => panic!("expected field error for {expected}, got {other:?}"),
            }
        }
    }

    #[test]
    fn weights_are_validated() {
        let text = BEZIER.replace("\"points\"", "\"weights\":[0.1,0.1,1.5,0.1],\"points\"");
        match ModelFile::parse(&text) {
            Err(Error::Field { field, .. }) => assert_eq!(field, "weights[2]"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = BEZIER.replace("\"kind\"", "\"colour\":1,\"kind\"");
        assert!(matches!(ModelFile::parse(&text), Err(Error::Parse { .. })));
    }

    #[test]
    fn schema_is_valid_json() {
        let v: serde_json::Value = serde_json::from_str(SCHEMA).unwrap();
        assert_eq!(v["required"].as_array().unwrap().len(), 5);
    }
}
