//! JSON documents for sets and wayset scenarios.
//!
//! Matrices are stored as arrays of rows. Numbers are written with the
//! shortest decimal that parses back to the same double, so a write/read
//! cycle is lossless.

use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::SetError;
use crate::reach::LinearSystem;
use crate::sets::{ConstrainedZonotope, HPolytope, Zonotope};

/// Version written into every document and the only one accepted.
pub const SCHEMA_VERSION: u32 = 1;

/// Reading or writing a document failed.
#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    /// JSON syntax or schema violation; `field` is the JSON path.
    #[error("schema error at `{field}`: {message}")]
    Schema { field: String, message: String },
    #[error(transparent)]
    Set(#[from] SetError),
}

pub type IoResult<T> = std::result::Result<T, IoError>;

fn schema(field: impl Into<String>, message: impl fmt::Display) -> IoError {
    IoError::Schema {
        field: field.into(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetKind {
    Zonotope,
    Conzono,
    Hpolytope,
    Point,
}

/// On-disk form of any supported set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetDocument {
    pub schema: u32,
    pub kind: SetKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraints: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint_offsets: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normals: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offsets: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
}

/// A parsed set.
#[derive(Debug, Clone, PartialEq)]
pub enum SetValue {
    Zonotope(Zonotope),
    Conzono(ConstrainedZonotope),
    HPolytope(HPolytope),
    Point(DVector<f64>),
}

impl SetValue {
    pub fn dim(&self) -> usize {
        match self {
            SetValue::Zonotope(z) => z.dim(),
            SetValue::Conzono(z) => z.dim(),
            SetValue::HPolytope(p) => p.dim(),
            SetValue::Point(p) => p.len(),
        }
    }

    /// Generator form of the set; halfspace sets have none.
    pub fn to_conzono(&self) -> Option<ConstrainedZonotope> {
        match self {
            SetValue::Zonotope(z) => Some(z.to_conzono()),
            SetValue::Conzono(z) => Some(z.clone()),
            SetValue::Point(p) => ConstrainedZonotope::singleton(p.clone()).ok(),
            SetValue::HPolytope(_) => None,
        }
    }
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix(field: &str, rows: &[Vec<f64>], cols: Option<usize>) -> IoResult<DMatrix<f64>> {
    let width = cols.or_else(|| rows.first().map(Vec::len)).unwrap_or(0);
    for (i, r) in rows.iter().enumerate() {
        if r.len() != width {
            return Err(schema(
                format!("{field}[{i}]"),
                format!("row has {} entries, expected {width}", r.len()),
            ));
        }
    }
    Ok(DMatrix::from_fn(rows.len(), width, |i, j| rows[i][j]))
}

fn need<'a, T>(field: &str, v: &'a Option<T>, kind: SetKind) -> IoResult<&'a T> {
    v.as_ref()
        .ok_or_else(|| schema(field, format!("required for kind {kind:?}").to_lowercase()))
}

impl SetDocument {
    fn empty(kind: SetKind, name: Option<String>) -> Self {
        SetDocument {
            schema: SCHEMA_VERSION,
            kind,
            name,
            center: None,
            generators: None,
            constraints: None,
            constraint_offsets: None,
            normals: None,
            offsets: None,
            point: None,
        }
    }

    pub fn from_value(value: &SetValue, name: Option<String>) -> Self {
        match value {
            SetValue::Zonotope(z) => SetDocument {
                center: Some(z.center().iter().copied().collect()),
                generators: Some(rows_of(z.generators())),
                ..Self::empty(SetKind::Zonotope, name)
            },
            SetValue::Conzono(z) => SetDocument {
                center: Some(z.center().iter().copied().collect()),
                generators: Some(rows_of(z.generators())),
                constraints: Some(rows_of(z.constraints())),
                constraint_offsets: Some(z.offsets().iter().copied().collect()),
                ..Self::empty(SetKind::Conzono, name)
            },
            SetValue::HPolytope(p) => SetDocument {
                normals: Some(rows_of(p.normals())),
                offsets: Some(p.offsets().iter().copied().collect()),
                ..Self::empty(SetKind::Hpolytope, name)
            },
            SetValue::Point(p) => SetDocument {
                point: Some(p.iter().copied().collect()),
                ..Self::empty(SetKind::Point, name)
            },
        }
    }

    /// Checks kind/payload consistency and builds the set.
    pub fn to_value(&self) -> IoResult<SetValue> {
        if self.schema != SCHEMA_VERSION {
            return Err(schema(
                "schema",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema),
            ));
        }
        let allowed: &[&str] = match self.kind {
            SetKind::Zonotope => &["center", "generators"],
            SetKind::Conzono => &["center", "generators", "constraints", "constraint_offsets"],
            SetKind::Hpolytope => &["normals", "offsets"],
            SetKind::Point => &["point"],
        };
        let present = [
            ("center", self.center.is_some()),
            ("generators", self.generators.is_some()),
            ("constraints", self.constraints.is_some()),
            ("constraint_offsets", self.constraint_offsets.is_some()),
            ("normals", self.normals.is_some()),
            ("offsets", self.offsets.is_some()),
            ("point", self.point.is_some()),
        ];
        if let Some((f, _)) = present.iter().find(|(f, p)| *p && !allowed.contains(f)) {
            return Err(schema(
                *f,
                format!("not allowed for kind {:?}", self.kind).to_lowercase(),
            ));
        }
        let kind = self.kind;
        Ok(match kind {
            SetKind::Zonotope | SetKind::Conzono => {
                let c = DVector::from_vec(need("center", &self.center, kind)?.clone());
                let g = matrix("generators", need("generators", &self.generators, kind)?, None)?;
                if g.nrows() != c.len() {
                    return Err(schema(
                        "generators",
                        format!("has {} rows, center has {} entries", g.nrows(), c.len()),
                    ));
                }
                // An n x 0 matrix has rows of length zero; keep the width.
                let g = if g.nrows() == 0 { DMatrix::zeros(c.len(), 0) } else { g };
                if kind == SetKind::Zonotope {
                    SetValue::Zonotope(Zonotope::new(c, g)?)
                } else {
                    let a = matrix(
                        "constraints",
                        need("constraints", &self.constraints, kind)?,
                        Some(g.ncols()),
                    )?;
                    let b = DVector::from_vec(need("constraint_offsets", &self.constraint_offsets, kind)?.clone());
                    if a.nrows() != b.len() {
                        return Err(schema(
                            "constraint_offsets",
                            format!("has {} entries, constraints has {} rows", b.len(), a.nrows()),
                        ));
                    }
                    SetValue::Conzono(ConstrainedZonotope::new(c, g, a, b)?)
                }
            }
            SetKind::Hpolytope => {
                let h = matrix("normals", need("normals", &self.normals, kind)?, None)?;
                let f = DVector::from_vec(need("offsets", &self.offsets, kind)?.clone());
                if h.nrows() != f.len() {
                    return Err(schema(
                        "offsets",
                        format!("has {} entries, normals has {} rows", f.len(), h.nrows()),
                    ));
                }
                SetValue::HPolytope(HPolytope::new(h, f)?)
            }
            SetKind::Point => {
                let p = need("point", &self.point, kind)?;
                if p.is_empty() || p.iter().any(|v| !v.is_finite()) {
                    return Err(schema("point", "must be a nonempty list of finite numbers"));
                }
                SetValue::Point(DVector::from_vec(p.clone()))
            }
        })
    }
}

/// Linear system, constraints, target and horizon of a wayset run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub state_matrix: Vec<Vec<f64>>,
    pub input_matrix: Vec<Vec<f64>>,
    /// State constraints as halfspaces.
    pub states: HalfspaceRows,
    /// Input set in generator form.
    pub inputs: GeneratorForm,
    pub target: Vec<f64>,
    /// Initial state the wayset must contain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<Vec<f64>>,
    pub horizon: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfspaceRows {
    pub normals: Vec<Vec<f64>>,
    pub offsets: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorForm {
    pub center: Vec<f64>,
    pub generators: Vec<Vec<f64>>,
}

/// Validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub system: LinearSystem,
    pub target: DVector<f64>,
    pub anchor: Option<DVector<f64>>,
    pub horizon: usize,
}

fn vector(field: &str, v: &[f64], n: usize) -> IoResult<DVector<f64>> {
    if v.len() != n {
        return Err(schema(field, format!("has {} entries, expected {n}", v.len())));
    }
    Ok(DVector::from_column_slice(v))
}

impl ScenarioDocument {
    pub fn to_scenario(&self) -> IoResult<Scenario> {
        if self.schema != SCHEMA_VERSION {
            return Err(schema(
                "schema",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema),
            ));
        }
        let a = matrix("state_matrix", &self.state_matrix, None)?;
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(schema(
                "state_matrix",
                format!("must be square and nonempty, got {n}x{}", a.ncols()),
            ));
        }
        let b = matrix("input_matrix", &self.input_matrix, None)?;
        if b.nrows() != n {
            return Err(schema("input_matrix", format!("has {} rows, expected {n}", b.nrows())));
        }
        let h = matrix("states.normals", &self.states.normals, Some(n))?;
        let f = vector("states.offsets", &self.states.offsets, h.nrows())?;
        let gu = matrix("inputs.generators", &self.inputs.generators, None)?;
        let cu = vector("inputs.center", &self.inputs.center, b.ncols())?;
        if gu.nrows() != cu.len() {
            return Err(schema(
                "inputs.generators",
                format!("has {} rows, expected {}", gu.nrows(), cu.len()),
            ));
        }
        let gu = if gu.nrows() == 0 {
            DMatrix::zeros(cu.len(), 0)
        } else {
            gu
        };
        let system = LinearSystem::new(a, b, HPolytope::new(h, f)?, Zonotope::new(cu, gu)?)?;
        let target = vector("target", &self.target, n)?;
        let anchor = self.anchor.as_deref().map(|v| vector("anchor", v, n)).transpose()?;
        if self.horizon == 0 {
            return Err(schema("horizon", "must be at least 1"));
        }
        Ok(Scenario {
            system,
            target,
            anchor,
            horizon: self.horizon,
        })
    }
}

/// Parses JSON text, reporting the path of the offending field.
pub fn parse<T: serde::de::DeserializeOwned>(text: &str) -> IoResult<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    let out: T = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        schema(if path == "." { "document".into() } else { path }, e.into_inner())
    })?;
    de.end().map_err(|e| schema("document", e))?;
    Ok(out)
}

pub fn to_json<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents serialize");
    s.push('\n');
    s
}

fn read_text(path: &Path) -> IoResult<String> {
    std::fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> IoResult<()> {
    std::fs::write(path, text).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_set(path: impl AsRef<Path>) -> IoResult<SetDocument> {
    parse(&read_text(path.as_ref())?)
}

pub fn write_set(path: impl AsRef<Path>, doc: &SetDocument) -> IoResult<()> {
    write_text(path.as_ref(), &to_json(doc))
}

pub fn read_scenario(path: impl AsRef<Path>) -> IoResult<ScenarioDocument> {
    parse(&read_text(path.as_ref())?)
}

pub fn write_scenario(path: impl AsRef<Path>, doc: &ScenarioDocument) -> IoResult<()> {
    write_text(path.as_ref(), &to_json(doc))
}
