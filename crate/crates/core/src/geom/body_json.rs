use serde::{Deserialize, Serialize};

use super::{ConvexBody, Direction, Halfspace, Vector};
use crate::error::{Error, Result};

/// JSON form of a convex body.
///
/// ```json
/// {"type":"ball","center":[0,0],"radius":1}
/// {"type":"vpolytope","vertices":[[0,0],[1,0],[0,1]]}
/// {"type":"hpolytope","normals":[[1,0],[-1,0]],"offsets":[1,1],"interior":[0,0]}
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum BodySpec {
    Ball { center: Vec<f64>, radius: f64 },
    Vpolytope { vertices: Vec<Vec<f64>> },
    Hpolytope { normals: Vec<Vec<f64>>, offsets: Vec<f64>, interior: Vec<f64> },
}

impl BodySpec {
    pub fn to_body(&self) -> Result<ConvexBody> {
        match self {
            Self::Ball { center, radius } => ConvexBody::ball(Vector::from_slice(center)?, *radius),
            Self::Vpolytope { vertices } => {
                let vs = vertices.iter().map(|v| Vector::from_slice(v)).collect::<Result<Vec<_>>>()?;
                ConvexBody::full_dimensional_vpolytope(vs)
            }
            Self::Hpolytope { normals, offsets, interior } => {
                if normals.len() != offsets.len() {
                    return Err(Error::InvalidParameter(format!(
                        "{} normals but {} offsets",
                        normals.len(),
                        offsets.len()
                    )));
                }
                // Non-unit normals are rescaled together with their offsets.
                let halfspaces = normals
                    .iter()
                    .zip(offsets)
                    .map(|(n, b)| {
                        let v = Vector::from_slice(n)?;
                        let len = v.norm();
                        Ok(Halfspace::new(Direction::new(v)?, b / len))
                    })
                    .collect::<Result<Vec<_>>>()?;
                ConvexBody::hpolytope(halfspaces, Vector::from_slice(interior)?)
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Ball { center, .. } => center.len(),
            Self::Vpolytope { vertices } => vertices.first().map_or(0, Vec::len),
            Self::Hpolytope { interior, .. } => interior.len(),
        }
    }

    /// Short label used in CSV output.
    pub fn label(&self) -> String {
        match self {
            Self::Ball { radius, .. } => format!("ball(r={radius})"),
            Self::Vpolytope { vertices } => format!("vpolytope({}v)", vertices.len()),
            Self::Hpolytope { normals, .. } => format!("hpolytope({}f)", normals.len()),
        }
    }

    pub fn parse(json: &str) -> Result<ConvexBody> {
        let spec: BodySpec =
            serde_json::from_str(json).map_err(|e| Error::InvalidParameter(format!("body: {e}")))?;
        spec.to_body()
    }
}

/// Field-level view of each variant. The tagged enum is buffered by serde,
/// which hides the offending field; these structs recover it.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct BallFields {
    #[serde(rename = "type")]
    kind: String,
    center: Vec<f64>,
    radius: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct VpolytopeFields {
    #[serde(rename = "type")]
    kind: String,
    vertices: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct HpolytopeFields {
    #[serde(rename = "type")]
    kind: String,
    normals: Vec<Vec<f64>>,
    offsets: Vec<f64>,
    interior: Vec<f64>,
}

/// Locates the field of a malformed body JSON value: `(path, message)` with
/// the path relative to the body, or `None` if the value parses.
pub fn diagnose_body(value: &serde_json::Value) -> Option<(String, String)> {
    fn run<T: serde::de::DeserializeOwned>(value: &serde_json::Value) -> Option<(String, String)> {
        serde_path_to_error::deserialize::<_, T>(value.clone())
            .err()
            .map(|e| (e.path().to_string(), e.into_inner().to_string()))
    }
    let Some(kind) = value.get("type") else {
        return Some(("type".into(), "missing body type".into()));
    };
    match kind.as_str() {
        Some("ball") => run::<BallFields>(value),
        Some("vpolytope") => run::<VpolytopeFields>(value),
        Some("hpolytope") => run::<HpolytopeFields>(value),
        _ => Some(("type".into(), format!("unknown body type {kind}; expected ball, vpolytope or hpolytope"))),
    }
}
